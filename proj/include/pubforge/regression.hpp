#pragma once

// Two-parameter regressions used for the creativity fits: a Poisson GLM with
// log link and offset, fitted by IRLS, and ordinary least squares on a line.

#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "pubforge/error.hpp"

namespace pubforge {

/// Upper tail of the chi-square distribution with one degree of freedom.
inline double chi_square_1_sf(double statistic) {
  if (!(statistic > 0.0)) return 1.0;
  return std::erfc(std::sqrt(statistic / 2.0));
}

/// Poisson deviance 2 * sum(y log(y/mu) - (y - mu)).
inline double poisson_deviance(std::span<const double> counts, std::span<const double> means) {
  double d = 0.0;
  for (std::size_t k = 0; k < counts.size(); ++k) {
    double y = counts[k], mu = means[k];
    d += (y > 0.0 ? y * std::log(y / mu) : 0.0) - (y - mu);
  }
  return 2.0 * d;
}

struct IrlsOptions {
  double gradient_tolerance = 1e-10;
  int max_iterations = 100;
};

struct GlmFit {
  double alpha = 0.0;
  double beta = 0.0;
  double var_alpha = 0.0;
  double cov_alpha_beta = 0.0;
  double var_beta = 0.0;
  double deviance = 0.0;
  int iterations = 0;
  std::vector<IrlsStep> trace;

  double alpha_se() const { return std::sqrt(var_alpha); }
  double beta_se() const { return std::sqrt(var_beta); }
};

namespace detail {

struct GlmCells {
  std::vector<double> x, y, log_offset;
};

inline GlmCells glm_cells(std::span<const double> x, std::span<const double> counts,
                          std::span<const double> offsets) {
  if (x.size() != counts.size() || x.size() != offsets.size()) {
    throw PreconditionError("x, counts and offsets must have equal length");
  }
  GlmCells cells;
  for (std::size_t k = 0; k < x.size(); ++k) {
    double y = counts[k];
    if (!(y >= 0.0) || std::floor(y) != y) {
      throw PreconditionError("counts must be non-negative integers");
    }
    if (!(offsets[k] >= 0.0) || !std::isfinite(offsets[k])) {
      throw PreconditionError("offsets must be non-negative and finite");
    }
    if (offsets[k] == 0.0) {
      if (y > 0.0) throw PreconditionError("positive count with zero offset");
      continue;
    }
    cells.x.push_back(x[k]);
    cells.y.push_back(y);
    cells.log_offset.push_back(std::log(offsets[k]));
  }
  return cells;
}

inline bool has_two_distinct(const std::vector<double>& x) {
  for (double v : x) {
    if (v != x.front()) return true;
  }
  return false;
}

}  // namespace detail

/// Closed-form intercept-only fit: alpha = log(sum y / sum offset).
struct NullGlmFit {
  double alpha = 0.0;
  double deviance = 0.0;
};

inline NullGlmFit glm_poisson_null(std::span<const double> counts, std::span<const double> offsets) {
  std::vector<double> xs(counts.size(), 0.0);
  auto cells = detail::glm_cells(xs, counts, offsets);
  double sy = std::accumulate(cells.y.begin(), cells.y.end(), 0.0);
  double so = 0.0;
  for (double lo : cells.log_offset) so += std::exp(lo);
  if (sy <= 0.0) throw PreconditionError("all counts are zero; no finite intercept");
  NullGlmFit fit;
  fit.alpha = std::log(sy / so);
  std::vector<double> mu(cells.y.size());
  for (std::size_t k = 0; k < mu.size(); ++k) mu[k] = std::exp(cells.log_offset[k] + fit.alpha);
  fit.deviance = poisson_deviance(cells.y, mu);
  return fit;
}

/// Maximum-likelihood fit of E[count] = offset * exp(alpha + beta * x).
///
/// Newton/IRLS from the intercept-only solution, with step halving whenever
/// the deviance would increase. Iteration stops when the score norm drops
/// below the tolerance, or when the Newton decrement reaches rounding level
/// for the data's scale (large counts cannot push the score below 1e-10 in
/// double precision). Covariance is the inverse Fisher information.
inline GlmFit glm_poisson(std::span<const double> x, std::span<const double> counts,
                          std::span<const double> offsets, const IrlsOptions& options = {}) {
  auto cells = detail::glm_cells(x, counts, offsets);
  if (cells.x.empty() || !detail::has_two_distinct(cells.x)) {
    throw PreconditionError("need at least two distinct x values with positive offset");
  }
  const std::size_t n = cells.x.size();
  const double sum_y = std::accumulate(cells.y.begin(), cells.y.end(), 0.0);
  if (sum_y <= 0.0) throw PreconditionError("all counts are zero; no finite maximum-likelihood estimate");

  double sum_off = 0.0;
  for (double lo : cells.log_offset) sum_off += std::exp(lo);

  std::vector<double> mu(n);
  auto evaluate = [&](double a, double b) {
    for (std::size_t k = 0; k < n; ++k) mu[k] = std::exp(cells.log_offset[k] + a + b * cells.x[k]);
    return poisson_deviance(cells.y, mu);
  };

  GlmFit fit;
  double a = std::log(sum_y / sum_off), b = 0.0;
  double dev = evaluate(a, b);
  const double floor = 1e-14 * (1.0 + sum_y);

  for (int it = 0; it <= options.max_iterations; ++it) {
    double g0 = 0.0, g1 = 0.0, h00 = 0.0, h01 = 0.0, h11 = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      double r = cells.y[k] - mu[k];
      g0 += r;
      g1 += r * cells.x[k];
      h00 += mu[k];
      h01 += mu[k] * cells.x[k];
      h11 += mu[k] * cells.x[k] * cells.x[k];
    }
    double gnorm = std::hypot(g0, g1);
    fit.trace.push_back({it, a, b, dev, gnorm});
    double det = h00 * h11 - h01 * h01;
    if (!std::isfinite(det) || !std::isfinite(dev)) {
      throw ConvergenceError("IRLS produced non-finite values", fit.trace);
    }
    double d0 = det > 0.0 ? (h11 * g0 - h01 * g1) / det : 0.0;
    double d1 = det > 0.0 ? (h00 * g1 - h01 * g0) / det : 0.0;
    double decrement = g0 * d0 + g1 * d1;
    if (gnorm < options.gradient_tolerance || (det > 0.0 && decrement <= floor)) {
      fit.alpha = a;
      fit.beta = b;
      fit.var_alpha = h11 / det;
      fit.var_beta = h00 / det;
      fit.cov_alpha_beta = -h01 / det;
      fit.deviance = dev;
      fit.iterations = it;
      if (!(det > 0.0)) throw ConvergenceError("singular Fisher information at the optimum", fit.trace);
      return fit;
    }
    if (it == options.max_iterations || !(det > 0.0)) break;

    double step = 1.0;
    double trial = evaluate(a + d0, b + d1);
    int halvings = 0;
    while (!(trial <= dev) && halvings < 60) {
      step *= 0.5;
      trial = evaluate(a + step * d0, b + step * d1);
      ++halvings;
    }
    if (!(trial <= dev)) {
      evaluate(a, b);
      break;
    }
    a += step * d0;
    b += step * d1;
    dev = trial;
  }
  throw ConvergenceError("IRLS did not converge within " + std::to_string(options.max_iterations) +
                             " iterations",
                         fit.trace);
}

struct OlsFit {
  double alpha = 0.0;
  double beta = 0.0;
  double alpha_se = 0.0;
  double beta_se = 0.0;
  double cov_alpha_beta = 0.0;
  double rss = 0.0;
  double rss_null = 0.0;  // residual sum of squares of the mean-only model
  std::size_t n = 0;
};

/// Least-squares line y = alpha + beta * x.
inline OlsFit ols_line(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw PreconditionError("x and y must have equal length");
  const std::size_t n = x.size();
  std::vector<double> xs(x.begin(), x.end());
  if (n < 2 || !detail::has_two_distinct(xs)) throw PreconditionError("need at least two distinct x values");
  const double xbar = std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(n);
  const double ybar = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(n);
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    double dx = x[k] - xbar, dy = y[k] - ybar;
    sxx += dx * dx;
    sxy += dx * dy;
    syy += dy * dy;
  }
  OlsFit fit;
  fit.n = n;
  fit.beta = sxy / sxx;
  fit.alpha = ybar - fit.beta * xbar;
  for (std::size_t k = 0; k < n; ++k) {
    double r = y[k] - fit.alpha - fit.beta * x[k];
    fit.rss += r * r;
  }
  fit.rss_null = syy;
  double sigma2 = n > 2 ? fit.rss / static_cast<double>(n - 2) : std::numeric_limits<double>::quiet_NaN();
  fit.beta_se = std::sqrt(sigma2 / sxx);
  fit.alpha_se = std::sqrt(sigma2 * (1.0 / static_cast<double>(n) + xbar * xbar / sxx));
  fit.cov_alpha_beta = -xbar * sigma2 / sxx;
  return fit;
}

}  // namespace pubforge
