#pragma once

// Validation battery for forecasts: Poisson and two-sample KS tests with
// resampled p-values, trend correlations, autocorrelation profiles and the
// Simonton career curve used as a baseline.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <map>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "pubforge/cohort.hpp"
#include "pubforge/corpus.hpp"
#include "pubforge/error.hpp"
#include "pubforge/rng.hpp"

namespace pubforge {

struct KsResult {
  double statistic = 0.0;
  double p_value = 1.0;
  int resamples = 0;
};

/// Sup-distance between the empirical CDF of `counts` and Poisson(mean).
/// Both are step functions on the integers, so checking 0..max(counts) suffices.
inline double ks_poisson_statistic(std::span<const std::int64_t> counts, double lambda) {
  if (counts.empty()) throw PreconditionError("empty sample");
  std::int64_t kmax = *std::max_element(counts.begin(), counts.end());
  std::vector<std::size_t> hist(static_cast<std::size_t>(kmax + 1), 0);
  for (auto c : counts) ++hist[static_cast<std::size_t>(c)];
  const double n = static_cast<double>(counts.size());
  double pmf = std::exp(-lambda), cdf = 0.0, ecdf = 0.0, d = 0.0;
  for (std::int64_t k = 0; k <= kmax; ++k) {
    if (k > 0) pmf *= lambda / static_cast<double>(k);
    cdf += pmf;
    ecdf += static_cast<double>(hist[static_cast<std::size_t>(k)]) / n;
    d = std::max(d, std::fabs(ecdf - std::min(cdf, 1.0)));
  }
  return d;
}

namespace detail {
inline double sample_mean(std::span<const std::int64_t> v) {
  double s = 0.0;
  for (auto x : v) s += static_cast<double>(x);
  return s / static_cast<double>(v.size());
}
}  // namespace detail

/// KS goodness of fit to a Poisson with estimated mean. The p-value is the
/// fraction of parametric-bootstrap samples (same size, mean re-estimated)
/// whose statistic is at least the observed one.
inline KsResult ks_poisson_test(std::span<const std::int64_t> counts, int n_boot, const CounterRng& rng) {
  if (counts.size() < 5) throw PreconditionError("KS Poisson test needs at least 5 counts");
  if (n_boot < 200) throw PreconditionError("KS Poisson test needs at least 200 resamples");
  for (auto c : counts) {
    if (c < 0) throw PreconditionError("counts must be non-negative");
  }
  const double lambda = detail::sample_mean(counts);
  KsResult out;
  out.resamples = n_boot;
  if (lambda == 0.0) return out;
  out.statistic = ks_poisson_statistic(counts, lambda);
  const double cutoff = out.statistic - 1e-12;
  std::vector<std::int64_t> sample(counts.size());
  int exceed = 0;
  for (int b = 0; b < n_boot; ++b) {
    auto stream = rng.substream(static_cast<std::uint64_t>(b));
    for (auto& s : sample) s = sample_poisson(lambda, stream);
    double lam_b = detail::sample_mean(sample);
    double d = lam_b == 0.0 ? 0.0 : ks_poisson_statistic(sample, lam_b);
    if (d >= cutoff) ++exceed;
  }
  out.p_value = static_cast<double>(exceed) / n_boot;
  return out;
}

/// Two-sample KS distance on the pooled integer support.
inline double ks_two_sample_statistic(std::span<const std::int64_t> a, std::span<const std::int64_t> b) {
  if (a.empty() || b.empty()) throw PreconditionError("both samples must be non-empty");
  std::int64_t lo = std::min(*std::min_element(a.begin(), a.end()), *std::min_element(b.begin(), b.end()));
  std::int64_t hi = std::max(*std::max_element(a.begin(), a.end()), *std::max_element(b.begin(), b.end()));
  std::vector<long long> ha(static_cast<std::size_t>(hi - lo + 1), 0), hb(ha.size(), 0);
  for (auto x : a) ++ha[static_cast<std::size_t>(x - lo)];
  for (auto x : b) ++hb[static_cast<std::size_t>(x - lo)];
  const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
  double fa = 0.0, fb = 0.0, d = 0.0;
  long long ca = 0, cb = 0;
  for (std::size_t k = 0; k < ha.size(); ++k) {
    ca += ha[k];
    cb += hb[k];
    fa = static_cast<double>(ca) / na;
    fb = static_cast<double>(cb) / nb;
    d = std::max(d, std::fabs(fa - fb));
  }
  return d;
}

/// Two-sample KS with a permutation p-value (valid under ties).
inline KsResult ks_two_sample(std::span<const std::int64_t> a, std::span<const std::int64_t> b, int n_boot,
                              const CounterRng& rng) {
  if (n_boot < 1) throw PreconditionError("need at least one permutation");
  KsResult out;
  out.resamples = n_boot;
  out.statistic = ks_two_sample_statistic(a, b);
  const double cutoff = out.statistic - 1e-12;
  std::vector<std::int64_t> pool(a.begin(), a.end());
  pool.insert(pool.end(), b.begin(), b.end());
  std::vector<std::int64_t> work(pool.size());
  int exceed = 0;
  for (int p = 0; p < n_boot; ++p) {
    auto stream = rng.substream(static_cast<std::uint64_t>(p));
    work = pool;
    for (std::size_t i = work.size() - 1; i > 0; --i) {
      auto j = static_cast<std::size_t>(stream.uniform() * static_cast<double>(i + 1));
      std::swap(work[i], work[std::min(j, i)]);
    }
    std::span<const std::int64_t> all(work);
    double d = ks_two_sample_statistic(all.first(a.size()), all.subspan(a.size()));
    if (d >= cutoff) ++exceed;
  }
  out.p_value = static_cast<double>(exceed) / n_boot;
  return out;
}

/// Pearson correlation; nullopt when either list has zero variance.
inline std::optional<double> pearson(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) throw PreconditionError("need paired lists of length >= 2");
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxx = 0.0, syy = 0.0, sxy = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    double dx = x[k] - mx, dy = y[k] - my;
    sxx += dx * dx;
    syy += dy * dy;
    sxy += dx * dy;
  }
  if (!(sxx > 0.0) || !(syy > 0.0)) return std::nullopt;
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

struct TrendCorrelation {
  std::optional<double> s1;  // paired, individual level
  std::optional<double> s2;  // both lists sorted, group level
};

inline TrendCorrelation trend_correlations(std::span<const double> predicted, std::span<const double> actual) {
  TrendCorrelation out;
  out.s1 = pearson(actual, predicted);
  std::vector<double> a(actual.begin(), actual.end()), p(predicted.begin(), predicted.end());
  std::stable_sort(a.begin(), a.end());
  std::stable_sort(p.begin(), p.end());
  out.s2 = pearson(a, p);
  return out;
}

/// A researcher's point forecast: predicted cumulative count for each year
/// t_X + 1 .. t_Y.
struct PredictedPath {
  std::string author_id;
  int h_start = 0;
  std::vector<double> predicted;
};

struct TrendRow {
  int cohort = 0;
  int year = 0;
  long long researchers = 0;
  double actual_mean = 0.0;     // n(i, y)
  double predicted_mean = 0.0;  // m(i, y)
};

/// Ground-truth and predicted mean cumulative counts by starting cohort.
inline std::vector<TrendRow> trend_tables(std::span<const PredictedPath> paths, const HistorySet& histories,
                                          int history_start, int start_year) {
  struct Acc {
    long long n = 0;
    std::vector<double> actual, predicted;
  };
  std::map<int, Acc> by_cohort;
  for (const auto& p : paths) {
    const AuthorHistory* h = find_history(histories, p.author_id);
    auto& acc = by_cohort[p.h_start];
    if (acc.actual.empty()) {
      acc.actual.assign(p.predicted.size(), 0.0);
      acc.predicted.assign(p.predicted.size(), 0.0);
    }
    if (acc.actual.size() != p.predicted.size()) throw PreconditionError("predicted paths differ in length");
    ++acc.n;
    for (std::size_t s = 0; s < p.predicted.size(); ++s) {
      int year = start_year + static_cast<int>(s) + 1;
      acc.actual[s] += h ? cumulative_count(*h, history_start, year) : 0;
      acc.predicted[s] += p.predicted[s];
    }
  }
  std::vector<TrendRow> rows;
  for (const auto& [i, acc] : by_cohort) {
    for (std::size_t s = 0; s < acc.actual.size(); ++s) {
      rows.push_back({i, start_year + static_cast<int>(s) + 1, acc.n, acc.actual[s] / static_cast<double>(acc.n),
                      acc.predicted[s] / static_cast<double>(acc.n)});
    }
  }
  return rows;
}

/// Sample autocorrelation with the full-series sum of squares as denominator.
/// nullopt for a constant series.
inline std::optional<double> autocorrelation(std::span<const double> series, std::size_t lag) {
  if (lag >= series.size()) throw PreconditionError("lag must be smaller than the series length");
  const double n = static_cast<double>(series.size());
  const double mean = std::accumulate(series.begin(), series.end(), 0.0) / n;
  double denom = 0.0;
  for (double v : series) denom += (v - mean) * (v - mean);
  if (!(denom > 0.0)) return std::nullopt;
  if (lag == 0) return 1.0;
  double num = 0.0;
  for (std::size_t t = 0; t + lag < series.size(); ++t) num += (series[t] - mean) * (series[t + lag] - mean);
  return num / denom;
}

struct AcfRow {
  int cohort = 0;
  int lag = 0;
  std::optional<double> mean_r;
  long long researchers = 0;  // series contributing
  long long undefined = 0;    // constant series skipped
  double share = 0.0;         // q: cohort size / all test researchers
};

/// Mean autocorrelation of cumulative-count series y_s(from_year..to_year),
/// grouped by h(from_year) and restricted to cohorts 1..max_cohort.
inline std::vector<AcfRow> acf_profile(const DatasetSplit& split, const HistorySet& histories, int from_year,
                                       int to_year, int max_cohort) {
  if (to_year <= from_year) throw PreconditionError("ACF series needs at least two years");
  const std::size_t len = static_cast<std::size_t>(to_year - from_year + 1);
  struct Acc {
    long long members = 0, undefined = 0, defined = 0;
    std::vector<double> sum;
  };
  std::map<int, Acc> by_cohort;
  const double total = static_cast<double>(split.authors.size());
  std::vector<double> series(len);
  for (const auto& id : split.authors) {
    const AuthorHistory* h = find_history(histories, id);
    if (!h) continue;
    int i = cumulative_count(*h, split.history_start(), from_year);
    if (i < 1 || i > max_cohort) continue;
    auto& acc = by_cohort[i];
    if (acc.sum.empty()) acc.sum.assign(len, 0.0);
    ++acc.members;
    for (std::size_t t = 0; t < len; ++t) {
      series[t] = cumulative_count(*h, split.history_start(), from_year + static_cast<int>(t));
    }
    if (!autocorrelation(series, 0)) {
      ++acc.undefined;
      continue;
    }
    ++acc.defined;
    for (std::size_t lag = 0; lag < len; ++lag) acc.sum[lag] += *autocorrelation(series, lag);
  }
  std::vector<AcfRow> rows;
  for (const auto& [i, acc] : by_cohort) {
    for (std::size_t lag = 0; lag < len; ++lag) {
      AcfRow row;
      row.cohort = i;
      row.lag = static_cast<int>(lag);
      if (acc.defined > 0) row.mean_r = acc.sum[lag] / static_cast<double>(acc.defined);
      row.researchers = acc.defined;
      row.undefined = acc.undefined;
      row.share = total > 0 ? static_cast<double>(acc.members) / total : 0.0;
      rows.push_back(row);
    }
  }
  return rows;
}

namespace detail {
inline void check_simonton(double a, double b, double c) {
  if (!(a > 0.0 && b > 0.0 && c > 0.0)) throw PreconditionError("Simonton parameters must be positive");
  if (a == b) throw PreconditionError("Simonton curve is degenerate for a == b");
}
}  // namespace detail

/// p(t) = c (exp(-a t) - exp(-b t)).
inline double simonton_curve(double t, double a, double b, double c) {
  detail::check_simonton(a, b, c);
  return c * (std::exp(-a * t) - std::exp(-b * t));
}

/// Lifetime output m, from c = a b m / (b - a).
inline double simonton_lifetime_output(double a, double b, double c) {
  detail::check_simonton(a, b, c);
  return c * (b - a) / (a * b);
}

/// Time of peak productivity, ln(b/a) / (b - a).
inline double simonton_peak_time(double a, double b) {
  detail::check_simonton(a, b, 1.0);
  return std::log(b / a) / (b - a);
}

struct SimontonFit {
  double a = 0.0, b = 0.0, c = 0.0;
  double lifetime_output = 0.0;  // m
  double residual = 0.0;         // sum of squared residuals
};

struct SimontonFitOptions {
  /// (a, b) starting points; empty means the default grid over [0.01, 0.5].
  std::vector<std::pair<double, double>> starts;
  int max_iterations = 400;
};

inline std::vector<std::pair<double, double>> default_simonton_starts() {
  static constexpr std::array<double, 12> grid = {0.01, 0.015, 0.02, 0.03, 0.04, 0.05,
                                                  0.07, 0.1,   0.15, 0.2,  0.3,  0.5};
  std::vector<std::pair<double, double>> out;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    for (std::size_t j = i + 1; j < grid.size(); ++j) out.emplace_back(grid[i], grid[j]);
  }
  return out;
}

namespace detail {

// Parameters are (log a, log(b - a), log c), which keeps 0 < a < b and c > 0.
struct SimontonParams {
  double u, v, w;
  double a() const { return std::exp(u); }
  double b() const { return std::exp(u) + std::exp(v); }
  double c() const { return std::exp(w); }
};

inline double simonton_sse(const SimontonParams& p, std::span<const double> t, std::span<const double> y) {
  double a = p.a(), b = p.b(), c = p.c(), s = 0.0;
  for (std::size_t k = 0; k < t.size(); ++k) {
    double r = c * (std::exp(-a * t[k]) - std::exp(-b * t[k])) - y[k];
    s += r * r;
  }
  return std::isfinite(s) ? s : std::numeric_limits<double>::infinity();
}

inline bool solve3(std::array<std::array<double, 3>, 3> m, std::array<double, 3> rhs, std::array<double, 3>& x) {
  for (int col = 0; col < 3; ++col) {
    int piv = col;
    for (int r = col + 1; r < 3; ++r) {
      if (std::fabs(m[r][col]) > std::fabs(m[piv][col])) piv = r;
    }
    if (!(std::fabs(m[piv][col]) > 0.0)) return false;
    std::swap(m[col], m[piv]);
    std::swap(rhs[col], rhs[piv]);
    for (int r = col + 1; r < 3; ++r) {
      double f = m[r][col] / m[col][col];
      for (int k = col; k < 3; ++k) m[r][k] -= f * m[col][k];
      rhs[r] -= f * rhs[col];
    }
  }
  for (int r = 2; r >= 0; --r) {
    double s = rhs[r];
    for (int k = r + 1; k < 3; ++k) s -= m[r][k] * x[k];
    x[r] = s / m[r][r];
  }
  return true;
}

/// Levenberg-Marquardt from one start; returns the final parameters.
inline SimontonParams simonton_lm(SimontonParams p, std::span<const double> t, std::span<const double> y,
                                  int max_iterations) {
  double sse = simonton_sse(p, t, y);
  double damping = 1e-3;
  for (int it = 0; it < max_iterations && sse > 0.0; ++it) {
    const double a = p.a(), b = p.b(), c = p.c(), ev = std::exp(p.v);
    std::array<std::array<double, 3>, 3> jtj{};
    std::array<double, 3> jtr{};
    for (std::size_t k = 0; k < t.size(); ++k) {
      double ea = std::exp(-a * t[k]), eb = std::exp(-b * t[k]);
      double value = c * (ea - eb);
      double dpa = -c * t[k] * ea, dpb = c * t[k] * eb;
      std::array<double, 3> row = {a * (dpa + dpb), ev * dpb, value};
      double r = value - y[k];
      for (int i = 0; i < 3; ++i) {
        jtr[i] += row[i] * r;
        for (int j = 0; j < 3; ++j) jtj[i][j] += row[i] * row[j];
      }
    }
    bool improved = false;
    while (damping < 1e20) {
      auto lhs = jtj;
      for (int i = 0; i < 3; ++i) lhs[i][i] += damping * std::max(jtj[i][i], 1e-300);
      std::array<double, 3> step{};
      if (!solve3(lhs, {-jtr[0], -jtr[1], -jtr[2]}, step)) {
        damping *= 10.0;
        continue;
      }
      SimontonParams trial{std::clamp(p.u + step[0], -40.0, 5.0), std::clamp(p.v + step[1], -40.0, 5.0),
                           std::clamp(p.w + step[2], -300.0, 300.0)};
      double trial_sse = simonton_sse(trial, t, y);
      if (trial_sse < sse) {
        double gain = sse - trial_sse;
        p = trial;
        sse = trial_sse;
        damping = std::max(damping / 3.0, 1e-12);
        improved = true;
        if (gain <= 1e-15 * sse) return p;
        break;
      }
      damping *= 4.0;
    }
    if (!improved) break;
  }
  return p;
}

}  // namespace detail

/// Least-squares fit of the Simonton curve to (t, y), multi-start
/// Levenberg-Marquardt. Returned parameters satisfy 0 < a < b, c > 0.
inline SimontonFit fit_simonton(std::span<const double> t, std::span<const double> y,
                                const SimontonFitOptions& options = {}) {
  if (t.size() != y.size()) throw PreconditionError("t and y must have equal length");
  if (t.size() < 4) throw PreconditionError("Simonton fit needs at least 4 points");
  if (std::all_of(y.begin(), y.end(), [](double v) { return v == 0.0; })) {
    throw PreconditionError("Simonton fit of an all-zero series");
  }
  auto starts = options.starts.empty() ? default_simonton_starts() : options.starts;
  std::optional<detail::SimontonParams> best;
  double best_sse = std::numeric_limits<double>::infinity();
  for (auto [a0, b0] : starts) {
    if (a0 > b0) std::swap(a0, b0);
    if (!(a0 > 0.0) || a0 == b0) continue;
    double gg = 0.0, gy = 0.0;
    for (std::size_t k = 0; k < t.size(); ++k) {
      double g = std::exp(-a0 * t[k]) - std::exp(-b0 * t[k]);
      gg += g * g;
      gy += g * y[k];
    }
    double c0 = gg > 0.0 ? gy / gg : 0.0;
    if (!(c0 > 0.0)) c0 = 1e-8;
    detail::SimontonParams p{std::log(a0), std::log(b0 - a0), std::log(c0)};
    p = detail::simonton_lm(p, t, y, options.max_iterations);
    double sse = detail::simonton_sse(p, t, y);
    if (sse < best_sse) {
      best_sse = sse;
      best = p;
    }
  }
  if (!best) throw PreconditionError("no valid Simonton starting point");
  SimontonFit fit;
  fit.a = best->a();
  fit.b = best->b();
  fit.c = best->c();
  fit.lifetime_output = fit.c * (fit.b - fit.a) / (fit.a * fit.b);
  fit.residual = best_sse;
  return fit;
}

}  // namespace pubforge
