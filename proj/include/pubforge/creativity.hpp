#pragma once

// Per-cohort creativity fits: log lambda_ij = alpha_i + beta_i (t_j - t_1).

#include <cmath>
#include <cstddef>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "pubforge/cohort.hpp"
#include "pubforge/error.hpp"
#include "pubforge/regression.hpp"
#include "pubforge/table.hpp"

namespace pubforge {

enum class FitMode { glm, ols, constant };

inline const char* to_string(FitMode mode) {
  switch (mode) {
    case FitMode::glm: return "glm";
    case FitMode::ols: return "ols";
    case FitMode::constant: return "constant";
  }
  return "?";
}

inline FitMode parse_fit_mode(const std::string& text) {
  if (text == "glm") return FitMode::glm;
  if (text == "ols") return FitMode::ols;
  if (text == "constant") return FitMode::constant;
  throw ConfigError("unknown fit mode '" + text + "' (expected glm, ols or constant)");
}

/// Exposure and output of one cohort over the training intervals j = 1..L.
/// Values are real so that exact eta rows can be fed to the OLS path.
struct CohortRow {
  std::vector<double> researchers;   // n_ij
  std::vector<double> publications;  // m_ij
};

inline CohortRow cohort_row(const CohortMatrix& matrix, int i) {
  CohortRow row;
  for (int j = 1; j <= matrix.intervals(); ++j) {
    row.researchers.push_back(static_cast<double>(matrix.n(i, j)));
    row.publications.push_back(static_cast<double>(matrix.m(i, j)));
  }
  return row;
}

struct CohortFit {
  int cohort = 0;
  double alpha = 0.0;
  double beta = 0.0;
  double alpha_se = 0.0;
  double beta_se = 0.0;
  double cov_alpha_beta = 0.0;
  double p_value = 1.0;
  FitMode mode = FitMode::glm;
  int cells_used = 0;

  double log_rate(double x) const { return alpha + beta * x; }
  /// Standard error of alpha + beta * x.
  double log_rate_se(double x) const {
    double v = alpha_se * alpha_se + 2.0 * x * cov_alpha_beta + x * x * beta_se * beta_se;
    return std::sqrt(v > 0.0 ? v : 0.0);
  }
};

/// Deviance of a fitted model together with the cells it was fitted on, so
/// nested comparisons can check they refer to the same data.
struct DevianceSummary {
  std::vector<double> cell_x;
  std::vector<double> cell_y;
  double deviance = 0.0;
};

/// Likelihood-ratio trend test: the deviance drop from the beta = 0 model,
/// referred to chi-square with one degree of freedom.
inline double trend_significance(const DevianceSummary& full, const DevianceSummary& null) {
  if (full.cell_x != null.cell_x || full.cell_y != null.cell_y) {
    throw PreconditionError("trend test requires both fits on identical cells");
  }
  if (full.deviance == null.deviance) return 1.0;
  return chi_square_1_sf(null.deviance - full.deviance);
}

struct FitOptions {
  int min_cells = 3;
  IrlsOptions irls{};
};

namespace detail {

inline CohortFit constant_fit(int cohort, double sum_m, double sum_n, int cells) {
  CohortFit fit;
  fit.cohort = cohort;
  fit.alpha = std::log(sum_m / sum_n);
  fit.alpha_se = std::sqrt(1.0 / sum_m);
  fit.mode = FitMode::constant;
  fit.cells_used = cells;
  return fit;
}

}  // namespace detail

/// Fits one cohort row. GLM uses m_ij with offset n_ij over cells with
/// n_ij > 0; OLS regresses log eta_ij on (t_j - t_1) over cells with
/// eta_ij > 0. Fewer than `min_cells` usable cells yields the constant rate.
inline CohortFit fit_cohort(const CohortRow& row, FitMode mode, int cohort = 0,
                            const FitOptions& options = {}) {
  if (row.researchers.size() != row.publications.size()) {
    throw PreconditionError("cohort row has mismatched n and m lengths");
  }
  double sum_n = 0.0, sum_m = 0.0;
  int exposed = 0;
  std::vector<double> gx, gy, gn, ox, oy;
  for (std::size_t k = 0; k < row.researchers.size(); ++k) {
    double n = row.researchers[k], m = row.publications[k];
    if (!(n > 0.0)) continue;
    ++exposed;
    sum_n += n;
    sum_m += m;
    double x = static_cast<double>(k);  // t_j - t_1 with j = k + 1
    gx.push_back(x);
    gy.push_back(m);
    gn.push_back(n);
    if (m > 0.0) {
      ox.push_back(x);
      oy.push_back(std::log(m / n));
    }
  }
  if (exposed == 0) throw UnfittableCohort("cohort " + std::to_string(cohort) + " has no exposure");
  if (!(sum_m > 0.0)) throw UnfittableCohort("cohort " + std::to_string(cohort) + " never produced a publication");

  if (mode == FitMode::constant) return detail::constant_fit(cohort, sum_m, sum_n, exposed);

  const std::size_t usable = mode == FitMode::glm ? gx.size() : ox.size();
  if (usable < static_cast<std::size_t>(options.min_cells)) {
    auto fit = detail::constant_fit(cohort, sum_m, sum_n, exposed);
    fit.p_value = 1.0;
    return fit;
  }

  CohortFit fit;
  fit.cohort = cohort;
  fit.mode = mode;
  fit.cells_used = static_cast<int>(usable);
  if (mode == FitMode::glm) {
    auto full = glm_poisson(gx, gy, gn, options.irls);
    auto null = glm_poisson_null(gy, gn);
    fit.alpha = full.alpha;
    fit.beta = full.beta;
    fit.alpha_se = full.alpha_se();
    fit.beta_se = full.beta_se();
    fit.cov_alpha_beta = full.cov_alpha_beta;
    fit.p_value = trend_significance({gx, gy, full.deviance}, {gx, gy, null.deviance});
  } else {
    auto ols = ols_line(ox, oy);
    fit.alpha = ols.alpha;
    fit.beta = ols.beta;
    fit.alpha_se = ols.alpha_se;
    fit.beta_se = ols.beta_se;
    fit.cov_alpha_beta = ols.cov_alpha_beta;
    // Gaussian likelihood ratio: n log(RSS_null / RSS_full).
    double n = static_cast<double>(ols.n);
    double full_dev = ols.rss > 0.0 ? n * std::log(ols.rss / n) : -HUGE_VAL;
    double null_dev = ols.rss_null > 0.0 ? n * std::log(ols.rss_null / n) : -HUGE_VAL;
    fit.p_value = trend_significance({ox, oy, full_dev}, {ox, oy, null_dev});
  }
  return fit;
}

inline CohortFit fit_cohort(const CohortMatrix& matrix, int i, FitMode mode, const FitOptions& options = {}) {
  return fit_cohort(cohort_row(matrix, i), mode, i, options);
}

class CreativityModel {
 public:
  CreativityModel() = default;
  CreativityModel(int max_cohort, int t0, int training_intervals, int horizon, double significance_level,
                  FitMode mode)
      : max_cohort_(max_cohort),
        t0_(t0),
        training_intervals_(training_intervals),
        horizon_(horizon),
        significance_level_(significance_level),
        mode_(mode),
        fits_(static_cast<std::size_t>(max_cohort)) {}

  int max_cohort() const { return max_cohort_; }
  /// I_1: the largest cohort the model predicts for.
  int cohort_limit() const { return cohort_limit_; }
  /// J: number of intervals t_1..t_J.
  int horizon() const { return horizon_; }
  int training_intervals() const { return training_intervals_; }
  int t0() const { return t0_; }
  int year(int j) const { return t0_ + j; }
  double significance_level() const { return significance_level_; }
  FitMode mode() const { return mode_; }

  const std::optional<CohortFit>& fit(int i) const { return fits_.at(static_cast<std::size_t>(i - 1)); }
  void set_fit(int i, std::optional<CohortFit> fit) { fits_.at(static_cast<std::size_t>(i - 1)) = std::move(fit); }
  void set_cohort_limit(int limit) { cohort_limit_ = limit; }

  /// lambda_ij = exp(alpha_i + beta_i (t_j - t_1)).
  double lambda(int i, int j) const {
    if (i < 1 || i > cohort_limit_) throw CohortOutOfRange(i, cohort_limit_);
    if (j < 1 || j > horizon_) {
      throw PreconditionError("interval " + std::to_string(j) + " outside 1.." + std::to_string(horizon_));
    }
    return std::exp(fit(i)->log_rate(static_cast<double>(j - 1)));
  }

  double rate(int i, int j) const { return lambda(i, j); }

 private:
  int max_cohort_ = 0;
  int cohort_limit_ = 0;
  int t0_ = 0;
  int training_intervals_ = 0;
  int horizon_ = 0;
  double significance_level_ = 0.05;
  FitMode mode_ = FitMode::glm;
  std::vector<std::optional<CohortFit>> fits_;
};

struct ModelOptions {
  FitOptions fit{};
  /// Upper bound on I_1; 0 means "as many contiguous cohorts as are fittable".
  int cohort_limit_cap = 0;
};

/// Fits every cohort, refits insignificant trends as constant rates, and sets
/// I_1 to the longest run of fitted cohorts starting at 1.
inline CreativityModel build_model(const CohortMatrix& matrix, int horizon, double significance_level,
                                   FitMode mode, const ModelOptions& options = {}) {
  if (horizon < 1) throw PreconditionError("forecast horizon J must be positive");
  if (!(significance_level > 0.0 && significance_level <= 1.0)) {
    throw PreconditionError("significance level must be in (0, 1]");
  }
  CreativityModel model(matrix.max_cohort(), matrix.t0(), matrix.intervals(), horizon, significance_level, mode);
  int limit = 0;
  bool contiguous = true;
  for (int i = 1; i <= matrix.max_cohort(); ++i) {
    std::optional<CohortFit> fit;
    try {
      fit = fit_cohort(matrix, i, mode, options.fit);
    } catch (const UnfittableCohort&) {
      fit.reset();
    }
    if (fit && fit->mode != FitMode::constant && !(fit->p_value < significance_level)) {
      double p = fit->p_value;
      auto row = cohort_row(matrix, i);
      fit = fit_cohort(row, FitMode::constant, i, options.fit);
      fit->p_value = p;
    }
    if (fit && contiguous) {
      limit = i;
    } else {
      contiguous = false;
    }
    model.set_fit(i, std::move(fit));
  }
  if (options.cohort_limit_cap > 0 && options.cohort_limit_cap < limit) limit = options.cohort_limit_cap;
  model.set_cohort_limit(limit);
  return model;
}

/// Header block of `# key=value` lines, then `i,alpha,beta,alpha_se,beta_se,p_value,mode`.
inline void write_model(std::ostream& out, const CreativityModel& model) {
  out << "# pubforge creativity model\n";
  out << "# t_grid=" << model.t0() << ':' << model.year(model.horizon()) << '\n';
  out << "# L=" << model.training_intervals() << '\n';
  out << "# J=" << model.horizon() << '\n';
  out << "# I=" << model.max_cohort() << '\n';
  out << "# I_1=" << model.cohort_limit() << '\n';
  out << "# significance_level=" << table::format_double(model.significance_level()) << '\n';
  out << "# fit_mode=" << to_string(model.mode()) << '\n';
  table::Writer w(out);
  w.row("i", "alpha", "beta", "alpha_se", "beta_se", "p_value", "mode");
  for (int i = 1; i <= model.max_cohort(); ++i) {
    const auto& f = model.fit(i);
    if (!f) continue;
    w.row(i, f->alpha, f->beta, f->alpha_se, f->beta_se, f->p_value, to_string(f->mode));
  }
}

/// Reads a model file. The alpha/beta covariance is not part of the format
/// and is restored as zero; cells_used is restored as zero.
inline CreativityModel read_model(std::istream& in) {
  std::map<std::string, std::string> header;
  std::string line;
  std::string body;
  while (table::next_line(in, line)) {
    if (line.rfind("# ", 0) == 0) {
      auto eq = line.find('=');
      if (eq != std::string::npos) header[line.substr(2, eq - 2)] = line.substr(eq + 1);
      continue;
    }
    body += line;
    body += '\n';
    break;
  }
  std::string rest((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  body += rest;

  auto need = [&](const std::string& key) -> const std::string& {
    auto it = header.find(key);
    if (it == header.end()) throw SchemaError("model header lacks '" + key + "'");
    return it->second;
  };
  auto need_int = [&](const std::string& key) {
    auto v = table::parse_int<int>(need(key));
    if (!v) throw SchemaError("model header '" + key + "' is not an integer");
    return *v;
  };
  for (const auto& [k, v] : header) {
    if (k != "t_grid" && k != "L" && k != "J" && k != "I" && k != "I_1" && k != "significance_level" &&
        k != "fit_mode") {
      throw SchemaError("unknown model header key '" + k + "'");
    }
  }
  const auto& grid = need("t_grid");
  auto colon = grid.find(':');
  auto t0 = colon == std::string::npos ? std::nullopt : table::parse_int<int>(grid.substr(0, colon));
  if (!t0) throw SchemaError("model header t_grid must be 'first:last'");
  auto level = table::parse_double(need("significance_level"));
  if (!level) throw SchemaError("model header significance_level is not a number");

  CreativityModel model(need_int("I"), *t0, need_int("L"), need_int("J"), *level, parse_fit_mode(need("fit_mode")));
  model.set_cohort_limit(need_int("I_1"));

  std::istringstream rows_in(body);
  auto rows = table::read_rows(rows_in, {"i", "alpha", "beta", "alpha_se", "beta_se", "p_value", "mode"});
  for (const auto& row : rows.rows) {
    auto i = table::parse_int<int>(row.fields[0]);
    if (!i || *i < 1 || *i > model.max_cohort()) throw RowError("bad cohort index '" + row.fields[0] + "'", row.line);
    CohortFit f;
    f.cohort = *i;
    double* targets[] = {&f.alpha, &f.beta, &f.alpha_se, &f.beta_se, &f.p_value};
    for (int k = 0; k < 5; ++k) {
      auto v = table::parse_double(row.fields[static_cast<std::size_t>(k + 1)]);
      if (!v) throw RowError("field '" + row.fields[static_cast<std::size_t>(k + 1)] + "' is not a number", row.line);
      *targets[k] = *v;
    }
    f.mode = parse_fit_mode(row.fields[6]);
    model.set_fit(*i, f);
  }
  for (int i = 1; i <= model.cohort_limit(); ++i) {
    if (!model.fit(i)) throw SchemaError("model declares I_1=" + std::to_string(model.cohort_limit()) +
                                         " but cohort " + std::to_string(i) + " has no fit");
  }
  return model;
}

}  // namespace pubforge
