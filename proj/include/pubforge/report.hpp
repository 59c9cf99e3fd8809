#pragma once

// Figure-equivalent tables (and optional SVG panels) assembled from the
// evaluation primitives.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <map>
#include <numeric>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "pubforge/cohort.hpp"
#include "pubforge/corpus.hpp"
#include "pubforge/creativity.hpp"
#include "pubforge/evaluate.hpp"
#include "pubforge/forecast.hpp"
#include "pubforge/rng.hpp"
#include "pubforge/table.hpp"

namespace pubforge {

inline constexpr double wald_z95 = 1.959963984540054;

inline CounterRng report_stream(std::uint64_t seed, std::string_view label, int index) {
  return CounterRng(splitmix64(seed ^ splitmix64(fnv1a64(label))), static_cast<std::uint64_t>(index));
}

struct KsGroupRow {
  std::string grouping;  // "le10" or "i=k"
  int year = 0;          // y; counts are publications in y + 1
  long long researchers = 0;
  double share = 0.0;    // q: group size / training researchers active at y
  double mean = 0.0;
  KsResult ks;
};

/// Poisson KS tests on next-year output of training researchers active in y,
/// grouped by cumulative count at [T0, y]: all with at most 10, and each
/// exact count 1..max_exact. Groups under 5 researchers are omitted.
inline std::vector<KsGroupRow> poisson_ks_by_year(const DatasetSplit& training, const HistorySet& histories,
                                                  int first_year, int last_year, int max_exact, int n_boot,
                                                  std::uint64_t seed) {
  std::vector<KsGroupRow> rows;
  for (int y = first_year; y <= last_year; ++y) {
    std::map<std::string, std::vector<std::int64_t>> groups;
    long long active = 0;
    for (const auto& id : training.authors) {
      const AuthorHistory* h = find_history(histories, id);
      if (!h || h->count_in(y) == 0) continue;
      ++active;
      int cum = cumulative_count(*h, training.history_start(), y);
      int next = h->count_in(y + 1);
      if (cum <= 10) groups["le10"].push_back(next);
      if (cum <= max_exact) groups["i=" + std::to_string(cum)].push_back(next);
    }
    std::vector<std::string> order = {"le10"};
    for (int i = 1; i <= max_exact; ++i) order.push_back("i=" + std::to_string(i));
    for (const auto& g : order) {
      auto it = groups.find(g);
      if (it == groups.end() || it->second.size() < 5) continue;
      KsGroupRow row;
      row.grouping = g;
      row.year = y;
      row.researchers = static_cast<long long>(it->second.size());
      row.share = static_cast<double>(row.researchers) / static_cast<double>(active);
      row.mean = detail::sample_mean(it->second);
      row.ks = ks_poisson_test(it->second, n_boot, report_stream(seed, "fig1/" + g, y));
      rows.push_back(row);
    }
  }
  return rows;
}

struct TrendBandRow {
  int cohort = 0;
  int j = 0;
  int year = 0;
  long long researchers = 0;
  std::optional<double> eta;
  double fitted = 0.0, lower = 0.0, upper = 0.0;
  double p_value = 1.0;
  FitMode mode = FitMode::glm;
};

/// Observed eta against the fitted rate with Wald bands at `z`. Covariances
/// are not stored in model files, so each shipped cohort is refitted here.
inline std::vector<TrendBandRow> trend_bands(const CohortMatrix& matrix, const CreativityModel& model,
                                             const FitOptions& options = {}, double z = wald_z95) {
  std::vector<TrendBandRow> rows;
  for (int i = 1; i <= std::min(model.max_cohort(), matrix.max_cohort()); ++i) {
    const auto& shipped = model.fit(i);
    if (!shipped) continue;
    CohortFit fit = fit_cohort(matrix, i, shipped->mode, options);
    for (int j = 1; j <= matrix.intervals(); ++j) {
      TrendBandRow row;
      row.cohort = i;
      row.j = j;
      row.year = matrix.year(j);
      row.researchers = matrix.n(i, j);
      row.eta = matrix.eta(i, j);
      double x = j - 1;
      double lr = fit.log_rate(x), se = fit.log_rate_se(x);
      row.fitted = std::exp(lr);
      row.lower = std::exp(lr - z * se);
      row.upper = std::exp(lr + z * se);
      row.p_value = shipped->p_value;
      row.mode = shipped->mode;
      rows.push_back(row);
    }
  }
  return rows;
}

/// Ensemble means as point forecasts, with h(t_X) recomputed from histories.
inline std::vector<PredictedPath> predicted_paths(const EnsembleSummary& summary, const HistorySet& histories,
                                                  int history_start, int start_year, int end_year) {
  std::vector<PredictedPath> out;
  for (const auto& [id, by_year] : summary) {
    const AuthorHistory* h = find_history(histories, id);
    if (!h) throw SchemaError("forecast researcher '" + id + "' missing from histories");
    PredictedPath p{id, cumulative_count(*h, history_start, start_year), {}};
    for (int y = start_year + 1; y <= end_year; ++y) {
      auto it = by_year.find(y);
      if (it == by_year.end()) throw SchemaError("forecast for '" + id + "' lacks year " + std::to_string(y));
      p.predicted.push_back(it->second.mean);
    }
    out.push_back(std::move(p));
  }
  return out;
}

struct YearCorrelation {
  int year = 0;
  long long researchers = 0;
  TrendCorrelation r;
};

inline std::vector<YearCorrelation> correlations_by_year(const std::vector<PredictedPath>& paths,
                                                         const HistorySet& histories, int history_start,
                                                         int start_year) {
  std::vector<YearCorrelation> rows;
  if (paths.size() < 2) return rows;
  for (std::size_t s = 0; s < paths.front().predicted.size(); ++s) {
    int year = start_year + static_cast<int>(s) + 1;
    std::vector<double> predicted, actual;
    for (const auto& p : paths) {
      predicted.push_back(p.predicted[s]);
      actual.push_back(cumulative_count(*find_history(histories, p.author_id), history_start, year));
    }
    rows.push_back({year, static_cast<long long>(paths.size()), trend_correlations(predicted, actual)});
  }
  return rows;
}

struct DistributionRow {
  int year = 0;
  int count = 0;
  long long actual = 0;     // researchers with this cumulative count
  long long predicted = 0;  // same, in replicate 0
};

struct DistributionTest {
  int year = 0;
  long long researchers = 0;
  KsResult ks;
};

/// Ground-truth vs one simulated draw (replicate 0) of cumulative counts.
inline void distribution_comparison(const ReplicateDump& dump, const HistorySet& histories, int history_start,
                                    int start_year, int end_year, int n_boot, std::uint64_t seed,
                                    std::vector<DistributionRow>& dist, std::vector<DistributionTest>& tests) {
  for (int y = start_year + 1; y <= end_year; ++y) {
    std::vector<std::int64_t> actual, predicted;
    for (const auto& [id, reps] : dump) {
      auto r0 = reps.find(0);
      if (r0 == reps.end()) continue;
      auto v = r0->second.find(y);
      if (v == r0->second.end()) continue;
      const AuthorHistory* h = find_history(histories, id);
      if (!h) throw SchemaError("forecast researcher '" + id + "' missing from histories");
      actual.push_back(cumulative_count(*h, history_start, y));
      predicted.push_back(v->second);
    }
    if (actual.empty()) continue;
    std::map<int, std::pair<long long, long long>> freq;
    for (auto a : actual) ++freq[static_cast<int>(a)].first;
    for (auto p : predicted) ++freq[static_cast<int>(p)].second;
    for (const auto& [c, f] : freq) dist.push_back({y, c, f.first, f.second});
    tests.push_back({y, static_cast<long long>(actual.size()),
                     ks_two_sample(actual, predicted, n_boot, report_stream(seed, "fig6", y))});
  }
}

struct SimontonSeriesRow {
  int cohort = 0;
  int year = 0;
  int t = 0;
  double mean = 0.0;
  std::optional<double> fitted;
};

struct SimontonCohortRow {
  int cohort = 0;
  long long researchers = 0;
  std::optional<SimontonFit> fit;
  double total_ss = 0.0;  // sum of squares about the mean, for scale
};

/// Mean annual output of test researchers grouped by h(t_X), for years
/// t_X + 1 .. end_year with t = year - t_X, and a Simonton fit per cohort.
inline void simonton_comparison(const DatasetSplit& test, const HistorySet& histories, int end_year, int max_i,
                                std::vector<SimontonCohortRow>& fits, std::vector<SimontonSeriesRow>& series) {
  const int tX = test.start();
  if (end_year <= tX) return;
  std::map<int, std::vector<const AuthorHistory*>> groups;
  for (const auto& id : test.authors) {
    const AuthorHistory* h = find_history(histories, id);
    if (!h) continue;
    int i = cumulative_count(*h, test.history_start(), tX);
    if (i >= 1 && i <= max_i) groups[i].push_back(h);
  }
  for (const auto& [i, members] : groups) {
    std::vector<double> t, y;
    for (int year = tX + 1; year <= end_year; ++year) {
      double s = 0.0;
      for (const auto* h : members) s += h->count_in(year);
      t.push_back(year - tX);
      y.push_back(s / static_cast<double>(members.size()));
    }
    SimontonCohortRow row{i, static_cast<long long>(members.size()), std::nullopt, 0.0};
    double mean = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(y.size());
    for (double v : y) row.total_ss += (v - mean) * (v - mean);
    if (t.size() >= 4 && std::any_of(y.begin(), y.end(), [](double v) { return v != 0.0; })) {
      row.fit = fit_simonton(t, y);
    }
    for (std::size_t k = 0; k < t.size(); ++k) {
      SimontonSeriesRow sr{i, tX + static_cast<int>(t[k]), static_cast<int>(t[k]), y[k], std::nullopt};
      if (row.fit) sr.fitted = simonton_curve(t[k], row.fit->a, row.fit->b, row.fit->c);
      series.push_back(sr);
    }
    fits.push_back(std::move(row));
  }
}

// ---------------------------------------------------------------------------
// Table writers

inline void write_ks_groups(std::ostream& out, const std::vector<KsGroupRow>& rows) {
  table::Writer w(out);
  w.row("grouping", "year", "researchers", "q", "mean", "statistic", "p_value", "resamples");
  for (const auto& r : rows) {
    w.row(r.grouping, r.year, r.researchers, r.share, r.mean, r.ks.statistic, r.ks.p_value, r.ks.resamples);
  }
}

inline void write_trend_bands(std::ostream& out, const std::vector<TrendBandRow>& rows) {
  table::Writer w(out);
  w.row("i", "j", "t_j", "n_ij", "eta_ij", "fitted", "lower95", "upper95", "p_value", "mode");
  for (const auto& r : rows) {
    w.row(r.cohort, r.j, r.year, r.researchers, r.eta, r.fitted, r.lower, r.upper, r.p_value, to_string(r.mode));
  }
}

inline void write_trend_table(std::ostream& out, const std::vector<TrendRow>& rows) {
  table::Writer w(out);
  w.row("i", "year", "researchers", "actual_mean", "predicted_mean");
  for (const auto& r : rows) w.row(r.cohort, r.year, r.researchers, r.actual_mean, r.predicted_mean);
}

inline void write_correlations(std::ostream& out, const std::vector<YearCorrelation>& rows) {
  table::Writer w(out);
  w.row("year", "researchers", "s1", "s2");
  for (const auto& r : rows) w.row(r.year, r.researchers, r.r.s1, r.r.s2);
}

inline void write_distribution(std::ostream& out, const std::vector<DistributionRow>& rows) {
  table::Writer w(out);
  w.row("year", "count", "actual", "predicted");
  for (const auto& r : rows) w.row(r.year, r.count, r.actual, r.predicted);
}

inline void write_distribution_tests(std::ostream& out, const std::vector<DistributionTest>& rows) {
  table::Writer w(out);
  w.row("year", "researchers", "statistic", "p_value", "resamples");
  for (const auto& r : rows) w.row(r.year, r.researchers, r.ks.statistic, r.ks.p_value, r.ks.resamples);
}

inline void write_acf(std::ostream& out, const std::vector<AcfRow>& rows) {
  table::Writer w(out);
  w.row("i", "lag", "mean_r", "researchers", "undefined", "q");
  for (const auto& r : rows) w.row(r.cohort, r.lag, r.mean_r, r.researchers, r.undefined, r.share);
}

inline void write_simonton_fits(std::ostream& out, const std::vector<SimontonCohortRow>& rows) {
  table::Writer w(out);
  w.row("i", "researchers", "a", "b", "c", "m", "residual", "total_ss");
  for (const auto& r : rows) {
    if (r.fit) {
      w.row(r.cohort, r.researchers, r.fit->a, r.fit->b, r.fit->c, r.fit->lifetime_output, r.fit->residual,
            r.total_ss);
    } else {
      w.row(r.cohort, r.researchers, "", "", "", "", "", r.total_ss);
    }
  }
}

inline void write_simonton_series(std::ostream& out, const std::vector<SimontonSeriesRow>& rows) {
  table::Writer w(out);
  w.row("i", "year", "t", "mean", "fitted");
  for (const auto& r : rows) w.row(r.cohort, r.year, r.t, r.mean, r.fitted);
}

// ---------------------------------------------------------------------------
// Minimal SVG line charts

struct PlotSeries {
  std::string label;
  std::vector<double> x, y;
  bool markers = false;  // circles instead of a polyline
};

inline void write_svg_plot(std::ostream& out, const std::string& title, const std::string& x_label,
                           const std::string& y_label, const std::vector<PlotSeries>& series) {
  constexpr double W = 640, H = 420, left = 60, right = 150, top = 36, bottom = 48;
  double x0 = HUGE_VAL, x1 = -HUGE_VAL, y0 = HUGE_VAL, y1 = -HUGE_VAL;
  for (const auto& s : series) {
    for (std::size_t k = 0; k < s.x.size(); ++k) {
      if (!std::isfinite(s.y[k])) continue;
      x0 = std::min(x0, s.x[k]);
      x1 = std::max(x1, s.x[k]);
      y0 = std::min(y0, s.y[k]);
      y1 = std::max(y1, s.y[k]);
    }
  }
  if (!(x0 <= x1)) x0 = 0, x1 = 1, y0 = 0, y1 = 1;
  if (x0 == x1) x1 = x0 + 1;
  if (y0 == y1) y1 = y0 + 1;
  auto px = [&](double x) { return left + (x - x0) / (x1 - x0) * (W - left - right); };
  auto py = [&](double y) { return H - bottom - (y - y0) / (y1 - y0) * (H - top - bottom); };
  auto num = [](double v) { return table::format_double(std::round(v * 100.0) / 100.0); };
  static const char* palette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd",
                                  "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};

  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out << "<text x=\"" << W / 2 << "\" y=\"20\" text-anchor=\"middle\" font-size=\"14\">" << title << "</text>\n";
  out << "<line x1=\"" << left << "\" y1=\"" << H - bottom << "\" x2=\"" << W - right << "\" y2=\"" << H - bottom
      << "\" stroke=\"black\"/>\n";
  out << "<line x1=\"" << left << "\" y1=\"" << top << "\" x2=\"" << left << "\" y2=\"" << H - bottom
      << "\" stroke=\"black\"/>\n";
  out << "<text x=\"" << (left + W - right) / 2 << "\" y=\"" << H - 10 << "\" text-anchor=\"middle\" font-size=\"12\">"
      << x_label << "</text>\n";
  out << "<text x=\"14\" y=\"" << (top + H - bottom) / 2 << "\" font-size=\"12\" transform=\"rotate(-90 14 "
      << (top + H - bottom) / 2 << ")\" text-anchor=\"middle\">" << y_label << "</text>\n";
  for (int k = 0; k <= 4; ++k) {
    double xv = x0 + (x1 - x0) * k / 4, yv = y0 + (y1 - y0) * k / 4;
    out << "<text x=\"" << num(px(xv)) << "\" y=\"" << H - bottom + 16 << "\" font-size=\"10\" text-anchor=\"middle\">"
        << num(xv) << "</text>\n";
    out << "<text x=\"" << left - 6 << "\" y=\"" << num(py(yv) + 3) << "\" font-size=\"10\" text-anchor=\"end\">"
        << num(yv) << "</text>\n";
  }
  for (std::size_t s = 0; s < series.size(); ++s) {
    const char* colour = palette[s % std::size(palette)];
    const auto& ser = series[s];
    if (ser.markers) {
      for (std::size_t k = 0; k < ser.x.size(); ++k) {
        if (!std::isfinite(ser.y[k])) continue;
        out << "<circle cx=\"" << num(px(ser.x[k])) << "\" cy=\"" << num(py(ser.y[k])) << "\" r=\"3\" fill=\"none\" stroke=\""
            << colour << "\"/>\n";
      }
    } else {
      out << "<polyline fill=\"none\" stroke=\"" << colour << "\" points=\"";
      for (std::size_t k = 0; k < ser.x.size(); ++k) {
        if (!std::isfinite(ser.y[k])) continue;
        out << num(px(ser.x[k])) << ',' << num(py(ser.y[k])) << ' ';
      }
      out << "\"/>\n";
    }
    double ly = top + 14.0 * static_cast<double>(s);
    out << "<text x=\"" << W - right + 10 << "\" y=\"" << ly + 10 << "\" font-size=\"10\" fill=\"" << colour << "\">"
        << ser.label << "</text>\n";
  }
  out << "</svg>\n";
}

}  // namespace pubforge
