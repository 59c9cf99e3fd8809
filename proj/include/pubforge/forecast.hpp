#pragma once

// Monte Carlo forecasting of cumulative publication counts.
//
// A researcher with h publications at t_{l-1} publishes r ~ Poisson(lambda_{h,l})
// during interval l, then moves to cohort h + r. Rates are looked up in any
// RateSurface; cohorts above the surface's limit read the limit's rates and
// every such lookup is counted.

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstddef>
#include <cstdint>
#include <istream>
#include <map>
#include <ostream>
#include <string>
#include <thread>
#include <vector>

#include "pubforge/cohort.hpp"
#include "pubforge/corpus.hpp"
#include "pubforge/error.hpp"
#include "pubforge/rng.hpp"
#include "pubforge/table.hpp"

namespace pubforge {

template <typename T>
concept RateSurface = requires(const T& s, int i, int j) {
  { s.cohort_limit() } -> std::convertible_to<int>;
  { s.horizon() } -> std::convertible_to<int>;
  { s.rate(i, j) } -> std::convertible_to<double>;
};

/// Explicit rate grid, cohorts 1..limit by intervals 1..horizon.
class RateTable {
 public:
  RateTable(int cohort_limit, int horizon, double fill = 0.0)
      : limit_(cohort_limit), horizon_(horizon),
        rates_(static_cast<std::size_t>(cohort_limit * horizon), fill) {}

  int cohort_limit() const { return limit_; }
  int horizon() const { return horizon_; }
  double rate(int i, int j) const { return rates_.at(index(i, j)); }
  void set(int i, int j, double value) { rates_.at(index(i, j)) = value; }

 private:
  std::size_t index(int i, int j) const {
    if (i < 1 || i > limit_) throw CohortOutOfRange(i, limit_);
    if (j < 1 || j > horizon_) throw PreconditionError("interval " + std::to_string(j) + " out of range");
    return static_cast<std::size_t>((i - 1) * horizon_ + (j - 1));
  }
  int limit_, horizon_;
  std::vector<double> rates_;
};

struct Trajectory {
  std::vector<int> cumulative;  // h after intervals X+1..Y
  long long clamp_hits = 0;
};

namespace detail {
template <RateSurface S>
void check_interval_range(const S& model, int from, int to) {
  if (!(0 <= from && from < to && to <= model.horizon())) {
    throw PreconditionError("need 0 <= X < Y <= J, got X=" + std::to_string(from) + " Y=" + std::to_string(to) +
                            " J=" + std::to_string(model.horizon()));
  }
}
}  // namespace detail

template <RateSurface S, typename Rng>
Trajectory simulate_researcher(const S& model, int h_start, int from, int to, Rng& rng) {
  if (h_start < 1) throw PreconditionError("researchers without publications are outside the model");
  detail::check_interval_range(model, from, to);
  const int limit = model.cohort_limit();
  Trajectory out;
  out.cumulative.reserve(static_cast<std::size_t>(to - from));
  long long h = h_start;
  for (int l = from + 1; l <= to; ++l) {
    if (h > limit) ++out.clamp_hits;
    int cohort = static_cast<int>(std::min<long long>(h, limit));
    h += sample_poisson(model.rate(cohort, l), rng);
    out.cumulative.push_back(static_cast<int>(h));
  }
  return out;
}

struct ResearcherForecast {
  std::string author_id;
  int h_start = 0;
  std::vector<std::int32_t> paths;  // replicate-major, replicates x steps
};

class ForecastEnsemble {
 public:
  int start_year = 0;  // t_X
  int steps = 0;       // Y - X
  int replicates = 0;
  std::uint64_t seed = 0;
  std::vector<ResearcherForecast> researchers;  // sorted by author_id
  long long test_researchers = 0;
  long long excluded_inactive = 0;
  long long excluded_overflow = 0;
  long long clamp_tally = 0;

  int year(int step) const { return start_year + step + 1; }

  int value(std::size_t k, int replicate, int step) const {
    return researchers[k].paths[static_cast<std::size_t>(replicate * steps + step)];
  }

  double mean(std::size_t k, int step) const {
    double s = 0.0;
    for (int r = 0; r < replicates; ++r) s += value(k, r, step);
    return s / replicates;
  }

  /// Linear-interpolation sample quantile over replicates.
  double quantile(std::size_t k, int step, double q) const {
    std::vector<int> v(static_cast<std::size_t>(replicates));
    for (int r = 0; r < replicates; ++r) v[static_cast<std::size_t>(r)] = value(k, r, step);
    std::sort(v.begin(), v.end());
    double pos = q * (replicates - 1);
    auto lo = static_cast<std::size_t>(std::floor(pos));
    std::size_t hi = std::min(lo + 1, v.size() - 1);
    return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
  }

  /// Fraction of test researchers the model could forecast.
  double coverage() const {
    return test_researchers == 0 ? 0.0 : static_cast<double>(researchers.size()) / static_cast<double>(test_researchers);
  }
};

struct SimulationOptions {
  int replicates = 1000;
  std::uint64_t seed = 0;
  unsigned threads = 1;
};

/// Runs every test researcher with 1 <= h(t_X) <= I_1 through R replicates.
/// Replicate r of researcher s draws from the stream (seed, s, r), so output
/// does not depend on thread count or iteration order.
template <RateSurface S>
ForecastEnsemble simulate_group(const S& model, int model_t0, const DatasetSplit& split, const HistorySet& histories,
                                const SimulationOptions& options) {
  if (split.role != SplitRole::test) throw PreconditionError("simulate_group needs a test split");
  if (options.replicates < 1) throw PreconditionError("need at least one replicate");
  const int from = split.start() - model_t0;
  const int to = split.end() - model_t0;
  detail::check_interval_range(model, from, to);

  ForecastEnsemble ens;
  ens.start_year = split.start();
  ens.steps = to - from;
  ens.replicates = options.replicates;
  ens.seed = options.seed;
  ens.test_researchers = static_cast<long long>(split.authors.size());

  for (const auto& id : split.authors) {
    const AuthorHistory* h = find_history(histories, id);
    int start = h ? cumulative_count(*h, split.history_start(), split.start()) : 0;
    if (start < 1) {
      ++ens.excluded_inactive;
    } else if (start > model.cohort_limit()) {
      ++ens.excluded_overflow;
    } else {
      ens.researchers.push_back({id, start, {}});
    }
  }

  std::vector<long long> clamps(ens.researchers.size(), 0);
  auto work = [&](std::size_t first, std::size_t stride) {
    for (std::size_t k = first; k < ens.researchers.size(); k += stride) {
      auto& rf = ens.researchers[k];
      rf.paths.assign(static_cast<std::size_t>(ens.replicates * ens.steps), 0);
      for (int r = 0; r < ens.replicates; ++r) {
        auto rng = researcher_stream(options.seed, rf.author_id, static_cast<std::uint64_t>(r));
        auto tr = simulate_researcher(model, rf.h_start, from, to, rng);
        std::copy(tr.cumulative.begin(), tr.cumulative.end(),
                  rf.paths.begin() + static_cast<std::ptrdiff_t>(r * ens.steps));
        clamps[k] += tr.clamp_hits;
      }
    }
  };
  unsigned threads = std::max(1u, options.threads);
  if (threads == 1 || ens.researchers.size() < 2) {
    work(0, 1);
  } else {
    std::vector<std::jthread> pool;
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(work, t, threads);
  }
  for (auto c : clamps) ens.clamp_tally += c;
  return ens;
}

struct ExpectedTrajectory {
  std::vector<double> mean;  // E[h] after intervals X+1..Y (over retained mass)
  double truncated_mass = 0.0;
  bool truncation_warning = false;
};

/// Exact distribution of h propagated interval by interval, truncated at h_cap.
template <RateSurface S>
ExpectedTrajectory expected_trajectory(const S& model, int h_start, int from, int to, int h_cap) {
  if (h_start < 1) throw PreconditionError("researchers without publications are outside the model");
  if (h_cap < model.cohort_limit() || h_cap < h_start) throw PreconditionError("h_cap must be >= I_1 and >= h_start");
  detail::check_interval_range(model, from, to);
  const int limit = model.cohort_limit();
  std::vector<double> prob(static_cast<std::size_t>(h_cap + 1), 0.0), next(prob.size());
  prob[static_cast<std::size_t>(h_start)] = 1.0;
  ExpectedTrajectory out;
  for (int l = from + 1; l <= to; ++l) {
    std::fill(next.begin(), next.end(), 0.0);
    for (int h = 1; h <= h_cap; ++h) {
      double p = prob[static_cast<std::size_t>(h)];
      if (p == 0.0) continue;
      double lambda = model.rate(std::min(h, limit), l);
      double pmf = std::exp(-lambda);
      double kept = 0.0;
      for (int r = 0; h + r <= h_cap; ++r) {
        if (r > 0) pmf *= lambda / r;
        next[static_cast<std::size_t>(h + r)] += p * pmf;
        kept += pmf;
        if (pmf == 0.0 && r > lambda) break;
      }
      out.truncated_mass += p * std::max(0.0, 1.0 - kept);
    }
    std::swap(prob, next);
    double e = 0.0;
    for (int h = 1; h <= h_cap; ++h) e += h * prob[static_cast<std::size_t>(h)];
    out.mean.push_back(e);
  }
  out.truncation_warning = out.truncated_mass > 1e-6;
  return out;
}

/// `author_id,year,mean,q05,q95`
inline void write_ensemble_summary(std::ostream& out, const ForecastEnsemble& ens) {
  table::Writer w(out);
  w.row("author_id", "year", "mean", "q05", "q95");
  for (std::size_t k = 0; k < ens.researchers.size(); ++k) {
    for (int s = 0; s < ens.steps; ++s) {
      w.row(ens.researchers[k].author_id, ens.year(s), ens.mean(k, s), ens.quantile(k, s, 0.05),
            ens.quantile(k, s, 0.95));
    }
  }
}

/// `author_id,replicate,year,h` for the first `max_replicates` replicates.
inline void write_ensemble_replicates(std::ostream& out, const ForecastEnsemble& ens, int max_replicates) {
  table::Writer w(out);
  w.row("author_id", "replicate", "year", "h");
  int reps = std::min(max_replicates, ens.replicates);
  for (std::size_t k = 0; k < ens.researchers.size(); ++k) {
    for (int r = 0; r < reps; ++r) {
      for (int s = 0; s < ens.steps; ++s) w.row(ens.researchers[k].author_id, r, ens.year(s), ens.value(k, r, s));
    }
  }
}

struct SummaryPoint {
  double mean = 0.0, q05 = 0.0, q95 = 0.0;
};

/// author_id -> year -> summary.
using EnsembleSummary = std::map<std::string, std::map<int, SummaryPoint>>;

inline EnsembleSummary read_ensemble_summary(std::istream& in) {
  auto rows = table::read_rows(in, {"author_id", "year", "mean", "q05", "q95"});
  EnsembleSummary out;
  for (const auto& row : rows.rows) {
    auto year = table::parse_int<int>(row.fields[1]);
    auto mean = table::parse_double(row.fields[2]);
    auto q05 = table::parse_double(row.fields[3]);
    auto q95 = table::parse_double(row.fields[4]);
    if (!year || !mean || !q05 || !q95) throw RowError("malformed ensemble summary row", row.line);
    out[row.fields[0]][*year] = {*mean, *q05, *q95};
  }
  return out;
}

/// author_id -> replicate -> year -> h.
using ReplicateDump = std::map<std::string, std::map<int, std::map<int, int>>>;

inline ReplicateDump read_ensemble_replicates(std::istream& in) {
  auto rows = table::read_rows(in, {"author_id", "replicate", "year", "h"});
  ReplicateDump out;
  for (const auto& row : rows.rows) {
    auto rep = table::parse_int<int>(row.fields[1]);
    auto year = table::parse_int<int>(row.fields[2]);
    auto h = table::parse_int<int>(row.fields[3]);
    if (!rep || !year || !h) throw RowError("malformed replicate row", row.line);
    out[row.fields[0]][*rep][*year] = *h;
  }
  return out;
}

}  // namespace pubforge
