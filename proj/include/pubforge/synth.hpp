#pragma once

// Synthetic corpora drawn from a known piecewise-Poisson surface.
//
// Each author enters with one publication in an entry year, then publishes
// Poisson(exp(alpha_h + beta_h * x)) per year, where h is the author's count
// so far (capped at I) and x = max(0, year - t_1). Years up to t_1 use the
// first interval's rate.

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <cmath>
#include <cstdio>
#include <map>
#include <string>
#include <vector>

#include "pubforge/corpus.hpp"
#include "pubforge/error.hpp"
#include "pubforge/rng.hpp"

namespace pubforge {

struct GeneratorSpec {
  std::vector<double> true_alpha;  // cohorts 1..I
  std::vector<double> true_beta;
  int history_start = 0;  // T0
  int train_start = 0;    // t_0
  int forecast_end = 0;   // t_J
  long long n_authors = 0;
  std::map<int, double> entry_weights;  // year -> weight
  std::uint64_t seed = 0;

  int max_cohort() const { return static_cast<int>(true_alpha.size()); }

  double rate(int h, int year) const {
    int i = h < max_cohort() ? h : max_cohort();
    double x = year - (train_start + 1);
    if (x < 0) x = 0;
    return std::exp(true_alpha[static_cast<std::size_t>(i - 1)] + true_beta[static_cast<std::size_t>(i - 1)] * x);
  }
};

inline void validate(const GeneratorSpec& spec) {
  if (spec.true_alpha.empty()) throw ConfigError("generator needs at least one cohort");
  if (spec.true_alpha.size() != spec.true_beta.size()) {
    throw ConfigError("alpha and beta must list the same number of cohorts");
  }
  if (spec.n_authors < 0) throw ConfigError("n_authors must be non-negative");
  if (!(spec.history_start <= spec.train_start && spec.train_start < spec.forecast_end)) {
    throw ConfigError("generator windows need history_start <= train_start < forecast_end");
  }
  if (spec.n_authors > 0 && spec.entry_weights.empty()) throw ConfigError("entry year distribution is empty");
  double total = 0.0;
  for (auto [year, w] : spec.entry_weights) {
    if (year < spec.history_start || year > spec.forecast_end) {
      throw ConfigError("entry year " + std::to_string(year) + " outside [history_start, forecast_end]");
    }
    if (!(w >= 0.0) || !std::isfinite(w)) throw ConfigError("entry weights must be non-negative");
    total += w;
  }
  if (spec.n_authors > 0 && !(total > 0.0)) throw ConfigError("entry weights sum to zero");
}

inline std::string synthetic_author_id(long long index) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "S%06lld", index + 1);
  return buf;
}

/// Records ordered by author id, then year. Author k draws from its own
/// counter stream, so the corpus depends only on the generator settings.
inline std::vector<PublicationRecord> generate_corpus(const GeneratorSpec& spec) {
  validate(spec);
  std::vector<PublicationRecord> out;
  if (spec.n_authors == 0) return out;

  std::vector<int> years;
  std::vector<double> cdf;
  double total = 0.0;
  for (auto [year, w] : spec.entry_weights) {
    if (w <= 0.0) continue;
    total += w;
    years.push_back(year);
    cdf.push_back(total);
  }
  const std::uint64_t key = splitmix64(spec.seed);
  for (long long a = 0; a < spec.n_authors; ++a) {
    CounterRng rng(key, static_cast<std::uint64_t>(a));
    double u = rng.uniform() * total;
    std::size_t pick = 0;
    while (pick + 1 < cdf.size() && u >= cdf[pick]) ++pick;
    const int entry = years[pick];
    const std::string id = synthetic_author_id(a);
    long long h = 1;
    out.push_back({id, entry, "synth", "synth/" + id + "/1"});
    for (int year = entry + 1; year <= spec.forecast_end; ++year) {
      auto r = sample_poisson(spec.rate(static_cast<int>(std::min<long long>(h, spec.max_cohort())), year), rng);
      for (std::int64_t k = 0; k < r; ++k) {
        ++h;
        out.push_back({id, year, "synth", "synth/" + id + "/" + std::to_string(h)});
      }
    }
  }
  return out;
}

}  // namespace pubforge
