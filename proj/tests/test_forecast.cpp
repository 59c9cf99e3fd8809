#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <sstream>
#include <vector>

#include "pubforge/corpus.hpp"
#include "pubforge/creativity.hpp"
#include "pubforge/evaluate.hpp"
#include "pubforge/forecast.hpp"
#include "pubforge/table.hpp"

using namespace pubforge;

namespace {

HistorySet fixture_histories() {
  auto in = table::open_input(PUBFORGE_TEST_DATA "/fixture.csv");
  return build_histories(deduplicate(parse_tabular(in).records));
}

CreativityModel fixture_model(const HistorySet& hs) {
  auto split = make_split(hs, SplitRole::training, {1985, 1995, 2004});
  return build_model(productivity_matrix(split, hs, 15), 17, 0.05, FitMode::glm);
}

std::string summary_text(const ForecastEnsemble& e) {
  std::ostringstream out;
  write_ensemble_summary(out, e);
  write_ensemble_replicates(out, e, e.replicates);
  return out.str();
}

}  // namespace

static_assert(RateSurface<RateTable>);
static_assert(RateSurface<CreativityModel>);

TEST(SimulateResearcher, ZeroRatesStayPut) {
  RateTable zero(3, 5, 0.0);
  CounterRng rng(1);
  auto t = simulate_researcher(zero, 2, 0, 5, rng);
  EXPECT_EQ(t.cumulative, std::vector<int>(5, 2));
  EXPECT_EQ(t.clamp_hits, 0);
}

TEST(SimulateResearcher, InactiveRejected) {
  RateTable rates(3, 5, 1.0);
  CounterRng rng(1);
  EXPECT_THROW(simulate_researcher(rates, 0, 0, 5, rng), PreconditionError);
  EXPECT_THROW(simulate_researcher(rates, 1, 3, 3, rng), PreconditionError);
  EXPECT_THROW(simulate_researcher(rates, 1, 0, 6, rng), PreconditionError);
}

TEST(SimulateResearcher, OneStepMean) {
  RateTable rates(1, 1, 0.5);
  const int R = 100000;
  double sum = 0.0;
  for (int r = 0; r < R; ++r) {
    auto rng = researcher_stream(9, "s", static_cast<std::uint64_t>(r));
    sum += simulate_researcher(rates, 1, 0, 1, rng).cumulative[0] - 1;
  }
  EXPECT_NEAR(sum / R, 0.5, 3.0 * std::sqrt(0.5 / R));
}

TEST(SimulateResearcher, TwoStepsAreCompoundPoisson) {
  // With rates independent of the cohort, two steps add to Pois(2c).
  const double c = 0.8;
  RateTable rates(50, 2, c);
  const int R = 4000;
  std::vector<std::int64_t> increments;
  for (int r = 0; r < R; ++r) {
    auto rng = researcher_stream(10, "s", static_cast<std::uint64_t>(r));
    auto t = simulate_researcher(rates, 1, 0, 2, rng);
    EXPECT_LE(t.cumulative[0], t.cumulative[1]);
    increments.push_back(t.cumulative[1] - 1);
  }
  double d = ks_poisson_statistic(increments, 2 * c);
  // Asymptotic 1% critical value for a fully specified CDF is 1.63 / sqrt(n).
  EXPECT_LT(d, 1.63 / std::sqrt(static_cast<double>(R)));
}

TEST(SimulateResearcher, ClampCountedAboveLimit) {
  RateTable rates(2, 3, 0.0);
  CounterRng rng(1);
  auto t = simulate_researcher(rates, 5, 0, 3, rng);
  EXPECT_EQ(t.clamp_hits, 3);
}

TEST(SimulateGroup, Deterministic) {
  auto hs = fixture_histories();
  auto model = fixture_model(hs);
  auto test = make_split(hs, SplitRole::test, {1985, 2002, 2012});
  auto a = simulate_group(model, 1995, test, hs, {50, 7, 1});
  auto b = simulate_group(model, 1995, test, hs, {50, 7, 1});
  EXPECT_EQ(summary_text(a), summary_text(b));
}

TEST(SimulateGroup, ThreadCountDoesNotChangeOutput) {
  auto hs = fixture_histories();
  auto model = fixture_model(hs);
  auto test = make_split(hs, SplitRole::test, {1985, 2002, 2012});
  auto a = simulate_group(model, 1995, test, hs, {40, 3, 1});
  auto b = simulate_group(model, 1995, test, hs, {40, 3, 4});
  EXPECT_EQ(summary_text(a), summary_text(b));
  EXPECT_EQ(a.clamp_tally, b.clamp_tally);
}

TEST(SimulateGroup, FirstReplicateIndependentOfR) {
  auto hs = fixture_histories();
  auto model = fixture_model(hs);
  auto test = make_split(hs, SplitRole::test, {1985, 2002, 2012});
  auto one = simulate_group(model, 1995, test, hs, {1, 11, 1});
  auto two = simulate_group(model, 1995, test, hs, {2, 11, 1});
  ASSERT_EQ(one.researchers.size(), two.researchers.size());
  for (std::size_t k = 0; k < one.researchers.size(); ++k) {
    for (int s = 0; s < one.steps; ++s) EXPECT_EQ(one.value(k, 0, s), two.value(k, 0, s));
  }
}

TEST(SimulateGroup, ExclusionTallyMatchesRecount) {
  auto hs = fixture_histories();
  auto model = fixture_model(hs);
  auto test = make_split(hs, SplitRole::test, {1985, 2002, 2012});
  auto ens = simulate_group(model, 1995, test, hs, {5, 1, 1});
  auto in = table::open_input(PUBFORGE_TEST_DATA "/golden/test_h_start.csv");
  auto rows = table::read_rows(in, {"author_id", "h"});
  long long over = 0, inside = 0;
  for (const auto& r : rows.rows) {
    int h = *table::parse_int<int>(r.fields[1]);
    (h > model.cohort_limit() ? over : inside) += 1;
  }
  EXPECT_EQ(ens.excluded_overflow, over);
  EXPECT_EQ(static_cast<long long>(ens.researchers.size()), inside);
  EXPECT_EQ(ens.excluded_inactive, 0);
  EXPECT_EQ(ens.test_researchers, static_cast<long long>(rows.rows.size()));
}

TEST(SimulateGroup, TrajectoriesNonDecreasing) {
  auto hs = fixture_histories();
  auto model = fixture_model(hs);
  auto test = make_split(hs, SplitRole::test, {1985, 2002, 2012});
  auto ens = simulate_group(model, 1995, test, hs, {20, 5, 1});
  for (std::size_t k = 0; k < ens.researchers.size(); ++k) {
    for (int r = 0; r < ens.replicates; ++r) {
      int prev = ens.researchers[k].h_start;
      for (int s = 0; s < ens.steps; ++s) {
        EXPECT_GE(ens.value(k, r, s), prev);
        prev = ens.value(k, r, s);
      }
    }
  }
}

TEST(Ensemble, SummaryRoundTrip) {
  auto hs = fixture_histories();
  auto model = fixture_model(hs);
  auto test = make_split(hs, SplitRole::test, {1985, 2002, 2012});
  auto ens = simulate_group(model, 1995, test, hs, {30, 5, 1});
  std::ostringstream out, dump;
  write_ensemble_summary(out, ens);
  write_ensemble_replicates(dump, ens, 2);
  std::istringstream in(out.str()), din(dump.str());
  auto summary = read_ensemble_summary(in);
  auto reps = read_ensemble_replicates(din);
  ASSERT_EQ(summary.size(), ens.researchers.size());
  const auto& first = ens.researchers[0];
  EXPECT_DOUBLE_EQ(summary.at(first.author_id).at(2003).mean, ens.mean(0, 0));
  EXPECT_EQ(reps.at(first.author_id).size(), 2u);
  EXPECT_EQ(reps.at(first.author_id).at(1).at(2012), ens.value(0, 1, ens.steps - 1));
}

TEST(Ensemble, QuantileType7) {
  ForecastEnsemble e;
  e.steps = 1;
  e.replicates = 5;
  e.researchers.push_back({"a", 1, {1, 2, 3, 4, 10}});
  EXPECT_DOUBLE_EQ(e.quantile(0, 0, 0.5), 3.0);
  EXPECT_DOUBLE_EQ(e.quantile(0, 0, 0.95), 4.0 + 0.8 * 6.0);
  EXPECT_DOUBLE_EQ(e.quantile(0, 0, 0.05), 1.2);
  EXPECT_DOUBLE_EQ(e.mean(0, 0), 4.0);
}

TEST(ExpectedTrajectory, ZeroRates) {
  RateTable zero(4, 3, 0.0);
  auto e = expected_trajectory(zero, 2, 0, 3, 50);
  EXPECT_EQ(e.mean, std::vector<double>(3, 2.0));
  EXPECT_EQ(e.truncated_mass, 0.0);
  EXPECT_FALSE(e.truncation_warning);
}

TEST(ExpectedTrajectory, CohortIndependentRate) {
  RateTable rates(3, 4, 0.7);
  auto e = expected_trajectory(rates, 2, 0, 4, 200);
  for (int k = 0; k < 4; ++k) EXPECT_NEAR(e.mean[static_cast<std::size_t>(k)], 2 + 0.7 * (k + 1), 1e-12);
}

TEST(ExpectedTrajectory, TruncationWarning) {
  RateTable rates(3, 2, 5.0);
  auto e = expected_trajectory(rates, 1, 0, 2, 4);
  EXPECT_TRUE(e.truncation_warning);
  EXPECT_GT(e.truncated_mass, 1e-6);
}

TEST(ExpectedTrajectory, MatchesMonteCarloOnToyModel) {
  RateTable rates(3, 2);
  rates.set(1, 1, 0.4);
  rates.set(2, 1, 0.9);
  rates.set(3, 1, 1.6);
  rates.set(1, 2, 0.3);
  rates.set(2, 2, 1.1);
  rates.set(3, 2, 2.0);
  auto dp = expected_trajectory(rates, 1, 0, 2, 80);
  const int R = 200000;
  std::vector<double> sum(2, 0.0), sum2(2, 0.0);
  for (int r = 0; r < R; ++r) {
    auto rng = researcher_stream(3, "toy", static_cast<std::uint64_t>(r));
    auto t = simulate_researcher(rates, 1, 0, 2, rng);
    for (std::size_t s = 0; s < 2; ++s) {
      sum[s] += t.cumulative[s];
      sum2[s] += double(t.cumulative[s]) * t.cumulative[s];
    }
  }
  for (std::size_t s = 0; s < 2; ++s) {
    double mean = sum[s] / R, var = sum2[s] / R - mean * mean;
    EXPECT_NEAR(mean, dp.mean[s], 4.0 * std::sqrt(var / R)) << "step " << s;
  }
}
