/*
 * @file test_design_likelihood.cpp
 *
 * This file is part of SeqSafety
 *
 * Copyright 2026 Observational Health Data Sciences and Informatics
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include <algorithm>
#include <cmath>
#include <memory>
#include <sstream>

#include <gtest/gtest.h>

#include "seqsafety/design_likelihood.hpp"
#include "seqsafety/errors.hpp"
#include "seqsafety/rng.hpp"
#include "seqsafety/scenarios.hpp"

using namespace seqsafety;

namespace {

const double kStep = BetaGrid().step();

// Brute-force argmax on the grid.
double grid_argmax(const LikelihoodProfile& p) {
  return p.grid[static_cast<std::size_t>(std::max_element(p.loglik.begin(), p.loglik.end()) - p.loglik.begin())];
}

void expect_same_up_to_constant(const LikelihoodProfile& a, const LikelihoodProfile& b, double tol) {
  ASSERT_EQ(a.loglik.size(), b.loglik.size());
  // both are shifted to max 0, so equality up to a constant is plain equality
  for (std::size_t j = 0; j < a.loglik.size(); ++j) ASSERT_NEAR(a.loglik[j], b.loglik[j], tol) << j;
}

ScenarioConfig clean_config(double rate, int n, double log_rr, std::uint64_t seed) {
  ScenarioConfig c;
  c.n_subjects = n;
  c.baseline_log_rate_per_week.assign(52, std::log(rate));
  c.historical_rate_multiplier = 1.0;
  c.true_log_rr = log_rr;
  c.uptake_curve.assign(52, 0.9 / 52.0);
  c.master_seed = seed;
  return c;
}

LookSnapshot final_snapshot(std::vector<SubjectTrajectory> pop, const CohortLayout& layout) {
  return LookSnapshot(12, layout.surveillance.last, std::make_shared<const Cohort>(layout, std::move(pop)));
}

}  // namespace

TEST(PoissonProfile, MleAtLogRatio) {
  const auto p = poisson_profile(20, 10.0);
  EXPECT_TRUE(p.estimable);
  EXPECT_NEAR(p.mle, std::log(2.0), kStep / 2);
  EXPECT_EQ(*std::max_element(p.loglik.begin(), p.loglik.end()), 0.0);
  EXPECT_EQ(p.risk_count, 20);
  EXPECT_DOUBLE_EQ(p.expected, 10.0);
}

TEST(PoissonProfile, ZeroCountIsNonEstimable) {
  const auto p = poisson_profile(0, 10.0);
  EXPECT_FALSE(p.estimable);
  EXPECT_TRUE(p.boundary);
  for (std::size_t j = 1; j < p.loglik.size(); ++j) ASSERT_LT(p.loglik[j], p.loglik[j - 1]);
}

TEST(PoissonProfile, DoublingExpectedShiftsMleByLog2) {
  SplitMix64 rng(3);
  for (int i = 0; i < 50; ++i) {
    const long c = 5 + static_cast<long>(uniform_open01(rng) * 60);
    const double mu = 5.0 + uniform_open01(rng) * 40.0;
    const auto a = poisson_profile(c, mu), b = poisson_profile(c, 2.0 * mu);
    EXPECT_NEAR(a.mle - b.mle, std::log(2.0), kStep + 1e-12);
    EXPECT_NEAR(a.mle, std::log(c / mu), kStep / 2 + 1e-12);
  }
}

TEST(SccsTwoInterval, TwoVersusOne) {
  const SccsInterval one{2, 3, 6.0, 6.0};
  const auto p = sccs_two_interval_profile(std::span(&one, 1));
  EXPECT_TRUE(p.estimable);
  EXPECT_NEAR(p.mle, std::log(2.0), kStep / 2);
  EXPECT_EQ(p.risk_count, 2);
  EXPECT_EQ(p.comparator_count, 1);
}

TEST(SccsTwoInterval, AllEventsInControlHitBoundary) {
  const SccsInterval one{0, 4, 6.0, 20.0};
  const auto p = sccs_two_interval_profile(std::span(&one, 1));
  EXPECT_FALSE(p.estimable);
  EXPECT_DOUBLE_EQ(p.mle, p.grid.lower());
}

TEST(SccsTwoInterval, TimeScalingInvariance) {
  std::vector<SccsInterval> cases{{1, 3, 6.0, 30.0}, {2, 2, 6.0, 20.0}, {0, 1, 4.0, 44.0}};
  auto doubled = cases;
  for (auto& c : doubled) {
    c.risk_time *= 2.0;
    c.control_time *= 2.0;
  }
  expect_same_up_to_constant(sccs_two_interval_profile(cases), sccs_two_interval_profile(doubled), 1e-9);
}

TEST(SccsTwoInterval, MatchesClosedForm) {
  const std::vector<SccsInterval> cases{{1, 3, 6.0, 30.0}, {2, 2, 6.0, 20.0}};
  const auto p = sccs_two_interval_profile(cases);
  auto raw = [&](double b) {
    double v = 0.0;
    for (const auto& c : cases) v += c.risk_events * b - c.total_events * std::log(c.risk_time * std::exp(b) + c.control_time);
    return v;
  };
  const double top = raw(grid_argmax(p));
  for (std::size_t j = 0; j < p.grid.size(); j += 50) EXPECT_NEAR(p.loglik[j], raw(p.grid[j]) - top, 1e-9);
}

TEST(DesignSpec, NamesRoundTrip) {
  for (auto v : {DesignVariant::hc_unadjusted, DesignVariant::hc_stratified, DesignVariant::hc_seasonal,
                 DesignVariant::sccs_exclude_pre, DesignVariant::sccs_month_adjusted, DesignVariant::sccs_post_only,
                 DesignVariant::scri_pre, DesignVariant::scri_post}) {
    for (int w : {4, 6}) {
      const DesignSpec s{v, w};
      const auto back = DesignSpec::parse(s.name());
      EXPECT_EQ(back.variant, v);
      EXPECT_EQ(back.risk_window_weeks, w);
    }
  }
  EXPECT_THROW(DesignSpec::parse("hc_unadjusted_w5"), ConfigError);
  EXPECT_THROW(DesignSpec::parse("cohort_w6"), ConfigError);
}

TEST(HistoricalComparator, HandBuiltCohort) {
  // Two subjects, one vaccinated in week 60. Historical rate = 4 events over
  // 2 x 52 subject-weeks; 6 risk weeks accrued by the final cutoff.
  const CohortLayout layout;
  SubjectTrajectory a, b;
  a.subject_id = 0;
  b.subject_id = 1;
  a.weekly_counts.assign(104, 0);
  b.weekly_counts.assign(104, 0);
  a.vaccination_week = 60;
  a.weekly_counts[61 - 1] = 2;
  a.weekly_counts[66 - 1] = 1;
  a.weekly_counts[67 - 1] = 5;  // outside the window
  b.weekly_counts[3] = 4;
  const auto snap = final_snapshot({a, b}, layout);
  const auto p = historical_comparator_profile(snap, {DesignVariant::hc_unadjusted, 6});
  EXPECT_EQ(p.risk_count, 3);
  EXPECT_NEAR(p.expected, 4.0 / 104.0 * 6.0, 1e-12);
  EXPECT_DOUBLE_EQ(p.risk_time, 6.0);
  EXPECT_EQ(p.design, "hc_unadjusted_w6");
  // a cutoff inside the window truncates risk time
  const LookSnapshot early(3, 62, std::make_shared<const Cohort>(layout, std::vector{a, b}));
  const auto q = historical_comparator_profile(early, {DesignVariant::hc_unadjusted, 6});
  EXPECT_EQ(q.risk_count, 2);
  EXPECT_DOUBLE_EQ(q.risk_time, 2.0);
}

TEST(Sccs, CaseRestriction) {
  auto c = clean_config(0.01, 2000, std::log(2.0), 5);
  auto pop = simulate_population(c);
  const auto layout = c.layout;
  const DesignSpec spec{DesignVariant::sccs_exclude_pre, 6};
  const auto base = sccs_profile(final_snapshot(pop, layout), spec);
  // Append vaccinated and unvaccinated subjects without surveillance events.
  for (int i = 0; i < 50; ++i) {
    SubjectTrajectory t;
    t.subject_id = pop.size();
    t.covariate = i % 2;
    t.weekly_counts.assign(104, 0);
    t.weekly_counts[5] = 1;  // a historical event is not a case
    if (i % 3 != 0) t.vaccination_week = 53 + i;
    pop.push_back(t);
  }
  const auto more = sccs_profile(final_snapshot(pop, layout), spec);
  expect_same_up_to_constant(base, more, 1e-12);
  EXPECT_EQ(base.risk_count, more.risk_count);
}

TEST(Sccs, NoInformativeCaseIsNonEstimable) {
  const CohortLayout layout;
  SubjectTrajectory t;
  t.weekly_counts.assign(104, 0);
  t.weekly_counts[80] = 1;  // never vaccinated
  const auto p = sccs_profile(final_snapshot({t}, layout), {DesignVariant::sccs_exclude_pre, 6});
  EXPECT_FALSE(p.estimable);
}

TEST(Designs, ShiftNormalizedAcrossVariants) {
  auto c = clean_config(0.01, 3000, 0.5, 8);
  c.baseline_log_rate_per_week = seasonal_log_curve(0.01, 0.4, 10);
  c.covariate_effect = 0.4;
  const auto snap = final_snapshot(simulate_population(c), c.layout);
  for (auto v : {DesignVariant::hc_unadjusted, DesignVariant::hc_stratified, DesignVariant::hc_seasonal,
                 DesignVariant::sccs_exclude_pre, DesignVariant::sccs_month_adjusted, DesignVariant::sccs_post_only,
                 DesignVariant::scri_pre, DesignVariant::scri_post}) {
    const auto p = design_profile(snap, {v, 6});
    EXPECT_EQ(*std::max_element(p.loglik.begin(), p.loglik.end()), 0.0) << variant_name(v);
    for (double x : p.loglik) ASSERT_TRUE(std::isfinite(x));
    EXPECT_TRUE(p.estimable) << variant_name(v);
    EXPECT_NEAR(p.mle, 0.5, 0.5) << variant_name(v);
  }
}

TEST(Designs, ConsistencyWithoutConfounding) {
  // About 5800 at-risk events per seed: 18000 vaccinated x 6 weeks x 0.054.
  const double beta = std::log(2.0);
  const int seeds = 100;
  double hc_err = 0.0, sccs_err = 0.0;
  long min_risk = 1L << 40;
  for (int s = 0; s < seeds; ++s) {
    const auto c = clean_config(0.027, 20000, beta, 1000 + static_cast<std::uint64_t>(s));
    const auto snap = final_snapshot(simulate_population(c), c.layout);
    const auto hc = design_profile(snap, {DesignVariant::hc_unadjusted, 6});
    const auto sccs = design_profile(snap, {DesignVariant::sccs_exclude_pre, 6});
    hc_err += std::abs(hc.mle - beta);
    sccs_err += std::abs(sccs.mle - beta);
    min_risk = std::min(min_risk, hc.risk_count);
  }
  EXPECT_GE(min_risk, 5000);
  EXPECT_LT(hc_err / seeds, 0.1);
  EXPECT_LT(sccs_err / seeds, 0.1);
}

TEST(Designs, HistoricalComparatorOverestimatesUnderConfounding) {
  auto config = e2_preset();
  config.designs = {DesignSpec{DesignVariant::hc_seasonal, 6}};
  const auto result = run_e2(config);
  int above = 0;
  for (const auto& rep : result.estimates[0]) above += rep.back().mle > std::log(2.0) ? 1 : 0;
  EXPECT_GE(above, 95);
}

TEST(ProfileCsv, RoundTrip) {
  auto p = poisson_profile(17, 9.5);
  p.design = "hc_unadjusted_w6";
  p.look = 7;
  p.risk_time = 123.5;
  p.control_time = 4567.25;
  p.comparator_count = 33;
  std::stringstream buf;
  write_profile_csv(buf, p);
  const auto q = read_profile_csv(buf);
  EXPECT_EQ(q.grid, p.grid);
  EXPECT_EQ(q.loglik, p.loglik);
  EXPECT_EQ(q.mle, p.mle);
  EXPECT_EQ(q.estimable, p.estimable);
  EXPECT_EQ(q.boundary, p.boundary);
  EXPECT_EQ(q.risk_count, p.risk_count);
  EXPECT_EQ(q.comparator_count, p.comparator_count);
  EXPECT_EQ(q.expected, p.expected);
  EXPECT_EQ(q.risk_time, p.risk_time);
  EXPECT_EQ(q.control_time, p.control_time);
  EXPECT_EQ(q.design, p.design);
  EXPECT_EQ(q.look, p.look);
}

TEST(ProfileValue, InterpolatesAndClamps) {
  const auto p = poisson_profile(20, 10.0);
  const auto& g = p.grid;
  EXPECT_EQ(profile_value(p, g[300]), p.loglik[300]);
  EXPECT_NEAR(profile_value(p, 0.5 * (g[300] + g[301])), 0.5 * (p.loglik[300] + p.loglik[301]), 1e-12);
  EXPECT_EQ(profile_value(p, -10.0), p.loglik.front());
  EXPECT_EQ(profile_value(p, 10.0), p.loglik.back());
}
