/*
 * @file test_sequential_data.cpp
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

#include <cmath>
#include <numeric>
#include <sstream>

#include <gtest/gtest.h>

#include "seqsafety/errors.hpp"
#include "seqsafety/sequential_data.hpp"

using namespace seqsafety;

namespace {

ScenarioConfig flat_config(double rate, int n, double coverage) {
  ScenarioConfig c;
  c.n_subjects = n;
  c.baseline_log_rate_per_week.assign(52, std::log(rate));
  c.historical_rate_multiplier = 1.0;
  c.covariate_effect = 0.0;
  c.uptake_curve.assign(52, coverage / 52.0);
  c.master_seed = 1234;
  return c;
}

long surveillance_total(const std::vector<SubjectTrajectory>& pop, const CohortLayout& layout) {
  long total = 0;
  for (const auto& t : pop) {
    for (int k = layout.surveillance.first; k <= layout.surveillance.last; ++k) total += t.weekly_counts[k - 1];
  }
  return total;
}

}  // namespace

TEST(Simulate, ShapeAndRiskSpan) {
  auto c = flat_config(0.01, 5000, 0.8);
  c.true_log_rr = std::log(2.0);
  const auto pop = simulate_population(c);
  ASSERT_EQ(pop.size(), 5000u);
  for (const auto& t : pop) {
    ASSERT_EQ(t.weekly_counts.size(), 104u);
    if (!t.vaccination_week) continue;
    ASSERT_TRUE(c.layout.surveillance.contains(*t.vaccination_week));
    int risk_weeks = 0;
    for (int k = 1; k <= 104; ++k) risk_weeks += in_risk_window(t.vaccination_week, k, 6) ? 1 : 0;
    // windows starting late in the year are clipped by the timeline
    ASSERT_EQ(risk_weeks, std::min(6, 104 - *t.vaccination_week));
    ASSERT_FALSE(in_risk_window(t.vaccination_week, *t.vaccination_week, 6));
    ASSERT_TRUE(in_risk_window(t.vaccination_week, *t.vaccination_week + 1, 6));
  }
}

TEST(Simulate, ZeroUptakeMatchesNullEffect) {
  auto c = flat_config(0.01, 2000, 0.0);
  c.true_log_rr = 1.3;
  auto null = c;
  null.true_log_rr = 0.0;
  EXPECT_EQ(simulate_population(c), simulate_population(null));
}

TEST(Simulate, ConstantRateTotal) {
  // 0.002 x 5000 x 52 = 520 expected surveillance events per seed.
  auto c = flat_config(0.002, 5000, 0.0);
  const int seeds = 1000;
  double sum = 0.0, sum2 = 0.0;
  for (int s = 0; s < seeds; ++s) {
    c.master_seed = static_cast<std::uint64_t>(s);
    const double total = static_cast<double>(surveillance_total(simulate_population(c), c.layout));
    ASSERT_NEAR(total, 520.0, 4.0 * std::sqrt(520.0 * 1.5));
    sum += total;
    sum2 += total * total;
  }
  const double mean = sum / seeds;
  const double var = sum2 / seeds - mean * mean;
  EXPECT_NEAR(mean, 520.0, 4.0 * std::sqrt(520.0 / seeds));
  // sample variance of Poisson(520) over 1000 draws has sd about 520 sqrt(2/999)
  EXPECT_NEAR(var, 520.0, 4.0 * 520.0 * std::sqrt(2.0 / (seeds - 1)));
}

TEST(Simulate, RateFidelity) {
  // Everyone has the covariate and is vaccinated in week 53, so weeks 54-59
  // are at risk for all 10^5 subjects.
  ScenarioConfig c = flat_config(0.05, 100000, 0.0);
  c.covariate_effect = 0.3;
  c.covariate_prevalence = 1.0;
  c.true_log_rr = 0.5;
  c.historical_rate_multiplier = 0.5;
  c.uptake_curve[0] = 1.0;
  const auto pop = simulate_population(c);
  auto check = [&](int week, bool at_risk) {
    double total = 0.0;
    for (const auto& t : pop) total += t.weekly_counts[week - 1];
    const double lambda = std::exp(weekly_log_rate(c, week, 1, at_risk));
    const double n = static_cast<double>(pop.size());
    EXPECT_NEAR(total / n, lambda, 3.0 * std::sqrt(lambda / n)) << "week " << week;
  };
  check(10, false);  // historical, halved rate
  check(56, true);
  check(80, false);
  EXPECT_NEAR(std::exp(weekly_log_rate(c, 56, 1, true)), 0.05 * std::exp(0.3 + 0.5), 1e-12);
  EXPECT_NEAR(std::exp(weekly_log_rate(c, 10, 1, false)), 0.025 * std::exp(0.3), 1e-12);
}

TEST(Simulate, DeterministicPerSubject) {
  auto c = flat_config(0.01, 3000, 0.8);
  const auto a = simulate_population(c);
  EXPECT_EQ(a, simulate_population(c));
  // subject draws do not depend on the population size
  auto small = c;
  small.n_subjects = 100;
  const auto b = simulate_population(small);
  for (std::size_t i = 0; i < b.size(); ++i) ASSERT_EQ(a[i], b[i]);
  c.master_seed += 1;
  EXPECT_NE(a, simulate_population(c));
}

TEST(Simulate, OutcomesShareSubjects) {
  auto c = flat_config(0.01, 2000, 0.8);
  auto d = c;
  d.outcome_id = "other";
  const auto a = simulate_population(c), b = simulate_population(d);
  bool counts_differ = false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ASSERT_EQ(a[i].covariate, b[i].covariate);
    ASSERT_EQ(a[i].vaccination_week, b[i].vaccination_week);
    counts_differ |= a[i].weekly_counts != b[i].weekly_counts;
  }
  EXPECT_TRUE(counts_differ);
}

TEST(Simulate, RejectsInvalidConfigs) {
  auto c = flat_config(0.01, 10, 0.5);
  c.uptake_curve[0] = 0.9;  // sums above one
  EXPECT_THROW(simulate_population(c), ConfigError);
  c = flat_config(0.01, 10, 0.5);
  c.baseline_log_rate_per_week.assign(52, 9.0);
  c.true_log_rr = 2.0;  // e^11 events per week
  EXPECT_THROW(simulate_population(c), ConfigError);
  c = flat_config(0.01, 10, 0.5);
  c.historical_rate_multiplier = 0.0;
  EXPECT_THROW(simulate_population(c), ConfigError);
  c = flat_config(0.01, 10, 0.5);
  c.layout.surveillance.first = 50;
  EXPECT_THROW(simulate_population(c), ConfigError);
}

TEST(MonthlyCutoffs, AlternatingMonths) {
  const CohortLayout layout;
  const auto cut = monthly_cutoffs(layout);
  ASSERT_EQ(cut.size(), 12u);
  EXPECT_EQ(cut.front(), 52 + 5);  // ceil(52 / 12)
  EXPECT_EQ(cut[1], 52 + 9);
  EXPECT_EQ(cut[2], 52 + 13);
  EXPECT_EQ(cut.back(), 104);
  int prev = 52;
  for (int c : cut) {
    EXPECT_TRUE(c - prev == 4 || c - prev == 5);
    prev = c;
  }
  for (int w = 53; w <= 104; ++w) {
    const int m = surveillance_month(layout, w);
    EXPECT_LE(w, cut[m - 1]);
    if (m > 1) EXPECT_GT(w, cut[m - 2]);
  }
}

TEST(Accrue, CumulativeSnapshots) {
  const CohortLayout layout;
  SubjectTrajectory t;
  t.subject_id = 0;
  t.weekly_counts.assign(104, 0);
  t.weekly_counts[52 + 5 - 1] = 1;  // surveillance week 5
  t.weekly_counts[10] = 2;          // historical
  t.vaccination_week = 60;
  const std::vector<int> cutoffs{52 + 4, 52 + 9};
  const auto looks = accrue({t}, layout, cutoffs);
  ASSERT_EQ(looks.size(), 2u);
  EXPECT_EQ(looks[0].count(0, 57), 0);
  EXPECT_EQ(looks[1].count(0, 57), 1);
  EXPECT_EQ(looks[0].total_events(), 2);
  EXPECT_EQ(looks[1].total_events(), 3);
  // vaccination after the cutoff is not yet visible
  EXPECT_FALSE(looks[0].vaccination_week(0).has_value());
  EXPECT_EQ(looks[1].vaccination_week(0), 60);
  EXPECT_EQ(looks[0].historical_block().front().weekly_counts.size(), 52u);
  EXPECT_EQ(looks[0].historical_block().front().weekly_counts[10], 2);
  const std::vector<int> bad{60, 60};
  EXPECT_THROW(accrue({t}, layout, bad), std::invalid_argument);
}

TEST(Accrue, FinalSnapshotIsFullDataAndMonotone) {
  auto c = flat_config(0.02, 500, 0.8);
  const auto pop = simulate_population(c);
  const auto cut = monthly_cutoffs(c.layout);
  const auto looks = accrue(pop, c.layout, cut);
  EXPECT_EQ(looks.back().trajectories(), pop);
  for (std::size_t t = 1; t < looks.size(); ++t) {
    const auto before = looks[t - 1].trajectories(), after = looks[t].trajectories();
    for (std::size_t i = 0; i < pop.size(); ++i) {
      for (int k = 0; k < 104; ++k) ASSERT_LE(before[i].weekly_counts[k], after[i].weekly_counts[k]);
    }
    EXPECT_LE(looks[t - 1].total_events(), looks[t].total_events());
  }
}

TEST(TrajectoryCsv, RoundTrip) {
  auto c = flat_config(0.02, 300, 0.7);
  const auto pop = simulate_population(c);
  std::stringstream buf;
  write_trajectories_csv(buf, pop);
  EXPECT_EQ(read_trajectories_csv(buf, c.layout), pop);
}

TEST(TrajectoryCsv, SplitFormatRoundTrip) {
  auto c = flat_config(0.02, 300, 0.7);
  const auto pop = simulate_population(c);
  std::stringstream subjects, events;
  write_subjects_csv(subjects, pop);
  write_events_csv(events, pop);
  EXPECT_EQ(read_subjects_and_events_csv(subjects, events, c.layout), pop);
}

TEST(TrajectoryCsv, SplitFormatRejectsBadRows) {
  const CohortLayout layout;
  {
    std::stringstream s("subject_id,covariate,vaccination_week\n0,1,\n0,0,60\n"), e("subject_id,week,count\n");
    EXPECT_THROW(read_subjects_and_events_csv(s, e, layout), IoError);
  }
  {
    std::stringstream s("subject_id,covariate,vaccination_week\n0,1,\n"), e("subject_id,week,count\n3,5,1\n");
    EXPECT_THROW(read_subjects_and_events_csv(s, e, layout), IoError);
  }
  {
    std::stringstream s("subject_id,covariate,vaccination_week\n0,1,\n"), e("subject_id,week,count\n0,105,1\n");
    EXPECT_THROW(read_subjects_and_events_csv(s, e, layout), IoError);
  }
}
