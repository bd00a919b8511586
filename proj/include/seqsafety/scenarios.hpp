/*
 * @file scenarios.hpp
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

#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "seqsafety/bayes.hpp"
#include "seqsafety/bias_correction.hpp"
#include "seqsafety/design_likelihood.hpp"
#include "seqsafety/evaluation.hpp"
#include "seqsafety/maxsprt.hpp"
#include "seqsafety/sequential_data.hpp"

namespace seqsafety {

// log(base_rate) + amplitude * cos(2 pi (week - peak_week) / 52), 52 entries.
std::vector<double> seasonal_log_curve(double base_rate, double amplitude, int peak_week);
// Weekly uptake with the same shape, scaled to sum to `coverage`.
std::vector<double> seasonal_uptake(double coverage, double amplitude, int peak_week, int weeks = 52);

using ProgressFn = std::function<void(const std::string&)>;

// Where cohort data and critical values come from. The defaults simulate and
// calibrate in memory; the command-line tool reads trajectories written by an
// earlier step and keeps critical values in a disk cache.
struct Providers {
  std::function<std::vector<SubjectTrajectory>(const ScenarioConfig&)> population = simulate_population;
  std::function<CriticalValue(const SurveillanceSchedule&, long mc_replicates, std::uint64_t seed, int jobs)>
      critical_value = compute_cv;
};

// --- schedule-inconsistency experiment -------------------------------------

struct E1Config {
  int looks = 24;
  double expected_per_look = 10.0;
  double alpha = 0.05;
  std::vector<int> schedule_looks{12, 24, 36};  // planned looks used for cv
  long replicates = 500;
  long cv_replicates = 100000;
  std::uint64_t seed = 20260101;
  int jobs = 1;

  void validate() const;
};

struct E1Result {
  std::vector<CriticalValue> cvs;                // one per schedule
  std::vector<std::vector<double>> type1_curve;  // [schedule][look], cumulative
  std::vector<std::vector<long>> counts;         // [replicate][look], cumulative null counts
};

// Cumulative null counts, [replicate][look].
std::vector<std::vector<long>> simulate_e1_counts(const E1Config& config);
E1Result evaluate_e1(const E1Config& config, std::vector<std::vector<long>> counts, const Providers& providers = {});
E1Result run_e1(const E1Config& config, const Providers& providers = {});

// --- design-bias experiment ------------------------------------------------

struct E2Config {
  ScenarioConfig scenario;
  std::vector<DesignSpec> designs;
  long replicates = 100;
  std::uint64_t seed = 20260202;
  int jobs = 1;

  void validate() const;
};

struct EstimateRecord {
  double mle = 0.0;
  double lo95 = 0.0;
  double hi95 = 0.0;
  bool estimable = false;
};

struct E2Result {
  std::vector<int> cutoffs;
  // [design][replicate][look]
  std::vector<std::vector<std::vector<EstimateRecord>>> estimates;
};

// One population per replicate.
std::vector<ScenarioConfig> e2_populations(const E2Config& config);
E2Result run_e2(const E2Config& config, const Providers& providers = {});

// --- posterior-trajectory experiment ---------------------------------------

struct Fig3Config {
  ScenarioConfig scenario;
  DesignSpec design;
  PriorSpec prior;
  double delta1 = 0.95;
  long replicates = 50;
  std::uint64_t seed = 20260303;
  int jobs = 1;

  void validate() const;
};

struct PosteriorSummary {
  double p_h1 = 0.0;
  double median = 0.0;
  double sd = 0.0;
  double lo95 = 0.0;
  double hi95 = 0.0;
  long risk_count = 0;
};

struct Fig3Result {
  std::vector<int> cutoffs;
  std::vector<std::vector<PosteriorSummary>> looks;  // [replicate][look]
  std::vector<std::optional<int>> stopping_month;    // per replicate
};

std::vector<ScenarioConfig> fig3_populations(const Fig3Config& config);
Fig3Result run_fig3(const Fig3Config& config, const Providers& providers = {});

// --- negative/positive control sweep ---------------------------------------

struct E3Config {
  ScenarioConfig base;
  ControlSuite suite;
  std::vector<DesignSpec> designs;
  std::vector<double> prior_variances{4.0};
  std::vector<double> thresholds{0.8, 0.9, 0.95};
  BiasModelSpec bias_model;
  McmcSpec mcmc;
  long replicates = 20;
  long cv_replicates = 10000;
  double alpha = 0.05;
  std::uint64_t seed = 20260404;
  int jobs = 1;

  void validate() const;
};

struct BiasLookSummary {
  std::string design;
  long replicate = 0;
  int look = 0;
  bool skipped = false;
  bool flagged = false;
  double b_bar_mean = 0.0;
  double tau_median = 0.0;
  double prob_positive = 0.0;
  double rhat_b_bar = 1.0;
  double rhat_tau = 1.0;
};

struct BiasSampleRow {
  std::string design;
  int look = 0;
  int chain = 0;
  long iter = 0;
  double b_bar = 0.0;
  double tau = 0.0;
};

struct E3Result {
  std::vector<int> cutoffs;
  // Trajectories stored once per (method, design, prior); the threshold of
  // Bayesian cells is applied at metric time. Key delta1 is 0 here.
  std::vector<CellResult> cells;
  std::vector<BiasLookSummary> bias;
  // First replicate only.
  std::vector<BiasSampleRow> bias_samples;
  // [design][look] predictive density of b on the default grid, first replicate.
  std::vector<std::vector<std::vector<double>>> bias_density;
};

// Negative control i of replicate r. Controls of one replicate share subjects.
ScenarioConfig e3_population(const E3Config& config, long replicate, std::size_t control);
std::vector<ScenarioConfig> e3_populations(const E3Config& config);
E3Result run_e3(const E3Config& config, const ProgressFn& progress = {}, const Providers& providers = {});
// Only the MaxSPRT critical values of run_e3, pushed through providers.
void e3_critical_values(const E3Config& config, const Providers& providers, const ProgressFn& progress = {});

// Metric rows for every stored cell; Bayesian cells expand over thresholds.
MetricTable e3_metrics(const E3Result& result, std::span<const double> thresholds);

// Trajectories of a cell re-thresholded at delta1.
std::vector<OutcomeTrajectory> with_threshold(std::vector<OutcomeTrajectory> outcomes, double delta1);
std::vector<OutcomeTrajectory> negative_controls_only(std::span<const OutcomeTrajectory> outcomes);

// --- presets used by the acceptance suite and the shipped configs ----------

E1Config e1_preset();
E2Config e2_preset();
Fig3Config fig3_preset();
E3Config e3_preset();

}  // namespace seqsafety
