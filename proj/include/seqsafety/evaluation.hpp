/*
 * @file evaluation.hpp
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
#include <iosfwd>
#include <map>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "seqsafety/design_likelihood.hpp"
#include "seqsafety/maxsprt.hpp"

namespace seqsafety {

// One simulated negative-control outcome. Positive controls are derived from
// these by likelihood translation and share the parent's injected bias.
struct ControlSpec {
  std::string id;
  double log_rate_offset = 0.0;  // shift of the baseline curve for this outcome
};

struct ControlSuite {
  std::vector<ControlSpec> negative_controls;
  std::vector<double> positive_rrs{1.5, 2.0, 4.0};
  // Per control and replicate, the additive bias is drawn N(bias_mean, bias_sd^2).
  double bias_mean = 0.25;
  double bias_sd = 0.1;

  void validate() const;
  // M controls with log-uniform base-rate offsets in [lo, hi].
  static ControlSuite log_uniform(int m, double lo_offset, double hi_offset, std::uint64_t seed);
  double injected_bias(const ControlSpec& control, std::uint64_t replicate_seed) const;
};

// Number of grid steps used for a log-RR shift (nearest integer).
long shift_steps(double rr, const BetaGrid& grid = {});
double snapped_log_rr(double rr, const BetaGrid& grid = {});

// f_pc(beta) = f_nc(beta - ln rr) by an integer grid translation. Values that
// enter from below the grid repeat the lowest point.
LikelihoodProfile synthesize_positive_profile(const LikelihoodProfile& nc_profile, double rr);

// Grid interval where loglik >= -chi2_{1,0.95}/2 (1.9207), interpolated.
struct Interval {
  double lo = 0.0;
  double hi = 0.0;
};
Interval profile_likelihood_interval(const LikelihoodProfile& profile);

// Identifies one analysis configuration. prior_variance and delta1 are 0 for
// MaxSPRT cells.
struct CellKey {
  Method method = Method::maxsprt;
  std::string design;
  double prior_variance = 0.0;
  double delta1 = 0.0;

  std::string id() const;
  auto operator<=>(const CellKey&) const = default;
};

// Per-look results for one control outcome within one cell.
struct OutcomeTrajectory {
  std::string outcome_id;
  long replicate = 0;
  double true_rr = 1.0;
  double true_log_rr = 0.0;  // snapped to the grid for positive controls
  double threshold = 0.0;
  std::vector<double> statistic;  // NaN at skipped looks
  std::vector<double> estimate;
  std::vector<double> lo95;
  std::vector<double> hi95;
  std::vector<char> estimable;

  int looks() const { return static_cast<int>(statistic.size()); }
  // First look (1-based) with statistic > threshold, if any.
  std::optional<int> first_signal() const;
  std::optional<int> first_signal(double threshold_override) const;
};

struct MetricRow {
  CellKey key;
  int look = 0;
  double true_rr = 1.0;
  long n_outcomes = 0;
  double type1 = 0.0;
  double specificity = 0.0;
  std::optional<double> type2;        // positive-control rows only
  std::optional<double> sensitivity;  // positive-control rows only
  std::optional<int> ttd25;           // absent: not reached (or not applicable)
  std::optional<int> ttd50;
  std::optional<double> mse;
  std::optional<double> coverage95;
  double non_estimable_rate = 0.0;
  bool low_evidence = false;
};

inline constexpr int kLowEvidenceLooks = 4;

// Metrics per (look, true_rr) for one cell. Testing metrics are cumulative.
std::vector<MetricRow> compute_metrics(const CellKey& key, std::span<const OutcomeTrajectory> outcomes);

class MetricTable {
 public:
  void add(std::vector<MetricRow> rows);
  const std::vector<MetricRow>& rows() const { return rows_; }
  std::vector<MetricRow> select(const CellKey& key, double true_rr) const;
  void write_csv(std::ostream& out) const;
  static MetricTable read_csv(std::istream& in);

 private:
  std::vector<MetricRow> rows_;
};

struct ThresholdCalibration {
  double delta1 = 0.0;
  double achieved_type1 = 0.0;
  bool flagged = false;  // target unattainable on the lattice
};

// Smallest delta1 on the lattice 0.501, 0.502, ..., 0.999 whose end-of-
// analysis Type 1 over the negative-control p_h1 trajectories is <= target.
ThresholdCalibration calibrate_threshold(std::span<const OutcomeTrajectory> negative_controls, double target_type1);

// Final-look Type 1 of negative controls at a given threshold.
double final_type1(std::span<const OutcomeTrajectory> negative_controls, double threshold);

struct CellResult {
  CellKey key;
  std::vector<OutcomeTrajectory> outcomes;
  std::string error;  // non-empty when the cell failed
};

// Thread-safe store of finished cells. A second write under an existing cell
// id is rejected and the first result kept.
class ResultStore {
 public:
  bool add(CellResult result);
  std::vector<CellResult> cells() const;
  std::optional<CellResult> find(const CellKey& key) const;
  std::size_t size() const;

 private:
  mutable std::mutex mutex_;
  std::map<std::string, CellResult> cells_;
};

// CSV rows: outcome_id,replicate,true_rr,true_log_rr,threshold,look,statistic,estimate,lo95,hi95,estimable
void write_outcomes_csv(std::ostream& out, std::span<const OutcomeTrajectory> outcomes);
std::vector<OutcomeTrajectory> read_outcomes_csv(std::istream& in);

}  // namespace seqsafety
