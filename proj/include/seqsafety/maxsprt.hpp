/*
 * @file maxsprt.hpp
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
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "seqsafety/design_likelihood.hpp"

namespace seqsafety {

// Expected null event count added at each planned look.
struct SurveillanceSchedule {
  std::vector<double> expected_increments;
  double alpha = 0.05;

  int planned_looks() const { return static_cast<int>(expected_increments.size()); }
  void validate() const;
  // Stable hex digest of the increments and alpha; used as a cache key.
  std::string hash() const;

  static SurveillanceSchedule uniform(int looks, double per_look, double alpha = 0.05);
  // Increments from cumulative expected counts (one per look).
  static SurveillanceSchedule from_cumulative(std::span<const double> cumulative, double alpha = 0.05);
};

struct CriticalValue {
  double cv = 0.0;
  SurveillanceSchedule schedule;
  long mc_replicates = 0;
  std::uint64_t seed = 0;
  double empirical_alpha_at_cv = 0.0;
};

enum class Method { maxsprt, bayes, bbc };
std::string_view method_name(Method m);
Method parse_method(std::string_view name);

struct LookRecord {
  int look = 0;
  double statistic = 0.0;
  double threshold = 0.0;
  bool signaled = false;
  bool skipped = false;  // minimum-evidence rule failed; no test at this look
};

struct SequentialDecision {
  Method method = Method::maxsprt;
  std::vector<LookRecord> records;
  std::optional<int> stopping_time;
};

// A statistic signals when it exceeds the threshold by more than this; it
// keeps Monte Carlo calibration and the decision loop consistent at ties.
inline constexpr double kSignalTolerance = 1e-9;

// First look whose statistic exceeds the threshold. NaN statistics mark
// skipped looks. Records stop at the stopping look.
SequentialDecision first_crossing(Method method, std::span<const double> statistics, double threshold);

// log sup_{beta>0} L / sup_{beta<=0} L on the profile's grid.
double llr_statistic(const LikelihoodProfile& profile);

// Continuous closed form for the Poisson model: c ln(c/mu) - c + mu, negated
// when c < mu.
double poisson_llr(long count, double expected);

// Same statistic restricted to the grid, in O(1): the concave log-likelihood
// peaks at ln(c/mu), so each half-line supremum sits at a neighbouring point.
double poisson_grid_llr(long count, double expected, const BetaGrid& grid = {});

// Monte Carlo critical value for the Poisson MaxSPRT. The running maximum of
// W_t is recorded per null run; cv is the (floor(alpha R) + 1)-th largest
// maximum, i.e. the smallest cv with exceedance fraction <= alpha.
CriticalValue compute_cv(const SurveillanceSchedule& schedule, long mc_replicates, std::uint64_t seed,
                         int jobs = 1);

// Cumulative fraction of null runs (Poisson with `accrual` increments) that
// have signaled against `cv` by each look.
std::vector<double> null_signal_curve(const SurveillanceSchedule& accrual, double cv, long replicates,
                                      std::uint64_t seed, int jobs = 1);

SequentialDecision run_maxsprt(std::span<const LikelihoodProfile> profiles_by_look, double cv);
SequentialDecision run_maxsprt(std::span<const LikelihoodProfile> profiles_by_look, const CriticalValue& cv);

// Disk cache of critical values; one JSON file per key.
class CvCache {
 public:
  explicit CvCache(std::filesystem::path dir) : dir_(std::move(dir)) {}
  static std::string key(const SurveillanceSchedule& schedule, long mc_replicates, std::uint64_t seed);
  std::optional<CriticalValue> load(const SurveillanceSchedule& schedule, long mc_replicates,
                                    std::uint64_t seed) const;
  void store(const CriticalValue& cv) const;
  CriticalValue get_or_compute(const SurveillanceSchedule& schedule, long mc_replicates, std::uint64_t seed,
                               int jobs = 1) const;

 private:
  std::filesystem::path dir_;
};

}  // namespace seqsafety
