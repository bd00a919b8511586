/*
 * @file design_likelihood.hpp
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

#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "seqsafety/grid.hpp"
#include "seqsafety/sequential_data.hpp"

namespace seqsafety {

// Log-likelihood of the log-RR on the shared grid, shifted so its maximum is
// exactly zero. This is what every design hands to the inference modules.
struct LikelihoodProfile {
  BetaGrid grid;
  std::vector<double> loglik;
  double mle = 0.0;        // grid argmax
  bool boundary = false;   // argmax within one step of a grid end
  bool estimable = false;
  long risk_count = 0;
  long comparator_count = 0;
  // Historical comparator: expected at-risk count mu. SCCS: risk-window count
  // expected under beta = 0 given each case's total.
  double expected = 0.0;
  double risk_time = 0.0;     // subject-weeks
  double control_time = 0.0;  // subject-weeks (historical for the comparator)
  bool synthetic = false;
  double shift = 0.0;  // log-RR translation applied to a synthetic profile
  std::string design;
  int look = 0;

  std::size_t argmax() const;
};

// Shifts `values` so the max is 0 and fills mle/boundary. Estimability is
// set from the boundary rule and `has_information`.
LikelihoodProfile make_profile(const BetaGrid& grid, std::vector<double> values,
                               bool has_information);

// Profile value at an arbitrary beta: linear interpolation between grid
// points, flat extension beyond the ends.
double profile_value(const LikelihoodProfile& profile, double beta);

// loglik(beta) = c beta - mu e^beta.
LikelihoodProfile poisson_profile(long count, double expected, const BetaGrid& grid = {});

struct SccsInterval {
  long risk_events = 0;
  long total_events = 0;
  double risk_time = 0.0;
  double control_time = 0.0;
};
// Sum over cases of c_r beta - n log(T_r e^beta + T_c).
LikelihoodProfile sccs_two_interval_profile(std::span<const SccsInterval> cases,
                                            const BetaGrid& grid = {});

enum class DesignVariant {
  hc_unadjusted,
  hc_stratified,
  hc_seasonal,  // covariate strata and week-of-year matched historical rates
  sccs_exclude_pre,  // all other surveillance time, minus 4 weeks before vaccination
  sccs_month_adjusted,
  sccs_post_only,
  scri_pre,   // control weeks v-6 .. v-3
  scri_post,  // control weeks v+7 .. v+10
};

enum class DesignFamily { historical_comparator, sccs };

struct DesignSpec {
  DesignVariant variant = DesignVariant::hc_unadjusted;
  int risk_window_weeks = 6;  // 4 or 6

  DesignFamily family() const;
  // e.g. "hc_unadjusted_w6"
  std::string name() const;
  void validate() const;
  static DesignSpec parse(std::string_view name);
};

std::string_view variant_name(DesignVariant v);

inline constexpr int kPreVaccinationExclusionWeeks = 4;
inline constexpr double kMonthEffectTolerance = 1e-8;
inline constexpr int kMonthEffectMaxIterations = 50;
inline constexpr double kMonthEffectClamp = 30.0;

LikelihoodProfile historical_comparator_profile(const LookSnapshot& snapshot, const DesignSpec& spec,
                                                const BetaGrid& grid = {});
LikelihoodProfile sccs_profile(const LookSnapshot& snapshot, const DesignSpec& spec,
                               const BetaGrid& grid = {});
// Dispatches on spec.family().
LikelihoodProfile design_profile(const LookSnapshot& snapshot, const DesignSpec& spec,
                                 const BetaGrid& grid = {});

// beta,loglik rows after a block of "# key: value" metadata lines.
void write_profile_csv(std::ostream& out, const LikelihoodProfile& profile);
LikelihoodProfile read_profile_csv(std::istream& in);

}  // namespace seqsafety
