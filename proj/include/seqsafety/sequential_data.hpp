/*
 * @file sequential_data.hpp
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
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace seqsafety {

// Inclusive 1-based week range.
struct WeekRange {
  int first = 1;
  int last = 52;

  int length() const { return last - first + 1; }
  bool contains(int week) const { return week >= first && week <= last; }
  bool operator==(const WeekRange&) const = default;
};

// Layout of the observation timeline, shared by trajectories and snapshots.
struct CohortLayout {
  int n_weeks_total = 104;
  WeekRange historical{1, 52};
  WeekRange surveillance{53, 104};

  void validate() const;
  bool operator==(const CohortLayout&) const = default;
};

struct ScenarioConfig {
  int n_subjects = 5000;
  CohortLayout layout;
  // Log incidence per subject-week, indexed by week of year (52 entries).
  std::vector<double> baseline_log_rate_per_week;
  double historical_rate_multiplier = 0.5;
  double covariate_effect = 0.0;
  double covariate_prevalence = 0.5;
  double true_log_rr = 0.0;
  // Extra log-rate shift applied during risk weeks on top of true_log_rr.
  // Stands in for residual systematic error on simulated control outcomes.
  double injected_bias = 0.0;
  int risk_window_weeks = 6;
  // Vaccination probability per surveillance week.
  std::vector<double> uptake_curve;
  std::uint64_t master_seed = 0;
  // Outcomes sharing master_seed share subjects (covariates, vaccination
  // weeks) but draw their event counts from streams keyed by outcome_id.
  std::string outcome_id = "outcome";
  // Additive shift of the whole baseline curve for this outcome.
  double log_rate_offset = 0.0;

  void validate() const;
};

struct SubjectTrajectory {
  std::size_t subject_id = 0;
  int covariate = 0;
  std::optional<int> vaccination_week;
  std::vector<int> weekly_counts;  // index k-1 holds week k

  bool operator==(const SubjectTrajectory&) const = default;
};

// Maximum weekly log-rate accepted by the simulator.
inline constexpr double kMaxWeeklyLogRate = 10.0;

std::vector<SubjectTrajectory> simulate_population(const ScenarioConfig& config);

// Log-rate for one subject-week under the simulation model.
double weekly_log_rate(const ScenarioConfig& config, int week, int covariate, bool at_risk);

// Weeks v+1 .. v+window (clipped to the timeline) are at risk.
bool in_risk_window(std::optional<int> vaccination_week, int week, int window_weeks);

// Aggregated event counts by (covariate stratum, vaccination group, week).
// Group 0 holds unvaccinated subjects; group g >= 1 holds subjects vaccinated
// in surveillance week layout.surveillance.first + g - 1. Every design
// likelihood in this project is a function of this table.
class CohortTable {
 public:
  static constexpr int kStrata = 2;

  CohortTable() = default;
  CohortTable(const CohortLayout& layout, std::span<const SubjectTrajectory> trajectories);

  const CohortLayout& layout() const { return layout_; }
  int groups() const { return groups_; }
  int group_of(std::optional<int> vaccination_week) const;
  // Vaccination week for a group index >= 1.
  int vaccination_week_of(int group) const { return layout_.surveillance.first + group - 1; }

  long events(int stratum, int group, int week) const {
    return events_[index(stratum, group, week)];
  }
  long subjects(int stratum, int group) const {
    return subjects_[static_cast<std::size_t>(stratum * groups_ + group)];
  }
  // Number of subjects whose first surveillance-period event falls in `week`.
  long first_events(int stratum, int group, int week) const {
    return first_events_[index(stratum, group, week)];
  }

 private:
  std::size_t index(int stratum, int group, int week) const {
    return (static_cast<std::size_t>(stratum) * static_cast<std::size_t>(groups_) +
            static_cast<std::size_t>(group)) *
               static_cast<std::size_t>(layout_.n_weeks_total + 1) +
           static_cast<std::size_t>(week);
  }

  CohortLayout layout_;
  int groups_ = 0;
  std::vector<long> events_;
  std::vector<long> subjects_;
  std::vector<long> first_events_;
};

// Immutable trajectory set with its aggregate table.
class Cohort {
 public:
  Cohort(CohortLayout layout, std::vector<SubjectTrajectory> trajectories);

  const CohortLayout& layout() const { return layout_; }
  const std::vector<SubjectTrajectory>& trajectories() const { return trajectories_; }
  const CohortTable& table() const { return table_; }

 private:
  CohortLayout layout_;
  std::vector<SubjectTrajectory> trajectories_;
  CohortTable table_;
};

// All data accrued through a look: surveillance weeks up to cutoff_week and
// the whole historical block. Cheap to copy; shares the underlying cohort.
class LookSnapshot {
 public:
  LookSnapshot(int look_index, int cutoff_week, std::shared_ptr<const Cohort> cohort);

  int look_index() const { return look_index_; }
  int cutoff_week() const { return cutoff_week_; }
  const CohortLayout& layout() const { return cohort_->layout(); }
  const CohortTable& table() const { return cohort_->table(); }
  std::size_t n_subjects() const { return cohort_->trajectories().size(); }

  bool observed(int week) const { return week <= cutoff_week_; }
  // Count for a subject-week, zero for weeks not yet accrued.
  int count(std::size_t subject, int week) const;
  // Vaccinations after the cutoff are not yet known.
  std::optional<int> vaccination_week(std::size_t subject) const;

  // Trajectories truncated at the cutoff (unobserved weeks set to zero).
  std::vector<SubjectTrajectory> trajectories() const;
  std::vector<SubjectTrajectory> historical_block() const;
  long total_events() const;

 private:
  int look_index_;
  int cutoff_week_;
  std::shared_ptr<const Cohort> cohort_;
};

// Month m of the surveillance year ends at week ceil(m * weeks / months)
// counted from the start of surveillance; returned as absolute weeks.
std::vector<int> monthly_cutoffs(const CohortLayout& layout, int months = 12);

// Calendar month (1-based) of an absolute surveillance week.
int surveillance_month(const CohortLayout& layout, int week, int months = 12);

std::vector<LookSnapshot> accrue(std::vector<SubjectTrajectory> trajectories,
                                 const CohortLayout& layout, std::span<const int> cutoffs);
std::vector<LookSnapshot> accrue(std::shared_ptr<const Cohort> cohort, std::span<const int> cutoffs);

// CSV columns: subject_id,covariate,vaccination_week,week,count. One row per
// nonzero subject-week; subjects without events get a single zero row at
// week 1 so their covariate and vaccination week survive the round trip.
void write_trajectories_csv(std::ostream& out, std::span<const SubjectTrajectory> trajectories);
std::vector<SubjectTrajectory> read_trajectories_csv(std::istream& in, const CohortLayout& layout);

// Split form for outcomes that share subjects: one subjects file
// (subject_id,covariate,vaccination_week) and one events file per outcome
// (subject_id,week,count; nonzero counts only).
void write_subjects_csv(std::ostream& out, std::span<const SubjectTrajectory> trajectories);
void write_events_csv(std::ostream& out, std::span<const SubjectTrajectory> trajectories);
std::vector<SubjectTrajectory> read_subjects_and_events_csv(std::istream& subjects, std::istream& events,
                                                            const CohortLayout& layout);

}  // namespace seqsafety
