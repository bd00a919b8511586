/*
 * @file sequential_data.cpp
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

#include "seqsafety/sequential_data.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <map>
#include <numeric>
#include <ostream>
#include <random>
#include <sstream>
#include <stdexcept>

#include <fmt/format.h>

#include "seqsafety/csv.hpp"
#include "seqsafety/errors.hpp"
#include "seqsafety/rng.hpp"

namespace seqsafety {

void CohortLayout::validate() const {
  if (n_weeks_total < 2) throw ConfigError("n_weeks_total must be at least 2");
  if (historical.first != 1 || historical.last < historical.first ||
      surveillance.first != historical.last + 1 || surveillance.last != n_weeks_total ||
      surveillance.last < surveillance.first) {
    throw ConfigError(fmt::format(
        "historical ({}-{}) and surveillance ({}-{}) weeks must be disjoint and tile 1..{}",
        historical.first, historical.last, surveillance.first, surveillance.last,
        n_weeks_total));
  }
}

void ScenarioConfig::validate() const {
  layout.validate();
  if (n_subjects < 1) throw ConfigError("n_subjects must be >= 1");
  if (risk_window_weeks < 1) throw ConfigError("risk_window_weeks must be >= 1");
  if (!(covariate_prevalence >= 0.0 && covariate_prevalence <= 1.0)) {
    throw ConfigError("covariate_prevalence must be a probability");
  }
  if (!(historical_rate_multiplier > 0.0 && historical_rate_multiplier <= 1.0)) {
    throw ConfigError("historical_rate_multiplier must lie in (0, 1]");
  }
  if (baseline_log_rate_per_week.size() != 52) {
    throw ConfigError(fmt::format("baseline_log_rate_per_week needs 52 entries, got {}",
                                  baseline_log_rate_per_week.size()));
  }
  if (static_cast<int>(uptake_curve.size()) != layout.surveillance.length()) {
    throw ConfigError(fmt::format("uptake_curve needs {} entries (one per surveillance week), got {}",
                                  layout.surveillance.length(), uptake_curve.size()));
  }
  double total = 0.0;
  for (double u : uptake_curve) {
    if (!(u >= 0.0 && u <= 1.0)) throw ConfigError("uptake_curve entries must be probabilities");
    total += u;
  }
  if (total > 1.0 + 1e-9) throw ConfigError("uptake_curve must sum to at most 1");
  for (double a : baseline_log_rate_per_week) {
    if (!std::isfinite(a)) throw ConfigError("baseline_log_rate_per_week must be finite");
  }
  // Overflow guard on the largest rate any subject-week can take.
  const double hi_base =
      *std::max_element(baseline_log_rate_per_week.begin(), baseline_log_rate_per_week.end());
  const double worst = hi_base + log_rate_offset + std::max(0.0, covariate_effect) +
                       std::max(0.0, true_log_rr + injected_bias);
  if (worst > kMaxWeeklyLogRate) {
    throw ConfigError(fmt::format("weekly log-rate {:.3f} exceeds the overflow guard {}", worst,
                                  kMaxWeeklyLogRate));
  }
}

bool in_risk_window(std::optional<int> vaccination_week, int week, int window_weeks) {
  return vaccination_week && week > *vaccination_week && week <= *vaccination_week + window_weeks;
}

double weekly_log_rate(const ScenarioConfig& config, int week, int covariate, bool at_risk) {
  const auto& curve = config.baseline_log_rate_per_week;
  double rate = curve[static_cast<std::size_t>(week - 1) % curve.size()] + config.log_rate_offset +
                covariate * config.covariate_effect;
  if (config.layout.historical.contains(week)) rate += std::log(config.historical_rate_multiplier);
  if (at_risk) rate += config.true_log_rr + config.injected_bias;
  return rate;
}

std::vector<SubjectTrajectory> simulate_population(const ScenarioConfig& config) {
  config.validate();
  const int weeks = config.layout.n_weeks_total;
  const int surv_len = config.layout.surveillance.length();

  std::vector<double> uptake_cdf(config.uptake_curve.size());
  std::partial_sum(config.uptake_curve.begin(), config.uptake_curve.end(), uptake_cdf.begin());

  // Cumulative weekly rates per (covariate, vaccination group); the count
  // vector is drawn as Poisson(total) events placed by inverse CDF, which has
  // the same law as independent weekly Poisson draws.
  const int groups = surv_len + 1;
  std::vector<std::vector<double>> cumulative(static_cast<std::size_t>(2 * groups));
  auto table_for = [&](int x, int g) -> const std::vector<double>& {
    auto& cum = cumulative[static_cast<std::size_t>(x * groups + g)];
    if (cum.empty()) {
      std::optional<int> vac;
      if (g > 0) vac = config.layout.surveillance.first + g - 1;
      cum.resize(static_cast<std::size_t>(weeks));
      double acc = 0.0;
      for (int k = 1; k <= weeks; ++k) {
        acc += std::exp(weekly_log_rate(config, k, x, in_risk_window(vac, k, config.risk_window_weeks)));
        cum[static_cast<std::size_t>(k - 1)] = acc;
      }
    }
    return cum;
  };

  const std::uint64_t subject_root = derive_seed(config.master_seed, "subject");
  const std::uint64_t count_root =
      derive_seed(derive_seed(config.master_seed, "counts"), config.outcome_id);

  std::vector<SubjectTrajectory> out(static_cast<std::size_t>(config.n_subjects));
  for (std::size_t i = 0; i < out.size(); ++i) {
    auto& traj = out[i];
    traj.subject_id = i;
    SplitMix64 srng(derive_seed(subject_root, i));
    traj.covariate = uniform_open01(srng) < config.covariate_prevalence ? 1 : 0;
    const double u = uniform_open01(srng);
    int group = 0;
    if (!uptake_cdf.empty() && u < uptake_cdf.back()) {
      auto it = std::upper_bound(uptake_cdf.begin(), uptake_cdf.end(), u);
      group = static_cast<int>(it - uptake_cdf.begin()) + 1;
      traj.vaccination_week = config.layout.surveillance.first + group - 1;
    }

    traj.weekly_counts.assign(static_cast<std::size_t>(weeks), 0);
    const auto& cum = table_for(traj.covariate, group);
    SplitMix64 crng(derive_seed(count_root, i));
    std::poisson_distribution<long> total_dist(cum.back());
    const long n_events = total_dist(crng);
    for (long e = 0; e < n_events; ++e) {
      const double target = uniform_open01(crng) * cum.back();
      auto it = std::upper_bound(cum.begin(), cum.end(), target);
      auto k = static_cast<std::size_t>(std::min<std::ptrdiff_t>(it - cum.begin(), weeks - 1));
      ++traj.weekly_counts[k];
    }
  }
  return out;
}

// ---------------------------------------------------------------------------

CohortTable::CohortTable(const CohortLayout& layout, std::span<const SubjectTrajectory> trajectories)
    : layout_(layout), groups_(layout.surveillance.length() + 1) {
  const auto cells = static_cast<std::size_t>(kStrata * groups_) *
                     static_cast<std::size_t>(layout_.n_weeks_total + 1);
  events_.assign(cells, 0);
  first_events_.assign(cells, 0);
  subjects_.assign(static_cast<std::size_t>(kStrata * groups_), 0);
  for (const auto& t : trajectories) {
    if (t.covariate < 0 || t.covariate >= kStrata) {
      throw std::invalid_argument("covariate must be 0 or 1");
    }
    if (static_cast<int>(t.weekly_counts.size()) != layout_.n_weeks_total) {
      throw std::invalid_argument("weekly_counts length must equal n_weeks_total");
    }
    const int g = group_of(t.vaccination_week);
    ++subjects_[static_cast<std::size_t>(t.covariate * groups_ + g)];
    bool seen_surveillance_event = false;
    for (int k = 1; k <= layout_.n_weeks_total; ++k) {
      const int c = t.weekly_counts[static_cast<std::size_t>(k - 1)];
      if (c == 0) continue;
      events_[index(t.covariate, g, k)] += c;
      if (!seen_surveillance_event && layout_.surveillance.contains(k)) {
        ++first_events_[index(t.covariate, g, k)];
        seen_surveillance_event = true;
      }
    }
  }
}

int CohortTable::group_of(std::optional<int> vaccination_week) const {
  if (!vaccination_week) return 0;
  if (!layout_.surveillance.contains(*vaccination_week)) {
    throw std::invalid_argument(
        fmt::format("vaccination week {} outside the surveillance period", *vaccination_week));
  }
  return *vaccination_week - layout_.surveillance.first + 1;
}

Cohort::Cohort(CohortLayout layout, std::vector<SubjectTrajectory> trajectories)
    : layout_(layout), trajectories_(std::move(trajectories)), table_(layout_, trajectories_) {
  layout_.validate();
}

LookSnapshot::LookSnapshot(int look_index, int cutoff_week, std::shared_ptr<const Cohort> cohort)
    : look_index_(look_index), cutoff_week_(cutoff_week), cohort_(std::move(cohort)) {
  if (!cohort_) throw std::invalid_argument("snapshot needs a cohort");
  if (!cohort_->layout().surveillance.contains(cutoff_week_)) {
    throw std::invalid_argument(fmt::format("cutoff week {} outside surveillance", cutoff_week_));
  }
}

int LookSnapshot::count(std::size_t subject, int week) const {
  if (week < 1 || week > cutoff_week_) return 0;
  return cohort_->trajectories().at(subject).weekly_counts[static_cast<std::size_t>(week - 1)];
}

std::optional<int> LookSnapshot::vaccination_week(std::size_t subject) const {
  auto v = cohort_->trajectories().at(subject).vaccination_week;
  if (v && *v > cutoff_week_) return std::nullopt;
  return v;
}

std::vector<SubjectTrajectory> LookSnapshot::trajectories() const {
  std::vector<SubjectTrajectory> out = cohort_->trajectories();
  for (auto& t : out) {
    if (t.vaccination_week && *t.vaccination_week > cutoff_week_) t.vaccination_week.reset();
    for (std::size_t k = static_cast<std::size_t>(cutoff_week_); k < t.weekly_counts.size(); ++k) {
      t.weekly_counts[k] = 0;
    }
  }
  return out;
}

std::vector<SubjectTrajectory> LookSnapshot::historical_block() const {
  std::vector<SubjectTrajectory> out = cohort_->trajectories();
  const auto hist_end = static_cast<std::size_t>(layout().historical.last);
  for (auto& t : out) {
    t.vaccination_week.reset();
    t.weekly_counts.resize(hist_end);
  }
  return out;
}

long LookSnapshot::total_events() const {
  long total = 0;
  for (const auto& t : cohort_->trajectories()) {
    for (int k = 1; k <= cutoff_week_; ++k) total += t.weekly_counts[static_cast<std::size_t>(k - 1)];
  }
  return total;
}

std::vector<int> monthly_cutoffs(const CohortLayout& layout, int months) {
  if (months < 1) throw std::invalid_argument("months must be >= 1");
  const int len = layout.surveillance.length();
  std::vector<int> out;
  out.reserve(static_cast<std::size_t>(months));
  for (int m = 1; m <= months; ++m) {
    out.push_back(layout.surveillance.first - 1 + (m * len + months - 1) / months);
  }
  return out;
}

int surveillance_month(const CohortLayout& layout, int week, int months) {
  if (!layout.surveillance.contains(week)) {
    throw std::invalid_argument("week outside surveillance");
  }
  const int rel = week - layout.surveillance.first + 1;
  const int len = layout.surveillance.length();
  // smallest m with ceil(m * len / months) >= rel
  for (int m = 1; m <= months; ++m) {
    if ((m * len + months - 1) / months >= rel) return m;
  }
  return months;
}

std::vector<LookSnapshot> accrue(std::shared_ptr<const Cohort> cohort, std::span<const int> cutoffs) {
  std::vector<LookSnapshot> out;
  int previous = 0;
  for (std::size_t i = 0; i < cutoffs.size(); ++i) {
    if (cutoffs[i] <= previous) throw std::invalid_argument("cutoffs must be strictly increasing");
    previous = cutoffs[i];
    out.emplace_back(static_cast<int>(i) + 1, cutoffs[i], cohort);
  }
  return out;
}

std::vector<LookSnapshot> accrue(std::vector<SubjectTrajectory> trajectories,
                                 const CohortLayout& layout, std::span<const int> cutoffs) {
  return accrue(std::make_shared<const Cohort>(layout, std::move(trajectories)), cutoffs);
}

void write_trajectories_csv(std::ostream& out, std::span<const SubjectTrajectory> trajectories) {
  out << "subject_id,covariate,vaccination_week,week,count\n";
  for (const auto& t : trajectories) {
    const std::string vac = t.vaccination_week ? std::to_string(*t.vaccination_week) : "";
    bool any = false;
    for (std::size_t k = 0; k < t.weekly_counts.size(); ++k) {
      if (t.weekly_counts[k] == 0) continue;
      any = true;
      out << t.subject_id << ',' << t.covariate << ',' << vac << ',' << (k + 1) << ','
          << t.weekly_counts[k] << '\n';
    }
    if (!any) out << t.subject_id << ',' << t.covariate << ',' << vac << ",1,0\n";
  }
}

std::vector<SubjectTrajectory> read_trajectories_csv(std::istream& in, const CohortLayout& layout) {
  CsvReader reader(in);
  reader.expect_header({"subject_id", "covariate", "vaccination_week", "week", "count"});
  std::map<std::size_t, SubjectTrajectory> by_id;
  while (auto row = reader.next()) {
    const auto id = static_cast<std::size_t>(row->as_long(0));
    auto [it, inserted] = by_id.try_emplace(id);
    auto& t = it->second;
    const int covariate = static_cast<int>(row->as_long(1));
    std::optional<int> vac;
    if (!(*row)[2].empty()) vac = static_cast<int>(row->as_long(2));
    if (inserted) {
      t.subject_id = id;
      t.covariate = covariate;
      t.vaccination_week = vac;
      t.weekly_counts.assign(static_cast<std::size_t>(layout.n_weeks_total), 0);
    } else if (t.covariate != covariate || t.vaccination_week != vac) {
      throw IoError(fmt::format("line {}: inconsistent subject {}", reader.line_number(), id));
    }
    const long week = row->as_long(3);
    if (week < 1 || week > layout.n_weeks_total) {
      throw IoError(fmt::format("line {}: week {} out of range", reader.line_number(), week));
    }
    t.weekly_counts[static_cast<std::size_t>(week - 1)] += static_cast<int>(row->as_long(4));
  }
  std::vector<SubjectTrajectory> out;
  out.reserve(by_id.size());
  for (auto& [id, t] : by_id) out.push_back(std::move(t));
  return out;
}

void write_subjects_csv(std::ostream& out, std::span<const SubjectTrajectory> trajectories) {
  out << "subject_id,covariate,vaccination_week\n";
  for (const auto& t : trajectories) {
    out << t.subject_id << ',' << t.covariate << ',';
    if (t.vaccination_week) out << *t.vaccination_week;
    out << '\n';
  }
}

void write_events_csv(std::ostream& out, std::span<const SubjectTrajectory> trajectories) {
  out << "subject_id,week,count\n";
  for (const auto& t : trajectories) {
    for (std::size_t k = 0; k < t.weekly_counts.size(); ++k) {
      if (t.weekly_counts[k] != 0) out << t.subject_id << ',' << (k + 1) << ',' << t.weekly_counts[k] << '\n';
    }
  }
}

std::vector<SubjectTrajectory> read_subjects_and_events_csv(std::istream& subjects, std::istream& events,
                                                            const CohortLayout& layout) {
  std::vector<SubjectTrajectory> out;
  std::map<std::size_t, std::size_t> position;
  {
    CsvReader reader(subjects);
    reader.expect_header({"subject_id", "covariate", "vaccination_week"});
    while (auto row = reader.next()) {
      SubjectTrajectory t;
      t.subject_id = static_cast<std::size_t>(row->as_long(0));
      t.covariate = static_cast<int>(row->as_long(1));
      if (!(*row)[2].empty()) t.vaccination_week = static_cast<int>(row->as_long(2));
      t.weekly_counts.assign(static_cast<std::size_t>(layout.n_weeks_total), 0);
      if (!position.emplace(t.subject_id, out.size()).second) {
        throw IoError(fmt::format("subjects line {}: duplicate subject {}", reader.line_number(), t.subject_id));
      }
      out.push_back(std::move(t));
    }
  }
  CsvReader reader(events);
  reader.expect_header({"subject_id", "week", "count"});
  while (auto row = reader.next()) {
    const auto id = static_cast<std::size_t>(row->as_long(0));
    const auto it = position.find(id);
    if (it == position.end()) throw IoError(fmt::format("events line {}: unknown subject {}", reader.line_number(), id));
    const long week = row->as_long(1);
    if (week < 1 || week > layout.n_weeks_total) {
      throw IoError(fmt::format("events line {}: week {} out of range", reader.line_number(), week));
    }
    out[it->second].weekly_counts[static_cast<std::size_t>(week - 1)] += static_cast<int>(row->as_long(2));
  }
  return out;
}

}  // namespace seqsafety
