/*
 * @file evaluation.cpp
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

#include "seqsafety/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <ostream>
#include <random>
#include <set>
#include <stdexcept>

#include <fmt/format.h>

#include "seqsafety/csv.hpp"
#include "seqsafety/errors.hpp"
#include "seqsafety/rng.hpp"

namespace seqsafety {

void ControlSuite::validate() const {
  if (negative_controls.size() < 2) throw ConfigError("control suite needs at least 2 negative controls");
  std::set<std::string> ids;
  for (const auto& c : negative_controls) {
    if (!ids.insert(c.id).second) throw ConfigError(fmt::format("duplicate control id '{}'", c.id));
  }
  for (double rr : positive_rrs) {
    if (!(rr > 1.0)) throw ConfigError("positive-control RRs must exceed 1");
  }
  if (!(bias_sd >= 0.0)) throw ConfigError("bias_sd must be >= 0");
}

ControlSuite ControlSuite::log_uniform(int m, double lo_offset, double hi_offset, std::uint64_t seed) {
  ControlSuite suite;
  SplitMix64 rng(derive_seed(seed, "control-suite"));
  for (int i = 0; i < m; ++i) {
    ControlSpec c;
    c.id = fmt::format("nc{:03d}", i + 1);
    c.log_rate_offset = lo_offset + (hi_offset - lo_offset) * uniform_open01(rng);
    suite.negative_controls.push_back(std::move(c));
  }
  return suite;
}

double ControlSuite::injected_bias(const ControlSpec& control, std::uint64_t replicate_seed) const {
  if (bias_sd == 0.0) return bias_mean;
  SplitMix64 rng(derive_seed(derive_seed(replicate_seed, "bias"), control.id));
  std::normal_distribution<double> d(bias_mean, bias_sd);
  return d(rng);
}

long shift_steps(double rr, const BetaGrid& grid) {
  if (!(rr > 0.0)) throw std::invalid_argument("rr must be positive");
  return std::lround(std::log(rr) / grid.step());
}

double snapped_log_rr(double rr, const BetaGrid& grid) {
  // the grid point itself, so a shifted maximum compares equal to it
  const auto j = static_cast<long>(grid.zero_index()) + shift_steps(rr, grid);
  if (j >= 0 && j < static_cast<long>(grid.size())) return grid[static_cast<std::size_t>(j)];
  return static_cast<double>(shift_steps(rr, grid)) * grid.step();
}

LikelihoodProfile synthesize_positive_profile(const LikelihoodProfile& nc, double rr) {
  if (rr < 1.0) throw std::invalid_argument("positive controls need rr >= 1");
  const long k = shift_steps(rr, nc.grid);
  if (k == 0) return nc;
  const auto n = static_cast<long>(nc.grid.size());
  std::vector<double> values(nc.grid.size());
  for (long j = 0; j < n; ++j) values[static_cast<std::size_t>(j)] = nc.loglik[static_cast<std::size_t>(std::max(0L, j - k))];
  auto p = make_profile(nc.grid, std::move(values), nc.estimable);
  p.risk_count = nc.risk_count;
  p.comparator_count = nc.comparator_count;
  p.expected = nc.expected;
  p.risk_time = nc.risk_time;
  p.control_time = nc.control_time;
  p.design = nc.design;
  p.look = nc.look;
  p.synthetic = true;
  p.shift = nc.shift + snapped_log_rr(rr, nc.grid);
  return p;
}

Interval profile_likelihood_interval(const LikelihoodProfile& p) {
  constexpr double kDrop = -1.9207294103470504;  // -qchisq(0.95, 1) / 2
  const std::size_t j = p.argmax();
  const auto& ll = p.loglik;
  const auto& g = p.grid;
  Interval out{g.lower(), g.upper()};
  for (std::size_t i = j; i-- > 0;) {
    if (ll[i] < kDrop) {
      const double w = (kDrop - ll[i]) / (ll[i + 1] - ll[i]);
      out.lo = g[i] + w * g.step();
      break;
    }
  }
  for (std::size_t i = j + 1; i < g.size(); ++i) {
    if (ll[i] < kDrop) {
      const double w = (ll[i - 1] - kDrop) / (ll[i - 1] - ll[i]);
      out.hi = g[i - 1] + w * g.step();
      break;
    }
  }
  return out;
}

std::string CellKey::id() const {
  return fmt::format("{}__{}__p{:g}__d{:g}", method_name(method), design, prior_variance, delta1);
}

std::optional<int> OutcomeTrajectory::first_signal() const { return first_signal(threshold); }

std::optional<int> OutcomeTrajectory::first_signal(double threshold_override) const {
  for (std::size_t t = 0; t < statistic.size(); ++t) {
    if (!std::isnan(statistic[t]) && statistic[t] > threshold_override + kSignalTolerance) {
      return static_cast<int>(t) + 1;
    }
  }
  return std::nullopt;
}

// ---------------------------------------------------------------------------

std::vector<MetricRow> compute_metrics(const CellKey& key, std::span<const OutcomeTrajectory> outcomes) {
  std::vector<MetricRow> rows;
  if (outcomes.empty()) return rows;
  int looks = 0;
  std::set<double> rrs;
  for (const auto& o : outcomes) {
    looks = std::max(looks, o.looks());
    rrs.insert(o.true_rr);
  }
  std::vector<std::optional<int>> first(outcomes.size());
  for (std::size_t i = 0; i < outcomes.size(); ++i) first[i] = outcomes[i].first_signal();

  auto signaled_fraction = [&](double rr, int t) {
    long n = 0, s = 0;
    for (std::size_t i = 0; i < outcomes.size(); ++i) {
      if (outcomes[i].true_rr != rr) continue;
      ++n;
      if (first[i] && *first[i] <= t) ++s;
    }
    return n == 0 ? std::numeric_limits<double>::quiet_NaN() : static_cast<double>(s) / static_cast<double>(n);
  };
  auto time_to = [&](double rr, double fraction) -> std::optional<int> {
    for (int t = 1; t <= looks; ++t) {
      if (signaled_fraction(rr, t) >= fraction) return t;
    }
    return std::nullopt;
  };

  for (double rr : rrs) {
    const bool positive = rr != 1.0;
    const std::optional<int> ttd25 = positive ? time_to(rr, 0.25) : std::nullopt;
    const std::optional<int> ttd50 = positive ? time_to(rr, 0.5) : std::nullopt;
    for (int t = 1; t <= looks; ++t) {
      MetricRow row;
      row.key = key;
      row.look = t;
      row.true_rr = rr;
      row.type1 = signaled_fraction(1.0, t);
      row.specificity = 1.0 - row.type1;
      if (positive) {
        const double power = signaled_fraction(rr, t);
        row.sensitivity = power;
        row.type2 = 1.0 - power;
        row.ttd25 = ttd25;
        row.ttd50 = ttd50;
      }
      long n = 0, est = 0, covered = 0;
      double sq = 0.0;
      for (const auto& o : outcomes) {
        if (o.true_rr != rr) continue;
        ++n;
        const auto k = static_cast<std::size_t>(t - 1);
        if (k >= o.estimate.size() || !o.estimable[k]) continue;
        ++est;
        const double err = o.estimate[k] - o.true_log_rr;
        sq += err * err;
        if (o.lo95[k] <= o.true_log_rr && o.true_log_rr <= o.hi95[k]) ++covered;
      }
      row.n_outcomes = n;
      if (est > 0) {
        row.mse = sq / static_cast<double>(est);
        row.coverage95 = static_cast<double>(covered) / static_cast<double>(est);
      }
      row.non_estimable_rate = n == 0 ? 0.0 : 1.0 - static_cast<double>(est) / static_cast<double>(n);
      row.low_evidence = t <= kLowEvidenceLooks;
      rows.push_back(std::move(row));
    }
  }
  return rows;
}

void MetricTable::add(std::vector<MetricRow> rows) {
  rows_.insert(rows_.end(), std::make_move_iterator(rows.begin()), std::make_move_iterator(rows.end()));
}

std::vector<MetricRow> MetricTable::select(const CellKey& key, double true_rr) const {
  std::vector<MetricRow> out;
  for (const auto& r : rows_) {
    if (r.key == key && r.true_rr == true_rr) out.push_back(r);
  }
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.look < b.look; });
  return out;
}

namespace {

std::string opt_real(const std::optional<double>& v) { return v ? format_real(*v) : "NA"; }

std::optional<double> read_opt_real(const CsvRow& row, std::size_t i) {
  if (row[i] == "NA") return std::nullopt;
  return row.as_double(i);
}

std::optional<int> read_opt_int(const CsvRow& row, std::size_t i) {
  if (row[i] == "NA" || row[i] == "not_reached") return std::nullopt;
  return static_cast<int>(row.as_long(i));
}

}  // namespace

void MetricTable::write_csv(std::ostream& out) const {
  out << "method,design,prior_variance,delta1,look,true_rr,n_outcomes,type1,type2,sensitivity,specificity,"
         "ttd25,ttd50,mse,coverage95,non_estimable_rate,low_evidence\n";
  for (const auto& r : rows_) {
    const bool positive = r.true_rr != 1.0;
    auto ttd = [&](const std::optional<int>& v) {
      return v ? std::to_string(*v) : std::string(positive ? "not_reached" : "NA");
    };
    out << method_name(r.key.method) << ',' << r.key.design << ',' << format_real(r.key.prior_variance) << ','
        << format_real(r.key.delta1) << ',' << r.look << ',' << format_real(r.true_rr) << ',' << r.n_outcomes << ','
        << format_real(r.type1) << ',' << opt_real(r.type2) << ',' << opt_real(r.sensitivity) << ','
        << format_real(r.specificity) << ',' << ttd(r.ttd25) << ',' << ttd(r.ttd50) << ',' << opt_real(r.mse) << ','
        << opt_real(r.coverage95) << ',' << format_real(r.non_estimable_rate) << ',' << (r.low_evidence ? 1 : 0)
        << '\n';
  }
}

MetricTable MetricTable::read_csv(std::istream& in) {
  CsvReader reader(in);
  reader.expect_header({"method", "design", "prior_variance", "delta1", "look", "true_rr", "n_outcomes", "type1",
                        "type2", "sensitivity", "specificity", "ttd25", "ttd50", "mse", "coverage95",
                        "non_estimable_rate", "low_evidence"});
  MetricTable table;
  while (auto row = reader.next()) {
    MetricRow r;
    r.key.method = parse_method((*row)[0]);
    r.key.design = (*row)[1];
    r.key.prior_variance = row->as_double(2);
    r.key.delta1 = row->as_double(3);
    r.look = static_cast<int>(row->as_long(4));
    r.true_rr = row->as_double(5);
    r.n_outcomes = row->as_long(6);
    r.type1 = row->as_double(7);
    r.type2 = read_opt_real(*row, 8);
    r.sensitivity = read_opt_real(*row, 9);
    r.specificity = row->as_double(10);
    r.ttd25 = read_opt_int(*row, 11);
    r.ttd50 = read_opt_int(*row, 12);
    r.mse = read_opt_real(*row, 13);
    r.coverage95 = read_opt_real(*row, 14);
    r.non_estimable_rate = row->as_double(15);
    r.low_evidence = row->as_long(16) != 0;
    table.rows_.push_back(std::move(r));
  }
  return table;
}

// ---------------------------------------------------------------------------

double final_type1(std::span<const OutcomeTrajectory> negative_controls, double threshold) {
  if (negative_controls.empty()) return 0.0;
  long s = 0;
  for (const auto& o : negative_controls) {
    if (o.first_signal(threshold)) ++s;
  }
  return static_cast<double>(s) / static_cast<double>(negative_controls.size());
}

ThresholdCalibration calibrate_threshold(std::span<const OutcomeTrajectory> negative_controls, double target_type1) {
  if (negative_controls.empty()) throw std::invalid_argument("calibrate_threshold needs negative-control trajectories");
  // Type 1 only depends on each control's running maximum.
  std::vector<double> maxima;
  for (const auto& o : negative_controls) {
    double m = -std::numeric_limits<double>::infinity();
    for (double s : o.statistic) {
      if (!std::isnan(s)) m = std::max(m, s);
    }
    maxima.push_back(m);
  }
  auto rate = [&](double delta) {
    long s = 0;
    for (double m : maxima) {
      if (m > delta + kSignalTolerance) ++s;
    }
    return static_cast<double>(s) / static_cast<double>(maxima.size());
  };
  for (int k = 501; k <= 999; ++k) {
    const double delta = k / 1000.0;
    const double r = rate(delta);
    if (r <= target_type1) return {delta, r, false};
  }
  return {0.999, rate(0.999), true};
}

// ---------------------------------------------------------------------------

bool ResultStore::add(CellResult result) {
  std::lock_guard lock(mutex_);
  return cells_.try_emplace(result.key.id(), std::move(result)).second;
}

std::vector<CellResult> ResultStore::cells() const {
  std::lock_guard lock(mutex_);
  std::vector<CellResult> out;
  for (const auto& [id, c] : cells_) out.push_back(c);
  return out;
}

std::optional<CellResult> ResultStore::find(const CellKey& key) const {
  std::lock_guard lock(mutex_);
  auto it = cells_.find(key.id());
  if (it == cells_.end()) return std::nullopt;
  return it->second;
}

std::size_t ResultStore::size() const {
  std::lock_guard lock(mutex_);
  return cells_.size();
}

// ---------------------------------------------------------------------------

void write_outcomes_csv(std::ostream& out, std::span<const OutcomeTrajectory> outcomes) {
  out << "outcome_id,replicate,true_rr,true_log_rr,threshold,look,statistic,estimate,lo95,hi95,estimable\n";
  for (const auto& o : outcomes) {
    for (std::size_t t = 0; t < o.statistic.size(); ++t) {
      out << o.outcome_id << ',' << o.replicate << ',' << format_real(o.true_rr) << ',' << format_real(o.true_log_rr)
          << ',' << format_real(o.threshold) << ',' << (t + 1) << ',' << format_real(o.statistic[t]) << ','
          << format_real(o.estimate[t]) << ',' << format_real(o.lo95[t]) << ',' << format_real(o.hi95[t]) << ','
          << (o.estimable[t] ? 1 : 0) << '\n';
    }
  }
}

std::vector<OutcomeTrajectory> read_outcomes_csv(std::istream& in) {
  CsvReader reader(in);
  reader.expect_header({"outcome_id", "replicate", "true_rr", "true_log_rr", "threshold", "look", "statistic",
                        "estimate", "lo95", "hi95", "estimable"});
  std::vector<OutcomeTrajectory> out;
  while (auto row = reader.next()) {
    const std::string& id = (*row)[0];
    const long rep = row->as_long(1);
    const double rr = row->as_double(2);
    if (out.empty() || out.back().outcome_id != id || out.back().replicate != rep || out.back().true_rr != rr) {
      OutcomeTrajectory o;
      o.outcome_id = id;
      o.replicate = rep;
      o.true_rr = rr;
      o.true_log_rr = row->as_double(3);
      o.threshold = row->as_double(4);
      out.push_back(std::move(o));
    }
    auto& o = out.back();
    if (row->as_long(5) != o.looks() + 1) {
      throw IoError(fmt::format("line {}: looks out of order for outcome {}", reader.line_number(), id));
    }
    o.statistic.push_back(row->as_double(6));
    o.estimate.push_back(row->as_double(7));
    o.lo95.push_back(row->as_double(8));
    o.hi95.push_back(row->as_double(9));
    o.estimable.push_back(row->as_long(10) != 0 ? 1 : 0);
  }
  return out;
}

}  // namespace seqsafety
