/*
 * @file design_likelihood.cpp
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

#include "seqsafety/design_likelihood.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <istream>
#include <limits>
#include <map>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include <Eigen/Dense>
#include <fmt/format.h>

#include "seqsafety/csv.hpp"
#include "seqsafety/errors.hpp"

namespace seqsafety {

std::size_t LikelihoodProfile::argmax() const {
  return static_cast<std::size_t>(std::max_element(loglik.begin(), loglik.end()) - loglik.begin());
}

LikelihoodProfile make_profile(const BetaGrid& grid, std::vector<double> values, bool has_information) {
  if (values.size() != grid.size()) throw std::invalid_argument("profile size does not match grid");
  const auto it = std::max_element(values.begin(), values.end());
  const double top = *it;
  if (!std::isfinite(top)) throw std::domain_error("profile has no finite maximum");
  for (double& v : values) v -= top;
  values[static_cast<std::size_t>(it - values.begin())] = 0.0;

  LikelihoodProfile p;
  p.grid = grid;
  const auto j = static_cast<std::size_t>(it - values.begin());
  p.loglik = std::move(values);
  p.mle = grid[j];
  p.boundary = j <= 1 || j + 2 >= grid.size();
  p.estimable = has_information && !p.boundary;
  return p;
}

double profile_value(const LikelihoodProfile& profile, double beta) {
  const auto& g = profile.grid;
  if (beta <= g.lower()) return profile.loglik.front();
  if (beta >= g.upper()) return profile.loglik.back();
  const std::size_t j = g.floor_index(beta);
  if (j + 1 >= g.size()) return profile.loglik.back();
  const double w = (beta - g[j]) / g.step();
  return (1.0 - w) * profile.loglik[j] + w * profile.loglik[j + 1];
}

LikelihoodProfile poisson_profile(long count, double expected, const BetaGrid& grid) {
  if (count < 0 || !(expected >= 0.0)) throw std::invalid_argument("poisson_profile needs c >= 0, mu >= 0");
  std::vector<double> values(grid.size());
  for (std::size_t j = 0; j < grid.size(); ++j) {
    values[j] = static_cast<double>(count) * grid[j] - expected * std::exp(grid[j]);
  }
  auto p = make_profile(grid, std::move(values), count > 0 && expected > 0.0);
  p.risk_count = count;
  p.expected = expected;
  return p;
}

LikelihoodProfile sccs_two_interval_profile(std::span<const SccsInterval> cases, const BetaGrid& grid) {
  std::vector<double> values(grid.size(), 0.0);
  bool informative = false;
  long risk = 0, total = 0;
  double expected = 0.0;
  for (const auto& c : cases) {
    if (c.total_events == 0) continue;
    if (c.risk_events > c.total_events) throw std::invalid_argument("risk events exceed total");
    if (c.risk_time <= 0.0 && c.risk_events > 0) throw std::invalid_argument("risk events without risk time");
    if (c.control_time <= 0.0 && c.risk_events < c.total_events) {
      throw std::invalid_argument("control events without control time");
    }
    // A case with only one kind of time carries no information on beta.
    if (c.risk_time <= 0.0 || c.control_time <= 0.0) continue;
    informative = true;
    risk += c.risk_events;
    total += c.total_events;
    expected += static_cast<double>(c.total_events) * c.risk_time / (c.risk_time + c.control_time);
    const double cr = static_cast<double>(c.risk_events);
    const double n = static_cast<double>(c.total_events);
    for (std::size_t j = 0; j < grid.size(); ++j) {
      values[j] += cr * grid[j] - n * std::log(c.risk_time * std::exp(grid[j]) + c.control_time);
    }
  }
  auto p = make_profile(grid, std::move(values), informative);
  p.risk_count = risk;
  p.comparator_count = total - risk;
  p.expected = expected;
  return p;
}

// ---------------------------------------------------------------------------

std::string_view variant_name(DesignVariant v) {
  switch (v) {
    case DesignVariant::hc_unadjusted: return "hc_unadjusted";
    case DesignVariant::hc_stratified: return "hc_stratified";
    case DesignVariant::hc_seasonal: return "hc_seasonal";
    case DesignVariant::sccs_exclude_pre: return "sccs_exclude_pre";
    case DesignVariant::sccs_month_adjusted: return "sccs_month_adjusted";
    case DesignVariant::sccs_post_only: return "sccs_post_only";
    case DesignVariant::scri_pre: return "scri_pre";
    case DesignVariant::scri_post: return "scri_post";
  }
  return "unknown";
}

DesignFamily DesignSpec::family() const {
  return variant == DesignVariant::hc_unadjusted || variant == DesignVariant::hc_stratified ||
                 variant == DesignVariant::hc_seasonal
             ? DesignFamily::historical_comparator
             : DesignFamily::sccs;
}

std::string DesignSpec::name() const {
  return fmt::format("{}_w{}", variant_name(variant), risk_window_weeks);
}

void DesignSpec::validate() const {
  if (risk_window_weeks != 4 && risk_window_weeks != 6) {
    throw ConfigError(fmt::format("risk window must be 4 or 6 weeks, got {}", risk_window_weeks));
  }
}

DesignSpec DesignSpec::parse(std::string_view name) {
  static constexpr std::array variants{
      DesignVariant::hc_unadjusted,    DesignVariant::hc_stratified, DesignVariant::hc_seasonal,
      DesignVariant::sccs_exclude_pre,
      DesignVariant::sccs_month_adjusted, DesignVariant::sccs_post_only, DesignVariant::scri_pre,
      DesignVariant::scri_post};
  const auto cut = name.rfind("_w");
  if (cut != std::string_view::npos) {
    const auto base = name.substr(0, cut);
    const auto window = name.substr(cut + 2);
    for (auto v : variants) {
      if (variant_name(v) != base) continue;
      DesignSpec spec;
      spec.variant = v;
      if (window == "4") spec.risk_window_weeks = 4;
      else if (window == "6") spec.risk_window_weeks = 6;
      else break;
      return spec;
    }
  }
  throw ConfigError(fmt::format("unknown design '{}' (expected e.g. hc_unadjusted_w6)", name));
}

// ---------------------------------------------------------------------------

LikelihoodProfile historical_comparator_profile(const LookSnapshot& snapshot, const DesignSpec& spec,
                                                const BetaGrid& grid) {
  spec.validate();
  if (spec.family() != DesignFamily::historical_comparator) {
    throw std::invalid_argument("historical_comparator_profile needs a comparator design");
  }
  const auto& table = snapshot.table();
  const auto& layout = snapshot.layout();
  const int cutoff = snapshot.cutoff_week();
  const int window = spec.risk_window_weeks;

  const int hist_len = layout.historical.length();
  // Historical events by stratum and week of year.
  std::vector<double> hist_week(static_cast<std::size_t>(CohortTable::kStrata * hist_len), 0.0);
  std::array<double, CohortTable::kStrata> hist_events{}, hist_time{}, risk_time{}, n_subjects{};
  std::array<long, CohortTable::kStrata> risk_events{};
  for (int s = 0; s < CohortTable::kStrata; ++s) {
    for (int g = 0; g < table.groups(); ++g) {
      const long n = table.subjects(s, g);
      n_subjects[s] += static_cast<double>(n);
      hist_time[s] += static_cast<double>(n) * hist_len;
      for (int k = layout.historical.first; k <= layout.historical.last; ++k) {
        const auto e = static_cast<double>(table.events(s, g, k));
        hist_events[s] += e;
        hist_week[static_cast<std::size_t>(s * hist_len + (k - layout.historical.first))] += e;
      }
      if (g == 0) continue;
      const int v = table.vaccination_week_of(g);
      if (v > cutoff) continue;
      const int last = std::min(v + window, cutoff);
      risk_time[s] += static_cast<double>(n) * std::max(0, last - v);
      for (int k = v + 1; k <= last; ++k) risk_events[s] += table.events(s, g, k);
    }
  }

  double total_hist_time = 0.0, total_hist_events = 0.0, total_risk_time = 0.0;
  long c = 0;
  for (int s = 0; s < CohortTable::kStrata; ++s) {
    total_hist_time += hist_time[s];
    total_hist_events += hist_events[s];
    total_risk_time += risk_time[s];
    c += risk_events[s];
  }
  if (total_hist_time <= 0.0) throw std::domain_error("historical person-time is zero");

  double mu = 0.0;
  if (spec.variant == DesignVariant::hc_unadjusted) {
    mu = total_hist_events / total_hist_time * total_risk_time;
  } else if (spec.variant == DesignVariant::hc_stratified) {
    for (int s = 0; s < CohortTable::kStrata; ++s) {
      if (risk_time[s] == 0.0) continue;
      if (hist_time[s] <= 0.0) throw std::domain_error("historical person-time is zero in a stratum");
      mu += hist_events[s] / hist_time[s] * risk_time[s];
    }
  } else {
    // Each at-risk subject-week is referred to the same week one year back.
    for (int s = 0; s < CohortTable::kStrata; ++s) {
      if (risk_time[s] == 0.0) continue;
      if (n_subjects[s] <= 0.0) throw std::domain_error("historical person-time is zero in a stratum");
      for (int g = 1; g < table.groups(); ++g) {
        const int v = table.vaccination_week_of(g);
        const long n = table.subjects(s, g);
        if (v > cutoff || n == 0) continue;
        const int last = std::min(v + window, cutoff);
        for (int k = v + 1; k <= last; ++k) {
          const int woy = (k - layout.surveillance.first) % hist_len;
          mu += static_cast<double>(n) * hist_week[static_cast<std::size_t>(s * hist_len + woy)] / n_subjects[s];
        }
      }
    }
  }
  // Per-stratum terms c_s beta - mu_s e^beta sum to c beta - mu e^beta.
  auto p = poisson_profile(c, mu, grid);
  p.comparator_count = static_cast<long>(total_hist_events);
  p.risk_time = total_risk_time;
  p.control_time = total_hist_time;
  p.design = spec.name();
  p.look = snapshot.look_index();
  return p;
}

namespace {

enum class WeekRole { excluded, risk, control };

WeekRole classify(const DesignSpec& spec, int v, int week, int cutoff, const CohortLayout& layout) {
  if (week > cutoff || !layout.surveillance.contains(week)) return WeekRole::excluded;
  if (week > v && week <= v + spec.risk_window_weeks) return WeekRole::risk;
  switch (spec.variant) {
    case DesignVariant::sccs_exclude_pre:
    case DesignVariant::sccs_month_adjusted:
      if (week >= v - kPreVaccinationExclusionWeeks && week < v) return WeekRole::excluded;
      return WeekRole::control;
    case DesignVariant::sccs_post_only:
      return week >= v ? WeekRole::control : WeekRole::excluded;
    case DesignVariant::scri_pre:
      return week >= v - 6 && week <= v - 3 ? WeekRole::control : WeekRole::excluded;
    case DesignVariant::scri_post:
      return week >= v + 7 && week <= v + 10 ? WeekRole::control : WeekRole::excluded;
    default:
      return WeekRole::excluded;
  }
}

// Per vaccination group, per calendar month: weeks and events by role.
struct MonthCell {
  double risk_weeks = 0.0;
  double control_weeks = 0.0;
  long risk_events = 0;
  long control_events = 0;
};

struct GroupCells {
  std::vector<MonthCell> months;
  long subjects = 0;
};

class MonthEffectsModel {
 public:
  MonthEffectsModel(std::vector<GroupCells> groups, int n_months) : groups_(std::move(groups)) {
    std::vector<long> month_events(static_cast<std::size_t>(n_months), 0);
    for (const auto& g : groups_) {
      for (int m = 0; m < n_months; ++m) {
        month_events[m] += g.months[m].risk_events + g.months[m].control_events;
        total_risk_ += g.months[m].risk_events;
      }
    }
    // Months without events have an MLE offset of -infinity; dropping their
    // weeks is the exact limit.
    for (int m = 0; m < n_months; ++m) {
      if (month_events[m] > 0) kept_.push_back(m);
    }
    for (std::size_t i = 1; i < kept_.size(); ++i) {
      long e = 0;
      for (const auto& g : groups_) {
        e += g.months[kept_[i]].risk_events + g.months[kept_[i]].control_events;
      }
      free_events_.push_back(static_cast<double>(e));
    }
  }

  std::size_t free_parameters() const { return kept_.empty() ? 0 : kept_.size() - 1; }

  // Log-likelihood at (beta, alpha); alpha covers kept months after the
  // reference. Fills gradient and Hessian in alpha when requested.
  double evaluate(double beta, const Eigen::VectorXd& alpha, Eigen::VectorXd* grad,
                  Eigen::MatrixXd* hess) const {
    const auto d = static_cast<Eigen::Index>(free_parameters());
    double f = static_cast<double>(total_risk_) * beta;
    for (Eigen::Index i = 0; i < d; ++i) f += free_events_[i] * alpha[i];
    if (grad) *grad = Eigen::Map<const Eigen::VectorXd>(free_events_.data(), d);
    if (hess) hess->setZero(d, d);
    Eigen::VectorXd w(static_cast<Eigen::Index>(kept_.size()));
    const double eb = std::exp(beta);
    for (const auto& g : groups_) {
      double n = 0.0;
      for (int m : kept_) n += static_cast<double>(g.months[m].risk_events + g.months[m].control_events);
      if (n == 0.0) continue;
      double total = 0.0;
      for (std::size_t i = 0; i < kept_.size(); ++i) {
        const auto& cell = g.months[kept_[i]];
        const double a = i == 0 ? 0.0 : alpha[static_cast<Eigen::Index>(i - 1)];
        w[static_cast<Eigen::Index>(i)] = (cell.risk_weeks * eb + cell.control_weeks) * std::exp(a);
        total += w[static_cast<Eigen::Index>(i)];
      }
      f -= n * std::log(total);
      if (!grad && !hess) continue;
      const Eigen::VectorXd prob = w.tail(d) / total;
      if (grad) *grad -= n * prob;
      if (hess) {
        *hess -= n * Eigen::MatrixXd(prob.asDiagonal());
        *hess += n * prob * prob.transpose();
      }
    }
    return f;
  }

  // Maximizes over alpha by damped Newton, starting from `alpha`.
  double profile(double beta, Eigen::VectorXd& alpha) const {
    const auto d = static_cast<Eigen::Index>(free_parameters());
    if (d == 0) return evaluate(beta, alpha, nullptr, nullptr);
    Eigen::VectorXd grad;
    Eigen::MatrixXd hess;
    double f = evaluate(beta, alpha, &grad, &hess);
    for (int it = 0; it < kMonthEffectMaxIterations; ++it) {
      Eigen::VectorXd step = (-hess).ldlt().solve(grad);
      if (!step.allFinite()) break;
      double scale = 1.0;
      Eigen::VectorXd next;
      double f_next = f;
      for (int half = 0; half < 30; ++half) {
        next = (alpha + scale * step).cwiseMax(-kMonthEffectClamp).cwiseMin(kMonthEffectClamp);
        f_next = evaluate(beta, next, nullptr, nullptr);
        if (f_next >= f - 1e-12) break;
        scale *= 0.5;
      }
      if (f_next < f - 1e-12) break;
      const double moved = (next - alpha).cwiseAbs().maxCoeff();
      alpha = next;
      f = evaluate(beta, alpha, &grad, &hess);
      if (moved < kMonthEffectTolerance) break;
    }
    return f;
  }

  // Expected risk-window count at beta = 0 given each group's total.
  double null_expected(const Eigen::VectorXd& alpha) const {
    double e = 0.0;
    for (const auto& g : groups_) {
      double n = 0.0, risk = 0.0, total = 0.0;
      for (std::size_t i = 0; i < kept_.size(); ++i) {
        const auto& cell = g.months[kept_[i]];
        const double scale = i == 0 ? 1.0 : std::exp(alpha[static_cast<Eigen::Index>(i - 1)]);
        n += static_cast<double>(cell.risk_events + cell.control_events);
        risk += cell.risk_weeks * scale;
        total += (cell.risk_weeks + cell.control_weeks) * scale;
      }
      if (n > 0.0 && total > 0.0) e += n * risk / total;
    }
    return e;
  }

 private:
  std::vector<GroupCells> groups_;
  std::vector<int> kept_;
  std::vector<double> free_events_;
  long total_risk_ = 0;
};

}  // namespace

LikelihoodProfile sccs_profile(const LookSnapshot& snapshot, const DesignSpec& spec, const BetaGrid& grid) {
  spec.validate();
  if (spec.family() != DesignFamily::sccs) throw std::invalid_argument("sccs_profile needs an SCCS design");
  const auto& table = snapshot.table();
  const auto& layout = snapshot.layout();
  const int cutoff = snapshot.cutoff_week();
  constexpr int kMonths = 12;

  // Subjects in one vaccination group share their exposure pattern, so the
  // conditional likelihood only needs group-level event totals.
  std::vector<GroupCells> groups;
  double risk_time = 0.0, control_time = 0.0;
  for (int g = 1; g < table.groups(); ++g) {
    const int v = table.vaccination_week_of(g);
    if (v > cutoff) continue;  // not yet known to be vaccinated
    GroupCells cells;
    cells.months.assign(kMonths, {});
    for (int s = 0; s < CohortTable::kStrata; ++s) cells.subjects += table.subjects(s, g);
    if (cells.subjects == 0) continue;
    for (int k = layout.surveillance.first; k <= cutoff; ++k) {
      const auto role = classify(spec, v, k, cutoff, layout);
      if (role == WeekRole::excluded) continue;
      long e = 0;
      for (int s = 0; s < CohortTable::kStrata; ++s) e += table.events(s, g, k);
      auto& cell = cells.months[static_cast<std::size_t>(surveillance_month(layout, k, kMonths) - 1)];
      if (role == WeekRole::risk) {
        cell.risk_weeks += 1.0;
        cell.risk_events += e;
        risk_time += static_cast<double>(cells.subjects);
      } else {
        cell.control_weeks += 1.0;
        cell.control_events += e;
        control_time += static_cast<double>(cells.subjects);
      }
    }
    groups.push_back(std::move(cells));
  }

  LikelihoodProfile p;
  if (spec.variant != DesignVariant::sccs_month_adjusted) {
    std::vector<SccsInterval> cases;
    for (const auto& g : groups) {
      SccsInterval c;
      for (const auto& cell : g.months) {
        c.risk_time += cell.risk_weeks;
        c.control_time += cell.control_weeks;
        c.risk_events += cell.risk_events;
        c.total_events += cell.risk_events + cell.control_events;
      }
      cases.push_back(c);
    }
    p = sccs_two_interval_profile(cases, grid);
  } else {
    long risk = 0, total = 0;
    bool informative = false;
    for (const auto& g : groups) {
      double tr = 0.0, tc = 0.0;
      long n = 0;
      for (const auto& cell : g.months) {
        tr += cell.risk_weeks;
        tc += cell.control_weeks;
        risk += cell.risk_events;
        n += cell.risk_events + cell.control_events;
      }
      total += n;
      if (n > 0 && tr > 0.0 && tc > 0.0) informative = true;
    }
    MonthEffectsModel model(std::move(groups), kMonths);
    const auto d = static_cast<Eigen::Index>(model.free_parameters());
    std::vector<double> values(grid.size());
    const std::size_t j0 = grid.zero_index();
    Eigen::VectorXd alpha0 = Eigen::VectorXd::Zero(d);
    values[j0] = model.profile(grid[j0], alpha0);
    Eigen::VectorXd alpha = alpha0;
    for (std::size_t j = j0 + 1; j < grid.size(); ++j) values[j] = model.profile(grid[j], alpha);
    alpha = alpha0;
    for (std::size_t j = j0; j-- > 0;) values[j] = model.profile(grid[j], alpha);
    p = make_profile(grid, std::move(values), informative);
    p.risk_count = risk;
    p.comparator_count = total - risk;
    p.expected = model.null_expected(alpha0);
  }
  p.risk_time = risk_time;
  p.control_time = control_time;
  p.design = spec.name();
  p.look = snapshot.look_index();
  return p;
}

LikelihoodProfile design_profile(const LookSnapshot& snapshot, const DesignSpec& spec, const BetaGrid& grid) {
  return spec.family() == DesignFamily::historical_comparator
             ? historical_comparator_profile(snapshot, spec, grid)
             : sccs_profile(snapshot, spec, grid);
}

// ---------------------------------------------------------------------------

void write_profile_csv(std::ostream& out, const LikelihoodProfile& p) {
  out << "# design: " << p.design << '\n'
      << "# look: " << p.look << '\n'
      << "# estimable: " << (p.estimable ? 1 : 0) << '\n'
      << "# boundary: " << (p.boundary ? 1 : 0) << '\n'
      << "# risk_count: " << p.risk_count << '\n'
      << "# comparator_count: " << p.comparator_count << '\n'
      << "# expected: " << format_real(p.expected) << '\n'
      << "# risk_time: " << format_real(p.risk_time) << '\n'
      << "# control_time: " << format_real(p.control_time) << '\n'
      << "# synthetic: " << (p.synthetic ? 1 : 0) << '\n'
      << "# shift: " << format_real(p.shift) << '\n'
      << "# grid: " << format_real(p.grid.lower()) << ' ' << format_real(p.grid.upper()) << ' '
      << p.grid.size() << '\n'
      << "beta,loglik\n";
  for (std::size_t j = 0; j < p.grid.size(); ++j) {
    out << format_real(p.grid[j]) << ',' << format_real(p.loglik[j]) << '\n';
  }
}

LikelihoodProfile read_profile_csv(std::istream& in) {
  std::map<std::string, std::string> meta;
  std::string line;
  while (in.peek() == '#' && std::getline(in, line)) {
    const auto colon = line.find(':');
    if (line.size() > 2 && colon != std::string::npos) {
      std::string value = line.substr(colon + 1);
      if (!value.empty() && value.front() == ' ') value.erase(0, 1);
      meta[line.substr(2, colon - 2)] = value;
    }
  }
  auto need = [&](const char* key) -> const std::string& {
    auto it = meta.find(key);
    if (it == meta.end()) throw IoError(fmt::format("profile CSV lacks '{}' metadata", key));
    return it->second;
  };
  double lo = 0, hi = 0;
  std::size_t n = 0;
  {
    std::istringstream gs(need("grid"));
    if (!(gs >> lo >> hi >> n)) throw IoError("bad grid metadata in profile CSV");
  }
  LikelihoodProfile p;
  p.grid = BetaGrid(lo, hi, n);
  CsvReader reader(in);
  reader.expect_header({"beta", "loglik"});
  while (auto row = reader.next()) p.loglik.push_back(row->as_double(1));
  if (p.loglik.size() != n) throw IoError("profile CSV row count does not match its grid");
  p.design = need("design");
  p.look = std::stoi(need("look"));
  p.estimable = need("estimable") == "1";
  p.boundary = need("boundary") == "1";
  p.risk_count = std::stol(need("risk_count"));
  p.comparator_count = std::stol(need("comparator_count"));
  p.expected = std::stod(need("expected"));
  p.risk_time = std::stod(need("risk_time"));
  p.control_time = std::stod(need("control_time"));
  p.synthetic = need("synthetic") == "1";
  p.shift = std::stod(need("shift"));
  p.mle = p.grid[p.argmax()];
  return p;
}

}  // namespace seqsafety
