/*
 * @file maxsprt.cpp
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

#include "seqsafety/maxsprt.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <random>
#include <stdexcept>

#include <fmt/format.h>
#include <json.hpp>

#include "seqsafety/csv.hpp"
#include "seqsafety/errors.hpp"
#include "seqsafety/parallel.hpp"
#include "seqsafety/rng.hpp"

namespace seqsafety {

void SurveillanceSchedule::validate() const {
  if (expected_increments.empty()) throw ConfigError("schedule needs at least one look");
  for (double e : expected_increments) {
    // Zero increments occur for looks with no new exposure; negative ones
    // are meaningless.
    if (!(e >= 0.0) || !std::isfinite(e)) throw ConfigError("schedule increments must be finite and >= 0");
  }
  if (!(alpha > 0.0 && alpha <= 0.5)) throw ConfigError("alpha must lie in (0, 0.5]");
}

std::string SurveillanceSchedule::hash() const {
  std::uint64_t h = derive_seed(0x5eedULL, "schedule");
  auto mix_double = [&](double x) {
    std::uint64_t bits;
    std::memcpy(&bits, &x, sizeof bits);
    h = mix64(h ^ bits);
  };
  for (double e : expected_increments) mix_double(e);
  mix_double(alpha);
  h = mix64(h ^ expected_increments.size());
  return fmt::format("{:016x}", h);
}

SurveillanceSchedule SurveillanceSchedule::uniform(int looks, double per_look, double alpha) {
  if (looks < 1) throw ConfigError("schedule needs at least one look");
  return {std::vector<double>(static_cast<std::size_t>(looks), per_look), alpha};
}

SurveillanceSchedule SurveillanceSchedule::from_cumulative(std::span<const double> cumulative, double alpha) {
  SurveillanceSchedule s;
  s.alpha = alpha;
  double prev = 0.0;
  for (double c : cumulative) {
    s.expected_increments.push_back(std::max(0.0, c - prev));
    prev = std::max(prev, c);
  }
  return s;
}

std::string_view method_name(Method m) {
  switch (m) {
    case Method::maxsprt: return "maxsprt";
    case Method::bayes: return "bayes";
    case Method::bbc: return "bbc";
  }
  return "unknown";
}

Method parse_method(std::string_view name) {
  for (Method m : {Method::maxsprt, Method::bayes, Method::bbc}) {
    if (method_name(m) == name) return m;
  }
  throw ConfigError(fmt::format("unknown method '{}'", name));
}

SequentialDecision first_crossing(Method method, std::span<const double> statistics, double threshold) {
  SequentialDecision d;
  d.method = method;
  for (std::size_t t = 0; t < statistics.size(); ++t) {
    LookRecord r;
    r.look = static_cast<int>(t) + 1;
    r.statistic = statistics[t];
    r.threshold = threshold;
    r.skipped = std::isnan(statistics[t]);
    r.signaled = !r.skipped && statistics[t] > threshold + kSignalTolerance;
    d.records.push_back(r);
    if (r.signaled) {
      d.stopping_time = r.look;
      break;
    }
  }
  return d;
}

double llr_statistic(const LikelihoodProfile& profile) {
  const std::size_t j0 = profile.grid.zero_index();
  const auto& ll = profile.loglik;
  const double sup0 = *std::max_element(ll.begin(), ll.begin() + static_cast<std::ptrdiff_t>(j0) + 1);
  // sup over beta > 0 of a continuous profile equals its value at 0 when the
  // peak is at or below 0, so the zero point counts on both sides.
  const double sup1 = *std::max_element(ll.begin() + static_cast<std::ptrdiff_t>(j0), ll.end());
  return sup1 - sup0;
}

double poisson_llr(long count, double expected) {
  if (count < 0 || !(expected > 0.0)) throw std::invalid_argument("poisson_llr needs c >= 0, mu > 0");
  const double c = static_cast<double>(count);
  if (count == 0) return -expected;
  const double w = c * std::log(c / expected) - c + expected;
  return c >= expected ? w : -w;
}

namespace {

double poisson_loglik(double c, double mu, double beta) { return c * beta - mu * std::exp(beta); }

// Supremum over grid indices [lo, hi] of a concave function peaking at peak.
double concave_grid_sup(double c, double mu, double peak, const BetaGrid& grid, std::size_t lo, std::size_t hi) {
  if (peak <= grid[lo]) return poisson_loglik(c, mu, grid[lo]);
  if (peak >= grid[hi]) return poisson_loglik(c, mu, grid[hi]);
  const std::size_t j = std::clamp(grid.floor_index(peak), lo, hi);
  double best = poisson_loglik(c, mu, grid[j]);
  if (j + 1 <= hi) best = std::max(best, poisson_loglik(c, mu, grid[j + 1]));
  return best;
}

}  // namespace

double poisson_grid_llr(long count, double expected, const BetaGrid& grid) {
  const double c = static_cast<double>(count);
  if (expected <= 0.0 && count == 0) return 0.0;
  const double inf = std::numeric_limits<double>::infinity();
  const double peak = count == 0 ? -inf : expected <= 0.0 ? inf : std::log(c / expected);
  const std::size_t j0 = grid.zero_index();
  const double sup0 = concave_grid_sup(c, expected, peak, grid, 0, j0);
  const double sup1 = concave_grid_sup(c, expected, peak, grid, j0, grid.size() - 1);
  return sup1 - sup0;
}

namespace {

// Per-replicate cumulative null counts; calls visit(look, W) for each look.
template <class Visit>
void null_run(const SurveillanceSchedule& schedule, std::uint64_t seed, const BetaGrid& grid, Visit&& visit) {
  SplitMix64 rng(seed);
  long c = 0;
  double mu = 0.0;
  for (std::size_t t = 0; t < schedule.expected_increments.size(); ++t) {
    const double inc = schedule.expected_increments[t];
    if (inc > 0.0) {
      std::poisson_distribution<long> pois(inc);
      c += pois(rng);
    }
    mu += inc;
    visit(t, mu > 0.0 ? poisson_grid_llr(c, mu, grid) : 0.0);
  }
}

}  // namespace

CriticalValue compute_cv(const SurveillanceSchedule& schedule, long mc_replicates, std::uint64_t seed, int jobs) {
  schedule.validate();
  if (mc_replicates < 10000) throw ConfigError("compute_cv needs at least 1e4 Monte Carlo replicates");
  double total = 0.0;
  for (double e : schedule.expected_increments) total += e;
  if (total <= 0.0) throw std::domain_error("alpha unreachable: schedule has no expected events");

  const BetaGrid grid;
  std::vector<double> maxima(static_cast<std::size_t>(mc_replicates));
  parallel_for(maxima.size(), jobs, [&](std::size_t r) {
    double m = -std::numeric_limits<double>::infinity();
    null_run(schedule, derive_seed(seed, r), grid, [&](std::size_t, double w) { m = std::max(m, w); });
    maxima[r] = m;
  });
  std::sort(maxima.begin(), maxima.end(), std::greater<>());
  const auto k = static_cast<std::size_t>(std::floor(schedule.alpha * static_cast<double>(mc_replicates)));
  const double cv = maxima[std::min(k, maxima.size() - 1)];
  if (!(cv > 0.0)) {
    throw std::domain_error(fmt::format("alpha unreachable: null LLR maxima too small (cv = {})", cv));
  }
  const auto exceed = static_cast<double>(
      std::count_if(maxima.begin(), maxima.end(), [&](double m) { return m > cv + kSignalTolerance; }));
  return {cv, schedule, mc_replicates, seed, exceed / static_cast<double>(mc_replicates)};
}

std::vector<double> null_signal_curve(const SurveillanceSchedule& accrual, double cv, long replicates,
                                      std::uint64_t seed, int jobs) {
  accrual.validate();
  const BetaGrid grid;
  const std::size_t looks = accrual.expected_increments.size();
  // first signaling look per replicate, or looks if none
  std::vector<std::size_t> first(static_cast<std::size_t>(replicates), looks);
  parallel_for(first.size(), jobs, [&](std::size_t r) {
    null_run(accrual, derive_seed(seed, r), grid, [&](std::size_t t, double w) {
      if (first[r] == looks && w > cv + kSignalTolerance) first[r] = t;
    });
  });
  std::vector<double> curve(looks, 0.0);
  for (std::size_t f : first) {
    if (f < looks) curve[f] += 1.0;
  }
  double acc = 0.0;
  for (double& c : curve) {
    acc += c;
    c = acc / static_cast<double>(replicates);
  }
  return curve;
}

SequentialDecision run_maxsprt(std::span<const LikelihoodProfile> profiles_by_look, double cv) {
  std::vector<double> stats;
  stats.reserve(profiles_by_look.size());
  for (const auto& p : profiles_by_look) stats.push_back(llr_statistic(p));
  return first_crossing(Method::maxsprt, stats, cv);
}

SequentialDecision run_maxsprt(std::span<const LikelihoodProfile> profiles_by_look, const CriticalValue& cv) {
  return run_maxsprt(profiles_by_look, cv.cv);
}

// ---------------------------------------------------------------------------

std::string CvCache::key(const SurveillanceSchedule& schedule, long mc_replicates, std::uint64_t seed) {
  return fmt::format("cv_poisson_{}_r{}_s{:016x}", schedule.hash(), mc_replicates, seed);
}

std::optional<CriticalValue> CvCache::load(const SurveillanceSchedule& schedule, long mc_replicates,
                                           std::uint64_t seed) const {
  const auto path = dir_ / (key(schedule, mc_replicates, seed) + ".json");
  if (!std::filesystem::exists(path)) return std::nullopt;
  try {
    const auto j = nlohmann::json::parse(read_file(path));
    CriticalValue cv;
    cv.cv = j.at("cv").get<double>();
    cv.schedule.expected_increments = j.at("expected_increments").get<std::vector<double>>();
    cv.schedule.alpha = j.at("alpha").get<double>();
    cv.mc_replicates = j.at("mc_replicates").get<long>();
    cv.seed = std::stoull(j.at("seed").get<std::string>());
    cv.empirical_alpha_at_cv = j.at("empirical_alpha_at_cv").get<double>();
    if (cv.schedule.expected_increments != schedule.expected_increments || cv.schedule.alpha != schedule.alpha) {
      return std::nullopt;
    }
    return cv;
  } catch (const nlohmann::json::exception& e) {
    throw IoError(fmt::format("corrupt cv cache entry {}: {}", path.string(), e.what()));
  }
}

void CvCache::store(const CriticalValue& cv) const {
  nlohmann::json j;
  j["model"] = "poisson";
  j["cv"] = cv.cv;
  j["expected_increments"] = cv.schedule.expected_increments;
  j["alpha"] = cv.schedule.alpha;
  j["mc_replicates"] = cv.mc_replicates;
  j["seed"] = std::to_string(cv.seed);
  j["empirical_alpha_at_cv"] = cv.empirical_alpha_at_cv;
  write_file_atomic(dir_ / (key(cv.schedule, cv.mc_replicates, cv.seed) + ".json"), j.dump(2) + "\n");
}

CriticalValue CvCache::get_or_compute(const SurveillanceSchedule& schedule, long mc_replicates, std::uint64_t seed,
                                      int jobs) const {
  if (auto hit = load(schedule, mc_replicates, seed)) return *hit;
  auto cv = compute_cv(schedule, mc_replicates, seed, jobs);
  store(cv);
  return cv;
}

}  // namespace seqsafety
