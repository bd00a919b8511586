/*
 * @file bayes.cpp
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

#include "seqsafety/bayes.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

#include <fmt/format.h>

#include "seqsafety/errors.hpp"

namespace seqsafety {

void PriorSpec::validate() const {
  if (!(variance > 0.0) || !std::isfinite(variance)) throw ConfigError("prior variance must be > 0");
  if (!std::isfinite(mean)) throw ConfigError("prior mean must be finite");
}

void validate_threshold(double delta1) {
  if (!(delta1 > 0.5 && delta1 < 1.0)) {
    throw ConfigError(fmt::format("decision threshold {} must lie in (0.5, 1)", delta1));
  }
}

namespace {

double log_normal_density(double x, double mean, double variance) {
  const double z = x - mean;
  return -0.5 * z * z / variance - 0.5 * std::log(2.0 * std::numbers::pi * variance);
}

// log of the trapezoid integral of exp(values) over indices [lo, hi].
double log_trapezoid(std::span<const double> values, std::size_t lo, std::size_t hi, double step) {
  if (lo == hi) return -std::numeric_limits<double>::infinity();
  std::vector<double> terms;
  terms.reserve(hi - lo + 1);
  for (std::size_t j = lo; j <= hi; ++j) {
    const double half = (j == lo || j == hi) ? std::log(0.5) : 0.0;
    terms.push_back(values[j] + half);
  }
  return log_sum_exp(terms) + std::log(step);
}

}  // namespace

double GridPosterior::quantile(double q) const {
  if (!(q >= 0.0 && q <= 1.0)) throw std::invalid_argument("quantile level outside [0, 1]");
  auto it = std::upper_bound(cdf_.begin(), cdf_.end(), q);
  if (it == cdf_.begin()) return grid.lower();
  if (it == cdf_.end()) return grid.upper();
  const auto j = static_cast<std::size_t>(it - cdf_.begin());  // cdf_[j-1] <= q < cdf_[j]
  const double span = cdf_[j] - cdf_[j - 1];
  const double w = span > 0.0 ? (q - cdf_[j - 1]) / span : 0.0;
  return grid[j - 1] + w * grid.step();
}

double GridPosterior::sample(SplitMix64& rng) const { return quantile(uniform_open01(rng)); }

GridPosterior posterior(const LikelihoodProfile& profile, const PriorSpec& prior) {
  prior.validate();
  const BetaGrid& grid = profile.grid;
  const std::size_t n = grid.size();
  if (profile.loglik.size() != n) throw std::invalid_argument("profile does not match its grid");

  GridPosterior post;
  post.grid = grid;
  std::vector<double> lp(n);
  for (std::size_t j = 0; j < n; ++j) lp[j] = profile.loglik[j] + log_normal_density(grid[j], prior.mean, prior.variance);
  const double log_z = log_trapezoid(lp, 0, n - 1, grid.step());
  if (!std::isfinite(log_z)) throw std::domain_error("posterior normalizer underflows");
  for (auto& v : lp) v -= log_z;
  post.log_density = std::move(lp);

  std::vector<double> dens(n);
  for (std::size_t j = 0; j < n; ++j) dens[j] = std::exp(post.log_density[j]);
  post.cdf_.assign(n, 0.0);
  const double h = grid.step();
  for (std::size_t j = 1; j < n; ++j) post.cdf_[j] = post.cdf_[j - 1] + 0.5 * h * (dens[j - 1] + dens[j]);
  // Remove the O(1e-16) normalization residue so the CDF ends at 1.
  const double total = post.cdf_.back();
  for (auto& c : post.cdf_) c /= total;

  const auto w = trapezoid_weights(grid);
  double m1 = 0.0, m2 = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    m1 += w[j] * dens[j] * grid[j];
    m2 += w[j] * dens[j] * grid[j] * grid[j];
  }
  post.mean = m1 / total;
  post.sd = std::sqrt(std::max(0.0, m2 / total - post.mean * post.mean));
  post.p_h1 = std::clamp(1.0 - post.cdf_[grid.zero_index()], 0.0, 1.0);
  post.median = post.quantile(0.5);
  post.lo95 = post.quantile(0.025);
  post.hi95 = post.quantile(0.975);
  return post;
}

double posterior_probability_h1(const GridPosterior& post) { return post.p_h1; }

double bayes_factor(const LikelihoodProfile& profile, const PriorSpec& prior) {
  prior.validate();
  const BetaGrid& grid = profile.grid;
  const std::size_t n = grid.size();
  const std::size_t j0 = grid.zero_index();
  std::vector<double> lp(n), lprior(n);
  for (std::size_t j = 0; j < n; ++j) {
    lprior[j] = log_normal_density(grid[j], prior.mean, prior.variance);
    lp[j] = profile.loglik[j] + lprior[j];
  }
  const double log_m0 = log_trapezoid(lp, 0, j0, grid.step());
  const double log_m1 = log_trapezoid(lp, j0, n - 1, grid.step());
  if (!std::isfinite(log_m0)) return std::numeric_limits<double>::infinity();
  // Divide out the prior odds so a non-centred prior still yields a BF.
  const double log_q0 = log_trapezoid(lprior, 0, j0, grid.step());
  const double log_q1 = log_trapezoid(lprior, j0, n - 1, grid.step());
  return std::exp((log_m1 - log_q1) - (log_m0 - log_q0));
}

SequentialDecision run_bayes(std::span<const double> p_h1_by_look, double delta1) {
  validate_threshold(delta1);
  return first_crossing(Method::bayes, p_h1_by_look, delta1);
}

SequentialDecision run_bayes(std::span<const GridPosterior> posteriors_by_look, double delta1) {
  std::vector<double> p;
  p.reserve(posteriors_by_look.size());
  for (const auto& post : posteriors_by_look) p.push_back(post.p_h1);
  return run_bayes(p, delta1);
}

}  // namespace seqsafety
