/*
 * @file bias_correction.hpp
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
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "seqsafety/bayes.hpp"
#include "seqsafety/design_likelihood.hpp"
#include "seqsafety/maxsprt.hpp"
#include "seqsafety/rng.hpp"

namespace seqsafety {

enum class BiasFamily { normal, t };

// b_i ~ family(b_bar, tau); b_bar ~ N(mu_b, sigma_b2); tau ~ half-normal with
// variance sigma_tau2.
struct BiasModelSpec {
  BiasFamily family = BiasFamily::normal;
  int t_dof = 4;
  double mu_b = 0.0;
  double sigma_b2 = 2.0;
  double sigma_tau2 = 0.5;
  // Replace each control's profile by a normal curve at its MLE; controls
  // without an interior MLE are dropped.
  bool normal_approximation = false;
  // Holds tau at this value instead of sampling it (known-scale fits).
  std::optional<double> fixed_tau;

  void validate() const;
};

struct McmcSpec {
  long total_iterations = 110000;
  long burn_in = 10000;
  long thin = 100;
  int chains = 4;
  std::uint64_t seed = 0;

  long retained_per_chain() const { return (total_iterations - burn_in) / thin; }
  void validate() const;
};

// Minimum retained draws per chain accepted by McmcSpec::validate.
inline constexpr long kMinRetainedPerChain = 500;
inline constexpr double kRhatLimit = 1.1;

struct NegativeControl {
  std::string id;  // fixes the control's position in the sampler state
  LikelihoodProfile profile;
};

struct ChainTrace {
  std::vector<double> b_bar;
  std::vector<double> tau;
  double acceptance_b_bar = 0.0;
  double acceptance_tau = 0.0;
};

class BiasPosterior {
 public:
  BiasPosterior() = default;
  BiasPosterior(BiasModelSpec model, std::vector<ChainTrace> chains);

  // Bias identically zero, `samples` draws.
  static BiasPosterior point_mass_zero(std::size_t samples);

  const BiasModelSpec& model() const { return model_; }
  const std::vector<ChainTrace>& chains() const { return chains_; }
  std::size_t size() const;
  // Draw s in chain-major order.
  double b_bar(std::size_t s) const;
  double tau(std::size_t s) const;
  // b | b_bar_s, tau_s from the bias family.
  double sample_bias(std::size_t s, SplitMix64& rng) const;

  double rhat_b_bar() const { return rhat_b_bar_; }
  double rhat_tau() const { return rhat_tau_; }
  double ess_b_bar() const { return ess_b_bar_; }
  double ess_tau() const { return ess_tau_; }
  bool flagged() const { return flagged_; }
  bool is_point_mass() const { return point_mass_; }
  std::size_t n_controls() const { return n_controls_; }

  // Posterior predictive density of b on a grid (mixture over draws).
  std::vector<double> predictive_density(const BetaGrid& grid) const;
  // Predictive P(b > 0), estimated from the draws' conditional CDFs.
  double predictive_prob_positive() const;

 private:
  friend BiasPosterior fit_bias_model(std::span<const NegativeControl>, const BiasModelSpec&, const McmcSpec&, int);
  BiasModelSpec model_;
  std::vector<ChainTrace> chains_;
  double rhat_b_bar_ = 1.0, rhat_tau_ = 1.0, ess_b_bar_ = 0.0, ess_tau_ = 0.0;
  bool flagged_ = false;
  bool point_mass_ = false;
  std::size_t n_controls_ = 0;
};

// Random-walk Metropolis-within-Gibbs over (b_bar, log tau, b_1..b_M).
// Controls are ordered by id internally, so input order does not matter;
// ids must be unique.
BiasPosterior fit_bias_model(std::span<const NegativeControl> controls, const BiasModelSpec& model,
                             const McmcSpec& mcmc, int jobs = 1);

// Split-R-hat (rank-free, classic) over equal-length chains.
double split_rhat(std::span<const std::vector<double>> chains);
// Effective sample size with Geyer's initial positive sequence.
double effective_sample_size(std::span<const std::vector<double>> chains);

struct DebiasedPosterior {
  std::vector<double> samples;
  double p_h1_hat = 0.0;
  double median = 0.0;
  double lo95 = 0.0;
  double hi95 = 0.0;
  bool bias_flagged = false;
};

// beta = beta_tilde - b, with beta_tilde drawn from the grid posterior of the
// biased effect and b from the bias predictive; one pair per bias draw.
// Throws if the bias posterior is flagged unless allow_flagged is set.
DebiasedPosterior debias(const LikelihoodProfile& outcome, const PriorSpec& prior, const BiasPosterior& bias,
                         std::uint64_t seed, bool allow_flagged = false);

// Empirical quantile, linear interpolation between order statistics.
double sample_quantile(std::span<const double> sorted, double q);

// Looks with fewer than two estimable controls, or whose largest control
// risk count is below two, are skipped.
bool enough_control_evidence(std::span<const NegativeControl> controls);

struct BbcLook {
  int look = 0;
  bool skipped = false;
  std::optional<DebiasedPosterior> debiased;
  // Summary of the bias fit used at this look.
  double bias_mean = 0.0;
  double bias_prob_positive = 0.0;
  bool bias_flagged = false;
};

struct BbcResult {
  SequentialDecision decision;
  std::vector<BbcLook> looks;
};

// Refits the bias model at each look from that look's control profiles,
// de-biases the outcome, and stops at the first p_h1_hat > delta1. With no
// controls at all it reduces to plain Bayes (bias fixed at zero).
BbcResult sequential_bbc(std::span<const std::vector<NegativeControl>> controls_by_look,
                         std::span<const LikelihoodProfile> outcome_by_look, const PriorSpec& prior,
                         const BiasModelSpec& model, const McmcSpec& mcmc, double delta1, int jobs = 1);

}  // namespace seqsafety
