/*
 * @file bias_correction.cpp
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

#include "seqsafety/bias_correction.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <random>
#include <set>
#include <stdexcept>

#include <boost/math/distributions/students_t.hpp>
#include <fmt/format.h>

#include "seqsafety/errors.hpp"
#include "seqsafety/parallel.hpp"

namespace seqsafety {

void BiasModelSpec::validate() const {
  if (family == BiasFamily::t && t_dof < 3) throw ConfigError("t bias model needs at least 3 degrees of freedom");
  if (!(sigma_b2 > 0.0) || !(sigma_tau2 > 0.0)) throw ConfigError("bias hyper-variances must be > 0");
  if (fixed_tau && !(*fixed_tau > 0.0 && std::isfinite(*fixed_tau))) throw ConfigError("fixed tau must be > 0");
}

void McmcSpec::validate() const {
  if (chains < 1) throw ConfigError("mcmc chains must be >= 1");
  if (thin < 1 || burn_in < 0 || total_iterations <= burn_in) {
    throw ConfigError("mcmc needs thin >= 1 and total_iterations > burn_in >= 0");
  }
  if (retained_per_chain() < kMinRetainedPerChain) {
    throw ConfigError(fmt::format("mcmc keeps {} draws per chain; at least {} required", retained_per_chain(),
                                  kMinRetainedPerChain));
  }
}

namespace {

constexpr double kLogSqrt2Pi = 0.91893853320467274178;

// log density of b under the bias family without the -log tau term.
double log_bias_kernel(const BiasModelSpec& m, double b, double b_bar, double tau) {
  const double z = (b - b_bar) / tau;
  if (m.family == BiasFamily::normal) return -0.5 * z * z;
  const double k = m.t_dof;
  return -0.5 * (k + 1.0) * std::log1p(z * z / k);
}

// Likelihood contribution of one control as a function of its bias b_i.
struct ControlTerm {
  const LikelihoodProfile* profile = nullptr;
  double mle = 0.0;
  double se = 1.0;
  bool normal = false;

  double operator()(double b) const {
    if (normal) {
      const double z = (b - mle) / se;
      return -0.5 * z * z;
    }
    return profile_value(*profile, b);
  }
};

// Standard error from the curvature of the profile around its argmax.
double curvature_se(const LikelihoodProfile& p) {
  const std::size_t j = p.argmax();
  const std::size_t k = std::min<std::size_t>({5, j, p.grid.size() - 1 - j});
  if (k == 0) return 1.0;
  const double h = p.grid.step() * static_cast<double>(k);
  const double d2 = (p.loglik[j + k] - 2.0 * p.loglik[j] + p.loglik[j - k]) / (h * h);
  return d2 < 0.0 ? 1.0 / std::sqrt(-d2) : 1.0;
}

struct ChainState {
  double b_bar = 0.0;
  double eta = 0.0;  // log tau
  std::vector<double> b;
};

// Sum over controls of log p(b_i | b_bar, tau), up to a constant.
double log_bias_sum(const BiasModelSpec& m, const std::vector<double>& b, double b_bar, double tau) {
  const double n = static_cast<double>(b.size());
  if (m.family == BiasFamily::normal) {
    double ss = 0.0;
    for (double x : b) ss += (x - b_bar) * (x - b_bar);
    return -n * std::log(tau) - 0.5 * ss / (tau * tau);
  }
  const double k = m.t_dof;
  double acc = 0.0;
  for (double x : b) {
    const double z = (x - b_bar) / tau;
    acc += std::log1p(z * z / k);
  }
  return -n * std::log(tau) - 0.5 * (k + 1.0) * acc;
}

class Sampler {
 public:
  Sampler(const BiasModelSpec& model, const McmcSpec& mcmc, std::vector<ControlTerm> terms)
      : model_(model), mcmc_(mcmc), terms_(std::move(terms)) {}

  // Each sweep updates every b_i, then b_bar and log tau one at a time, then
  // makes two block moves: a common shift of b_bar and all b_i, and a
  // rescaling of tau with the deviations b_i - b_bar. The block moves keep
  // the chain mobile when tau is small and the b_i cling to b_bar.
  ChainTrace run(std::uint64_t seed) const {
    SplitMix64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    const std::size_t m = terms_.size();

    ChainState s;
    s.b_bar = model_.mu_b + std::sqrt(model_.sigma_b2) * normal(rng);
    s.eta = std::log(std::max(0.05, std::abs(std::sqrt(model_.sigma_tau2) * normal(rng))));
    if (model_.fixed_tau) s.eta = std::log(*model_.fixed_tau);
    const bool sample_tau = !model_.fixed_tau;
    s.b.resize(m);
    std::vector<double> step_b(m), lik(m);
    for (std::size_t i = 0; i < m; ++i) {
      const double start = terms_[i].normal ? terms_[i].mle : std::clamp(terms_[i].profile->mle, -2.0, 2.0);
      s.b[i] = start + 0.1 * normal(rng);
      lik[i] = terms_[i](s.b[i]);
      step_b[i] = std::clamp(terms_[i].normal ? terms_[i].se : curvature_se(*terms_[i].profile), 0.02, 1.0);
    }
    double step_bar = 0.1, step_eta = 0.3, step_shift = 0.05, step_scale = 0.1;

    constexpr long kBatch = 50;
    std::vector<long> acc_b(m, 0);
    long acc_bar = 0, acc_eta = 0, acc_shift = 0, acc_scale = 0, post_bar = 0, post_eta = 0;

    ChainTrace trace;
    trace.b_bar.reserve(static_cast<std::size_t>(mcmc_.retained_per_chain()));
    trace.tau.reserve(static_cast<std::size_t>(mcmc_.retained_per_chain()));

    auto accept = [&](double log_ratio) { return std::log(uniform_open01(rng)) < log_ratio; };
    auto hyper_b = [&](double x) { return -0.5 * (x - model_.mu_b) * (x - model_.mu_b) / model_.sigma_b2; };
    auto hyper_tau = [&](double tau) { return -0.5 * tau * tau / model_.sigma_tau2; };
    std::vector<double> moved(m), moved_lik(m);

    for (long it = 0; it < mcmc_.total_iterations; ++it) {
      const bool kept = it >= mcmc_.burn_in;
      double tau = std::exp(s.eta);
      for (std::size_t i = 0; i < m; ++i) {
        const double cur = s.b[i];
        const double prop = cur + step_b[i] * normal(rng);
        const double prop_lik = terms_[i](prop);
        const double ratio = prop_lik - lik[i] + log_bias_kernel(model_, prop, s.b_bar, tau) -
                             log_bias_kernel(model_, cur, s.b_bar, tau);
        if (accept(ratio)) {
          s.b[i] = prop;
          lik[i] = prop_lik;
          ++acc_b[i];
        }
      }
      {
        const double prop = s.b_bar + step_bar * normal(rng);
        const double ratio = hyper_b(prop) - hyper_b(s.b_bar) + log_bias_sum(model_, s.b, prop, tau) -
                             log_bias_sum(model_, s.b, s.b_bar, tau);
        if (accept(ratio)) {
          s.b_bar = prop;
          ++acc_bar;
          if (kept) ++post_bar;
        }
      }
      if (sample_tau) {
        const double prop = s.eta + step_eta * normal(rng);
        const double tau_prop = std::exp(prop);
        // half-normal prior on tau plus the log-scale Jacobian
        const double ratio = hyper_tau(tau_prop) - hyper_tau(tau) + (prop - s.eta) +
                             log_bias_sum(model_, s.b, s.b_bar, tau_prop) - log_bias_sum(model_, s.b, s.b_bar, tau);
        if (std::isfinite(ratio) && accept(ratio)) {
          s.eta = prop;
          tau = tau_prop;
          ++acc_eta;
          if (kept) ++post_eta;
        }
      }
      {
        // Common shift: the deviations b_i - b_bar are unchanged.
        const double delta = step_shift * normal(rng);
        double ratio = hyper_b(s.b_bar + delta) - hyper_b(s.b_bar);
        for (std::size_t i = 0; i < m; ++i) {
          moved[i] = s.b[i] + delta;
          moved_lik[i] = terms_[i](moved[i]);
          ratio += moved_lik[i] - lik[i];
        }
        if (accept(ratio)) {
          s.b_bar += delta;
          s.b.swap(moved);
          lik.swap(moved_lik);
          ++acc_shift;
        }
      }
      if (sample_tau) {
        // Rescale tau and the deviations together. The m-dimensional
        // Jacobian cancels the change in the normalizing -m log tau.
        const double d_eta = step_scale * normal(rng);
        const double factor = std::exp(d_eta);
        const double tau_prop = tau * factor;
        double ratio = hyper_tau(tau_prop) - hyper_tau(tau) + d_eta;
        for (std::size_t i = 0; i < m; ++i) {
          moved[i] = s.b_bar + factor * (s.b[i] - s.b_bar);
          moved_lik[i] = terms_[i](moved[i]);
          ratio += moved_lik[i] - lik[i];
        }
        if (std::isfinite(ratio) && accept(ratio)) {
          s.eta += d_eta;
          s.b.swap(moved);
          lik.swap(moved_lik);
          ++acc_scale;
        }
      }

      if (!kept && (it + 1) % kBatch == 0) {
        auto tune = [](double& step, long& accepted) {
          const double rate = static_cast<double>(accepted) / kBatch;
          if (rate < 0.3) step *= 0.8;
          else if (rate > 0.5) step *= 1.25;
          accepted = 0;
        };
        for (std::size_t i = 0; i < m; ++i) tune(step_b[i], acc_b[i]);
        tune(step_bar, acc_bar);
        tune(step_eta, acc_eta);
        tune(step_shift, acc_shift);
        tune(step_scale, acc_scale);
      }
      if (kept && (it - mcmc_.burn_in + 1) % mcmc_.thin == 0) {
        trace.b_bar.push_back(s.b_bar);
        trace.tau.push_back(std::exp(s.eta));
      }
    }
    const double kept_iters = static_cast<double>(mcmc_.total_iterations - mcmc_.burn_in);
    trace.acceptance_b_bar = static_cast<double>(post_bar) / kept_iters;
    trace.acceptance_tau = static_cast<double>(post_eta) / kept_iters;
    return trace;
  }

 private:
  BiasModelSpec model_;
  McmcSpec mcmc_;
  std::vector<ControlTerm> terms_;
};

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

}  // namespace

// ---------------------------------------------------------------------------

BiasPosterior::BiasPosterior(BiasModelSpec model, std::vector<ChainTrace> chains)
    : model_(model), chains_(std::move(chains)) {}

BiasPosterior BiasPosterior::point_mass_zero(std::size_t samples) {
  ChainTrace trace;
  trace.b_bar.assign(samples, 0.0);
  trace.tau.assign(samples, 0.0);
  BiasPosterior p({}, {std::move(trace)});
  p.point_mass_ = true;
  return p;
}

std::size_t BiasPosterior::size() const {
  std::size_t n = 0;
  for (const auto& c : chains_) n += c.b_bar.size();
  return n;
}

double BiasPosterior::b_bar(std::size_t s) const {
  for (const auto& c : chains_) {
    if (s < c.b_bar.size()) return c.b_bar[s];
    s -= c.b_bar.size();
  }
  throw std::out_of_range("bias draw index");
}

double BiasPosterior::tau(std::size_t s) const {
  for (const auto& c : chains_) {
    if (s < c.tau.size()) return c.tau[s];
    s -= c.tau.size();
  }
  throw std::out_of_range("bias draw index");
}

double BiasPosterior::sample_bias(std::size_t s, SplitMix64& rng) const {
  if (point_mass_) return 0.0;
  const double mean = b_bar(s);
  const double scale = tau(s);
  if (model_.family == BiasFamily::normal) {
    std::normal_distribution<double> d(0.0, 1.0);
    return mean + scale * d(rng);
  }
  std::student_t_distribution<double> d(model_.t_dof);
  return mean + scale * d(rng);
}

std::vector<double> BiasPosterior::predictive_density(const BetaGrid& grid) const {
  std::vector<double> dens(grid.size(), 0.0);
  const std::size_t n = size();
  if (n == 0) return dens;
  if (point_mass_) {
    dens[grid.zero_index()] = 1.0 / grid.step();
    return dens;
  }
  const double k = model_.t_dof;
  const double t_norm = std::lgamma(0.5 * (k + 1.0)) - std::lgamma(0.5 * k) - 0.5 * std::log(k * std::numbers::pi);
  for (std::size_t s = 0; s < n; ++s) {
    const double mean = b_bar(s), scale = tau(s);
    for (std::size_t j = 0; j < grid.size(); ++j) {
      const double z = (grid[j] - mean) / scale;
      const double log_d = model_.family == BiasFamily::normal
                               ? -0.5 * z * z - kLogSqrt2Pi
                               : t_norm - 0.5 * (k + 1.0) * std::log1p(z * z / k);
      dens[j] += std::exp(log_d) / scale;
    }
  }
  for (auto& d : dens) d /= static_cast<double>(n);
  return dens;
}

double BiasPosterior::predictive_prob_positive() const {
  const std::size_t n = size();
  if (n == 0 || point_mass_) return 0.0;
  double acc = 0.0;
  boost::math::students_t_distribution<double> t(model_.t_dof);
  for (std::size_t s = 0; s < n; ++s) {
    const double z = b_bar(s) / tau(s);
    acc += model_.family == BiasFamily::normal ? normal_cdf(z) : boost::math::cdf(t, z);
  }
  return acc / static_cast<double>(n);
}

// ---------------------------------------------------------------------------

double split_rhat(std::span<const std::vector<double>> chains) {
  std::vector<std::span<const double>> halves;
  for (const auto& c : chains) {
    const std::size_t h = c.size() / 2;
    if (h < 2) throw std::invalid_argument("split_rhat needs at least 4 draws per chain");
    halves.emplace_back(c.data(), h);
    halves.emplace_back(c.data() + (c.size() - h), h);
  }
  const double n = static_cast<double>(halves.front().size());
  const double m = static_cast<double>(halves.size());
  std::vector<double> means;
  double w = 0.0;
  for (auto h : halves) {
    const double mean = std::accumulate(h.begin(), h.end(), 0.0) / n;
    double ss = 0.0;
    for (double x : h) ss += (x - mean) * (x - mean);
    w += ss / (n - 1.0);
    means.push_back(mean);
  }
  w /= m;
  const double grand = std::accumulate(means.begin(), means.end(), 0.0) / m;
  double b = 0.0;
  for (double mu : means) b += (mu - grand) * (mu - grand);
  b *= n / (m - 1.0);
  if (w <= 0.0) return b <= 0.0 ? 1.0 : std::numeric_limits<double>::infinity();
  const double var_plus = (n - 1.0) / n * w + b / n;
  return std::sqrt(var_plus / w);
}

double effective_sample_size(std::span<const std::vector<double>> chains) {
  const std::size_t m = chains.size();
  const std::size_t n = chains.front().size();
  for (const auto& c : chains) {
    if (c.size() != n) throw std::invalid_argument("chains must have equal length");
  }
  if (n < 4) return static_cast<double>(m * n);
  std::vector<double> means(m), vars(m);
  for (std::size_t c = 0; c < m; ++c) {
    means[c] = std::accumulate(chains[c].begin(), chains[c].end(), 0.0) / static_cast<double>(n);
    double ss = 0.0;
    for (double x : chains[c]) ss += (x - means[c]) * (x - means[c]);
    vars[c] = ss / static_cast<double>(n - 1);
  }
  const double w = std::accumulate(vars.begin(), vars.end(), 0.0) / static_cast<double>(m);
  const double grand = std::accumulate(means.begin(), means.end(), 0.0) / static_cast<double>(m);
  double b = 0.0;
  for (double mu : means) b += (mu - grand) * (mu - grand);
  b = m > 1 ? b * static_cast<double>(n) / static_cast<double>(m - 1) : 0.0;
  const double var_plus = (static_cast<double>(n) - 1.0) / static_cast<double>(n) * w + b / static_cast<double>(n);
  if (var_plus <= 0.0) return static_cast<double>(m * n);

  auto autocov = [&](std::size_t lag) {
    double acc = 0.0;
    for (std::size_t c = 0; c < m; ++c) {
      double s = 0.0;
      for (std::size_t i = 0; i + lag < n; ++i) s += (chains[c][i] - means[c]) * (chains[c][i + lag] - means[c]);
      acc += s / static_cast<double>(n);
    }
    return acc / static_cast<double>(m);
  };
  auto rho = [&](std::size_t lag) { return 1.0 - (w - autocov(lag)) / var_plus; };

  // Geyer: sum consecutive pairs while positive and monotone.
  double sum = 0.0;
  double prev_pair = std::numeric_limits<double>::infinity();
  for (std::size_t t = 0; t + 1 < n; t += 2) {
    double pair = rho(t) + rho(t + 1);
    if (pair <= 0.0) break;
    pair = std::min(pair, prev_pair);
    sum += pair;
    prev_pair = pair;
  }
  const double tau_int = -1.0 + 2.0 * sum;
  return static_cast<double>(m * n) / std::max(tau_int, 1.0 / std::log10(static_cast<double>(m * n)));
}

// ---------------------------------------------------------------------------

BiasPosterior fit_bias_model(std::span<const NegativeControl> controls, const BiasModelSpec& model,
                             const McmcSpec& mcmc, int jobs) {
  model.validate();
  mcmc.validate();
  std::vector<const NegativeControl*> ordered;
  for (const auto& c : controls) ordered.push_back(&c);
  std::sort(ordered.begin(), ordered.end(), [](auto* a, auto* b) { return a->id < b->id; });
  for (std::size_t i = 1; i < ordered.size(); ++i) {
    if (ordered[i]->id == ordered[i - 1]->id) {
      throw std::invalid_argument(fmt::format("duplicate negative control id '{}'", ordered[i]->id));
    }
  }

  std::vector<ControlTerm> terms;
  std::size_t estimable = 0;
  for (const auto* c : ordered) {
    if (c->profile.estimable) ++estimable;
    ControlTerm t;
    t.profile = &c->profile;
    if (model.normal_approximation) {
      if (!c->profile.estimable) continue;
      t.normal = true;
      t.mle = c->profile.mle;
      t.se = curvature_se(c->profile);
    }
    terms.push_back(t);
  }
  if (estimable < 2) {
    throw std::invalid_argument(fmt::format("bias model needs >= 2 estimable negative controls, got {}", estimable));
  }

  const Sampler sampler(model, mcmc, std::move(terms));
  std::vector<ChainTrace> traces(static_cast<std::size_t>(mcmc.chains));
  const std::uint64_t root = derive_seed(mcmc.seed, "bias-mcmc");
  parallel_for(traces.size(), jobs, [&](std::size_t c) { traces[c] = sampler.run(derive_seed(root, c)); });

  BiasPosterior post(model, std::move(traces));
  post.n_controls_ = ordered.size();
  std::vector<std::vector<double>> bb, tt;
  for (const auto& c : post.chains_) {
    bb.push_back(c.b_bar);
    tt.push_back(c.tau);
  }
  post.rhat_b_bar_ = split_rhat(bb);
  post.rhat_tau_ = split_rhat(tt);
  post.ess_b_bar_ = effective_sample_size(bb);
  post.ess_tau_ = effective_sample_size(tt);
  post.flagged_ = !(post.rhat_b_bar_ <= kRhatLimit && post.rhat_tau_ <= kRhatLimit);
  return post;
}

double sample_quantile(std::span<const double> sorted, double q) {
  if (sorted.empty()) throw std::invalid_argument("quantile of an empty sample");
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  const double w = pos - static_cast<double>(lo);
  return (1.0 - w) * sorted[lo] + w * sorted[hi];
}

DebiasedPosterior debias(const LikelihoodProfile& outcome, const PriorSpec& prior, const BiasPosterior& bias,
                         std::uint64_t seed, bool allow_flagged) {
  if (bias.flagged() && !allow_flagged) {
    throw std::runtime_error("bias posterior failed the convergence check (R-hat > 1.1)");
  }
  const std::size_t n = bias.size();
  if (n == 0) throw std::invalid_argument("bias posterior has no draws");
  const GridPosterior post = posterior(outcome, prior);
  SplitMix64 rng(derive_seed(seed, "debias"));

  DebiasedPosterior out;
  out.bias_flagged = bias.flagged();
  out.samples.resize(n);
  std::size_t positive = 0;
  for (std::size_t s = 0; s < n; ++s) {
    const double b = bias.sample_bias(s, rng);
    const double biased = post.sample(rng);
    out.samples[s] = biased - b;
    if (out.samples[s] > 0.0) ++positive;
  }
  if (bias.is_point_mass()) {
    // Zero bias: summaries come straight from the grid posterior.
    out.p_h1_hat = post.p_h1;
    out.median = post.median;
    out.lo95 = post.lo95;
    out.hi95 = post.hi95;
    return out;
  }
  out.p_h1_hat = static_cast<double>(positive) / static_cast<double>(n);
  std::vector<double> sorted = out.samples;
  std::sort(sorted.begin(), sorted.end());
  out.median = sample_quantile(sorted, 0.5);
  out.lo95 = sample_quantile(sorted, 0.025);
  out.hi95 = sample_quantile(sorted, 0.975);
  return out;
}

bool enough_control_evidence(std::span<const NegativeControl> controls) {
  std::size_t estimable = 0;
  long max_count = 0;
  for (const auto& c : controls) {
    if (c.profile.estimable) ++estimable;
    max_count = std::max(max_count, c.profile.risk_count);
  }
  return estimable >= 2 && max_count >= 2;
}

BbcResult sequential_bbc(std::span<const std::vector<NegativeControl>> controls_by_look,
                         std::span<const LikelihoodProfile> outcome_by_look, const PriorSpec& prior,
                         const BiasModelSpec& model, const McmcSpec& mcmc, double delta1, int jobs) {
  validate_threshold(delta1);
  mcmc.validate();
  bool any_controls = false;
  for (const auto& v : controls_by_look) any_controls = any_controls || !v.empty();
  if (any_controls && controls_by_look.size() != outcome_by_look.size()) {
    throw std::invalid_argument("controls_by_look and outcome_by_look differ in length");
  }

  BbcResult result;
  std::vector<double> stats;
  const auto zero = BiasPosterior::point_mass_zero(
      static_cast<std::size_t>(mcmc.retained_per_chain()) * static_cast<std::size_t>(mcmc.chains));
  for (std::size_t t = 0; t < outcome_by_look.size(); ++t) {
    BbcLook look;
    look.look = static_cast<int>(t) + 1;
    const std::uint64_t look_seed = derive_seed(mcmc.seed, static_cast<std::uint64_t>(look.look));
    if (!any_controls) {
      look.debiased = debias(outcome_by_look[t], prior, zero, look_seed);
    } else if (!enough_control_evidence(controls_by_look[t])) {
      look.skipped = true;
    } else {
      McmcSpec spec = mcmc;
      spec.seed = look_seed;
      const auto bias = fit_bias_model(controls_by_look[t], model, spec, jobs);
      look.bias_flagged = bias.flagged();
      look.bias_prob_positive = bias.predictive_prob_positive();
      double mean = 0.0;
      for (std::size_t s = 0; s < bias.size(); ++s) mean += bias.b_bar(s);
      look.bias_mean = mean / static_cast<double>(bias.size());
      // A flagged fit is still used; the flag travels with the look record.
      look.debiased = debias(outcome_by_look[t], prior, bias, look_seed, true);
    }
    stats.push_back(look.debiased ? look.debiased->p_h1_hat : std::numeric_limits<double>::quiet_NaN());
    result.looks.push_back(std::move(look));
  }
  result.decision = first_crossing(Method::bbc, stats, delta1);
  result.looks.resize(result.decision.records.size());
  return result;
}

}  // namespace seqsafety
