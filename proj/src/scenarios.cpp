/*
 * @file scenarios.cpp
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

#include "seqsafety/scenarios.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <stdexcept>

#include <fmt/format.h>

#include "seqsafety/errors.hpp"
#include "seqsafety/parallel.hpp"
#include "seqsafety/rng.hpp"

namespace seqsafety {

std::vector<double> seasonal_log_curve(double base_rate, double amplitude, int peak_week) {
  if (!(base_rate > 0.0)) throw ConfigError("base rate must be > 0");
  std::vector<double> curve(52);
  for (int k = 1; k <= 52; ++k) {
    curve[static_cast<std::size_t>(k - 1)] =
        std::log(base_rate) + amplitude * std::cos(2.0 * std::numbers::pi * (k - peak_week) / 52.0);
  }
  return curve;
}

std::vector<double> seasonal_uptake(double coverage, double amplitude, int peak_week, int weeks) {
  if (!(coverage >= 0.0 && coverage <= 1.0)) throw ConfigError("coverage must be a probability");
  std::vector<double> u(static_cast<std::size_t>(weeks));
  double total = 0.0;
  for (int k = 1; k <= weeks; ++k) {
    u[static_cast<std::size_t>(k - 1)] = std::exp(amplitude * std::cos(2.0 * std::numbers::pi * (k - peak_week) / 52.0));
    total += u[static_cast<std::size_t>(k - 1)];
  }
  for (auto& x : u) x *= coverage / total;
  return u;
}

namespace {

EstimateRecord estimate_of(const LikelihoodProfile& p) {
  const auto ci = profile_likelihood_interval(p);
  return {p.mle, ci.lo, ci.hi, p.estimable};
}

std::vector<LikelihoodProfile> profiles_by_look(const std::vector<LookSnapshot>& looks, const DesignSpec& design) {
  std::vector<LikelihoodProfile> out;
  out.reserve(looks.size());
  for (const auto& snap : looks) out.push_back(design_profile(snap, design));
  return out;
}

}  // namespace

// ---------------------------------------------------------------------------

void E1Config::validate() const {
  if (looks < 1) throw ConfigError("e1.looks must be >= 1");
  if (!(expected_per_look > 0.0)) throw ConfigError("e1.expected_per_look must be > 0");
  if (schedule_looks.empty()) throw ConfigError("e1.schedule_looks is empty");
  for (int l : schedule_looks) {
    if (l < 1) throw ConfigError("e1.schedule_looks entries must be >= 1");
  }
  if (replicates < 1) throw ConfigError("e1.replicates must be >= 1");
}

std::vector<std::vector<long>> simulate_e1_counts(const E1Config& config) {
  config.validate();
  const auto looks = static_cast<std::size_t>(config.looks);
  std::vector<std::vector<long>> counts(static_cast<std::size_t>(config.replicates), std::vector<long>(looks, 0));
  const std::uint64_t data_root = derive_seed(config.seed, "e1-data");
  parallel_for(counts.size(), config.jobs, [&](std::size_t r) {
    SplitMix64 rng(derive_seed(data_root, r));
    std::poisson_distribution<long> pois(config.expected_per_look);
    long c = 0;
    for (std::size_t t = 0; t < looks; ++t) {
      c += pois(rng);
      counts[r][t] = c;
    }
  });
  return counts;
}

E1Result run_e1(const E1Config& config, const Providers& providers) {
  return evaluate_e1(config, simulate_e1_counts(config), providers);
}

E1Result evaluate_e1(const E1Config& config, std::vector<std::vector<long>> counts, const Providers& providers) {
  config.validate();
  const auto looks = static_cast<std::size_t>(config.looks);
  if (counts.size() != static_cast<std::size_t>(config.replicates)) {
    throw std::invalid_argument("e1 counts do not match the replicate count");
  }
  for (const auto& row : counts) {
    if (row.size() != looks) throw std::invalid_argument("e1 counts do not match the look count");
  }
  E1Result result;
  result.counts = std::move(counts);

  const BetaGrid grid;
  for (int planned : config.schedule_looks) {
    const auto schedule = SurveillanceSchedule::uniform(planned, config.expected_per_look, config.alpha);
    const auto cv = providers.critical_value(
        schedule, config.cv_replicates,
        derive_seed(derive_seed(config.seed, "e1-cv"), static_cast<std::uint64_t>(planned)), config.jobs);
    std::vector<double> curve(looks, 0.0);
    for (const auto& counts : result.counts) {
      for (std::size_t t = 0; t < looks; ++t) {
        const double mu = config.expected_per_look * static_cast<double>(t + 1);
        if (poisson_grid_llr(counts[t], mu, grid) > cv.cv + kSignalTolerance) {
          curve[t] += 1.0;
          break;
        }
      }
    }
    double acc = 0.0;
    for (auto& c : curve) {
      acc += c;
      c = acc / static_cast<double>(config.replicates);
    }
    result.cvs.push_back(cv);
    result.type1_curve.push_back(std::move(curve));
  }
  return result;
}

// ---------------------------------------------------------------------------

void E2Config::validate() const {
  scenario.validate();
  if (designs.empty()) throw ConfigError("e2 needs at least one design");
  for (const auto& d : designs) d.validate();
  if (replicates < 1) throw ConfigError("e2.replicates must be >= 1");
}

std::vector<ScenarioConfig> e2_populations(const E2Config& config) {
  std::vector<ScenarioConfig> out;
  for (long r = 0; r < config.replicates; ++r) {
    ScenarioConfig scenario = config.scenario;
    scenario.master_seed = derive_seed(derive_seed(config.seed, "e2"), static_cast<std::uint64_t>(r));
    out.push_back(std::move(scenario));
  }
  return out;
}

E2Result run_e2(const E2Config& config, const Providers& providers) {
  config.validate();
  E2Result result;
  result.cutoffs = monthly_cutoffs(config.scenario.layout);
  const auto reps = static_cast<std::size_t>(config.replicates);
  result.estimates.assign(config.designs.size(), std::vector<std::vector<EstimateRecord>>(reps));
  const auto populations = e2_populations(config);
  parallel_for(reps, config.jobs, [&](std::size_t r) {
    const auto& scenario = populations[r];
    const auto looks = accrue(providers.population(scenario), scenario.layout, result.cutoffs);
    for (std::size_t d = 0; d < config.designs.size(); ++d) {
      for (const auto& p : profiles_by_look(looks, config.designs[d])) result.estimates[d][r].push_back(estimate_of(p));
    }
  });
  return result;
}

// ---------------------------------------------------------------------------

void Fig3Config::validate() const {
  scenario.validate();
  design.validate();
  prior.validate();
  validate_threshold(delta1);
  if (replicates < 1) throw ConfigError("fig3.replicates must be >= 1");
}

std::vector<ScenarioConfig> fig3_populations(const Fig3Config& config) {
  std::vector<ScenarioConfig> out;
  for (long r = 0; r < config.replicates; ++r) {
    ScenarioConfig scenario = config.scenario;
    scenario.master_seed = derive_seed(derive_seed(config.seed, "fig3"), static_cast<std::uint64_t>(r));
    out.push_back(std::move(scenario));
  }
  return out;
}

Fig3Result run_fig3(const Fig3Config& config, const Providers& providers) {
  config.validate();
  Fig3Result result;
  result.cutoffs = monthly_cutoffs(config.scenario.layout);
  const auto reps = static_cast<std::size_t>(config.replicates);
  result.looks.resize(reps);
  result.stopping_month.resize(reps);
  const auto populations = fig3_populations(config);
  parallel_for(reps, config.jobs, [&](std::size_t r) {
    const auto& scenario = populations[r];
    const auto looks = accrue(providers.population(scenario), scenario.layout, result.cutoffs);
    std::vector<double> p_h1;
    for (const auto& profile : profiles_by_look(looks, config.design)) {
      const auto post = posterior(profile, config.prior);
      result.looks[r].push_back({post.p_h1, post.median, post.sd, post.lo95, post.hi95, profile.risk_count});
      p_h1.push_back(post.p_h1);
    }
    result.stopping_month[r] = run_bayes(p_h1, config.delta1).stopping_time;
  });
  return result;
}

// ---------------------------------------------------------------------------

void E3Config::validate() const {
  base.validate();
  suite.validate();
  if (designs.empty()) throw ConfigError("e3 needs at least one design");
  for (const auto& d : designs) d.validate();
  if (prior_variances.empty()) throw ConfigError("e3 needs at least one prior variance");
  for (double v : prior_variances) PriorSpec{0.0, v}.validate();
  for (double t : thresholds) validate_threshold(t);
  bias_model.validate();
  mcmc.validate();
  if (replicates < 1) throw ConfigError("e3.replicates must be >= 1");
  if (cv_replicates < 10000) throw ConfigError("e3.cv_replicates must be >= 10000");
}

namespace {

struct E3Replicate {
  std::vector<std::vector<OutcomeTrajectory>> groups;  // same order as E3Result::cells
  std::vector<BiasLookSummary> bias;
  std::vector<BiasSampleRow> samples;
  std::vector<std::vector<std::vector<double>>> density;
};

struct OutcomeRef {
  std::size_t control = 0;
  double rr = 1.0;
};

void append_look(OutcomeTrajectory& o, double statistic, double estimate, double lo, double hi, bool estimable) {
  o.statistic.push_back(statistic);
  o.estimate.push_back(estimate);
  o.lo95.push_back(lo);
  o.hi95.push_back(hi);
  o.estimable.push_back(estimable ? 1 : 0);
}

// Summaries from a de-biased sample without a full sort.
void quick_summaries(DebiasedPosterior& d) {
  auto q = [&](double level) {
    std::vector<double>& s = d.samples;
    const double pos = level * static_cast<double>(s.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    std::nth_element(s.begin(), s.begin() + static_cast<std::ptrdiff_t>(lo), s.end());
    const double a = s[lo];
    if (lo + 1 >= s.size()) return a;
    const double b = *std::min_element(s.begin() + static_cast<std::ptrdiff_t>(lo) + 1, s.end());
    return a + (pos - static_cast<double>(lo)) * (b - a);
  };
  d.median = q(0.5);
  d.lo95 = q(0.025);
  d.hi95 = q(0.975);
}

std::uint64_t e3_replicate_seed(const E3Config& config, long r) {
  return derive_seed(derive_seed(config.seed, "e3"), static_cast<std::uint64_t>(r));
}

using ProfileCube = std::vector<std::vector<std::vector<LikelihoodProfile>>>;  // [design][control][look]

ProfileCube e3_profiles(const E3Config& config, const std::vector<int>& cutoffs, long r, const Providers& providers) {
  const std::size_t m = config.suite.negative_controls.size();
  ProfileCube profiles(config.designs.size(), std::vector<std::vector<LikelihoodProfile>>(m));
  for (std::size_t i = 0; i < m; ++i) {
    const auto scenario = e3_population(config, r, i);
    const auto snaps = accrue(providers.population(scenario), scenario.layout, cutoffs);
    for (std::size_t d = 0; d < config.designs.size(); ++d) profiles[d][i] = profiles_by_look(snaps, config.designs[d]);
  }
  return profiles;
}

// MaxSPRT: one critical value per control from its null expected counts.
std::vector<double> e3_control_cvs(const E3Config& config, const std::vector<std::vector<LikelihoodProfile>>& by_control,
                                   std::uint64_t design_seed, const Providers& providers) {
  const auto& controls = config.suite.negative_controls;
  std::vector<double> cvs(controls.size(), std::numeric_limits<double>::infinity());
  for (std::size_t i = 0; i < controls.size(); ++i) {
    std::vector<double> cumulative;
    for (const auto& p : by_control[i]) cumulative.push_back(p.expected);
    const auto schedule = SurveillanceSchedule::from_cumulative(cumulative, config.alpha);
    try {
      cvs[i] = providers
                   .critical_value(schedule, config.cv_replicates,
                                   derive_seed(derive_seed(design_seed, "cv"), controls[i].id), 1)
                   .cv;
    } catch (const std::domain_error&) {
      // No expected events at all: the test can never reject.
    }
  }
  return cvs;
}

E3Replicate run_e3_replicate(const E3Config& config, const std::vector<int>& cutoffs, long r,
                             const Providers& providers) {
  const std::uint64_t rep_seed = e3_replicate_seed(config, r);
  const auto& controls = config.suite.negative_controls;
  const std::size_t m = controls.size();
  const std::size_t looks = cutoffs.size();
  const std::size_t n_designs = config.designs.size();
  const auto profiles = e3_profiles(config, cutoffs, r, providers);

  std::vector<OutcomeRef> outcomes;
  for (std::size_t i = 0; i < m; ++i) {
    outcomes.push_back({i, 1.0});
    for (double rr : config.suite.positive_rrs) outcomes.push_back({i, rr});
  }
  auto outcome_profile = [&](std::size_t d, const OutcomeRef& o, std::size_t t) {
    const auto& nc = profiles[d][o.control][t];
    return o.rr == 1.0 ? nc : synthesize_positive_profile(nc, o.rr);
  };
  auto blank = [&](const OutcomeRef& o, double threshold) {
    OutcomeTrajectory tr;
    tr.outcome_id = controls[o.control].id;
    tr.replicate = r;
    tr.true_rr = o.rr;
    tr.true_log_rr = o.rr == 1.0 ? 0.0 : snapped_log_rr(o.rr);
    tr.threshold = threshold;
    return tr;
  };

  E3Replicate out;
  const std::size_t n_priors = config.prior_variances.size();
  for (std::size_t d = 0; d < n_designs; ++d) {
    const std::string design = config.designs[d].name();
    const std::uint64_t design_seed = derive_seed(rep_seed, design);

    const auto cvs = e3_control_cvs(config, profiles[d], design_seed, providers);
    std::vector<OutcomeTrajectory> maxsprt;
    std::vector<std::vector<OutcomeTrajectory>> bayes(n_priors), bbc(n_priors);
    for (const auto& o : outcomes) {
      maxsprt.push_back(blank(o, cvs[o.control]));
      for (std::size_t k = 0; k < n_priors; ++k) {
        bayes[k].push_back(blank(o, 0.0));
        bbc[k].push_back(blank(o, 0.0));
      }
    }

    for (std::size_t t = 0; t < looks; ++t) {
      std::vector<LikelihoodProfile> current;
      current.reserve(outcomes.size());
      for (const auto& o : outcomes) current.push_back(outcome_profile(d, o, t));

      for (std::size_t j = 0; j < outcomes.size(); ++j) {
        const auto& p = current[j];
        const auto ci = profile_likelihood_interval(p);
        append_look(maxsprt[j], llr_statistic(p), p.mle, ci.lo, ci.hi, p.estimable);
        for (std::size_t k = 0; k < n_priors; ++k) {
          const auto post = posterior(p, {0.0, config.prior_variances[k]});
          append_look(bayes[k][j], post.p_h1, post.median, post.lo95, post.hi95, p.estimable);
        }
      }

      std::vector<NegativeControl> ncs;
      ncs.reserve(m);
      for (std::size_t i = 0; i < m; ++i) ncs.push_back({controls[i].id, profiles[d][i][t]});
      BiasLookSummary summary;
      summary.design = design;
      summary.replicate = r;
      summary.look = static_cast<int>(t) + 1;
      if (!enough_control_evidence(ncs)) {
        summary.skipped = true;
        out.bias.push_back(summary);
        const double nan = std::numeric_limits<double>::quiet_NaN();
        for (std::size_t k = 0; k < n_priors; ++k) {
          for (auto& tr : bbc[k]) append_look(tr, nan, nan, nan, nan, false);
        }
        continue;
      }
      McmcSpec spec = config.mcmc;
      spec.seed = derive_seed(derive_seed(design_seed, "mcmc"), t);
      const auto bias = fit_bias_model(ncs, config.bias_model, spec);
      summary.flagged = bias.flagged();
      summary.rhat_b_bar = bias.rhat_b_bar();
      summary.rhat_tau = bias.rhat_tau();
      summary.prob_positive = bias.predictive_prob_positive();
      std::vector<double> taus;
      double mean = 0.0;
      for (std::size_t s = 0; s < bias.size(); ++s) {
        mean += bias.b_bar(s);
        taus.push_back(bias.tau(s));
      }
      summary.b_bar_mean = mean / static_cast<double>(bias.size());
      std::sort(taus.begin(), taus.end());
      summary.tau_median = sample_quantile(taus, 0.5);
      out.bias.push_back(summary);
      if (r == 0) {
        for (std::size_t c = 0; c < bias.chains().size(); ++c) {
          const auto& chain = bias.chains()[c];
          for (std::size_t s = 0; s < chain.b_bar.size(); ++s) {
            out.samples.push_back({design, static_cast<int>(t) + 1, static_cast<int>(c),
                                   config.mcmc.burn_in + static_cast<long>(s + 1) * config.mcmc.thin, chain.b_bar[s],
                                   chain.tau[s]});
          }
        }
        if (out.density.size() < n_designs) out.density.resize(n_designs);
        out.density[d].resize(looks);
        out.density[d][t] = bias.predictive_density(BetaGrid{});
      }

      for (std::size_t j = 0; j < outcomes.size(); ++j) {
        for (std::size_t k = 0; k < n_priors; ++k) {
          const std::uint64_t seed = derive_seed(derive_seed(spec.seed, j), k);
          auto deb = debias(current[j], {0.0, config.prior_variances[k]}, bias, seed, true);
          quick_summaries(deb);
          append_look(bbc[k][j], deb.p_h1_hat, deb.median, deb.lo95, deb.hi95, current[j].estimable);
        }
      }
    }
    out.groups.push_back(std::move(maxsprt));
    for (std::size_t k = 0; k < n_priors; ++k) {
      out.groups.push_back(std::move(bayes[k]));
      out.groups.push_back(std::move(bbc[k]));
    }
  }
  return out;
}

}  // namespace

ScenarioConfig e3_population(const E3Config& config, long replicate, std::size_t control) {
  const std::uint64_t rep_seed = e3_replicate_seed(config, replicate);
  const auto& nc = config.suite.negative_controls.at(control);
  ScenarioConfig scenario = config.base;
  scenario.master_seed = rep_seed;
  scenario.outcome_id = nc.id;
  scenario.log_rate_offset = nc.log_rate_offset;
  scenario.true_log_rr = 0.0;
  scenario.injected_bias = config.suite.injected_bias(nc, rep_seed);
  return scenario;
}

std::vector<ScenarioConfig> e3_populations(const E3Config& config) {
  std::vector<ScenarioConfig> out;
  for (long r = 0; r < config.replicates; ++r) {
    for (std::size_t i = 0; i < config.suite.negative_controls.size(); ++i) out.push_back(e3_population(config, r, i));
  }
  return out;
}

void e3_critical_values(const E3Config& config, const Providers& providers, const ProgressFn& progress) {
  config.validate();
  const auto cutoffs = monthly_cutoffs(config.base.layout);
  std::mutex progress_mutex;
  long done = 0;
  parallel_for(static_cast<std::size_t>(config.replicates), config.jobs, [&](std::size_t r) {
    const auto rep = static_cast<long>(r);
    const auto profiles = e3_profiles(config, cutoffs, rep, providers);
    for (std::size_t d = 0; d < config.designs.size(); ++d) {
      e3_control_cvs(config, profiles[d], derive_seed(e3_replicate_seed(config, rep), config.designs[d].name()),
                     providers);
    }
    if (progress) {
      std::lock_guard lock(progress_mutex);
      progress(fmt::format("e3 critical values {}/{} replicates", ++done, config.replicates));
    }
  });
}

E3Result run_e3(const E3Config& config, const ProgressFn& progress, const Providers& providers) {
  config.validate();
  E3Result result;
  result.cutoffs = monthly_cutoffs(config.base.layout);
  for (const auto& d : config.designs) {
    result.cells.push_back({{Method::maxsprt, d.name(), 0.0, 0.0}, {}, {}});
    for (double v : config.prior_variances) {
      result.cells.push_back({{Method::bayes, d.name(), v, 0.0}, {}, {}});
      result.cells.push_back({{Method::bbc, d.name(), v, 0.0}, {}, {}});
    }
  }
  std::vector<E3Replicate> reps(static_cast<std::size_t>(config.replicates));
  std::mutex progress_mutex;
  long done = 0;
  parallel_for(reps.size(), config.jobs, [&](std::size_t r) {
    reps[r] = run_e3_replicate(config, result.cutoffs, static_cast<long>(r), providers);
    if (progress) {
      std::lock_guard lock(progress_mutex);
      progress(fmt::format("e3 replicate {}/{} done", ++done, config.replicates));
    }
  });
  for (auto& rep : reps) {
    for (std::size_t g = 0; g < rep.groups.size(); ++g) {
      auto& dst = result.cells[g].outcomes;
      dst.insert(dst.end(), std::make_move_iterator(rep.groups[g].begin()), std::make_move_iterator(rep.groups[g].end()));
    }
    result.bias.insert(result.bias.end(), rep.bias.begin(), rep.bias.end());
    if (!rep.samples.empty()) {
      result.bias_samples = std::move(rep.samples);
      result.bias_density = std::move(rep.density);
    }
  }
  return result;
}

std::vector<OutcomeTrajectory> with_threshold(std::vector<OutcomeTrajectory> outcomes, double delta1) {
  for (auto& o : outcomes) o.threshold = delta1;
  return outcomes;
}

std::vector<OutcomeTrajectory> negative_controls_only(std::span<const OutcomeTrajectory> outcomes) {
  std::vector<OutcomeTrajectory> out;
  for (const auto& o : outcomes) {
    if (o.true_rr == 1.0) out.push_back(o);
  }
  return out;
}

MetricTable e3_metrics(const E3Result& result, std::span<const double> thresholds) {
  MetricTable table;
  for (const auto& cell : result.cells) {
    if (cell.key.method == Method::maxsprt) {
      table.add(compute_metrics(cell.key, cell.outcomes));
      continue;
    }
    for (double delta : thresholds) {
      CellKey key = cell.key;
      key.delta1 = delta;
      table.add(compute_metrics(key, with_threshold(cell.outcomes, delta)));
    }
  }
  return table;
}

// ---------------------------------------------------------------------------

E1Config e1_preset() { return {}; }

E2Config e2_preset() {
  E2Config c;
  auto& s = c.scenario;
  s.n_subjects = 5000;
  s.baseline_log_rate_per_week = seasonal_log_curve(0.002, 0.6, 16);
  s.historical_rate_multiplier = 0.5;
  s.covariate_effect = 0.5;
  s.covariate_prevalence = 0.3;
  s.true_log_rr = std::log(2.0);
  s.risk_window_weeks = 6;
  s.uptake_curve = seasonal_uptake(0.8, 0.6, 16);
  c.designs = {DesignSpec{DesignVariant::hc_seasonal, 6}, DesignSpec{DesignVariant::sccs_exclude_pre, 6}};
  return c;
}

Fig3Config fig3_preset() {
  Fig3Config c;
  auto& s = c.scenario;
  s.n_subjects = 5000;
  s.baseline_log_rate_per_week.assign(52, std::log(0.0002));
  s.historical_rate_multiplier = 1.0;
  s.covariate_effect = 0.0;
  s.covariate_prevalence = 0.3;
  s.true_log_rr = std::log(2.0);
  s.risk_window_weeks = 6;
  s.uptake_curve.assign(52, 0.8 / 52.0);
  c.design = {DesignVariant::hc_unadjusted, 6};
  c.prior = {0.0, 4.0};
  return c;
}

E3Config e3_preset() {
  E3Config c;
  auto& s = c.base;
  s.n_subjects = 5000;
  s.baseline_log_rate_per_week = seasonal_log_curve(1.0, 0.3, 16);
  s.historical_rate_multiplier = 1.0;
  s.covariate_effect = 0.5;
  s.covariate_prevalence = 0.3;
  s.risk_window_weeks = 6;
  s.uptake_curve = seasonal_uptake(0.8, 0.6, 16);
  c.suite = ControlSuite::log_uniform(93, std::log(0.0002), std::log(0.003), 93);
  c.designs = {DesignSpec{DesignVariant::hc_unadjusted, 6}, DesignSpec{DesignVariant::sccs_exclude_pre, 6}};
  c.mcmc.total_iterations = 2000;
  c.mcmc.burn_in = 500;
  c.mcmc.thin = 3;
  c.mcmc.chains = 4;
  return c;
}

}  // namespace seqsafety
