/*
 * @file config.cpp
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

#include "seqsafety/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <fmt/format.h>

#include "seqsafety/csv.hpp"
#include "seqsafety/errors.hpp"

namespace seqsafety {

namespace pt = boost::property_tree;

std::string_view scenario_name(Scenario s) {
  switch (s) {
    case Scenario::e1: return "e1";
    case Scenario::e2: return "e2";
    case Scenario::fig3: return "fig3";
    case Scenario::e3: return "e3";
  }
  return "?";
}

Scenario parse_scenario(std::string_view name) {
  for (auto s : {Scenario::e1, Scenario::e2, Scenario::fig3, Scenario::e3}) {
    if (scenario_name(s) == name) return s;
  }
  throw ConfigError(fmt::format("unknown scenario '{}' (expected e1, e2, fig3 or e3)", name));
}

ControlSuite SuiteParams::build() const {
  if (log_offset_min > log_offset_max) throw ConfigError("controls.log_offset_min exceeds controls.log_offset_max");
  auto suite = ControlSuite::log_uniform(count, log_offset_min, log_offset_max, seed);
  suite.positive_rrs = positive_rrs;
  suite.bias_mean = bias_mean;
  suite.bias_sd = bias_sd;
  return suite;
}

std::uint64_t RunConfig::seed() const {
  switch (scenario) {
    case Scenario::e1: return e1.seed;
    case Scenario::e2: return e2.seed;
    case Scenario::fig3: return fig3.seed;
    case Scenario::e3: return e3.seed;
  }
  return 0;
}

void RunConfig::set_seed(std::uint64_t seed) {
  e1.seed = e2.seed = fig3.seed = e3.seed = seed;
}

void RunConfig::set_jobs(int jobs) {
  e1.jobs = e2.jobs = fig3.jobs = e3.jobs = jobs;
}

long RunConfig::replicates() const {
  switch (scenario) {
    case Scenario::e1: return e1.replicates;
    case Scenario::e2: return e2.replicates;
    case Scenario::fig3: return fig3.replicates;
    case Scenario::e3: return e3.replicates;
  }
  return 0;
}

void RunConfig::validate() const {
  switch (scenario) {
    case Scenario::e1: e1.validate(); break;
    case Scenario::e2: e2.validate(); break;
    case Scenario::fig3: fig3.validate(); break;
    case Scenario::e3: e3.validate(); break;
  }
}

RunConfig preset(Scenario s) {
  RunConfig c;
  c.scenario = s;
  c.e3.suite = c.suite.build();
  return c;
}

namespace {

// Reads keys out of a parsed INI tree and remembers which ones were used so
// that leftovers can be reported.
class KeyReader {
 public:
  explicit KeyReader(const pt::ptree& tree) : tree_(tree) {
    for (const auto& [section, body] : tree_) {
      if (body.empty() && !body.data().empty()) {
        throw ConfigError(fmt::format("key '{}' must sit inside a section", section));
      }
      for (const auto& [key, value] : body) all_.insert(section + "." + key);
    }
  }

  bool has(const std::string& section, const std::string& key) const {
    return all_.contains(section + "." + key);
  }

  std::string text(const std::string& section, const std::string& key) {
    used_.insert(section + "." + key);
    return tree_.get_child(section).get<std::string>(key);
  }

  template <typename T>
  void number(const std::string& section, const std::string& key, T& out) {
    if (!has(section, key)) return;
    out = parse_number<T>(section + "." + key, text(section, key));
  }

  template <typename T>
  void list(const std::string& section, const std::string& key, std::vector<T>& out) {
    if (!has(section, key)) return;
    out.clear();
    for (const auto& item : split_commas(text(section, key))) {
      out.push_back(parse_number<T>(section + "." + key, trim(item)));
    }
  }

  void boolean(const std::string& section, const std::string& key, bool& out) {
    if (!has(section, key)) return;
    const std::string v = trim(text(section, key));
    if (v == "true" || v == "1") out = true;
    else if (v == "false" || v == "0") out = false;
    else throw ConfigError(fmt::format("{}.{}: expected true or false, got '{}'", section, key, v));
  }

  // Everything present in the file but never read.
  void reject_unused() const {
    for (const auto& k : all_) {
      if (!used_.contains(k)) throw ConfigError(fmt::format("unknown or inapplicable key '{}'", k));
    }
  }

  static std::string trim(std::string s) {
    const auto b = s.find_first_not_of(" \t\r");
    const auto e = s.find_last_not_of(" \t\r");
    return b == std::string::npos ? std::string{} : s.substr(b, e - b + 1);
  }

 private:
  template <typename T>
  static T parse_number(const std::string& where, const std::string& raw) {
    const std::string s = trim(raw);
    T value{};
    const auto* end = s.data() + s.size();
    const auto [ptr, ec] = std::from_chars(s.data(), end, value);
    if (ec != std::errc{} || ptr != end || s.empty()) {
      throw ConfigError(fmt::format("{}: cannot parse '{}' as a number", where, s));
    }
    return value;
  }

  const pt::ptree& tree_;
  std::set<std::string> all_;
  std::set<std::string> used_;
};

// Curves come either as full arrays or as three-parameter seasonal shapes.
void read_cohort(KeyReader& r, ScenarioConfig& s, bool allow_effect) {
  const std::string sec = "cohort";
  r.number(sec, "n_subjects", s.n_subjects);
  r.number(sec, "historical_rate_multiplier", s.historical_rate_multiplier);
  r.number(sec, "covariate_effect", s.covariate_effect);
  r.number(sec, "covariate_prevalence", s.covariate_prevalence);
  r.number(sec, "risk_window_weeks", s.risk_window_weeks);
  if (allow_effect) {
    if (r.has(sec, "true_rr") && r.has(sec, "true_log_rr")) {
      throw ConfigError("cohort.true_rr conflicts with cohort.true_log_rr");
    }
    if (r.has(sec, "true_rr")) {
      double rr = 1.0;
      r.number(sec, "true_rr", rr);
      if (!(rr > 0.0)) throw ConfigError("cohort.true_rr must be > 0");
      s.true_log_rr = std::log(rr);
    }
    r.number(sec, "true_log_rr", s.true_log_rr);
  }

  const bool shape = r.has(sec, "baseline_rate") || r.has(sec, "baseline_amplitude") || r.has(sec, "baseline_peak_week");
  if (shape && r.has(sec, "baseline_log_rate")) {
    throw ConfigError("cohort.baseline_log_rate conflicts with cohort.baseline_rate/amplitude/peak_week");
  }
  if (shape) {
    double rate = 0.0, amplitude = 0.0;
    int peak = 1;
    if (!r.has(sec, "baseline_rate")) throw ConfigError("cohort.baseline_rate is required with a seasonal shape");
    r.number(sec, "baseline_rate", rate);
    r.number(sec, "baseline_amplitude", amplitude);
    r.number(sec, "baseline_peak_week", peak);
    s.baseline_log_rate_per_week = seasonal_log_curve(rate, amplitude, peak);
  }
  r.list(sec, "baseline_log_rate", s.baseline_log_rate_per_week);

  const bool uptake_shape = r.has(sec, "uptake_coverage") || r.has(sec, "uptake_amplitude") || r.has(sec, "uptake_peak_week");
  if (uptake_shape && r.has(sec, "uptake")) {
    throw ConfigError("cohort.uptake conflicts with cohort.uptake_coverage/amplitude/peak_week");
  }
  if (uptake_shape) {
    double coverage = 0.0, amplitude = 0.0;
    int peak = 1;
    if (!r.has(sec, "uptake_coverage")) throw ConfigError("cohort.uptake_coverage is required with a seasonal shape");
    r.number(sec, "uptake_coverage", coverage);
    r.number(sec, "uptake_amplitude", amplitude);
    r.number(sec, "uptake_peak_week", peak);
    s.uptake_curve = seasonal_uptake(coverage, amplitude, peak, s.layout.surveillance.length());
  }
  r.list(sec, "uptake", s.uptake_curve);
}

std::vector<DesignSpec> read_designs(KeyReader& r) {
  std::vector<DesignSpec> out;
  if (!r.has("design", "designs")) return out;
  for (const auto& name : split_commas(r.text("design", "designs"))) out.push_back(DesignSpec::parse(KeyReader::trim(name)));
  if (out.empty()) throw ConfigError("design.designs is empty");
  return out;
}

}  // namespace

RunConfig parse_config(std::istream& in) {
  pt::ptree tree;
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError(fmt::format("malformed config (line {}): {}", e.line(), e.message()));
  }
  KeyReader r(tree);
  if (!r.has("run", "scenario")) throw ConfigError("run.scenario is required");
  RunConfig c = preset(parse_scenario(KeyReader::trim(r.text("run", "scenario"))));

  std::uint64_t seed = c.seed();
  r.number("run", "seed", seed);
  c.set_seed(seed);

  switch (c.scenario) {
    case Scenario::e1: {
      auto& e = c.e1;
      r.number("run", "replicates", e.replicates);
      r.number("maxsprt", "alpha", e.alpha);
      r.number("maxsprt", "looks", e.looks);
      r.number("maxsprt", "expected_per_look", e.expected_per_look);
      r.list("maxsprt", "schedule_looks", e.schedule_looks);
      r.number("maxsprt", "cv_replicates", e.cv_replicates);
      break;
    }
    case Scenario::e2: {
      auto& e = c.e2;
      r.number("run", "replicates", e.replicates);
      read_cohort(r, e.scenario, true);
      if (auto d = read_designs(r); !d.empty()) e.designs = std::move(d);
      break;
    }
    case Scenario::fig3: {
      auto& e = c.fig3;
      r.number("run", "replicates", e.replicates);
      read_cohort(r, e.scenario, true);
      if (auto d = read_designs(r); !d.empty()) {
        if (d.size() != 1) throw ConfigError("design.designs must name exactly one design for fig3");
        e.design = d.front();
      }
      r.number("bayes", "prior_mean", e.prior.mean);
      r.number("bayes", "prior_variance", e.prior.variance);
      r.number("bayes", "threshold", e.delta1);
      break;
    }
    case Scenario::e3: {
      auto& e = c.e3;
      r.number("run", "replicates", e.replicates);
      read_cohort(r, e.base, false);
      if (auto d = read_designs(r); !d.empty()) e.designs = std::move(d);
      r.number("maxsprt", "alpha", e.alpha);
      r.number("maxsprt", "cv_replicates", e.cv_replicates);
      r.list("bayes", "prior_variances", e.prior_variances);
      r.list("bayes", "thresholds", e.thresholds);
      if (r.has("bias", "family")) {
        const auto f = KeyReader::trim(r.text("bias", "family"));
        if (f == "normal") e.bias_model.family = BiasFamily::normal;
        else if (f == "t") e.bias_model.family = BiasFamily::t;
        else throw ConfigError(fmt::format("bias.family: expected normal or t, got '{}'", f));
      }
      r.number("bias", "t_dof", e.bias_model.t_dof);
      r.number("bias", "mu_b", e.bias_model.mu_b);
      r.number("bias", "sigma_b2", e.bias_model.sigma_b2);
      r.number("bias", "sigma_tau2", e.bias_model.sigma_tau2);
      r.boolean("bias", "normal_approximation", e.bias_model.normal_approximation);
      r.number("bias", "iterations", e.mcmc.total_iterations);
      r.number("bias", "burn_in", e.mcmc.burn_in);
      r.number("bias", "thin", e.mcmc.thin);
      r.number("bias", "chains", e.mcmc.chains);
      r.number("controls", "count", c.suite.count);
      r.number("controls", "log_offset_min", c.suite.log_offset_min);
      r.number("controls", "log_offset_max", c.suite.log_offset_max);
      r.number("controls", "seed", c.suite.seed);
      r.list("controls", "positive_rrs", c.suite.positive_rrs);
      r.number("controls", "bias_mean", c.suite.bias_mean);
      r.number("controls", "bias_sd", c.suite.bias_sd);
      e.suite = c.suite.build();
      break;
    }
  }
  r.reject_unused();
  c.validate();
  return c;
}

RunConfig parse_config_text(const std::string& text) {
  std::istringstream in(text);
  return parse_config(in);
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError(fmt::format("cannot open config {}", path.string()));
  return parse_config(in);
}

namespace {

template <typename T>
std::string join(const std::vector<T>& values) {
  std::string out;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i > 0) out += ',';
    if constexpr (std::is_floating_point_v<T>) out += format_real(values[i]);
    else out += fmt::format("{}", values[i]);
  }
  return out;
}

std::string designs_text(const std::vector<DesignSpec>& designs) {
  std::string out;
  for (std::size_t i = 0; i < designs.size(); ++i) out += (i ? "," : "") + designs[i].name();
  return out;
}

void write_cohort(std::ostream& out, const ScenarioConfig& s, bool with_effect) {
  out << "\n[cohort]\n";
  out << "n_subjects = " << s.n_subjects << '\n';
  out << "historical_rate_multiplier = " << format_real(s.historical_rate_multiplier) << '\n';
  out << "covariate_effect = " << format_real(s.covariate_effect) << '\n';
  out << "covariate_prevalence = " << format_real(s.covariate_prevalence) << '\n';
  out << "risk_window_weeks = " << s.risk_window_weeks << '\n';
  if (with_effect) out << "true_log_rr = " << format_real(s.true_log_rr) << '\n';
  out << "baseline_log_rate = " << join(s.baseline_log_rate_per_week) << '\n';
  out << "uptake = " << join(s.uptake_curve) << '\n';
}

}  // namespace

std::string to_ini(const RunConfig& c) {
  std::ostringstream out;
  out << "[run]\n";
  out << "scenario = " << scenario_name(c.scenario) << '\n';
  out << "seed = " << c.seed() << '\n';
  out << "replicates = " << c.replicates() << '\n';
  switch (c.scenario) {
    case Scenario::e1: {
      const auto& e = c.e1;
      out << "\n[maxsprt]\n";
      out << "alpha = " << format_real(e.alpha) << '\n';
      out << "looks = " << e.looks << '\n';
      out << "expected_per_look = " << format_real(e.expected_per_look) << '\n';
      out << "schedule_looks = " << join(e.schedule_looks) << '\n';
      out << "cv_replicates = " << e.cv_replicates << '\n';
      break;
    }
    case Scenario::e2:
      write_cohort(out, c.e2.scenario, true);
      out << "\n[design]\ndesigns = " << designs_text(c.e2.designs) << '\n';
      break;
    case Scenario::fig3: {
      const auto& e = c.fig3;
      write_cohort(out, e.scenario, true);
      out << "\n[design]\ndesigns = " << e.design.name() << '\n';
      out << "\n[bayes]\n";
      out << "prior_mean = " << format_real(e.prior.mean) << '\n';
      out << "prior_variance = " << format_real(e.prior.variance) << '\n';
      out << "threshold = " << format_real(e.delta1) << '\n';
      break;
    }
    case Scenario::e3: {
      const auto& e = c.e3;
      write_cohort(out, e.base, false);
      out << "\n[design]\ndesigns = " << designs_text(e.designs) << '\n';
      out << "\n[maxsprt]\n";
      out << "alpha = " << format_real(e.alpha) << '\n';
      out << "cv_replicates = " << e.cv_replicates << '\n';
      out << "\n[bayes]\n";
      out << "prior_variances = " << join(e.prior_variances) << '\n';
      out << "thresholds = " << join(e.thresholds) << '\n';
      out << "\n[bias]\n";
      out << "family = " << (e.bias_model.family == BiasFamily::normal ? "normal" : "t") << '\n';
      out << "t_dof = " << e.bias_model.t_dof << '\n';
      out << "mu_b = " << format_real(e.bias_model.mu_b) << '\n';
      out << "sigma_b2 = " << format_real(e.bias_model.sigma_b2) << '\n';
      out << "sigma_tau2 = " << format_real(e.bias_model.sigma_tau2) << '\n';
      out << "normal_approximation = " << (e.bias_model.normal_approximation ? "true" : "false") << '\n';
      out << "iterations = " << e.mcmc.total_iterations << '\n';
      out << "burn_in = " << e.mcmc.burn_in << '\n';
      out << "thin = " << e.mcmc.thin << '\n';
      out << "chains = " << e.mcmc.chains << '\n';
      out << "\n[controls]\n";
      out << "count = " << c.suite.count << '\n';
      out << "log_offset_min = " << format_real(c.suite.log_offset_min) << '\n';
      out << "log_offset_max = " << format_real(c.suite.log_offset_max) << '\n';
      out << "seed = " << c.suite.seed << '\n';
      out << "positive_rrs = " << join(c.suite.positive_rrs) << '\n';
      out << "bias_mean = " << format_real(c.suite.bias_mean) << '\n';
      out << "bias_sd = " << format_real(c.suite.bias_sd) << '\n';
      break;
    }
  }
  return out.str();
}

}  // namespace seqsafety
