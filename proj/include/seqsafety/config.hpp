/*
 * @file config.hpp
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

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "seqsafety/scenarios.hpp"

namespace seqsafety {

enum class Scenario { e1, e2, fig3, e3 };

std::string_view scenario_name(Scenario s);
Scenario parse_scenario(std::string_view name);

// Generation parameters for the negative-control suite.
struct SuiteParams {
  int count = 93;
  double log_offset_min = std::log(0.0002);
  double log_offset_max = std::log(0.003);
  std::uint64_t seed = 93;
  std::vector<double> positive_rrs{1.5, 2.0, 4.0};
  double bias_mean = 0.25;
  double bias_sd = 0.1;

  ControlSuite build() const;
};

// A fully resolved run configuration. Only the block matching `scenario`
// is meaningful; the others keep their presets.
struct RunConfig {
  Scenario scenario = Scenario::e3;
  E1Config e1 = e1_preset();
  E2Config e2 = e2_preset();
  Fig3Config fig3 = fig3_preset();
  E3Config e3 = e3_preset();
  SuiteParams suite;

  std::uint64_t seed() const;
  void set_seed(std::uint64_t seed);
  void set_jobs(int jobs);
  long replicates() const;
  void validate() const;
};

RunConfig preset(Scenario s);

// INI text with sections [run], [cohort], [design], [maxsprt], [bayes],
// [bias], [controls]. Keys that do not apply to the chosen scenario and
// unknown keys are rejected with a ConfigError naming section.key. Missing
// keys keep the scenario preset. Arrays are comma separated.
RunConfig parse_config(std::istream& in);
RunConfig parse_config_text(const std::string& text);
RunConfig load_config(const std::filesystem::path& path);

// Canonical text of every key used by the scenario. Parsing it gives back an
// equal configuration; manifests hash this text.
std::string to_ini(const RunConfig& config);

}  // namespace seqsafety
