/*
 * @file seqsafety_cli.cpp
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

// Command-line driver: simulate -> cv -> analyze -> calibrate -> report.
// Exit codes: 0 ok, 1 configuration error, 2 I/O error, 3 internal error.

#include <filesystem>
#include <functional>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "commands.hpp"
#include "seqsafety/csv.hpp"
#include "seqsafety/errors.hpp"
#include "seqsafety/parallel.hpp"

using namespace seqsafety;
using namespace seqsafety::cli;

int main(int argc, char** argv) {
  CLI::App app{"Sequential vaccine-safety surveillance experiments"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(kToolVersion));

  Options options;
  options.jobs = default_jobs();
  std::uint64_t seed = 0;
  std::string methods;

  struct Command {
    const char* name;
    const char* help;
    std::function<int(const Options&)> run;
  };
  const Command commands[] = {
      {"simulate", "simulate cohort data for the configured scenario", cmd_simulate},
      {"cv", "fill the critical-value cache", cmd_cv},
      {"analyze", "run the method grid over the simulated data", cmd_analyze},
      {"calibrate", "match Bayesian thresholds to MaxSPRT's Type 1 error", cmd_calibrate},
      {"report", "aggregate metrics and draw figures", cmd_report},
  };
  std::function<int(const Options&)> selected;
  for (const auto& c : commands) {
    auto* sub = app.add_subcommand(c.name, c.help);
    sub->add_option("--config", options.config, "INI configuration (required for simulate)");
    sub->add_option("--out", options.out, "run directory")->capture_default_str();
    sub->add_option("--seed", seed, "override the master seed");
    sub->add_option("--jobs", options.jobs, "worker threads")->capture_default_str()->check(CLI::PositiveNumber);
    sub->add_flag("--resume", options.resume, "reuse outputs that already carry this run's manifest hash");
    if (std::string_view(c.name) == "analyze") {
      sub->add_option("--methods", methods, "comma-separated subset of maxsprt,bayes,bbc");
    }
    sub->callback([&, run = c.run, sub] {
      if (sub->count("--seed") > 0) options.seed = seed;
      selected = run;
    });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    for (const auto& m : split_commas(methods)) {
      if (m.empty()) continue;
      parse_method(m);
      options.methods.push_back(m);
    }
    if (!methods.empty() && options.methods.empty()) throw ConfigError("--methods names no method");
    return selected(options);
  } catch (const ConfigError& e) {
    fmt::print(stderr, "seqsafety: config error: {}\n", e.what());
    return 1;
  } catch (const IoError& e) {
    fmt::print(stderr, "seqsafety: I/O error: {}\n", e.what());
    return 2;
  } catch (const std::filesystem::filesystem_error& e) {
    fmt::print(stderr, "seqsafety: I/O error: {}\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    fmt::print(stderr, "seqsafety: internal error: {}\n", e.what());
    return 3;
  }
}
