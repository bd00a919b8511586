/*
 * @file run_dir.hpp
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
#include <filesystem>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "seqsafety/config.hpp"
#include "seqsafety/manifest.hpp"
#include "seqsafety/maxsprt.hpp"
#include "seqsafety/scenarios.hpp"

namespace seqsafety::cli {

namespace fs = std::filesystem;

struct Options {
  std::string config;
  std::string out = "run";
  std::optional<std::uint64_t> seed;
  int jobs = 1;
  bool resume = false;
  std::vector<std::string> methods;  // analyze: restrict the method grid
};

void log_line(std::string_view message);

// A run directory: manifest.json plus data/, cv/, cells/ and report/.
class Run {
 public:
  // create: the simulate step may start a new directory.
  static std::unique_ptr<Run> open(const Options& options, bool create);

  const fs::path& root() const { return root_; }
  const RunConfig& config() const { return config_; }
  const std::string& hash() const { return hash_; }
  int jobs() const { return jobs_; }
  bool resume() const { return resume_; }

  // True if `rel` exists and its first line names this run's manifest.
  bool current(const fs::path& rel) const;
  void require_step(std::string_view step) const;

  // Output bookkeeping for one step. Thread safe.
  void begin_step(const std::string& step);
  void write_csv(const fs::path& rel, const std::string& body);
  void write_svg(const fs::path& rel, const std::string& svg);
  void keep(const fs::path& rel);  // previously written output, reused
  void end_step();

  // Data files written by simulate, keyed by replicate.
  struct PopulationJob {
    long replicate = 0;
    std::vector<ScenarioConfig> outcomes;  // outcomes share subjects
  };
  std::vector<PopulationJob> population_jobs() const;
  static fs::path replicate_dir(long replicate);
  static fs::path events_file(long replicate, const std::string& outcome_id);

  // Providers that read simulated data and cache critical values under cv/.
  Providers providers() const;

 private:
  fs::path root_;
  RunConfig config_;
  RunManifest manifest_;
  std::string hash_;
  int jobs_ = 1;
  bool resume_ = false;

  std::mutex mutex_;
  std::string step_;
  StepRecord record_;
};

}  // namespace seqsafety::cli
