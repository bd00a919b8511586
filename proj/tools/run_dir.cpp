/*
 * @file run_dir.cpp
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

#include "run_dir.hpp"

#include <fstream>
#include <map>

#include <fmt/format.h>

#include "seqsafety/csv.hpp"
#include "seqsafety/errors.hpp"
#include "seqsafety/sequential_data.hpp"

namespace seqsafety::cli {

void log_line(std::string_view message) { fmt::print(stderr, "seqsafety: {}\n", message); }

std::unique_ptr<Run> Run::open(const Options& options, bool create) {
  auto run = std::make_unique<Run>();
  run->root_ = options.out;
  run->jobs_ = std::max(1, options.jobs);
  run->resume_ = options.resume;
  const fs::path manifest_path = run->root_ / "manifest.json";
  std::optional<RunManifest> existing;
  if (fs::exists(manifest_path)) existing = RunManifest::load(manifest_path);

  if (!options.config.empty()) {
    run->config_ = load_config(options.config);
    if (options.seed) run->config_.set_seed(*options.seed);
    run->manifest_ = make_manifest(run->config_);
    if (existing && existing->hash() != run->manifest_.hash()) {
      throw ConfigError(fmt::format("{} belongs to another run (manifest {}, config gives {}); use a fresh --out",
                                    run->root_.string(), existing->hash(), run->manifest_.hash()));
    }
    if (existing) run->manifest_.steps = existing->steps;
  } else {
    if (!existing) {
      if (create) throw ConfigError("--config is required to start a run");
      throw IoError(fmt::format("no manifest.json in {}; run simulate first", run->root_.string()));
    }
    run->manifest_ = *existing;
    run->config_ = parse_config_text(existing->config_text);
    if (options.seed && *options.seed != run->config_.seed()) {
      throw ConfigError(fmt::format("--seed {} differs from the run's seed {}", *options.seed, run->config_.seed()));
    }
  }
  run->config_.set_jobs(run->jobs_);
  run->hash_ = run->manifest_.hash();
  fs::create_directories(run->root_);
  return run;
}

bool Run::current(const fs::path& rel) const {
  std::ifstream in(root_ / rel);
  std::string first;
  if (!in || !std::getline(in, first)) return false;
  return first + "\n" == manifest_comment(hash_);
}

void Run::require_step(std::string_view step) const {
  if (!manifest_.steps.contains(std::string(step))) {
    throw IoError(fmt::format("{} has no completed '{}' step", root_.string(), step));
  }
}

void Run::begin_step(const std::string& step) {
  std::lock_guard lock(mutex_);
  step_ = step;
  record_ = {};
  record_.started = utc_timestamp();
}

void Run::write_csv(const fs::path& rel, const std::string& body) {
  const std::string content = manifest_comment(hash_) + body;
  fs::create_directories((root_ / rel).parent_path());
  write_file_atomic(root_ / rel, content);
  const auto digest = sha256_hex(content);
  std::lock_guard lock(mutex_);
  record_.outputs[rel.generic_string()] = digest;
}

void Run::write_svg(const fs::path& rel, const std::string& svg) {
  // The manifest goes into an XML comment after the declaration.
  std::string content = svg;
  const auto pos = content.find("?>\n");
  const std::string note = fmt::format("<!-- manifest: {} -->\n", hash_);
  content.insert(pos == std::string::npos ? 0 : pos + 3, note);
  fs::create_directories((root_ / rel).parent_path());
  write_file_atomic(root_ / rel, content);
  const auto digest = sha256_hex(content);
  std::lock_guard lock(mutex_);
  record_.outputs[rel.generic_string()] = digest;
}

void Run::keep(const fs::path& rel) {
  const auto digest = sha256_file(root_ / rel);
  std::lock_guard lock(mutex_);
  record_.outputs[rel.generic_string()] = digest;
}

void Run::end_step() {
  std::lock_guard lock(mutex_);
  record_.finished = utc_timestamp();
  manifest_.steps[step_] = record_;
  manifest_.save(root_ / "manifest.json");
}

std::vector<Run::PopulationJob> Run::population_jobs() const {
  std::vector<PopulationJob> jobs;
  switch (config_.scenario) {
    case Scenario::e1:
      break;
    case Scenario::e2: {
      long r = 0;
      for (auto& s : e2_populations(config_.e2)) jobs.push_back({r++, {std::move(s)}});
      break;
    }
    case Scenario::fig3: {
      long r = 0;
      for (auto& s : fig3_populations(config_.fig3)) jobs.push_back({r++, {std::move(s)}});
      break;
    }
    case Scenario::e3:
      for (long r = 0; r < config_.e3.replicates; ++r) {
        PopulationJob job{r, {}};
        for (std::size_t i = 0; i < config_.e3.suite.negative_controls.size(); ++i) {
          job.outcomes.push_back(e3_population(config_.e3, r, i));
        }
        jobs.push_back(std::move(job));
      }
      break;
  }
  return jobs;
}

fs::path Run::replicate_dir(long replicate) { return fs::path("data") / fmt::format("rep_{:04d}", replicate); }

fs::path Run::events_file(long replicate, const std::string& outcome_id) {
  return replicate_dir(replicate) / fmt::format("events_{}.csv", outcome_id);
}

Providers Run::providers() const {
  // master seed -> replicate index; outcomes of one replicate share it
  auto index = std::make_shared<std::map<std::uint64_t, long>>();
  for (const auto& job : population_jobs()) (*index)[job.outcomes.front().master_seed] = job.replicate;

  Providers p;
  const fs::path root = root_;
  const std::string hash = hash_;
  auto check = [root, hash](const fs::path& rel) {
    std::ifstream in(root / rel);
    std::string first;
    if (!in) throw IoError(fmt::format("missing {}; run simulate first", (root / rel).string()));
    std::getline(in, first);
    if (first + "\n" != manifest_comment(hash)) {
      throw IoError(fmt::format("{} was written by another run", (root / rel).string()));
    }
  };
  p.population = [index, root, check](const ScenarioConfig& s) {
    const auto it = index->find(s.master_seed);
    if (it == index->end()) throw IoError("no simulated replicate matches the requested population");
    const auto subjects_rel = replicate_dir(it->second) / "subjects.csv";
    const auto events_rel = events_file(it->second, s.outcome_id);
    check(subjects_rel);
    check(events_rel);
    std::ifstream subjects(root / subjects_rel), events(root / events_rel);
    return read_subjects_and_events_csv(subjects, events, s.layout);
  };
  auto cache = std::make_shared<CvCache>(root / "cv");
  p.critical_value = [cache](const SurveillanceSchedule& schedule, long reps, std::uint64_t seed, int jobs) {
    return cache->get_or_compute(schedule, reps, seed, jobs);
  };
  return p;
}

}  // namespace seqsafety::cli
