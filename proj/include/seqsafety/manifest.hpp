/*
 * @file manifest.hpp
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
#include <map>
#include <string>
#include <string_view>

#include "seqsafety/config.hpp"

namespace seqsafety {

inline constexpr std::string_view kToolVersion = "0.1.0";

std::string sha256_hex(std::string_view data);
std::string sha256_file(const std::filesystem::path& path);

// UTC, second resolution, e.g. 2026-01-31T12:00:00Z.
std::string utc_timestamp();

struct StepRecord {
  std::string started;
  std::string finished;
  // Output path relative to the run directory -> SHA-256 of its bytes.
  std::map<std::string, std::string> outputs;
};

struct RunManifest {
  std::string tool_version{kToolVersion};
  std::string config_text;  // canonical INI, see to_ini
  std::uint64_t master_seed = 0;
  // Root seeds of the named derivation paths used by the scenario.
  std::map<std::string, std::uint64_t> seeds;
  std::map<std::string, StepRecord> steps;

  // Identity of the run: tool version and resolved config only. Timestamps
  // and output hashes are left out, so a rerun carries the same hash.
  std::string hash() const;

  void save(const std::filesystem::path& path) const;
  static RunManifest load(const std::filesystem::path& path);
};

RunManifest make_manifest(const RunConfig& config);

// First line of every CSV written by the tool.
std::string manifest_comment(std::string_view hash);

}  // namespace seqsafety
