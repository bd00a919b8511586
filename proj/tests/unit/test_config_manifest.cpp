/*
 * @file test_config_manifest.cpp
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

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <unistd.h>

#include <gtest/gtest.h>
#include <json.hpp>

#include "seqsafety/config.hpp"
#include "seqsafety/csv.hpp"
#include "seqsafety/errors.hpp"
#include "seqsafety/manifest.hpp"

using namespace seqsafety;
namespace fs = std::filesystem;

namespace {

const fs::path kConfigs = fs::path(SEQSAFETY_SOURCE_DIR) / "configs";

std::string error_of(const std::string& text) {
  try {
    parse_config_text(text);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

fs::path scratch(const std::string& name) {
  auto dir = fs::temp_directory_path() / ("seqsafety_" + name + "_" + std::to_string(::getpid()));
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

}  // namespace

TEST(Config, ShippedFilesMatchPresets) {
  for (auto s : {Scenario::e1, Scenario::e2, Scenario::fig3, Scenario::e3}) {
    const auto path = kConfigs / (std::string(scenario_name(s)) + ".ini");
    const auto loaded = load_config(path);
    EXPECT_EQ(loaded.scenario, s);
    EXPECT_EQ(to_ini(loaded), to_ini(preset(s))) << path;
  }
}

TEST(Config, CanonicalTextRoundTrips) {
  for (auto s : {Scenario::e1, Scenario::e2, Scenario::fig3, Scenario::e3}) {
    const auto text = to_ini(preset(s));
    EXPECT_EQ(to_ini(parse_config_text(text)), text);
  }
  const auto smoke = load_config(kConfigs / "smoke.ini");
  EXPECT_EQ(smoke.seed(), 7u);
  EXPECT_EQ(smoke.replicates(), 2);
  EXPECT_EQ(smoke.e3.suite.negative_controls.size(), 12u);
  EXPECT_EQ(to_ini(parse_config_text(to_ini(smoke))), to_ini(smoke));
}

TEST(Config, ShorthandCurvesExpand) {
  const auto c = parse_config_text(
      "[run]\nscenario = fig3\n[cohort]\nbaseline_rate = 0.001\nbaseline_amplitude = 0\nbaseline_peak_week = 1\n"
      "uptake_coverage = 0.52\nuptake_amplitude = 0\nuptake_peak_week = 1\ntrue_rr = 3\n");
  const auto& s = c.fig3.scenario;
  ASSERT_EQ(s.baseline_log_rate_per_week.size(), 52u);
  EXPECT_NEAR(s.baseline_log_rate_per_week[20], std::log(0.001), 1e-12);
  EXPECT_NEAR(s.uptake_curve[7], 0.01, 1e-12);
  EXPECT_NEAR(s.true_log_rr, std::log(3.0), 1e-12);
}

TEST(Config, ErrorsNameTheKey) {
  EXPECT_NE(error_of("[run]\nscenario = e3\n[cohort]\nn_subjectz = 5\n").find("cohort.n_subjectz"), std::string::npos);
  EXPECT_NE(error_of("[run]\nscenario = e3\n[cohort]\nn_subjects = many\n").find("cohort.n_subjects"), std::string::npos);
  // keys of another scenario are rejected, not ignored
  EXPECT_NE(error_of("[run]\nscenario = e1\n[bias]\nchains = 2\n").find("bias.chains"), std::string::npos);
  EXPECT_NE(error_of("[run]\nscenario = e2\n[cohort]\ntrue_rr = 2\ntrue_log_rr = 0.5\n"), "");
  EXPECT_NE(error_of("[run]\nscenario = e9\n").find("e9"), std::string::npos);
  EXPECT_NE(error_of("[run]\nscenario = e3\n[design]\ndesigns = hc_unadjusted_w7\n"), "");
  EXPECT_NE(error_of("[run]\nscenario = e3\n[bias]\niterations = 600\nburn_in = 500\nthin = 1\n"), "");
  EXPECT_NE(error_of("[run\nscenario = e3\n"), "");
  EXPECT_THROW(load_config(kConfigs / "missing.ini"), IoError);
}

TEST(Config, SeedAndJobs) {
  auto c = preset(Scenario::e2);
  c.set_seed(99);
  EXPECT_EQ(c.seed(), 99u);
  EXPECT_EQ(c.e2.seed, 99u);
  const auto text = to_ini(c);
  EXPECT_EQ(parse_config_text(text).seed(), 99u);
  // worker count is not part of the configuration identity
  c.set_jobs(8);
  EXPECT_EQ(to_ini(c), text);
}

TEST(Sha256, KnownVectors) {
  EXPECT_EQ(sha256_hex(""), "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  EXPECT_EQ(sha256_hex("abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  const auto dir = scratch("sha");
  std::ofstream(dir / "f") << "abc";
  EXPECT_EQ(sha256_file(dir / "f"), sha256_hex("abc"));
  fs::remove_all(dir);
}

TEST(Manifest, HashIgnoresTimestampsAndOutputs) {
  auto m = make_manifest(preset(Scenario::e1));
  const auto h = m.hash();
  EXPECT_EQ(h.size(), 64u);
  m.steps["simulate"] = {utc_timestamp(), utc_timestamp(), {{"data/counts.csv", "00"}}};
  EXPECT_EQ(m.hash(), h);
  auto other = preset(Scenario::e1);
  other.set_seed(5);
  EXPECT_NE(make_manifest(other).hash(), h);
  EXPECT_EQ(manifest_comment(h), "# manifest: " + h + "\n");
}

TEST(Manifest, SaveLoadAndTamper) {
  const auto dir = scratch("manifest");
  auto m = make_manifest(preset(Scenario::e3));
  m.steps["cv"] = {"2026-01-01T00:00:00Z", "2026-01-01T00:01:00Z", {{"cv/x.json", "ab"}}};
  m.save(dir / "manifest.json");
  const auto back = RunManifest::load(dir / "manifest.json");
  EXPECT_EQ(back.hash(), m.hash());
  EXPECT_EQ(back.config_text, m.config_text);
  EXPECT_EQ(back.seeds, m.seeds);
  EXPECT_EQ(back.steps.at("cv").outputs, m.steps.at("cv").outputs);

  auto j = nlohmann::json::parse(read_file(dir / "manifest.json"));
  j["master_seed"] = 1;
  write_file_atomic(dir / "manifest.json", j.dump());
  EXPECT_THROW(RunManifest::load(dir / "manifest.json"), IoError);
  write_file_atomic(dir / "manifest.json", "{");
  EXPECT_THROW(RunManifest::load(dir / "manifest.json"), IoError);
  fs::remove_all(dir);
}

TEST(Csv, ReaderAndFormatting) {
  for (double v : {0.1, 1.0 / 3.0, -2.5e-300, 123456789.0, 0.0}) EXPECT_EQ(std::stod(format_real(v)), v);
  EXPECT_EQ(format_real(0.5), "0.5");
  EXPECT_EQ(split_commas("a,,b"), (std::vector<std::string>{"a", "", "b"}));

  std::stringstream in("# manifest: abc\nx,y\n1,2.5\n# note\n3,4\n");
  CsvReader reader(in);
  reader.expect_header({"x", "y"});
  EXPECT_EQ(reader.manifest_hash(), "abc");
  auto r = reader.next();
  ASSERT_TRUE(r);
  EXPECT_EQ(r->as_long(0), 1);
  EXPECT_EQ(r->as_double(1), 2.5);
  r = reader.next();
  EXPECT_EQ(r->as_long(0), 3);
  EXPECT_FALSE(reader.next());

  std::stringstream bad_header("x,z\n");
  CsvReader b(bad_header);
  EXPECT_THROW(b.expect_header({"x", "y"}), IoError);
  std::stringstream ragged("x,y\n1\n");
  CsvReader rg(ragged);
  rg.expect_header({"x", "y"});
  EXPECT_THROW(rg.next(), IoError);
  std::stringstream word("x\nfoo\n");
  CsvReader w(word);
  w.expect_header({"x"});
  EXPECT_THROW(w.next()->as_double(0), IoError);
}
