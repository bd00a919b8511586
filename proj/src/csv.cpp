/*
 * @file csv.cpp
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

#include "seqsafety/csv.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <sstream>

#include <fmt/format.h>

#include "seqsafety/errors.hpp"

namespace seqsafety {

long CsvRow::as_long(std::size_t i) const {
  const std::string& s = fields_.at(i);
  long v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw IoError(fmt::format("line {}: expected an integer, got '{}'", line_, s));
  }
  return v;
}

double CsvRow::as_double(std::size_t i) const {
  const std::string& s = fields_.at(i);
  if (s == "inf") return HUGE_VAL;
  if (s == "-inf") return -HUGE_VAL;
  if (s == "nan" || s == "NA") return std::nan("");
  double v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw IoError(fmt::format("line {}: expected a number, got '{}'", line_, s));
  }
  return v;
}

std::vector<std::string> split_commas(std::string_view line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    auto pos = line.find(',', start);
    out.emplace_back(line.substr(start, pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

std::optional<std::string> CsvReader::next_line() {
  std::string line;
  while (std::getline(in_, line)) {
    ++line_;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line.front() == '#') {
      constexpr std::string_view tag = "# manifest: ";
      if (manifest_hash_.empty() && line.starts_with(tag)) manifest_hash_ = line.substr(tag.size());
      continue;
    }
    return line;
  }
  return std::nullopt;
}

std::vector<std::string> CsvReader::header() {
  auto line = next_line();
  if (!line) throw IoError("missing CSV header");
  auto cols = split_commas(*line);
  width_ = cols.size();
  return cols;
}

void CsvReader::expect_header(std::initializer_list<std::string_view> columns) {
  auto cols = header();
  bool ok = cols.size() == columns.size();
  std::size_t i = 0;
  for (auto c : columns) {
    if (!ok) break;
    ok = cols[i++] == c;
  }
  if (!ok) {
    std::string want;
    for (auto c : columns) want += std::string(c) + ",";
    want.pop_back();
    throw IoError(fmt::format("unexpected CSV header; want {}", want));
  }
}

std::optional<CsvRow> CsvReader::next() {
  auto line = next_line();
  if (!line) return std::nullopt;
  auto fields = split_commas(*line);
  if (width_ != 0 && fields.size() != width_) {
    throw IoError(fmt::format("line {}: expected {} fields, got {}", line_, width_, fields.size()));
  }
  return CsvRow(std::move(fields), line_);
}

std::string format_real(double value) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  return fmt::format("{}", value);
}

void write_file_atomic(const std::filesystem::path& path, std::string_view content) {
  namespace fs = std::filesystem;
  std::error_code ec;
  if (path.has_parent_path()) fs::create_directories(path.parent_path(), ec);
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError(fmt::format("cannot open {} for writing", tmp.string()));
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.flush();
    if (!out) throw IoError(fmt::format("write failed for {}", tmp.string()));
  }
  fs::rename(tmp, path, ec);
  if (ec) throw IoError(fmt::format("cannot rename {} to {}: {}", tmp.string(), path.string(), ec.message()));
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(fmt::format("cannot open {}", path.string()));
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace seqsafety
