/*
 * @file csv.hpp
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

#include <filesystem>
#include <initializer_list>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace seqsafety {

// Comma-separated, unquoted rows. Lines starting with '#' are comments.
class CsvRow {
 public:
  explicit CsvRow(std::vector<std::string> fields, long line) : fields_(std::move(fields)), line_(line) {}

  std::size_t size() const { return fields_.size(); }
  const std::string& operator[](std::size_t i) const { return fields_.at(i); }
  long as_long(std::size_t i) const;
  double as_double(std::size_t i) const;

 private:
  std::vector<std::string> fields_;
  long line_;
};

class CsvReader {
 public:
  explicit CsvReader(std::istream& in) : in_(in) {}

  // Reads the header row and checks it column by column.
  void expect_header(std::initializer_list<std::string_view> columns);
  std::vector<std::string> header();
  std::optional<CsvRow> next();
  long line_number() const { return line_; }
  // Value of the first "# manifest: <hash>" comment seen so far.
  const std::string& manifest_hash() const { return manifest_hash_; }

 private:
  std::optional<std::string> next_line();

  std::istream& in_;
  long line_ = 0;
  std::string manifest_hash_;
  std::size_t width_ = 0;
};

std::vector<std::string> split_commas(std::string_view line);

// Shortest decimal that round-trips the double.
std::string format_real(double value);

// Writes through a temporary file in the same directory, then renames.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);
std::string read_file(const std::filesystem::path& path);

}  // namespace seqsafety
