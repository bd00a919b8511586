/*
 * @file grid.hpp
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

#include <cstddef>
#include <span>
#include <vector>

namespace seqsafety {

// Equally spaced log-RR grid shared by every likelihood profile and grid
// posterior. Default is 1001 points on [-4, 4]; beta = 0 is a grid point.
class BetaGrid {
 public:
  static constexpr double kDefaultLower = -4.0;
  static constexpr double kDefaultUpper = 4.0;
  static constexpr std::size_t kDefaultSize = 1001;

  BetaGrid() = default;
  BetaGrid(double lower, double upper, std::size_t size);

  std::size_t size() const { return size_; }
  double lower() const { return lower_; }
  double upper() const { return upper_; }
  double step() const { return (upper_ - lower_) / static_cast<double>(size_ - 1); }

  double operator[](std::size_t j) const {
    return lower_ + (upper_ - lower_) * static_cast<double>(j) / static_cast<double>(size_ - 1);
  }

  std::vector<double> points() const;

  // Index of the largest grid point <= beta, clamped to [0, size-1].
  std::size_t floor_index(double beta) const;

  // Index of the grid point equal to zero (grid must contain it).
  std::size_t zero_index() const;

  bool operator==(const BetaGrid&) const = default;

 private:
  double lower_ = kDefaultLower;
  double upper_ = kDefaultUpper;
  std::size_t size_ = kDefaultSize;
};

double log_sum_exp(std::span<const double> values);

// Trapezoid-rule weights (1/2 at both ends, 1 elsewhere) times the step.
std::vector<double> trapezoid_weights(const BetaGrid& grid);

}  // namespace seqsafety
