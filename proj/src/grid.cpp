/*
 * @file grid.cpp
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

#include "seqsafety/grid.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace seqsafety {

BetaGrid::BetaGrid(double lower, double upper, std::size_t size)
    : lower_(lower), upper_(upper), size_(size) {
  if (!(upper > lower) || size < 3) {
    throw std::invalid_argument("BetaGrid needs upper > lower and at least 3 points");
  }
}

std::vector<double> BetaGrid::points() const {
  std::vector<double> out(size_);
  for (std::size_t j = 0; j < size_; ++j) out[j] = (*this)[j];
  return out;
}

std::size_t BetaGrid::floor_index(double beta) const {
  if (!(beta > lower_)) return 0;
  if (beta >= upper_) return size_ - 1;
  auto j = static_cast<std::size_t>((beta - lower_) / step());
  j = std::min(j, size_ - 1);
  // guard against rounding in the division
  if (j > 0 && (*this)[j] > beta) --j;
  else if (j + 1 < size_ && (*this)[j + 1] <= beta) ++j;
  return j;
}

std::size_t BetaGrid::zero_index() const {
  std::size_t j = floor_index(0.0);
  if ((*this)[j] != 0.0) {
    throw std::logic_error("grid does not contain beta = 0");
  }
  return j;
}

double log_sum_exp(std::span<const double> values) {
  double m = -std::numeric_limits<double>::infinity();
  for (double v : values) m = std::max(m, v);
  if (!std::isfinite(m)) return m;
  double s = 0.0;
  for (double v : values) s += std::exp(v - m);
  return m + std::log(s);
}

std::vector<double> trapezoid_weights(const BetaGrid& grid) {
  std::vector<double> w(grid.size(), grid.step());
  w.front() *= 0.5;
  w.back() *= 0.5;
  return w;
}

}  // namespace seqsafety
