/*
 * @file test_rng_grid.cpp
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

#include <cmath>
#include <set>
#include <vector>

#include <gtest/gtest.h>

#include "seqsafety/grid.hpp"
#include "seqsafety/parallel.hpp"
#include "seqsafety/rng.hpp"

using namespace seqsafety;

TEST(SplitMix64, ReferenceSequence) {
  // First outputs of the reference implementation seeded with 0.
  SplitMix64 rng(0);
  EXPECT_EQ(rng(), 0xe220a8397b1dcdafULL);
  EXPECT_EQ(rng(), 0x6e789e6aa1b965f4ULL);
  EXPECT_EQ(rng(), 0x06c45d188009454fULL);
}

TEST(SplitMix64, UniformStaysInOpenInterval) {
  SplitMix64 rng(7);
  double sum = 0.0;
  const int n = 100000;
  for (int i = 0; i < n; ++i) {
    const double u = uniform_open01(rng);
    ASSERT_GT(u, 0.0);
    ASSERT_LT(u, 1.0);
    sum += u;
  }
  // mean of n uniforms has sd 1/sqrt(12 n)
  EXPECT_NEAR(sum / n, 0.5, 4.0 / std::sqrt(12.0 * n));
}

TEST(DeriveSeed, DeterministicAndDistinct) {
  EXPECT_EQ(derive_seed(42, "e3"), derive_seed(42, "e3"));
  EXPECT_NE(derive_seed(42, "e3"), derive_seed(42, "e2"));
  EXPECT_NE(derive_seed(42, "e3"), derive_seed(43, "e3"));
  std::set<std::uint64_t> seen;
  for (std::uint64_t i = 0; i < 10000; ++i) seen.insert(derive_seed(1, i));
  EXPECT_EQ(seen.size(), 10000u);
  // label and index paths do not collide trivially
  EXPECT_NE(derive_seed(5, std::uint64_t{0}), derive_seed(5, ""));
}

TEST(BetaGrid, DefaultShape) {
  const BetaGrid g;
  EXPECT_EQ(g.size(), 1001u);
  EXPECT_DOUBLE_EQ(g[0], -4.0);
  EXPECT_DOUBLE_EQ(g[1000], 4.0);
  EXPECT_DOUBLE_EQ(g.step(), 0.008);
  EXPECT_EQ(g.zero_index(), 500u);
  EXPECT_EQ(g[g.zero_index()], 0.0);
}

TEST(BetaGrid, FloorIndexMatchesLinearScan) {
  const BetaGrid g;
  const auto pts = g.points();
  SplitMix64 rng(11);
  auto scan = [&](double b) {
    std::size_t j = 0;
    for (std::size_t k = 0; k < pts.size(); ++k) {
      if (pts[k] <= b) j = k;
    }
    return j;
  };
  for (int i = 0; i < 5000; ++i) {
    const double b = -5.0 + 10.0 * uniform_open01(rng);
    ASSERT_EQ(g.floor_index(b), scan(b)) << b;
  }
  // exact grid points land on themselves
  for (std::size_t j = 0; j < pts.size(); ++j) ASSERT_EQ(g.floor_index(pts[j]), j);
}

TEST(BetaGrid, ZeroIndexRequiresZeroPoint) {
  const BetaGrid odd(-1.0, 2.0, 4);  // -1, 0, 1, 2
  EXPECT_EQ(odd.zero_index(), 1u);
  const BetaGrid none(-1.0, 1.0, 4);
  EXPECT_THROW(none.zero_index(), std::logic_error);
}

TEST(LogSumExp, StableAtExtremes) {
  const std::vector<double> v{-1000.0, -1000.0};
  EXPECT_NEAR(log_sum_exp(v), -1000.0 + std::log(2.0), 1e-12);
  const std::vector<double> w{-INFINITY, -INFINITY};
  EXPECT_EQ(log_sum_exp(w), -INFINITY);
}

TEST(Trapezoid, IntegratesLinearFunctionsExactly) {
  const BetaGrid g(-2.0, 3.0, 51);
  const auto w = trapezoid_weights(g);
  double total = 0.0, first = 0.0;
  for (std::size_t j = 0; j < g.size(); ++j) {
    total += w[j];
    first += w[j] * g[j];
  }
  EXPECT_NEAR(total, 5.0, 1e-12);
  EXPECT_NEAR(first, (9.0 - 4.0) / 2.0, 1e-12);
}

TEST(ParallelFor, ResultsIndependentOfJobs) {
  auto run = [](int jobs) {
    std::vector<std::uint64_t> out(257);
    parallel_for(out.size(), jobs, [&](std::size_t i) {
      SplitMix64 rng(derive_seed(9, i));
      out[i] = rng();
    });
    return out;
  };
  EXPECT_EQ(run(1), run(4));
}

TEST(ParallelFor, RethrowsFirstError) {
  EXPECT_THROW(parallel_for(10, 3,
                            [](std::size_t i) {
                              if (i == 5) throw std::runtime_error("boom");
                            }),
               std::runtime_error);
}
