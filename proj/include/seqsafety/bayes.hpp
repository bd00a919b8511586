/*
 * @file bayes.hpp
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

#include <span>
#include <vector>

#include "seqsafety/design_likelihood.hpp"
#include "seqsafety/maxsprt.hpp"
#include "seqsafety/rng.hpp"

namespace seqsafety {

// Normal prior on the log-RR. A zero mean gives H0 and H1 equal prior mass.
struct PriorSpec {
  double mean = 0.0;
  double variance = 4.0;

  void validate() const;
};

struct GridPosterior {
  BetaGrid grid;
  std::vector<double> log_density;  // normalized: trapezoid integral of exp is 1
  double p_h1 = 0.5;
  double mean = 0.0;
  double sd = 0.0;
  double median = 0.0;
  double lo95 = 0.0;
  double hi95 = 0.0;

  double p_h0() const { return 1.0 - p_h1; }
  // Inverse CDF by linear interpolation of the trapezoid CDF.
  double quantile(double q) const;
  // Exact inverse-CDF draw from the piecewise-linear CDF.
  double sample(SplitMix64& rng) const;

 private:
  friend GridPosterior posterior(const LikelihoodProfile&, const PriorSpec&);
  std::vector<double> cdf_;
};

void validate_threshold(double delta1);

GridPosterior posterior(const LikelihoodProfile& profile, const PriorSpec& prior);

// Trapezoid mass over beta > 0 (the zero point carries half weight).
double posterior_probability_h1(const GridPosterior& post);

// m1 / m0 with m_i the prior-weighted likelihood integral over H_i. Returns
// +infinity when m0 underflows.
double bayes_factor(const LikelihoodProfile& profile, const PriorSpec& prior);

// First look with p_h1 > delta1. NaN entries mark skipped looks.
SequentialDecision run_bayes(std::span<const double> p_h1_by_look, double delta1);
SequentialDecision run_bayes(std::span<const GridPosterior> posteriors_by_look, double delta1);

}  // namespace seqsafety
