/*
 * Copyright 2026 The attrimix Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
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

#include "attrimix/mixture.hpp"

namespace attrimix {

// 1-based rank of the positive among positive + negatives, highest score
// first; equal scores are ordered by item id ascending.
std::size_t rank_of_positive(double positive_score, std::size_t positive_item,
                             std::span<const double> negative_scores,
                             std::span<const std::size_t> negative_items);

double hr_at_k(std::size_t rank, std::size_t k);
// 1 / log2(rank + 1) inside the cutoff.
double ndcg_at_k(std::size_t rank, std::size_t k);

double accuracy(const Eigen::VectorXd& probabilities,
                const Eigen::VectorXd& labels, double threshold = 0.5);

// Predicted and true labels over the second half of a session.
struct SessionPrediction {
  std::vector<int> predicted;
  std::vector<int> truth;
};

// sum_j acc(j) * L(j) / T, acc(j) the accuracy over the first j positions
// and L(j) = 1 iff position j is correct.
double average_accuracy(const SessionPrediction& session);
double maa(std::span<const SessionPrediction> sessions);

// Repeats the last skip value of the first half.
std::vector<int> baseline_last(std::span<const int> first_half,
                               std::size_t length);
// 1 iff the mean skip rate of the first half is >= 0.5.
std::vector<int> baseline_mean(std::span<const int> first_half,
                               std::size_t length);

struct AttributionHistogram {
  std::vector<double> argmax_fraction;  // per expert, selected samples only
  std::vector<double> mean_alpha;       // per expert, over all samples
  double no_selection_fraction = 0.0;
  std::size_t samples = 0;
};

// argmax fractions plus the no-selection fraction sum to 1.
AttributionHistogram attribution_histogram(
    std::span<const MixturePrediction> predictions);

}  // namespace attrimix
