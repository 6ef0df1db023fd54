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

#include "attrimix/metrics.hpp"

#include <cmath>

#include "attrimix/errors.hpp"

namespace attrimix {

std::size_t rank_of_positive(double positive_score, std::size_t positive_item,
                             std::span<const double> negative_scores,
                             std::span<const std::size_t> negative_items) {
  if (negative_scores.size() != negative_items.size()) {
    throw DimensionError("rank_of_positive: scores and items differ in length");
  }
  std::size_t rank = 1;
  for (std::size_t k = 0; k < negative_scores.size(); ++k) {
    if (negative_scores[k] > positive_score ||
        (negative_scores[k] == positive_score && negative_items[k] < positive_item)) {
      ++rank;
    }
  }
  return rank;
}

double hr_at_k(std::size_t rank, std::size_t k) {
  if (rank == 0) throw ContractError("ranks are 1-based");
  return rank <= k ? 1.0 : 0.0;
}

double ndcg_at_k(std::size_t rank, std::size_t k) {
  if (rank == 0) throw ContractError("ranks are 1-based");
  return rank <= k ? 1.0 / std::log2(static_cast<double>(rank) + 1.0) : 0.0;
}

double accuracy(const Eigen::VectorXd& probabilities,
                const Eigen::VectorXd& labels, double threshold) {
  if (probabilities.size() != labels.size()) {
    throw DimensionError("accuracy: predictions and labels differ in length");
  }
  if (labels.size() == 0) return 0.0;
  Index correct = 0;
  for (Index s = 0; s < labels.size(); ++s) {
    const double predicted = probabilities(s) >= threshold ? 1.0 : 0.0;
    if (predicted == labels(s)) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(labels.size());
}

double average_accuracy(const SessionPrediction& session) {
  const std::size_t t = session.truth.size();
  if (t == 0) throw ContractError("average_accuracy of an empty session");
  if (session.predicted.size() != t) {
    throw DimensionError("session predictions and labels differ in length");
  }
  double total = 0.0;
  std::size_t correct = 0;
  for (std::size_t j = 0; j < t; ++j) {
    if (session.predicted[j] == session.truth[j]) {
      ++correct;
      total += static_cast<double>(correct) / static_cast<double>(j + 1);
    }
  }
  return total / static_cast<double>(t);
}

double maa(std::span<const SessionPrediction> sessions) {
  if (sessions.empty()) throw ContractError("maa over no sessions");
  double total = 0.0;
  for (const auto& s : sessions) total += average_accuracy(s);
  return total / static_cast<double>(sessions.size());
}

std::vector<int> baseline_last(std::span<const int> first_half,
                               std::size_t length) {
  if (first_half.empty()) throw ContractError("baseline on an empty first half");
  return std::vector<int>(length, first_half.back());
}

std::vector<int> baseline_mean(std::span<const int> first_half,
                               std::size_t length) {
  if (first_half.empty()) throw ContractError("baseline on an empty first half");
  std::size_t skips = 0;
  for (int s : first_half) skips += s != 0 ? 1 : 0;
  // mean >= 0.5 without floating point
  const int label = 2 * skips >= first_half.size() ? 1 : 0;
  return std::vector<int>(length, label);
}

AttributionHistogram attribution_histogram(
    std::span<const MixturePrediction> predictions) {
  AttributionHistogram hist;
  std::size_t h = 0;
  for (const auto& p : predictions) {
    if (p.alpha.rows() == 0) continue;
    if (h == 0) h = static_cast<std::size_t>(p.alpha.cols());
    if (static_cast<std::size_t>(p.alpha.cols()) != h) {
      throw DimensionError("attribution_histogram: mixed expert counts");
    }
    hist.samples += static_cast<std::size_t>(p.alpha.rows());
  }
  if (hist.samples == 0) throw ContractError("attribution_histogram of nothing");
  hist.argmax_fraction.assign(h, 0.0);
  hist.mean_alpha.assign(h, 0.0);
  std::size_t unselected = 0;
  std::vector<std::size_t> counts(h, 0);
  for (const auto& p : predictions) {
    for (Index s = 0; s < p.alpha.rows(); ++s) {
      const auto idx = static_cast<std::size_t>(s);
      if (p.selected[idx]) {
        ++counts[p.attributed[idx]];
      } else {
        ++unselected;
      }
      for (std::size_t i = 0; i < h; ++i) {
        hist.mean_alpha[i] += p.alpha(s, static_cast<Index>(i));
      }
    }
  }
  const auto n = static_cast<double>(hist.samples);
  for (std::size_t i = 0; i < h; ++i) {
    hist.argmax_fraction[i] = static_cast<double>(counts[i]) / n;
    hist.mean_alpha[i] /= n;
  }
  hist.no_selection_fraction = static_cast<double>(unselected) / n;
  return hist;
}

}  // namespace attrimix
