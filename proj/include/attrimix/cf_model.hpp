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

// NCF-MLP style recommender built on the interpretable network.
//
// The network input is the concatenation of four feature groups:
//   c_u  user content embedding (projection of the one-hot side features)
//   p_u  user collaborative embedding
//   c_i  item content embedding
//   q_i  item collaborative embedding
// Their widths are the sizes of the scheme groups with those names.

#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "attrimix/masked_network.hpp"
#include "attrimix/metrics.hpp"
#include "attrimix/mixture.hpp"
#include "attrimix/movielens.hpp"

namespace attrimix {

inline constexpr const char* kUserContent = "c_u";
inline constexpr const char* kUserEmbedding = "p_u";
inline constexpr const char* kItemContent = "c_i";
inline constexpr const char* kItemEmbedding = "q_i";

// Contiguous partition c_u, p_u, c_i, q_i.
FeaturePartition cf_partition(std::size_t embedding_dim, std::size_t content_dim);

class CfModel : public ExpertModel {
 public:
  CfModel(const InteractionDataset& data, InterpretationScheme scheme,
          std::vector<std::vector<std::size_t>> hidden_widths,
          Activation activation, std::uint64_t seed);

  const InterpretationScheme& scheme() const override { return mlp_.scheme(); }
  Var forward(Tape& tape, const Batch& batch) const override;
  Tensor forward(const Batch& batch) const override;
  std::vector<Parameter*> parameters() override;
  void apply_constraints() override { mlp_.apply_mask_constraint(); }
  std::size_t parameter_count() const override;

  const InterpretableMLP& mlp() const { return mlp_; }

 private:
  Var embed(Tape& tape, const Batch& batch, bool trainable) const;

  Tensor user_features_;
  Tensor item_features_;
  Parameter user_embedding_;
  Parameter item_embedding_;
  Parameter user_content_;
  Parameter item_content_;
  // Group order by feature offset.
  std::vector<std::string> group_order_;
  InterpretableMLP mlp_;
};

// Closed-form count of the trainable scalars of an InterpretableMLP.
std::size_t count_mlp_parameters(
    const InterpretationScheme& scheme,
    const std::vector<std::vector<std::size_t>>& hidden_widths);

// Closed-form count of a CfModel.
std::size_t count_cf_parameters(
    std::size_t num_users, std::size_t num_items, std::size_t user_feature_dim,
    std::size_t item_feature_dim, const InterpretationScheme& scheme,
    const std::vector<std::vector<std::size_t>>& hidden_widths);

// Training pairs: every train positive plus `negatives_per_positive` uniform
// never-interacted items, resampled each epoch. Validation is HR@10 of the
// held-out validation item against the user's evaluation negatives.
class CfTrainingData : public TrainingData {
 public:
  CfTrainingData(const EvalSplit& split, std::size_t num_items,
                 std::size_t negatives_per_positive = 4);

  void begin_epoch(Rng& rng) override;
  std::size_t num_batches(std::size_t batch_size) const override;
  Batch batch(std::size_t index, std::size_t batch_size) const override;
  double validate(const ExpertModel& model,
                  const SelectionConfig& inference) const override;
  bool higher_is_better() const override { return true; }
  std::string metric_name() const override { return "val_hr@10"; }

 private:
  const EvalSplit& split_;
  std::size_t num_items_;
  std::size_t negatives_per_positive_;
  std::vector<std::size_t> users_;
  std::vector<std::size_t> items_;
  std::vector<double> labels_;
};

struct RankingReport {
  double hr = 0.0;
  double ndcg = 0.0;
  std::vector<std::size_t> ranks;  // per evaluated user
  // Predictions on each user's held-out positive pair.
  MixturePrediction positives;
};

enum class HeldOut { kTest, kValidation };

RankingReport evaluate_ranking(const ExpertModel& model, const EvalSplit& split,
                               const SelectionConfig& inference,
                               HeldOut which = HeldOut::kTest,
                               std::size_t k = 10);

}  // namespace attrimix
