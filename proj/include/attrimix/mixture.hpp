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

// Selection functions, attributions and Generalised-EM training of a mixture
// of input-restricted experts.

#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "attrimix/autodiff.hpp"
#include "attrimix/masked_network.hpp"
#include "attrimix/random.hpp"
#include "attrimix/scheme.hpp"

namespace attrimix {

// A minibatch. Dense models read `features`; collaborative-filtering models
// read `users` and `items`.
struct Batch {
  Tensor features;
  std::vector<std::size_t> users;
  std::vector<std::size_t> items;
  Eigen::VectorXd labels;

  std::size_t size() const { return static_cast<std::size_t>(labels.size()); }
};

// Anything producing the raw expert outputs F (batch x H, in (-1, 1)).
class ExpertModel {
 public:
  virtual ~ExpertModel() = default;
  virtual const InterpretationScheme& scheme() const = 0;
  virtual Var forward(Tape& tape, const Batch& batch) const = 0;
  virtual Tensor forward(const Batch& batch) const = 0;
  virtual std::vector<Parameter*> parameters() = 0;
  virtual void apply_constraints() = 0;
  virtual std::size_t parameter_count() const = 0;
};

// InterpretableMLP over dense features.
class DenseExpertModel : public ExpertModel {
 public:
  explicit DenseExpertModel(InterpretableMLP mlp) : mlp_(std::move(mlp)) {}

  const InterpretationScheme& scheme() const override { return mlp_.scheme(); }
  Var forward(Tape& tape, const Batch& batch) const override;
  Tensor forward(const Batch& batch) const override;
  std::vector<Parameter*> parameters() override { return mlp_.parameters(); }
  void apply_constraints() override { mlp_.apply_mask_constraint(); }
  std::size_t parameter_count() const override { return mlp_.parameter_count(); }

  InterpretableMLP& mlp() { return mlp_; }
  const InterpretableMLP& mlp() const { return mlp_; }

 private:
  InterpretableMLP mlp_;
};

enum class SelectionVariant { kAbs, kSquare, kSmooth };

SelectionVariant selection_from_string(const std::string& name);
std::string to_string(SelectionVariant v);

struct SelectionConfig {
  SelectionVariant variant = SelectionVariant::kAbs;
  // Exponent of the smooth variant; must exceed 1.
  double power = 2.0;
  // Below this total attribution the mixture falls back to a plain average.
  double epsilon = 1e-12;

  void validate() const;
};

// f = (F + 1) / 2
Tensor expert_probability(const Tensor& raw);

// abs: |F|, square: F^2, smooth(p): 2|F|^p / (1 + |F|^(p-1)).
Tensor selection_g(const Tensor& raw, const SelectionConfig& config);

// Atomic subsets: alpha_i = g_i. Mixed subsets:
// alpha_i = g_i * prod_{j strictly inside S_i} (1 - g_j).
Tensor attribution_alpha(const Tensor& g, const InterpretationScheme& scheme);

// sum_i alpha_i f_i / sum_i alpha_i, or the plain mean of f where the total
// attribution is at most epsilon.
Eigen::VectorXd mixture_forward(const Tensor& f, const Tensor& alpha,
                                double epsilon);

struct MixturePrediction {
  Tensor raw;    // F
  Tensor prob;   // f
  Tensor g;
  Tensor alpha;
  // alpha / sum(alpha); all zeros for unselected samples.
  Tensor alpha_normalized;
  Eigen::VectorXd y_hat;
  // Per sample: argmax of alpha, ties towards the smaller subset. Samples with
  // no selection report the smallest subset and selected[s] == false.
  std::vector<std::size_t> attributed;
  std::vector<bool> selected;
};

MixturePrediction predict_with_attribution(const ExpertModel& model,
                                           const Batch& batch,
                                           const SelectionConfig& config);

// Builds the prediction from already computed raw outputs.
MixturePrediction mixture_from_raw(const Tensor& raw,
                                   const InterpretationScheme& scheme,
                                   const SelectionConfig& config);

enum class Objective {
  // sum_i stop_gradient(alpha_i) * BCE(y, f_i), the GEM M-step.
  kMixture,
  // BCE(y, f_1) of a single-expert network; the non-interpretable control.
  kPlain,
};

Objective objective_from_string(const std::string& name);
std::string to_string(Objective o);

struct GemConfig {
  double learning_rate = 1e-3;
  double plateau_factor = 0.5;
  std::size_t plateau_patience = 3;
  double lr_floor = 1e-6;
  std::size_t batch_size = 64;
  std::size_t epochs = 10;
  std::uint64_t seed = 0;
  SelectionConfig selection;            // used for the E-step weights
  SelectionConfig inference_selection;  // used for predictions
  Objective objective = Objective::kMixture;
  // Restore the parameters of the best validation epoch when training ends.
  bool keep_best = false;

  void validate() const;
};

inline constexpr double kProbabilityClamp = 1e-7;

// Weighted BCE of one batch on the tape; `alpha` is treated as a constant.
Var mixture_loss(const Var& raw, const Tensor& alpha,
                 const Eigen::VectorXd& labels);

// One E-step + gradient M-step. Returns the batch loss before the update.
double gem_step(ExpertModel& model, const Batch& batch, const GemConfig& config,
                AdamState& optimizer, std::size_t step_index = 0);

class TrainingData {
 public:
  virtual ~TrainingData() = default;
  // Reshuffles (and for implicit feedback, resamples negatives).
  virtual void begin_epoch(Rng& rng) = 0;
  virtual std::size_t num_batches(std::size_t batch_size) const = 0;
  virtual Batch batch(std::size_t index, std::size_t batch_size) const = 0;
  virtual double validate(const ExpertModel& model,
                          const SelectionConfig& inference) const = 0;
  virtual bool higher_is_better() const = 0;
  virtual std::string metric_name() const = 0;
};

struct EpochRecord {
  std::size_t epoch = 0;
  double train_loss = 0.0;
  double val_metric = 0.0;
  double learning_rate = 0.0;
};

struct TrainResult {
  std::vector<EpochRecord> history;
  std::size_t steps = 0;
  std::size_t best_epoch = 0;
};

TrainResult train(ExpertModel& model, TrainingData& data,
                  const GemConfig& config);

// Rows: epoch,train_loss,val_metric,lr
void write_history_csv(std::ostream& out, const std::vector<EpochRecord>& history);

// Dense features with a held-out validation split; validation metric is the
// binary cross-entropy of the mixture prediction (lower is better).
class DenseTrainingData : public TrainingData {
 public:
  DenseTrainingData(Tensor features, Eigen::VectorXd labels,
                    Tensor val_features, Eigen::VectorXd val_labels);

  void begin_epoch(Rng& rng) override;
  std::size_t num_batches(std::size_t batch_size) const override;
  Batch batch(std::size_t index, std::size_t batch_size) const override;
  double validate(const ExpertModel& model,
                  const SelectionConfig& inference) const override;
  bool higher_is_better() const override { return false; }
  std::string metric_name() const override { return "val_bce"; }

 private:
  Tensor features_;
  Eigen::VectorXd labels_;
  Tensor val_features_;
  Eigen::VectorXd val_labels_;
  std::vector<std::size_t> order_;
};

}  // namespace attrimix
