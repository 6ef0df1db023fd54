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

#include "attrimix/mixture.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <ostream>

#include "attrimix/errors.hpp"

namespace attrimix {

Var DenseExpertModel::forward(Tape& tape, const Batch& batch) const {
  return mlp_.forward(tape, tape.constant(batch.features));
}

Tensor DenseExpertModel::forward(const Batch& batch) const {
  return mlp_.forward(batch.features);
}

SelectionVariant selection_from_string(const std::string& name) {
  if (name == "abs") return SelectionVariant::kAbs;
  if (name == "square") return SelectionVariant::kSquare;
  if (name == "smooth") return SelectionVariant::kSmooth;
  throw ContractError("unknown selection variant '" + name + "'");
}

std::string to_string(SelectionVariant v) {
  switch (v) {
    case SelectionVariant::kAbs:
      return "abs";
    case SelectionVariant::kSquare:
      return "square";
    case SelectionVariant::kSmooth:
      return "smooth";
  }
  return "abs";
}

void SelectionConfig::validate() const {
  if (variant == SelectionVariant::kSmooth && !(power > 1.0)) {
    throw ContractError("smooth selection needs power > 1");
  }
  if (!(epsilon > 0.0)) throw ContractError("selection epsilon must be > 0");
}

Objective objective_from_string(const std::string& name) {
  if (name == "mixture") return Objective::kMixture;
  if (name == "plain") return Objective::kPlain;
  throw ContractError("unknown objective '" + name + "'");
}

std::string to_string(Objective o) {
  return o == Objective::kPlain ? "plain" : "mixture";
}

void GemConfig::validate() const {
  if (!(learning_rate > 0.0)) throw ContractError("learning rate must be > 0");
  if (lr_floor > learning_rate) {
    throw ContractError("learning-rate floor exceeds the learning rate");
  }
  if (!(plateau_factor > 0.0 && plateau_factor <= 1.0)) {
    throw ContractError("plateau factor must lie in (0, 1]");
  }
  if (batch_size == 0) throw ContractError("batch size must be positive");
  selection.validate();
  inference_selection.validate();
}

Tensor expert_probability(const Tensor& raw) {
  return ((raw.array() + 1.0) * 0.5).matrix();
}

Tensor selection_g(const Tensor& raw, const SelectionConfig& config) {
  switch (config.variant) {
    case SelectionVariant::kAbs:
      return raw.cwiseAbs();
    case SelectionVariant::kSquare:
      return raw.cwiseAbs2();
    case SelectionVariant::kSmooth: {
      const auto a = raw.array().abs();
      return (2.0 * a.pow(config.power) / (1.0 + a.pow(config.power - 1.0)))
          .matrix();
    }
  }
  return raw.cwiseAbs();
}

Tensor attribution_alpha(const Tensor& g, const InterpretationScheme& scheme) {
  const std::size_t h = scheme.num_subsets();
  if (static_cast<std::size_t>(g.cols()) != h) {
    throw DimensionError("attribution_alpha: " + shape_string(g) + " for " +
                         std::to_string(h) + " subsets");
  }
  Tensor alpha(g.rows(), g.cols());
  for (std::size_t i : scheme.topo_order()) {
    const auto col = static_cast<Index>(i);
    alpha.col(col) = g.col(col);
    for (std::size_t j : scheme.children(i)) {
      alpha.col(col).array() *= 1.0 - g.col(static_cast<Index>(j)).array();
    }
  }
  return alpha;
}

Eigen::VectorXd mixture_forward(const Tensor& f, const Tensor& alpha,
                                double epsilon) {
  if (f.rows() != alpha.rows() || f.cols() != alpha.cols()) {
    throw DimensionError("mixture_forward: " + shape_string(f) + " vs " +
                         shape_string(alpha));
  }
  Eigen::VectorXd out(f.rows());
  for (Index s = 0; s < f.rows(); ++s) {
    const double total = alpha.row(s).sum();
    out(s) = total > epsilon ? alpha.row(s).dot(f.row(s)) / total
                             : f.row(s).mean();
  }
  return out;
}

MixturePrediction mixture_from_raw(const Tensor& raw,
                                   const InterpretationScheme& scheme,
                                   const SelectionConfig& config) {
  MixturePrediction p;
  p.raw = raw;
  p.prob = expert_probability(raw);
  p.g = selection_g(raw, config);
  p.alpha = attribution_alpha(p.g, scheme);
  p.y_hat = mixture_forward(p.prob, p.alpha, config.epsilon);
  p.alpha_normalized = Tensor::Zero(raw.rows(), raw.cols());
  p.attributed.resize(static_cast<std::size_t>(raw.rows()));
  p.selected.resize(static_cast<std::size_t>(raw.rows()));
  const auto& order = scheme.topo_order();
  for (Index s = 0; s < raw.rows(); ++s) {
    const double total = p.alpha.row(s).sum();
    const bool selected = total > config.epsilon;
    p.selected[static_cast<std::size_t>(s)] = selected;
    if (selected) p.alpha_normalized.row(s) = p.alpha.row(s) / total;
    std::size_t best = order.front();
    for (std::size_t i : order) {
      if (p.alpha(s, static_cast<Index>(i)) >
          p.alpha(s, static_cast<Index>(best))) {
        best = i;
      }
    }
    p.attributed[static_cast<std::size_t>(s)] = best;
  }
  return p;
}

MixturePrediction predict_with_attribution(const ExpertModel& model,
                                           const Batch& batch,
                                           const SelectionConfig& config) {
  return mixture_from_raw(model.forward(batch), model.scheme(), config);
}

namespace {

void check_labels(const Eigen::VectorXd& labels) {
  for (Index s = 0; s < labels.size(); ++s) {
    if (labels(s) != 0.0 && labels(s) != 1.0) {
      throw LabelError("label " + std::to_string(labels(s)) + " at row " +
                       std::to_string(s) + " is not 0 or 1");
    }
  }
}

// Elementwise BCE(y, (F + 1) / 2), batch x H.
Var expert_bce(const Var& raw, const Eigen::VectorXd& labels) {
  Tape& tape = raw.tape();
  const Index b = raw.rows();
  const Index h = raw.cols();
  const Var ones = tape.constant(Tensor::Ones(b, h));
  const Var prob = clamp(scale(add(raw, ones), 0.5), kProbabilityClamp,
                         1.0 - kProbabilityClamp);
  const Tensor y = labels.replicate(1, h);
  const Var pos = mul(tape.constant(y), log(prob));
  const Var neg = mul(tape.constant(Tensor(1.0 - y.array())), log(sub(ones, prob)));
  return scale(add(pos, neg), -1.0);
}

}  // namespace

Var mixture_loss(const Var& raw, const Tensor& alpha,
                 const Eigen::VectorXd& labels) {
  if (raw.rows() != alpha.rows() || raw.cols() != alpha.cols() ||
      raw.rows() != labels.size()) {
    throw DimensionError("mixture_loss: outputs " + shape_string(raw.value()) +
                         ", alpha " + shape_string(alpha) + ", " +
                         std::to_string(labels.size()) + " labels");
  }
  const Var weights = raw.tape().constant(alpha);
  const Var weighted = mul(weights, expert_bce(raw, labels));
  return scale(sum(weighted), 1.0 / static_cast<double>(raw.rows()));
}

double gem_step(ExpertModel& model, const Batch& batch, const GemConfig& config,
                AdamState& optimizer, std::size_t step_index) {
  check_labels(batch.labels);
  if (batch.size() == 0) throw ContractError("gem_step on an empty batch");
  Tape tape;
  const Var raw = model.forward(tape, batch);
  Var loss;
  if (config.objective == Objective::kPlain) {
    if (raw.cols() != 1) {
      throw ContractError("the plain objective needs a single-expert model");
    }
    loss = mean(expert_bce(raw, batch.labels));
  } else {
    // E-step: posterior weights from the current parameters, held constant
    // during the gradient step.
    const Tensor g = selection_g(raw.value(), config.selection);
    const Tensor alpha = attribution_alpha(g, model.scheme());
    loss = mixture_loss(raw, alpha, batch.labels);
  }
  const double value = loss.value()(0, 0);
  if (!std::isfinite(value)) {
    throw DivergenceError(step_index, "non-finite training loss");
  }
  tape.backward(loss);
  const Gradients grads = tape.gradients();
  auto params = model.parameters();
  adam_step(std::span<Parameter* const>(params), grads, optimizer);
  model.apply_constraints();
  return value;
}

TrainResult train(ExpertModel& model, TrainingData& data,
                  const GemConfig& config) {
  config.validate();
  TrainResult result;
  Rng rng = make_rng(config.seed);
  AdamState optimizer;
  optimizer.learning_rate = config.learning_rate;

  const bool higher = data.higher_is_better();
  double best = higher ? -std::numeric_limits<double>::infinity()
                       : std::numeric_limits<double>::infinity();
  double plateau_best = best;
  std::size_t wait = 0;
  std::map<std::string, Tensor> best_params;

  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    data.begin_epoch(rng);
    const std::size_t batches = data.num_batches(config.batch_size);
    double loss_sum = 0.0;
    double weight_sum = 0.0;
    for (std::size_t b = 0; b < batches; ++b) {
      const Batch batch = data.batch(b, config.batch_size);
      const double loss =
          gem_step(model, batch, config, optimizer, result.steps);
      ++result.steps;
      loss_sum += loss * static_cast<double>(batch.size());
      weight_sum += static_cast<double>(batch.size());
    }
    EpochRecord rec;
    rec.epoch = epoch + 1;
    rec.train_loss = weight_sum > 0.0 ? loss_sum / weight_sum : 0.0;
    rec.val_metric = data.validate(model, config.inference_selection);
    rec.learning_rate = optimizer.learning_rate;
    result.history.push_back(rec);

    const bool improved =
        higher ? rec.val_metric > best : rec.val_metric < best;
    if (improved) {
      best = rec.val_metric;
      result.best_epoch = rec.epoch;
      if (config.keep_best) {
        for (const Parameter* p : model.parameters()) {
          best_params[p->name] = p->value;
        }
      }
    }
    const bool plateau_improved =
        higher ? rec.val_metric > plateau_best : rec.val_metric < plateau_best;
    if (plateau_improved) {
      plateau_best = rec.val_metric;
      wait = 0;
    } else if (++wait >= config.plateau_patience) {
      optimizer.learning_rate =
          std::max(optimizer.learning_rate * config.plateau_factor,
                   config.lr_floor);
      wait = 0;
    }
  }
  if (config.keep_best && !best_params.empty()) {
    for (Parameter* p : model.parameters()) p->value = best_params.at(p->name);
  }
  return result;
}

void write_history_csv(std::ostream& out,
                       const std::vector<EpochRecord>& history) {
  out << "epoch,train_loss,val_metric,lr\n";
  out.precision(10);
  for (const auto& r : history) {
    out << r.epoch << ',' << r.train_loss << ',' << r.val_metric << ','
        << r.learning_rate << '\n';
  }
}

DenseTrainingData::DenseTrainingData(Tensor features, Eigen::VectorXd labels,
                                     Tensor val_features,
                                     Eigen::VectorXd val_labels)
    : features_(std::move(features)),
      labels_(std::move(labels)),
      val_features_(std::move(val_features)),
      val_labels_(std::move(val_labels)) {
  if (features_.rows() != labels_.size() ||
      val_features_.rows() != val_labels_.size()) {
    throw DimensionError("DenseTrainingData: features and labels disagree");
  }
  order_.resize(static_cast<std::size_t>(features_.rows()));
  std::iota(order_.begin(), order_.end(), std::size_t{0});
}

void DenseTrainingData::begin_epoch(Rng& rng) { shuffle(order_, rng); }

std::size_t DenseTrainingData::num_batches(std::size_t batch_size) const {
  return (order_.size() + batch_size - 1) / batch_size;
}

Batch DenseTrainingData::batch(std::size_t index, std::size_t batch_size) const {
  const std::size_t begin = index * batch_size;
  const std::size_t end = std::min(order_.size(), begin + batch_size);
  Batch b;
  b.features.resize(static_cast<Index>(end - begin), features_.cols());
  b.labels.resize(static_cast<Index>(end - begin));
  for (std::size_t r = begin; r < end; ++r) {
    const auto src = static_cast<Index>(order_[r]);
    b.features.row(static_cast<Index>(r - begin)) = features_.row(src);
    b.labels(static_cast<Index>(r - begin)) = labels_(src);
  }
  return b;
}

double DenseTrainingData::validate(const ExpertModel& model,
                                   const SelectionConfig& inference) const {
  if (val_labels_.size() == 0) return 0.0;
  Batch b;
  b.features = val_features_;
  b.labels = val_labels_;
  const auto pred = predict_with_attribution(model, b, inference);
  double total = 0.0;
  for (Index s = 0; s < val_labels_.size(); ++s) {
    const double p = std::clamp(pred.y_hat(s), kProbabilityClamp,
                                1.0 - kProbabilityClamp);
    total -= val_labels_(s) * std::log(p) + (1.0 - val_labels_(s)) * std::log(1.0 - p);
  }
  return total / static_cast<double>(val_labels_.size());
}

}  // namespace attrimix
