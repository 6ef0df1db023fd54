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

#include "attrimix/masked_network.hpp"

#include <numeric>

#include "attrimix/errors.hpp"
#include "attrimix/random.hpp"

namespace attrimix {

Activation activation_from_string(const std::string& name) {
  if (name == "relu") return Activation::kRelu;
  if (name == "tanh") return Activation::kTanh;
  if (name == "identity" || name == "linear") return Activation::kIdentity;
  throw ContractError("unknown activation '" + name + "'");
}

std::string to_string(Activation a) {
  switch (a) {
    case Activation::kRelu:
      return "relu";
    case Activation::kTanh:
      return "tanh";
    case Activation::kIdentity:
      return "identity";
  }
  return "identity";
}

Var activate(const Var& x, Activation a) {
  switch (a) {
    case Activation::kRelu:
      return relu(x);
    case Activation::kTanh:
      return tanh(x);
    case Activation::kIdentity:
      return x;
  }
  return x;
}

bool MaskedLayerSpec::has_cross_blocks() const {
  for (BlockKind b : blocks) {
    if (b == BlockKind::kCross) return true;
  }
  return false;
}

Index MaskedLayerSpec::row_offset(std::size_t i) const {
  return static_cast<Index>(std::accumulate(
      out_widths.begin(), out_widths.begin() + static_cast<std::ptrdiff_t>(i),
      std::size_t{0}));
}

Index MaskedLayerSpec::col_offset(std::size_t j) const {
  return static_cast<Index>(std::accumulate(
      in_widths.begin(), in_widths.begin() + static_cast<std::ptrdiff_t>(j),
      std::size_t{0}));
}

std::size_t MaskedLayerSpec::parameter_count() const {
  return static_cast<std::size_t>((own_mask.array() != 0.0).count() +
                                  (cross_mask.array() != 0.0).count());
}

namespace {

void require_positive(std::span<const std::size_t> widths, const char* what) {
  for (std::size_t w : widths) {
    if (w == 0) throw ContractError(std::string(what) + " must be positive");
  }
}

std::size_t total(std::span<const std::size_t> widths) {
  return std::accumulate(widths.begin(), widths.end(), std::size_t{0});
}

}  // namespace

MaskedLayerSpec build_first_layer(const InterpretationScheme& scheme,
                                  std::span<const std::size_t> widths,
                                  Activation activation) {
  const std::size_t h = scheme.num_subsets();
  if (widths.size() != h) {
    throw DimensionError("build_first_layer: " + std::to_string(widths.size()) +
                         " widths for " + std::to_string(h) + " experts");
  }
  require_positive(widths, "layer widths");
  MaskedLayerSpec layer;
  layer.layer_index = 0;
  layer.input_layer = true;
  layer.out_widths.assign(widths.begin(), widths.end());
  layer.blocks.assign(h * h, BlockKind::kAbsent);
  for (std::size_t i = 0; i < h; ++i) layer.blocks[i * h + i] = BlockKind::kOwn;
  layer.activation = activation;

  const auto rows = static_cast<Index>(total(widths));
  const auto n = static_cast<Index>(scheme.num_features());
  layer.weight.name = "layer0.weight";
  layer.weight.value = Tensor::Zero(rows, n + 1);
  layer.own_mask = Tensor::Zero(rows, n + 1);
  layer.cross_mask = Tensor::Zero(rows, n + 1);
  for (std::size_t i = 0; i < h; ++i) {
    const Index r0 = layer.row_offset(i);
    const auto& m = scheme.masks()[i];
    for (Index r = r0; r < r0 + static_cast<Index>(widths[i]); ++r) {
      layer.own_mask.row(r).head(n) = m.transpose();
      layer.own_mask(r, n) = 1.0;
    }
  }
  return layer;
}

MaskedLayerSpec build_block_layer(std::string name,
                                  std::span<const std::size_t> in_widths,
                                  std::span<const std::size_t> out_widths,
                                  std::vector<BlockKind> blocks,
                                  Activation activation,
                                  std::size_t layer_index) {
  if (blocks.size() != in_widths.size() * out_widths.size()) {
    throw DimensionError("build_block_layer: " + std::to_string(blocks.size()) +
                         " blocks for a " + std::to_string(out_widths.size()) +
                         "x" + std::to_string(in_widths.size()) + " layout");
  }
  require_positive(in_widths, "layer widths");
  require_positive(out_widths, "layer widths");
  MaskedLayerSpec layer;
  layer.layer_index = layer_index;
  layer.in_widths.assign(in_widths.begin(), in_widths.end());
  layer.out_widths.assign(out_widths.begin(), out_widths.end());
  layer.activation = activation;
  layer.blocks = std::move(blocks);

  const auto rows = static_cast<Index>(total(out_widths));
  const auto cols = static_cast<Index>(total(in_widths));
  layer.weight.name = std::move(name);
  layer.weight.value = Tensor::Zero(rows, cols + 1);
  layer.own_mask = Tensor::Zero(rows, cols + 1);
  layer.cross_mask = Tensor::Zero(rows, cols + 1);
  for (std::size_t i = 0; i < out_widths.size(); ++i) {
    const Index r0 = layer.row_offset(i);
    const auto nr = static_cast<Index>(out_widths[i]);
    layer.own_mask.block(r0, cols, nr, 1).setOnes();
    for (std::size_t j = 0; j < in_widths.size(); ++j) {
      const BlockKind kind = layer.block(i, j);
      if (kind == BlockKind::kAbsent) continue;
      Tensor& target =
          kind == BlockKind::kOwn ? layer.own_mask : layer.cross_mask;
      target.block(r0, layer.col_offset(j), nr, static_cast<Index>(in_widths[j]))
          .setOnes();
    }
  }
  return layer;
}

MaskedLayerSpec build_hidden_layer(const InterpretationScheme& scheme,
                                   std::span<const std::size_t> in_widths,
                                   std::span<const std::size_t> out_widths,
                                   Activation activation,
                                   std::size_t layer_index) {
  const std::size_t h = scheme.num_subsets();
  if (in_widths.size() != h || out_widths.size() != h) {
    throw DimensionError("build_hidden_layer: widths do not match " +
                         std::to_string(h) + " experts");
  }
  std::vector<BlockKind> blocks(h * h, BlockKind::kAbsent);
  for (std::size_t i = 0; i < h; ++i) {
    blocks[i * h + i] = BlockKind::kOwn;
    for (std::size_t j : scheme.children(i)) blocks[i * h + j] = BlockKind::kCross;
  }
  return build_block_layer("layer" + std::to_string(layer_index) + ".weight",
                           in_widths, out_widths, std::move(blocks), activation,
                           layer_index);
}

void apply_mask_constraint(MaskedLayerSpec& layer) {
  layer.weight.value.array() *=
      (layer.own_mask.array() + layer.cross_mask.array());
}

Var masked_linear(const MaskedLayerSpec& layer, const Var& weight,
                  const Var& input) {
  Tape& tape = input.tape();
  if (static_cast<std::size_t>(input.cols()) != layer.num_inputs()) {
    throw DimensionError("layer " + std::to_string(layer.layer_index) +
                         " expects " + std::to_string(layer.num_inputs()) +
                         " inputs, got " + shape_string(input.value()));
  }
  const Var ones = tape.constant(Tensor::Ones(input.rows(), 1));
  const Var augmented = concat_cols({input, ones});
  Var z = matmul_nt(augmented, mul(weight, tape.constant(layer.own_mask)));
  if (layer.has_cross_blocks()) {
    const Var cross = matmul_nt(stop_gradient(augmented),
                                mul(weight, tape.constant(layer.cross_mask)));
    z = add(z, cross);
  }
  return z;
}

InterpretableMLP::InterpretableMLP(
    InterpretationScheme scheme,
    std::vector<std::vector<std::size_t>> hidden_widths,
    Activation hidden_activation, std::uint64_t seed)
    : scheme_(std::move(scheme)),
      hidden_widths_(std::move(hidden_widths)),
      hidden_activation_(hidden_activation) {
  const std::size_t h = scheme_.num_subsets();
  if (hidden_widths_.empty()) {
    throw ContractError("an interpretable MLP needs at least one hidden layer");
  }
  for (const auto& w : hidden_widths_) {
    if (w.size() != h) {
      throw DimensionError("hidden layer widths list " +
                           std::to_string(w.size()) + " experts, scheme has " +
                           std::to_string(h));
    }
  }
  layers_.push_back(
      build_first_layer(scheme_, hidden_widths_.front(), hidden_activation_));
  for (std::size_t k = 1; k < hidden_widths_.size(); ++k) {
    layers_.push_back(build_hidden_layer(scheme_, hidden_widths_[k - 1],
                                         hidden_widths_[k], hidden_activation_,
                                         k));
  }
  const std::vector<std::size_t> heads(h, 1);
  layers_.push_back(build_hidden_layer(scheme_, hidden_widths_.back(), heads,
                                       Activation::kTanh,
                                       hidden_widths_.size()));
  Rng rng = make_rng(seed);
  for (auto& layer : layers_) initialize_glorot(layer, rng);
}

InterpretableMLP InterpretableMLP::uniform(
    InterpretationScheme scheme, const std::vector<std::size_t>& widths,
    Activation hidden_activation, std::uint64_t seed) {
  const std::size_t h = scheme.num_subsets();
  std::vector<std::vector<std::size_t>> per_layer;
  for (std::size_t w : widths) per_layer.emplace_back(h, w);
  return InterpretableMLP(std::move(scheme), std::move(per_layer),
                          hidden_activation, seed);
}

Var InterpretableMLP::forward(Tape& tape, const Var& x) const {
  if (static_cast<std::size_t>(x.cols()) != scheme_.num_features()) {
    throw DimensionError("forward: input " + shape_string(x.value()) +
                         " does not have " +
                         std::to_string(scheme_.num_features()) + " features");
  }
  Var h = x;
  for (const auto& layer : layers_) {
    const Var w = tape.parameter(layer.weight);
    h = activate(masked_linear(layer, w, h), layer.activation);
  }
  return h;
}

Tensor InterpretableMLP::forward(const Tensor& x) const {
  if (static_cast<std::size_t>(x.cols()) != scheme_.num_features()) {
    throw DimensionError("forward: input " + shape_string(x) +
                         " does not have " +
                         std::to_string(scheme_.num_features()) + " features");
  }
  Tape tape;
  Var h = tape.constant(x);
  for (const auto& layer : layers_) {
    const Var w = tape.constant(layer.weight.value);
    h = activate(masked_linear(layer, w, h), layer.activation);
  }
  return h.value();
}

std::vector<Parameter*> InterpretableMLP::parameters() {
  std::vector<Parameter*> out;
  for (auto& layer : layers_) out.push_back(&layer.weight);
  return out;
}

void InterpretableMLP::apply_mask_constraint() {
  for (auto& layer : layers_) attrimix::apply_mask_constraint(layer);
}

std::size_t InterpretableMLP::parameter_count() const {
  std::size_t n = 0;
  for (const auto& layer : layers_) n += layer.parameter_count();
  return n;
}

}  // namespace attrimix
