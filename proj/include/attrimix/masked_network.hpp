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

// One network emulating H input-restricted experts.
//
// Every layer stores a single stacked weight matrix whose last column is the
// bias. Row block i belongs to expert i. In the input layer, expert i's rows
// only see the features of S_i. In later layers, block (i, j) is present iff
// i == j ("own") or S_j is strictly included in S_i ("cross"); cross blocks
// read a stop_gradient copy of the child activations, so no gradient ever
// flows from a parent into a child expert.

#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "attrimix/autodiff.hpp"
#include "attrimix/scheme.hpp"

namespace attrimix {

enum class Activation { kIdentity, kRelu, kTanh };

Activation activation_from_string(const std::string& name);
std::string to_string(Activation a);

Var activate(const Var& x, Activation a);

enum class BlockKind : std::uint8_t { kAbsent, kOwn, kCross };

struct MaskedLayerSpec {
  std::size_t layer_index = 0;
  bool input_layer = false;
  // Per-expert widths. For the input layer in_widths is empty and the inputs
  // are the raw features.
  std::vector<std::size_t> in_widths;
  std::vector<std::size_t> out_widths;
  // Row-major block presence, out blocks x in blocks (H x H for the input
  // layer, where only the diagonal is used).
  std::vector<BlockKind> blocks;
  Activation activation = Activation::kRelu;
  // sum(out_widths) x (inputs + 1).
  Parameter weight;
  // Entries reached without a gradient stop (own blocks, bias column).
  Tensor own_mask;
  // Entries of cross blocks.
  Tensor cross_mask;

  std::size_t num_experts() const { return out_widths.size(); }
  std::size_t num_inputs() const {
    return static_cast<std::size_t>(weight.value.cols()) - 1;
  }
  BlockKind block(std::size_t i, std::size_t j) const {
    const std::size_t stride =
        in_widths.empty() ? out_widths.size() : in_widths.size();
    return blocks.at(i * stride + j);
  }
  bool has_cross_blocks() const;
  Index row_offset(std::size_t i) const;
  Index col_offset(std::size_t j) const;
  // Trainable scalars: own + cross entries, bias included.
  std::size_t parameter_count() const;
};

MaskedLayerSpec build_first_layer(const InterpretationScheme& scheme,
                                  std::span<const std::size_t> widths,
                                  Activation activation = Activation::kRelu);

MaskedLayerSpec build_hidden_layer(const InterpretationScheme& scheme,
                                   std::span<const std::size_t> in_widths,
                                   std::span<const std::size_t> out_widths,
                                   Activation activation, std::size_t layer_index);

// General block layer: blocks is out_widths.size() x in_widths.size().
MaskedLayerSpec build_block_layer(std::string name,
                                  std::span<const std::size_t> in_widths,
                                  std::span<const std::size_t> out_widths,
                                  std::vector<BlockKind> blocks,
                                  Activation activation,
                                  std::size_t layer_index);

// Zeroes every weight outside the own and cross masks. Idempotent.
void apply_mask_constraint(MaskedLayerSpec& layer);

// Glorot-uniform over each expert's row block, fan computed from the present
// columns; biases start at zero.
template <typename Rng>
void initialize_glorot(MaskedLayerSpec& layer, Rng& rng);

// Pre-activation of a layer given its bound weight.
Var masked_linear(const MaskedLayerSpec& layer, const Var& weight,
                  const Var& input);

class InterpretableMLP {
 public:
  // hidden_widths[k][i]: width of expert i on hidden layer k.
  InterpretableMLP(InterpretationScheme scheme,
                   std::vector<std::vector<std::size_t>> hidden_widths,
                   Activation hidden_activation, std::uint64_t seed);

  // Same width for every expert on each layer.
  static InterpretableMLP uniform(InterpretationScheme scheme,
                                  const std::vector<std::size_t>& widths,
                                  Activation hidden_activation,
                                  std::uint64_t seed);

  const InterpretationScheme& scheme() const { return scheme_; }
  std::size_t num_experts() const { return scheme_.num_subsets(); }
  const std::vector<std::vector<std::size_t>>& hidden_widths() const {
    return hidden_widths_;
  }
  Activation hidden_activation() const { return hidden_activation_; }

  // F: batch x H, in (-1, 1).
  Var forward(Tape& tape, const Var& x) const;
  Tensor forward(const Tensor& x) const;

  std::vector<MaskedLayerSpec>& layers() { return layers_; }
  const std::vector<MaskedLayerSpec>& layers() const { return layers_; }
  std::vector<Parameter*> parameters();
  void apply_mask_constraint();
  std::size_t parameter_count() const;

 private:
  InterpretationScheme scheme_;
  std::vector<std::vector<std::size_t>> hidden_widths_;
  Activation hidden_activation_;
  std::vector<MaskedLayerSpec> layers_;
};

}  // namespace attrimix

#include "attrimix/masked_network_inl.hpp"
