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

#include "attrimix/attention.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "attrimix/errors.hpp"
#include "attrimix/random.hpp"

namespace attrimix {

namespace {

bool same_group_names(const InterpretationScheme& a, std::size_t x,
                      const InterpretationScheme& b, std::size_t y) {
  const auto xs = a.subset_names(x);
  const auto ys = b.subset_names(y);
  return std::set<std::string>(xs.begin(), xs.end()) ==
         std::set<std::string>(ys.begin(), ys.end());
}

// Block rule inside one scheme: own on the diagonal, cross towards children.
std::vector<BlockKind> scheme_blocks(const InterpretationScheme& scheme) {
  const std::size_t h = scheme.num_subsets();
  std::vector<BlockKind> blocks(h * h, BlockKind::kAbsent);
  for (std::size_t i = 0; i < h; ++i) {
    blocks[i * h + i] = BlockKind::kOwn;
    for (std::size_t j : scheme.children(i)) blocks[i * h + j] = BlockKind::kCross;
  }
  return blocks;
}

std::vector<BlockKind> link_blocks(const InterpretationScheme& query,
                                   const InterpretationScheme& kv) {
  const std::size_t hq = query.num_subsets();
  const std::size_t hk = kv.num_subsets();
  std::vector<BlockKind> blocks(hq * hk, BlockKind::kAbsent);
  for (std::size_t i = 0; i < hq; ++i) {
    for (std::size_t y = 0; y < hk; ++y) {
      if (!hetero_link_allowed(query, i, kv, y)) continue;
      blocks[i * hk + y] = same_group_names(query, i, kv, y) ? BlockKind::kOwn
                                                             : BlockKind::kCross;
    }
  }
  return blocks;
}

}  // namespace

InterpretableAttention::InterpretableAttention(InterpretationScheme scheme,
                                               InterpretableAttentionSpec spec,
                                               std::uint64_t seed)
    : InterpretableAttention(scheme, scheme, std::move(spec), seed) {}

InterpretableAttention::InterpretableAttention(
    InterpretationScheme query_scheme, InterpretationScheme kv_scheme,
    InterpretableAttentionSpec spec, std::uint64_t seed)
    : query_scheme_(std::move(query_scheme)),
      kv_scheme_(std::move(kv_scheme)),
      spec_(std::move(spec)) {
  const std::size_t h = query_scheme_.num_subsets();
  if (spec_.num_heads == 0 || spec_.num_heads % h != 0) {
    throw ContractError("attention: " + std::to_string(spec_.num_heads) +
                        " heads cannot be split over " + std::to_string(h) +
                        " experts");
  }
  if (spec_.head_dim == 0) throw ContractError("attention: head_dim is 0");
  if (spec_.query_widths.size() != h || spec_.out_widths.size() != h) {
    throw DimensionError("attention: query/output widths must list " +
                         std::to_string(h) + " experts");
  }
  if (spec_.kv_widths.size() != kv_scheme_.num_subsets()) {
    throw DimensionError("attention: key/value widths must list " +
                         std::to_string(kv_scheme_.num_subsets()) + " experts");
  }

  const std::vector<std::size_t> head_widths(h, heads_per_expert() * spec_.head_dim);
  const auto own = scheme_blocks(query_scheme_);
  const auto links = link_blocks(query_scheme_, kv_scheme_);
  wq_ = build_block_layer("attention.query", spec_.query_widths, head_widths,
                          own, Activation::kIdentity, 0);
  wk_ = build_block_layer("attention.key", spec_.kv_widths, head_widths, links,
                          Activation::kIdentity, 1);
  wv_ = build_block_layer("attention.value", spec_.kv_widths, head_widths,
                          links, Activation::kIdentity, 2);
  wo_ = build_block_layer("attention.output", head_widths, spec_.out_widths,
                          own, Activation::kIdentity, 3);
  Rng rng = make_rng(seed);
  for (MaskedLayerSpec* layer : {&wq_, &wk_, &wv_, &wo_}) {
    initialize_glorot(*layer, rng);
  }
}

Var InterpretableAttention::attend(const Var& q, const Var& k, const Var& v,
                                   const Var& wq, const Var& wk,
                                   const Var& wv, const Var& wo) const {
  if (k.rows() != v.rows()) {
    throw DimensionError("attention: keys " + shape_string(k.value()) +
                         " and values " + shape_string(v.value()) +
                         " have different lengths");
  }
  const Var queries = masked_linear(wq_, wq, q);
  const Var keys = masked_linear(wk_, wk, k);
  const Var values = masked_linear(wv_, wv, v);
  const auto dh = static_cast<Index>(spec_.head_dim);
  const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(dh));
  std::vector<Var> heads;
  heads.reserve(spec_.num_heads);
  for (std::size_t head = 0; head < spec_.num_heads; ++head) {
    const Index at = static_cast<Index>(head) * dh;
    const Var qh = slice_cols(queries, at, dh);
    const Var kh = slice_cols(keys, at, dh);
    const Var vh = slice_cols(values, at, dh);
    const Var weights = softmax_rows(scale(matmul_nt(qh, kh), inv_sqrt));
    heads.push_back(matmul(weights, vh));
  }
  const Var concat = concat_cols(std::span<const Var>(heads));
  return masked_linear(wo_, wo, concat);
}

Var InterpretableAttention::forward(Tape& tape, const Var& q, const Var& k,
                                    const Var& v) const {
  return attend(q, k, v, tape.parameter(wq_.weight),
                tape.parameter(wk_.weight), tape.parameter(wv_.weight),
                tape.parameter(wo_.weight));
}

Tensor InterpretableAttention::forward(const Tensor& q, const Tensor& k,
                                       const Tensor& v) const {
  Tape tape;
  return attend(tape.constant(q), tape.constant(k), tape.constant(v),
                tape.constant(wq_.weight.value), tape.constant(wk_.weight.value),
                tape.constant(wv_.weight.value), tape.constant(wo_.weight.value))
      .value();
}

std::vector<Parameter*> InterpretableAttention::parameters() {
  return {&wq_.weight, &wk_.weight, &wv_.weight, &wo_.weight};
}

void InterpretableAttention::apply_mask_constraint() {
  for (MaskedLayerSpec* layer : {&wq_, &wk_, &wv_, &wo_}) {
    attrimix::apply_mask_constraint(*layer);
  }
}

}  // namespace attrimix
