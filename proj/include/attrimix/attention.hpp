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

// Multi-head attention whose heads are partitioned into expert groups.
//
// Streams are column blocks of the q/k/v matrices, one block per expert.
// Head group i projects its queries from the query streams of expert i and
// its children, and its keys/values from every key/value stream y whose
// subset is included in S_i (matched by feature-group names, so the query and
// key/value sides may use different schemes). The output mixer follows the
// same block rule over head groups. Links to anything other than an
// expert's own stream go through stop_gradient.

#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "attrimix/masked_network.hpp"
#include "attrimix/scheme.hpp"

namespace attrimix {

struct InterpretableAttentionSpec {
  std::size_t num_heads = 0;  // P, a multiple of the query scheme's H
  std::size_t head_dim = 0;
  std::vector<std::size_t> query_widths;  // per query-side expert
  std::vector<std::size_t> kv_widths;     // per key/value-side expert
  std::vector<std::size_t> out_widths;    // per query-side expert
};

class InterpretableAttention {
 public:
  InterpretableAttention(InterpretationScheme query_scheme,
                         InterpretationScheme kv_scheme,
                         InterpretableAttentionSpec spec, std::uint64_t seed);
  // Self-attention over a single scheme.
  InterpretableAttention(InterpretationScheme scheme,
                         InterpretableAttentionSpec spec, std::uint64_t seed);

  const InterpretableAttentionSpec& spec() const { return spec_; }
  std::size_t heads_per_expert() const {
    return spec_.num_heads / query_scheme_.num_subsets();
  }
  std::size_t head_expert(std::size_t head) const {
    return head / heads_per_expert();
  }

  // q: T x sum(query_widths); k, v: S x sum(kv_widths).
  // Returns T x sum(out_widths).
  Var forward(Tape& tape, const Var& q, const Var& k, const Var& v) const;
  Tensor forward(const Tensor& q, const Tensor& k, const Tensor& v) const;

  const MaskedLayerSpec& query_projection() const { return wq_; }
  const MaskedLayerSpec& key_projection() const { return wk_; }
  const MaskedLayerSpec& value_projection() const { return wv_; }
  const MaskedLayerSpec& output_projection() const { return wo_; }
  MaskedLayerSpec& query_projection() { return wq_; }
  MaskedLayerSpec& key_projection() { return wk_; }
  MaskedLayerSpec& value_projection() { return wv_; }
  MaskedLayerSpec& output_projection() { return wo_; }

  std::vector<Parameter*> parameters();
  void apply_mask_constraint();

 private:
  Var attend(const Var& q, const Var& k, const Var& v,
             const Var& wq, const Var& wk, const Var& wv, const Var& wo) const;

  InterpretationScheme query_scheme_;
  InterpretationScheme kv_scheme_;
  InterpretableAttentionSpec spec_;
  MaskedLayerSpec wq_, wk_, wv_, wo_;
};

}  // namespace attrimix
