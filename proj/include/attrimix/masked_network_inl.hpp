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

#include <boost/random/uniform_real_distribution.hpp>

#include <cmath>

namespace attrimix {

template <typename Rng>
void initialize_glorot(MaskedLayerSpec& layer, Rng& rng) {
  const std::size_t h = layer.num_experts();
  Tensor& w = layer.weight.value;
  const Index bias = w.cols() - 1;
  for (std::size_t i = 0; i < h; ++i) {
    const Index r0 = layer.row_offset(i);
    const auto rows = static_cast<Index>(layer.out_widths[i]);
    Index fan_in = 0;
    for (Index c = 0; c < bias; ++c) {
      if (layer.own_mask(r0, c) != 0.0 || layer.cross_mask(r0, c) != 0.0) {
        ++fan_in;
      }
    }
    const double limit =
        std::sqrt(6.0 / static_cast<double>(fan_in + rows));
    boost::random::uniform_real_distribution<double> dist(-limit, limit);
    for (Index r = r0; r < r0 + rows; ++r) {
      for (Index c = 0; c < bias; ++c) w(r, c) = dist(rng);
      w(r, bias) = 0.0;
    }
  }
  apply_mask_constraint(layer);
}

}  // namespace attrimix
