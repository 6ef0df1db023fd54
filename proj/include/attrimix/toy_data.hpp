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

// Synthetic two-dimensional tasks with known attributions.

#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "attrimix/autodiff.hpp"
#include "attrimix/scheme.hpp"

namespace attrimix {

struct ToyCluster {
  Eigen::Vector2d mean;
  double sigma = 0.25;
  int label = 0;
  std::size_t truth_subset = 0;  // 0-based index into the toy scheme
};

struct ToySpec {
  std::vector<ToyCluster> clusters;
  std::size_t samples_per_cluster = 1;
  std::uint64_t seed = 0;
};

struct ToyData {
  Tensor features;  // N x 2
  Eigen::VectorXd labels;
  std::vector<std::size_t> truth;    // ground-truth subset per sample
  std::vector<std::size_t> cluster;  // generating cluster per sample
};

inline constexpr double kToySigma = 0.25;

// Inner clusters on the axes: (-1.5, 0) -> 1 and (1.5, 0) -> 0 explained by
// X1; (0, -1.5) -> 1 and (0, 1.5) -> 0 explained by X2.
ToySpec toy_a_spec(std::uint64_t seed, std::size_t n_per_cluster,
                   double sigma = kToySigma);
// toy (a) plus XOR-labelled corners (+-3, +-3) that need both inputs.
ToySpec toy_b_spec(std::uint64_t seed, std::size_t n_per_cluster,
                   double sigma = kToySigma);

ToyData generate_toy(const ToySpec& spec);
ToyData gen_toy_a(std::uint64_t seed, std::size_t n_per_cluster,
                  double sigma = kToySigma);
ToyData gen_toy_b(std::uint64_t seed, std::size_t n_per_cluster,
                  double sigma = kToySigma);

// Groups X1 = {0}, X2 = {1}; subsets {X1}, {X2}, {X1, X2}.
InterpretationScheme toy_scheme();

}  // namespace attrimix
