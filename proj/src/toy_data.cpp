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

#include "attrimix/toy_data.hpp"

#include "attrimix/errors.hpp"
#include "attrimix/random.hpp"

namespace attrimix {

ToySpec toy_a_spec(std::uint64_t seed, std::size_t n_per_cluster,
                   double sigma) {
  ToySpec spec;
  spec.seed = seed;
  spec.samples_per_cluster = n_per_cluster;
  spec.clusters = {
      {{-1.5, 0.0}, sigma, 1, 0},
      {{1.5, 0.0}, sigma, 0, 0},
      {{0.0, -1.5}, sigma, 1, 1},
      {{0.0, 1.5}, sigma, 0, 1},
  };
  return spec;
}

ToySpec toy_b_spec(std::uint64_t seed, std::size_t n_per_cluster,
                   double sigma) {
  ToySpec spec = toy_a_spec(seed, n_per_cluster, sigma);
  spec.clusters.push_back({{3.0, 3.0}, sigma, 1, 2});
  spec.clusters.push_back({{-3.0, -3.0}, sigma, 1, 2});
  spec.clusters.push_back({{3.0, -3.0}, sigma, 0, 2});
  spec.clusters.push_back({{-3.0, 3.0}, sigma, 0, 2});
  return spec;
}

ToyData generate_toy(const ToySpec& spec) {
  if (spec.samples_per_cluster == 0) {
    throw ContractError("toy data needs at least one sample per cluster");
  }
  for (const auto& c : spec.clusters) {
    if (!(c.sigma > 0.0)) throw ContractError("cluster sigma must be > 0");
  }
  const std::size_t n = spec.clusters.size() * spec.samples_per_cluster;
  ToyData data;
  data.features.resize(static_cast<Index>(n), 2);
  data.labels.resize(static_cast<Index>(n));
  data.truth.reserve(n);
  data.cluster.reserve(n);
  Rng rng = make_rng(spec.seed);
  boost::random::normal_distribution<double> normal(0.0, 1.0);
  Index row = 0;
  for (std::size_t c = 0; c < spec.clusters.size(); ++c) {
    const auto& cluster = spec.clusters[c];
    for (std::size_t s = 0; s < spec.samples_per_cluster; ++s, ++row) {
      data.features(row, 0) = cluster.mean.x() + cluster.sigma * normal(rng);
      data.features(row, 1) = cluster.mean.y() + cluster.sigma * normal(rng);
      data.labels(row) = cluster.label;
      data.truth.push_back(cluster.truth_subset);
      data.cluster.push_back(c);
    }
  }
  return data;
}

ToyData gen_toy_a(std::uint64_t seed, std::size_t n_per_cluster, double sigma) {
  return generate_toy(toy_a_spec(seed, n_per_cluster, sigma));
}

ToyData gen_toy_b(std::uint64_t seed, std::size_t n_per_cluster, double sigma) {
  return generate_toy(toy_b_spec(seed, n_per_cluster, sigma));
}

InterpretationScheme toy_scheme() {
  FeaturePartition partition(2, {{"X1", {0}}, {"X2", {1}}});
  return build_scheme(std::move(partition), std::vector<GroupSet>{{0}, {1}, {0, 1}});
}

}  // namespace attrimix
