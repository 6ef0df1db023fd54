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

#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "attrimix/autodiff.hpp"

namespace attrimix {

struct FeatureGroup {
  std::string name;
  std::vector<std::size_t> features;
};

// N named, pairwise disjoint, non-empty feature groups covering [0, n).
class FeaturePartition {
 public:
  FeaturePartition(std::size_t num_features, std::vector<FeatureGroup> groups);

  // Contiguous groups of the given sizes, in order.
  static FeaturePartition contiguous(
      const std::vector<std::pair<std::string, std::size_t>>& sizes);

  std::size_t num_features() const { return num_features_; }
  std::size_t num_groups() const { return groups_.size(); }
  const std::vector<FeatureGroup>& groups() const { return groups_; }
  const FeatureGroup& group(std::size_t g) const { return groups_.at(g); }
  // Throws UnknownGroup.
  std::size_t group_index(const std::string& name) const;

 private:
  std::size_t num_features_;
  std::vector<FeatureGroup> groups_;
};

using GroupSet = std::vector<std::size_t>;

// Interpretation subsets S_1..S_H over the groups of a partition, their
// binary feature masks and the strict-inclusion relation between them.
// Subset indices are 0-based throughout.
class InterpretationScheme {
 public:
  InterpretationScheme(FeaturePartition partition,
                       std::vector<GroupSet> subsets);

  const FeaturePartition& partition() const { return partition_; }
  std::size_t num_subsets() const { return subsets_.size(); }
  std::size_t num_features() const { return partition_.num_features(); }

  // Sorted group indices of subset i.
  const GroupSet& subset(std::size_t i) const { return subsets_.at(i); }
  std::vector<std::string> subset_names(std::size_t i) const;
  // Number of features covered by subset i.
  std::size_t support_size(std::size_t i) const;

  // Strictly included subsets of i, ascending.
  const std::vector<std::size_t>& children(std::size_t i) const {
    return omega_.at(i);
  }
  bool is_atomic(std::size_t i) const { return omega_.at(i).empty(); }
  bool includes_strictly(std::size_t parent, std::size_t child) const;

  // Linear extension of the inclusion order: increasing support, ties by
  // declaration position.
  const std::vector<std::size_t>& topo_order() const { return topo_order_; }

  const std::vector<Eigen::VectorXd>& masks() const { return masks_; }

 private:
  FeaturePartition partition_;
  std::vector<GroupSet> subsets_;
  std::vector<Eigen::VectorXd> masks_;
  std::vector<std::vector<std::size_t>> omega_;
  std::vector<char> included_;  // H x H, [parent * H + child]
  std::vector<std::size_t> topo_order_;
};

// Validates the specs and derives masks, children and ordering.
InterpretationScheme build_scheme(FeaturePartition partition,
                                  std::vector<GroupSet> subset_specs);
InterpretationScheme build_scheme(
    FeaturePartition partition,
    const std::vector<std::vector<std::string>>& subset_names);

// Binary vector of length n; 1 where the feature is in subset i.
Eigen::VectorXd mask_vector(const InterpretationScheme& scheme, std::size_t i);

// Cover pairs (child, parent) of the strict inclusion order.
std::vector<std::pair<std::size_t, std::size_t>> hasse_edges(
    const InterpretationScheme& scheme);

// True iff the group names of target subset y are a (non-strict) subset of
// the group names of source subset x. Throws NamespaceError when the two
// schemes share no group name at all.
bool hetero_link_allowed(const InterpretationScheme& source, std::size_t x,
                         const InterpretationScheme& target, std::size_t y);

}  // namespace attrimix
