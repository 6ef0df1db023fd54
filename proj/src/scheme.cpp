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

#include "attrimix/scheme.hpp"

#include <algorithm>
#include <numeric>
#include <set>

#include "attrimix/errors.hpp"

namespace attrimix {

FeaturePartition::FeaturePartition(std::size_t num_features,
                                   std::vector<FeatureGroup> groups)
    : num_features_(num_features), groups_(std::move(groups)) {
  if (groups_.empty()) throw PartitionError("partition has no groups");
  std::vector<int> owner(num_features_, -1);
  std::set<std::string> names;
  for (std::size_t g = 0; g < groups_.size(); ++g) {
    auto& group = groups_[g];
    if (group.name.empty()) {
      throw PartitionError("group " + std::to_string(g) + " has no name");
    }
    if (!names.insert(group.name).second) {
      throw PartitionError("group name '" + group.name + "' is used twice");
    }
    if (group.features.empty()) {
      throw PartitionError("group '" + group.name + "' is empty");
    }
    std::sort(group.features.begin(), group.features.end());
    for (std::size_t d : group.features) {
      if (d >= num_features_) {
        throw PartitionError("group '" + group.name + "' references feature " +
                             std::to_string(d) + " outside [0, " +
                             std::to_string(num_features_) + ")");
      }
      if (owner[d] != -1) {
        throw PartitionError("feature " + std::to_string(d) +
                             " belongs to both '" + groups_[owner[d]].name +
                             "' and '" + group.name + "'");
      }
      owner[d] = static_cast<int>(g);
    }
  }
  for (std::size_t d = 0; d < num_features_; ++d) {
    if (owner[d] == -1) {
      throw PartitionError("feature " + std::to_string(d) +
                           " is not covered by any group");
    }
  }
}

FeaturePartition FeaturePartition::contiguous(
    const std::vector<std::pair<std::string, std::size_t>>& sizes) {
  std::vector<FeatureGroup> groups;
  std::size_t at = 0;
  for (const auto& [name, size] : sizes) {
    FeatureGroup g{name, {}};
    for (std::size_t k = 0; k < size; ++k) g.features.push_back(at++);
    groups.push_back(std::move(g));
  }
  return FeaturePartition(at, std::move(groups));
}

std::size_t FeaturePartition::group_index(const std::string& name) const {
  for (std::size_t g = 0; g < groups_.size(); ++g) {
    if (groups_[g].name == name) return g;
  }
  throw UnknownGroup("unknown group '" + name + "'");
}

InterpretationScheme::InterpretationScheme(FeaturePartition partition,
                                           std::vector<GroupSet> subsets)
    : partition_(std::move(partition)), subsets_(std::move(subsets)) {
  const std::size_t h = subsets_.size();
  if (h == 0) throw EmptySubset("scheme has no subsets");
  std::set<GroupSet> seen;
  for (std::size_t i = 0; i < h; ++i) {
    auto& s = subsets_[i];
    if (s.empty()) {
      throw EmptySubset("subset " + std::to_string(i) + " is empty");
    }
    std::sort(s.begin(), s.end());
    s.erase(std::unique(s.begin(), s.end()), s.end());
    for (std::size_t g : s) {
      if (g >= partition_.num_groups()) {
        throw UnknownGroup("subset " + std::to_string(i) +
                           " references group " + std::to_string(g) +
                           " of " + std::to_string(partition_.num_groups()));
      }
    }
    if (!seen.insert(s).second) {
      throw DuplicateSubset("subset " + std::to_string(i) +
                            " repeats an earlier subset");
    }
  }

  masks_.reserve(h);
  for (const auto& s : subsets_) {
    Eigen::VectorXd m = Eigen::VectorXd::Zero(
        static_cast<Index>(partition_.num_features()));
    for (std::size_t g : s) {
      for (std::size_t d : partition_.group(g).features) {
        m(static_cast<Index>(d)) = 1.0;
      }
    }
    masks_.push_back(std::move(m));
  }

  included_.assign(h * h, 0);
  omega_.assign(h, {});
  for (std::size_t i = 0; i < h; ++i) {
    for (std::size_t j = 0; j < h; ++j) {
      if (i == j) continue;
      const auto& parent = subsets_[i];
      const auto& child = subsets_[j];
      if (child.size() < parent.size() &&
          std::includes(parent.begin(), parent.end(), child.begin(),
                        child.end())) {
        included_[i * h + j] = 1;
        omega_[i].push_back(j);
      }
    }
  }

  topo_order_.resize(h);
  std::iota(topo_order_.begin(), topo_order_.end(), std::size_t{0});
  std::stable_sort(topo_order_.begin(), topo_order_.end(),
                   [this](std::size_t a, std::size_t b) {
                     return subsets_[a].size() < subsets_[b].size();
                   });
}

std::vector<std::string> InterpretationScheme::subset_names(
    std::size_t i) const {
  std::vector<std::string> names;
  for (std::size_t g : subset(i)) names.push_back(partition_.group(g).name);
  return names;
}

std::size_t InterpretationScheme::support_size(std::size_t i) const {
  std::size_t n = 0;
  for (std::size_t g : subset(i)) n += partition_.group(g).features.size();
  return n;
}

bool InterpretationScheme::includes_strictly(std::size_t parent,
                                             std::size_t child) const {
  const std::size_t h = subsets_.size();
  if (parent >= h || child >= h) {
    throw ContractError("subset index out of range");
  }
  return included_[parent * h + child] != 0;
}

InterpretationScheme build_scheme(FeaturePartition partition,
                                  std::vector<GroupSet> subset_specs) {
  return InterpretationScheme(std::move(partition), std::move(subset_specs));
}

InterpretationScheme build_scheme(
    FeaturePartition partition,
    const std::vector<std::vector<std::string>>& subset_names) {
  std::vector<GroupSet> specs;
  for (std::size_t i = 0; i < subset_names.size(); ++i) {
    GroupSet s;
    for (const auto& name : subset_names[i]) {
      try {
        s.push_back(partition.group_index(name));
      } catch (const UnknownGroup&) {
        throw UnknownGroup("subset " + std::to_string(i) +
                           " references unknown group '" + name + "'");
      }
    }
    specs.push_back(std::move(s));
  }
  return InterpretationScheme(std::move(partition), std::move(specs));
}

Eigen::VectorXd mask_vector(const InterpretationScheme& scheme,
                            std::size_t i) {
  if (i >= scheme.num_subsets()) {
    throw ContractError("mask_vector: subset " + std::to_string(i) +
                        " out of range [0, " +
                        std::to_string(scheme.num_subsets()) + ")");
  }
  return scheme.masks()[i];
}

std::vector<std::pair<std::size_t, std::size_t>> hasse_edges(
    const InterpretationScheme& scheme) {
  std::vector<std::pair<std::size_t, std::size_t>> edges;
  const std::size_t h = scheme.num_subsets();
  for (std::size_t i = 0; i < h; ++i) {
    for (std::size_t j : scheme.children(i)) {
      bool covered = true;
      for (std::size_t t : scheme.children(i)) {
        if (t != j && scheme.includes_strictly(t, j)) {
          covered = false;
          break;
        }
      }
      if (covered) edges.emplace_back(j, i);
    }
  }
  std::sort(edges.begin(), edges.end());
  return edges;
}

bool hetero_link_allowed(const InterpretationScheme& source, std::size_t x,
                         const InterpretationScheme& target, std::size_t y) {
  std::set<std::string> source_groups;
  for (const auto& g : source.partition().groups()) source_groups.insert(g.name);
  bool shared = false;
  for (const auto& g : target.partition().groups()) {
    if (source_groups.contains(g.name)) {
      shared = true;
      break;
    }
  }
  if (!shared) {
    throw NamespaceError("schemes share no feature-group name");
  }
  const auto xs = source.subset_names(x);
  const auto ys = target.subset_names(y);
  const std::set<std::string> have(xs.begin(), xs.end());
  return std::all_of(ys.begin(), ys.end(),
                     [&](const std::string& n) { return have.contains(n); });
}

}  // namespace attrimix
