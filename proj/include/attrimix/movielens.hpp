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

// MovieLens ingestion ("::"-separated ratings.dat, users.dat, movies.dat) as
// implicit feedback, and the leave-one-out evaluation split.

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "attrimix/autodiff.hpp"

namespace attrimix {

struct Interaction {
  std::size_t user = 0;
  std::size_t item = 0;
  std::int64_t timestamp = 0;
  std::size_t line = 0;  // 1-based line in the ratings file
};

struct InteractionDataset {
  std::size_t num_users = 0;
  std::size_t num_items = 0;
  std::vector<Interaction> positives;
  // Original ids by dense index, in order of first appearance.
  std::vector<std::int64_t> user_ids;
  std::vector<std::int64_t> item_ids;
  // One-hot age bucket, gender, occupation.
  Tensor user_features;
  std::vector<std::string> user_feature_names;
  // One-hot release decade, multi-hot genres.
  Tensor item_features;
  std::vector<std::string> item_feature_names;
  std::size_t duplicates_removed = 0;
};

// Reads ratings.dat, users.dat and movies.dat from `dir`.
InteractionDataset load_movielens(const std::filesystem::path& dir);

InteractionDataset load_movielens(std::istream& ratings, std::istream& users,
                                  std::istream& movies);

// Age bucket lower bound in the MovieLens-1M coding (1, 18, 25, 35, 45, 50,
// 56). Idempotent on already bucketed values.
int age_bucket(int age);

struct UserSplit {
  std::size_t user = 0;
  std::size_t test_item = 0;
  std::size_t validation_item = 0;
  std::vector<std::size_t> train_items;
  std::vector<std::size_t> negatives;  // sorted
};

struct EvalSplit {
  std::vector<UserSplit> users;
  // Every positive item per user (dense user index), sorted.
  std::vector<std::vector<std::size_t>> positives;
  std::size_t dropped_users = 0;
  std::uint64_t seed = 0;
  std::uint64_t hash = 0;
};

// Latest positive -> test, a random remaining positive -> validation, the
// rest -> train; `num_negatives` never-interacted items per user. Users with
// fewer than three positives are dropped.
EvalSplit make_split(const InteractionDataset& data, std::uint64_t seed,
                     std::size_t num_negatives = 100);

bool is_positive(const EvalSplit& split, std::size_t user, std::size_t item);

}  // namespace attrimix
