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

// Configuration-driven experiments: toy tasks and MovieLens collaborative
// filtering, with JSON reports and CSV outputs.

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "attrimix/masked_network.hpp"
#include "attrimix/mixture.hpp"

namespace attrimix {

enum class Task { kToyA, kToyB, kMovieLensCf };

std::string to_string(Task t);

struct GroupDecl {
  std::string name;
  std::size_t begin = 0;  // feature range [begin, end)
  std::size_t end = 0;
};

struct ExperimentConfig {
  Task task = Task::kToyB;
  std::uint64_t seed = 0;
  std::string output_dir = "runs/out";

  std::vector<GroupDecl> groups;
  std::vector<std::vector<std::string>> subsets;

  // hidden[k][i]; a layer given as one integer is expanded per expert.
  std::vector<std::vector<std::size_t>> hidden;
  Activation activation = Activation::kRelu;

  GemConfig training;

  // Toy tasks.
  std::size_t samples_per_cluster = 500;
  std::size_t test_samples_per_cluster = 250;
  double sigma = 0.25;
  double validation_fraction = 0.2;
  std::size_t grid_resolution = 151;

  // Collaborative filtering.
  std::string data_path;
  std::size_t negatives_per_positive = 4;
  std::size_t eval_negatives = 100;

  nlohmann::json to_json() const;
};

// Throws ConfigError with the offending field in the message.
ExperimentConfig parse_config(const nlohmann::json& doc);
ExperimentConfig load_config(const std::filesystem::path& path);

InterpretationScheme scheme_from_config(const ExperimentConfig& config);

struct RunOverrides {
  std::optional<std::uint64_t> seed;
  std::optional<std::string> output_dir;
  std::optional<std::size_t> epochs;
};

void apply_overrides(ExperimentConfig& config, const RunOverrides& overrides);

// Environment variable holding the root for relative dataset paths.
inline constexpr const char* kDataRootEnv = "ATTRIMIX_DATA_ROOT";

std::filesystem::path resolve_data_path(const std::string& path);

struct RunResult {
  nlohmann::json report;
  std::filesystem::path output_dir;
};

// Trains and evaluates per the config, writing report.json, history.csv,
// attributions.csv, model.json, plus grid.csv (toy tasks) or manifest.json
// (collaborative filtering) under the output directory.
RunResult run_experiment(const ExperimentConfig& config);

struct CompareResult {
  std::map<std::string, double> deltas;  // b - a
  // Total variation between the argmax histograms (incl. no-selection);
  // empty when the expert counts differ.
  std::optional<double> argmax_tv_distance;
  std::string summary;
};

// Throws ConfigError for different tasks or metric keys.
CompareResult compare_reports(const nlohmann::json& a, const nlohmann::json& b);

// Exit codes of the command-line runner.
inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitDivergence = 3;
inline constexpr int kExitIo = 4;

}  // namespace attrimix
