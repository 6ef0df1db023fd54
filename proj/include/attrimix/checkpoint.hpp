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

// Model checkpoints as a JSON document. Weight arrays are stored as base64
// of little-endian IEEE-754 doubles, row-major.

#pragma once

#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "attrimix/masked_network.hpp"
#include "attrimix/scheme.hpp"

namespace attrimix {

inline constexpr int kCheckpointVersion = 1;

nlohmann::json scheme_to_json(const InterpretationScheme& scheme);
InterpretationScheme scheme_from_json(const nlohmann::json& doc);

std::string encode_doubles(std::span<const double> values);
std::vector<double> decode_doubles(const std::string& text);

struct Checkpoint {
  int version = kCheckpointVersion;
  nlohmann::json scheme;
  nlohmann::json layers;  // per layer: index, widths, activation, blocks
  std::map<std::string, Tensor> parameters;
};

Checkpoint make_checkpoint(const InterpretationScheme& scheme,
                           std::span<const MaskedLayerSpec> layers,
                           std::span<Parameter* const> parameters);

nlohmann::json to_json(const Checkpoint& checkpoint);
Checkpoint checkpoint_from_json(const nlohmann::json& doc);

// Rebuilds an InterpretableMLP (architecture and weights) from a checkpoint
// produced by make_checkpoint on such a network.
InterpretableMLP restore_mlp(const Checkpoint& checkpoint);

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& c);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace attrimix
