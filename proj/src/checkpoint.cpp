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

#include "attrimix/checkpoint.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>

#include <boost/archive/iterators/base64_from_binary.hpp>
#include <boost/archive/iterators/binary_from_base64.hpp>
#include <boost/archive/iterators/transform_width.hpp>

#include "attrimix/errors.hpp"

namespace attrimix {

namespace {

using ToBase64 = boost::archive::iterators::base64_from_binary<
    boost::archive::iterators::transform_width<std::string::const_iterator, 6, 8>>;
using FromBase64 = boost::archive::iterators::transform_width<
    boost::archive::iterators::binary_from_base64<std::string::const_iterator>, 8, 6>;

std::uint64_t to_little_endian(std::uint64_t v) {
  if constexpr (std::endian::native == std::endian::big) {
    std::uint64_t r = 0;
    for (int b = 0; b < 8; ++b) r = (r << 8) | ((v >> (8 * b)) & 0xFFu);
    return r;
  }
  return v;
}

std::string block_name(BlockKind b) {
  switch (b) {
    case BlockKind::kOwn:
      return "own";
    case BlockKind::kCross:
      return "cross";
    case BlockKind::kAbsent:
      return "absent";
  }
  return "absent";
}

}  // namespace

std::string encode_doubles(std::span<const double> values) {
  std::string bytes(values.size() * 8, '\0');
  for (std::size_t k = 0; k < values.size(); ++k) {
    const auto le = to_little_endian(std::bit_cast<std::uint64_t>(values[k]));
    std::memcpy(bytes.data() + 8 * k, &le, 8);
  }
  std::string out(ToBase64(bytes.cbegin()), ToBase64(bytes.cend()));
  out.append((3 - bytes.size() % 3) % 3, '=');
  return out;
}

std::vector<double> decode_doubles(const std::string& text) {
  std::string trimmed = text;
  std::size_t pad = 0;
  while (!trimmed.empty() && trimmed.back() == '=') {
    trimmed.pop_back();
    ++pad;
  }
  std::string bytes(FromBase64(trimmed.cbegin()), FromBase64(trimmed.cend()));
  if (bytes.size() % 8 != 0) {
    throw ParseError("checkpoint", 0, "weight payload is not a whole number of doubles");
  }
  std::vector<double> out(bytes.size() / 8);
  for (std::size_t k = 0; k < out.size(); ++k) {
    std::uint64_t le = 0;
    std::memcpy(&le, bytes.data() + 8 * k, 8);
    out[k] = std::bit_cast<double>(to_little_endian(le));
  }
  return out;
}

nlohmann::json scheme_to_json(const InterpretationScheme& scheme) {
  nlohmann::json groups = nlohmann::json::array();
  for (const auto& g : scheme.partition().groups()) {
    groups.push_back({{"name", g.name}, {"features", g.features}});
  }
  nlohmann::json subsets = nlohmann::json::array();
  for (std::size_t i = 0; i < scheme.num_subsets(); ++i) {
    subsets.push_back(scheme.subset_names(i));
  }
  return {{"num_features", scheme.num_features()},
          {"groups", groups},
          {"subsets", subsets}};
}

InterpretationScheme scheme_from_json(const nlohmann::json& doc) {
  std::vector<FeatureGroup> groups;
  for (const auto& g : doc.at("groups")) {
    groups.push_back({g.at("name").get<std::string>(),
                      g.at("features").get<std::vector<std::size_t>>()});
  }
  FeaturePartition partition(doc.at("num_features").get<std::size_t>(),
                             std::move(groups));
  return build_scheme(std::move(partition),
                      doc.at("subsets").get<std::vector<std::vector<std::string>>>());
}

Checkpoint make_checkpoint(const InterpretationScheme& scheme,
                           std::span<const MaskedLayerSpec> layers,
                           std::span<Parameter* const> parameters) {
  Checkpoint c;
  c.scheme = scheme_to_json(scheme);
  c.layers = nlohmann::json::array();
  for (const auto& layer : layers) {
    std::vector<std::string> blocks;
    for (BlockKind b : layer.blocks) blocks.push_back(block_name(b));
    c.layers.push_back({{"index", layer.layer_index},
                        {"input_layer", layer.input_layer},
                        {"in_widths", layer.in_widths},
                        {"out_widths", layer.out_widths},
                        {"activation", to_string(layer.activation)},
                        {"blocks", blocks},
                        {"weight", layer.weight.name}});
  }
  for (const Parameter* p : parameters) c.parameters[p->name] = p->value;
  return c;
}

nlohmann::json to_json(const Checkpoint& checkpoint) {
  nlohmann::json params = nlohmann::json::array();
  for (const auto& [name, value] : checkpoint.parameters) {
    params.push_back({{"name", name},
                      {"rows", value.rows()},
                      {"cols", value.cols()},
                      {"encoding", "base64-f64le"},
                      {"data", encode_doubles(std::span<const double>(
                                   value.data(), static_cast<std::size_t>(value.size())))}});
  }
  return {{"format", "attrimix-checkpoint"},
          {"version", checkpoint.version},
          {"scheme", checkpoint.scheme},
          {"layers", checkpoint.layers},
          {"parameters", params}};
}

Checkpoint checkpoint_from_json(const nlohmann::json& doc) {
  Checkpoint c;
  c.version = doc.at("version").get<int>();
  if (c.version != kCheckpointVersion) {
    throw ParseError("checkpoint", 0,
                     "unsupported checkpoint version " + std::to_string(c.version));
  }
  c.scheme = doc.at("scheme");
  c.layers = doc.at("layers");
  for (const auto& p : doc.at("parameters")) {
    const auto rows = p.at("rows").get<Index>();
    const auto cols = p.at("cols").get<Index>();
    const auto values = decode_doubles(p.at("data").get<std::string>());
    if (static_cast<Index>(values.size()) != rows * cols) {
      throw ParseError("checkpoint", 0,
                       "parameter '" + p.at("name").get<std::string>() +
                           "' has the wrong number of values");
    }
    c.parameters[p.at("name").get<std::string>()] =
        Eigen::Map<const Tensor>(values.data(), rows, cols);
  }
  return c;
}

InterpretableMLP restore_mlp(const Checkpoint& checkpoint) {
  InterpretationScheme scheme = scheme_from_json(checkpoint.scheme);
  std::vector<std::vector<std::size_t>> hidden;
  Activation activation = Activation::kRelu;
  const auto& layers = checkpoint.layers;
  if (layers.size() < 2) throw ParseError("checkpoint", 0, "too few layers");
  for (std::size_t k = 0; k + 1 < layers.size(); ++k) {
    hidden.push_back(layers[k].at("out_widths").get<std::vector<std::size_t>>());
    activation = activation_from_string(layers[k].at("activation").get<std::string>());
  }
  InterpretableMLP mlp(std::move(scheme), std::move(hidden), activation, 0);
  for (Parameter* p : mlp.parameters()) {
    auto it = checkpoint.parameters.find(p->name);
    if (it == checkpoint.parameters.end()) {
      throw ParseError("checkpoint", 0, "missing parameter '" + p->name + "'");
    }
    if (it->second.rows() != p->value.rows() || it->second.cols() != p->value.cols()) {
      throw DimensionError("checkpoint parameter '" + p->name + "' is " +
                           shape_string(it->second) + ", expected " +
                           shape_string(p->value));
    }
    p->value = it->second;
  }
  return mlp;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& c) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << to_json(c).dump(1) << '\n';
  if (!out) throw IoError("failed writing " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return checkpoint_from_json(nlohmann::json::parse(in));
}

}  // namespace attrimix
