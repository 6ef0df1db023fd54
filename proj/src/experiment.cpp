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


#include "attrimix/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include "attrimix/cf_model.hpp"
#include "attrimix/checkpoint.hpp"
#include "attrimix/errors.hpp"
#include "attrimix/metrics.hpp"
#include "attrimix/movielens.hpp"
#include "attrimix/random.hpp"
#include "attrimix/toy_data.hpp"

namespace attrimix {

using nlohmann::json;

namespace {

// Field-path aware accessor; every complaint names the offending key.
class Reader {
 public:
  Reader(const json& node, std::string path) : node_(node), path_(std::move(path)) {
    if (!node_.is_object()) fail("expected an object");
  }

  [[noreturn]] void fail(const std::string& what) const {
    throw ConfigError((path_.empty() ? std::string("config") : path_) + ": " + what);
  }

  std::string key_path(const std::string& key) const {
    return path_.empty() ? key : path_ + "." + key;
  }

  bool has(const std::string& key) {
    seen_.insert(key);
    return node_.contains(key);
  }

  const json& at(const std::string& key) {
    if (!has(key)) fail("missing field '" + key + "'");
    return node_.at(key);
  }

  std::string string(const std::string& key, std::optional<std::string> fallback = {}) {
    if (!has(key)) {
      if (fallback) return *fallback;
      fail("missing field '" + key + "'");
    }
    const json& v = node_.at(key);
    if (!v.is_string()) throw ConfigError(key_path(key) + ": expected a string");
    return v.get<std::string>();
  }

  double number(const std::string& key, double fallback) {
    if (!has(key)) return fallback;
    const json& v = node_.at(key);
    if (!v.is_number()) throw ConfigError(key_path(key) + ": expected a number");
    return v.get<double>();
  }

  std::uint64_t unsigned_int(const std::string& key, std::uint64_t fallback) {
    if (!has(key)) return fallback;
    const json& v = node_.at(key);
    if (!v.is_number_unsigned()) {
      throw ConfigError(key_path(key) + ": expected a non-negative integer");
    }
    return v.get<std::uint64_t>();
  }

  bool boolean(const std::string& key, bool fallback) {
    if (!has(key)) return fallback;
    const json& v = node_.at(key);
    if (!v.is_boolean()) throw ConfigError(key_path(key) + ": expected true or false");
    return v.get<bool>();
  }

  // Typos should not silently fall back to defaults.
  void finish() const {
    for (const auto& [key, value] : node_.items()) {
      if (!seen_.count(key)) fail("unknown field '" + key + "'");
    }
  }

 private:
  const json& node_;
  std::string path_;
  std::set<std::string> seen_;
};

Task task_from_string(const std::string& name, const std::string& path) {
  if (name == "toy_a") return Task::kToyA;
  if (name == "toy_b") return Task::kToyB;
  if (name == "movielens_cf") return Task::kMovieLensCf;
  throw ConfigError(path + ": unknown task '" + name +
                    "' (expected toy_a, toy_b or movielens_cf)");
}

SelectionConfig parse_selection(const json& node, const std::string& path) {
  SelectionConfig s;
  Reader r(node, path);
  try {
    s.variant = selection_from_string(r.string("variant", std::string("abs")));
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    throw ConfigError(r.key_path("variant") + ": " + e.what());
  }
  s.power = r.number("power", s.power);
  s.epsilon = r.number("epsilon", s.epsilon);
  r.finish();
  try {
    s.validate();
  } catch (const Error& e) {
    throw ConfigError(path + ": " + e.what());
  }
  return s;
}

json selection_json(const SelectionConfig& s) {
  return {{"variant", to_string(s.variant)}, {"power", s.power}, {"epsilon", s.epsilon}};
}

std::vector<std::vector<std::size_t>> parse_hidden(const json& node,
                                                   std::size_t experts) {
  const std::string path = "architecture.hidden";
  if (!node.is_array() || node.empty()) {
    throw ConfigError(path + ": expected a non-empty list of layers");
  }
  std::vector<std::vector<std::size_t>> hidden;
  for (std::size_t k = 0; k < node.size(); ++k) {
    const std::string at = path + "[" + std::to_string(k) + "]";
    const json& layer = node[k];
    if (layer.is_number_unsigned() && layer.get<std::size_t>() > 0) {
      hidden.emplace_back(experts, layer.get<std::size_t>());
    } else if (layer.is_array()) {
      if (layer.size() != experts) {
        throw ConfigError(at + ": lists " + std::to_string(layer.size()) +
                          " widths but the scheme has " + std::to_string(experts) +
                          " subsets");
      }
      std::vector<std::size_t> widths;
      for (const json& w : layer) {
        if (!w.is_number_unsigned() || w.get<std::size_t>() == 0) {
          throw ConfigError(at + ": widths must be positive integers");
        }
        widths.push_back(w.get<std::size_t>());
      }
      hidden.push_back(std::move(widths));
    } else {
      throw ConfigError(at + ": expected a positive width or a list of widths");
    }
  }
  return hidden;
}

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

void ensure_written(const std::ofstream& out, const std::filesystem::path& path) {
  if (!out) throw IoError("cannot write " + path.string());
}

std::ofstream open_output(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  return out;
}

void write_json(const std::filesystem::path& path, const json& doc) {
  auto out = open_output(path);
  out << doc.dump(2) << '\n';
  out.flush();
  ensure_written(out, path);
}

// sample_id, alpha_1..alpha_H, argmax (1-based), y, y_hat
void write_attributions(const std::filesystem::path& path,
                        const MixturePrediction& pred,
                        const Eigen::VectorXd& labels) {
  auto out = open_output(path);
  const auto h = pred.alpha.cols();
  out << "sample_id";
  for (Index i = 0; i < h; ++i) out << ",alpha_" << (i + 1);
  out << ",argmax,y,y_hat\n";
  for (Index s = 0; s < pred.alpha.rows(); ++s) {
    out << s;
    for (Index i = 0; i < h; ++i) out << ',' << format_double(pred.alpha(s, i));
    out << ',' << (pred.attributed[static_cast<std::size_t>(s)] + 1) << ','
        << labels(s) << ',' << format_double(pred.y_hat(s)) << '\n';
  }
  out.flush();
  ensure_written(out, path);
}

void write_history(const std::filesystem::path& path, const TrainResult& result) {
  auto out = open_output(path);
  write_history_csv(out, result.history);
  out.flush();
  ensure_written(out, path);
}

json histogram_json(const AttributionHistogram& hist,
                    const InterpretationScheme& scheme) {
  json experts = json::array();
  for (std::size_t i = 0; i < hist.argmax_fraction.size(); ++i) {
    experts.push_back({{"index", i + 1},
                       {"subset", scheme.subset_names(i)},
                       {"argmax_fraction", hist.argmax_fraction[i]},
                       {"mean_alpha", hist.mean_alpha[i]}});
  }
  return {{"experts", experts},
          {"no_selection_fraction", hist.no_selection_fraction},
          {"samples", hist.samples}};
}

json history_json(const TrainResult& result) {
  return {{"epochs_run", result.history.size()},
          {"steps", result.steps},
          {"best_epoch", result.best_epoch},
          {"final_learning_rate",
           result.history.empty() ? 0.0 : result.history.back().learning_rate}};
}

void save_model(const std::filesystem::path& path, const InterpretationScheme& scheme,
                std::span<const MaskedLayerSpec> layers,
                const std::vector<Parameter*>& parameters) {
  const Checkpoint c = make_checkpoint(scheme, layers, parameters);
  try {
    save_checkpoint(path, c);
  } catch (const IoError&) {
    throw;
  } catch (const std::exception& e) {
    throw IoError("cannot save checkpoint " + path.string() + ": " + e.what());
  }
}

struct SplitToy {
  Tensor train_x, val_x;
  Eigen::VectorXd train_y, val_y;
};

SplitToy holdout(const ToyData& data, double fraction, std::uint64_t seed) {
  const auto n = static_cast<std::size_t>(data.labels.size());
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  Rng rng = make_rng(seed);
  shuffle(order, rng);
  const auto n_val = static_cast<std::size_t>(std::floor(fraction * static_cast<double>(n)));
  SplitToy s;
  s.val_x.resize(static_cast<Index>(n_val), 2);
  s.val_y.resize(static_cast<Index>(n_val));
  s.train_x.resize(static_cast<Index>(n - n_val), 2);
  s.train_y.resize(static_cast<Index>(n - n_val));
  for (std::size_t r = 0; r < n; ++r) {
    const auto src = static_cast<Index>(order[r]);
    if (r < n_val) {
      const auto dst = static_cast<Index>(r);
      s.val_x.row(dst) = data.features.row(src);
      s.val_y(dst) = data.labels(src);
    } else {
      const auto dst = static_cast<Index>(r - n_val);
      s.train_x.row(dst) = data.features.row(src);
      s.train_y(dst) = data.labels(src);
    }
  }
  return s;
}

// Derived seeds so data, holdout and model draws never share a stream.
constexpr std::uint64_t kTestSeedOffset = 0x7e57;
constexpr std::uint64_t kHoldoutSeedOffset = 0x401d;
constexpr std::uint64_t kModelSeedOffset = 0x30de1;

json run_toy(const ExperimentConfig& config, const InterpretationScheme& scheme,
             const std::filesystem::path& dir) {
  const bool b = config.task == Task::kToyB;
  const auto make = [&](std::uint64_t seed, std::size_t n) {
    return b ? toy_b_spec(seed, n, config.sigma) : toy_a_spec(seed, n, config.sigma);
  };
  const ToySpec train_spec = make(config.seed, config.samples_per_cluster);
  const ToySpec test_spec =
      make(config.seed + kTestSeedOffset, config.test_samples_per_cluster);
  const ToyData train_data = generate_toy(train_spec);
  const ToyData test_data = generate_toy(test_spec);

  const SplitToy split =
      holdout(train_data, config.validation_fraction, config.seed + kHoldoutSeedOffset);
  DenseTrainingData data(split.train_x, split.train_y, split.val_x, split.val_y);
  DenseExpertModel model(InterpretableMLP(scheme, config.hidden, config.activation,
                                          config.seed + kModelSeedOffset));
  GemConfig gem = config.training;
  gem.seed = config.seed;
  const TrainResult result = train(model, data, gem);

  Batch test;
  test.features = test_data.features;
  test.labels = test_data.labels;
  const MixturePrediction pred =
      predict_with_attribution(model, test, gem.inference_selection);

  // Ground truth refers to the built-in toy scheme; compare by feature mask.
  const InterpretationScheme reference = toy_scheme();
  const std::size_t n = test.size();
  std::size_t match = 0, near = 0, near_match = 0, univariate = 0;
  double mean_uni_max = 0.0, mean_multi_max = 0.0;
  for (std::size_t s = 0; s < n; ++s) {
    const auto row = static_cast<Index>(s);
    const bool ok = pred.selected[s] &&
                    scheme.masks()[pred.attributed[s]] ==
                        reference.masks()[test_data.truth[s]];
    match += ok;
    const auto& cluster = test_spec.clusters[test_data.cluster[s]];
    if ((test_data.features.row(row).transpose() - cluster.mean).norm() <=
        cluster.sigma) {
      ++near;
      near_match += ok;
    }
    if (pred.selected[s] && scheme.subset(pred.attributed[s]).size() == 1) ++univariate;
    double uni = 0.0, multi = 0.0;
    for (std::size_t i = 0; i < scheme.num_subsets(); ++i) {
      const double a = pred.alpha(row, static_cast<Index>(i));
      if (scheme.subset(i).size() == 1) {
        uni = std::max(uni, a);
      } else {
        multi = std::max(multi, a);
      }
    }
    mean_uni_max += uni;
    mean_multi_max += multi;
  }
  const auto dn = static_cast<double>(n);
  json metrics = {
      {"accuracy", accuracy(pred.y_hat, test.labels)},
      {"attribution_truth_match", static_cast<double>(match) / dn},
      {"attribution_truth_match_1sigma",
       near == 0 ? 0.0 : static_cast<double>(near_match) / static_cast<double>(near)},
      {"univariate_argmax_fraction", static_cast<double>(univariate) / dn},
      {"mean_max_alpha_univariate", mean_uni_max / dn},
      {"mean_max_alpha_multivariate", mean_multi_max / dn},
  };

  write_attributions(dir / "attributions.csv", pred, test.labels);

  // Dense grid for plotting the decision surface and attributions.
  const std::size_t res = config.grid_resolution;
  Batch grid;
  grid.features.resize(static_cast<Index>(res * res), 2);
  grid.labels = Eigen::VectorXd::Zero(static_cast<Index>(res * res));
  const auto coord = [res](std::size_t k) {
    return -4.5 + 9.0 * static_cast<double>(k) / static_cast<double>(res - 1);
  };
  for (std::size_t r = 0; r < res; ++r) {
    for (std::size_t c = 0; c < res; ++c) {
      const auto row = static_cast<Index>(r * res + c);
      grid.features(row, 0) = coord(c);
      grid.features(row, 1) = coord(r);
    }
  }
  const MixturePrediction gp =
      predict_with_attribution(model, grid, gem.inference_selection);
  {
    const auto path = dir / "grid.csv";
    auto out = open_output(path);
    out << "x1,x2,y_hat";
    for (std::size_t i = 0; i < scheme.num_subsets(); ++i) out << ",alpha_" << (i + 1);
    out << '\n';
    for (Index s = 0; s < gp.alpha.rows(); ++s) {
      out << format_double(grid.features(s, 0)) << ','
          << format_double(grid.features(s, 1)) << ',' << format_double(gp.y_hat(s));
      for (Index i = 0; i < gp.alpha.cols(); ++i) out << ',' << format_double(gp.alpha(s, i));
      out << '\n';
    }
    out.flush();
    ensure_written(out, path);
  }

  write_history(dir / "history.csv", result);
  auto& mlp = model.mlp();
  save_model(dir / "model.json", scheme, mlp.layers(), mlp.parameters());

  const std::vector<MixturePrediction> preds{pred};
  return {{"metrics", metrics},
          {"attribution_histogram", histogram_json(attribution_histogram(preds), scheme)},
          {"parameter_count", model.parameter_count()},
          {"training", history_json(result)},
          {"samples", {{"train", split.train_y.size()},
                       {"validation", split.val_y.size()},
                       {"test", n},
                       {"test_within_1sigma", near}}}};
}

std::string hex64(std::uint64_t v) {
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

json run_movielens(const ExperimentConfig& config, const InterpretationScheme& scheme,
                   const std::filesystem::path& dir) {
  const auto path = resolve_data_path(config.data_path);
  const InteractionDataset dataset = load_movielens(path);
  const EvalSplit split = make_split(dataset, config.seed, config.eval_negatives);

  json manifest = {
      {"path", path.string()},
      {"users", dataset.num_users},
      {"items", dataset.num_items},
      {"positives", dataset.positives.size()},
      {"duplicates_removed", dataset.duplicates_removed},
      {"user_feature_dim", dataset.user_features.cols()},
      {"item_feature_dim", dataset.item_features.cols()},
      {"user_features", dataset.user_feature_names},
      {"item_features", dataset.item_feature_names},
      {"split_seed", split.seed},
      {"split_hash", hex64(split.hash)},
      {"evaluated_users", split.users.size()},
      {"dropped_users", split.dropped_users},
      {"eval_negatives", config.eval_negatives},
      {"train_negatives_per_positive", config.negatives_per_positive},
  };
  write_json(dir / "manifest.json", manifest);

  CfModel model(dataset, scheme, config.hidden, config.activation,
                config.seed + kModelSeedOffset);
  CfTrainingData data(split, dataset.num_items, config.negatives_per_positive);
  GemConfig gem = config.training;
  gem.seed = config.seed;
  const TrainResult result = train(model, data, gem);

  const RankingReport ranking =
      evaluate_ranking(model, split, gem.inference_selection, HeldOut::kTest, 10);
  json metrics = {{"hr@10", ranking.hr}, {"ndcg@10", ranking.ndcg}};

  const Eigen::VectorXd ones = Eigen::VectorXd::Ones(ranking.positives.alpha.rows());
  write_attributions(dir / "attributions.csv", ranking.positives, ones);
  write_history(dir / "history.csv", result);
  save_model(dir / "model.json", scheme, model.mlp().layers(), model.parameters());

  const std::vector<MixturePrediction> preds{ranking.positives};
  return {{"metrics", metrics},
          {"attribution_histogram", histogram_json(attribution_histogram(preds), scheme)},
          {"parameter_count", model.parameter_count()},
          {"training", history_json(result)},
          {"dataset", {{"users", dataset.num_users},
                       {"items", dataset.num_items},
                       {"evaluated_users", split.users.size()},
                       {"split_hash", hex64(split.hash)}}}};
}

}  // namespace

std::string to_string(Task t) {
  switch (t) {
    case Task::kToyA:
      return "toy_a";
    case Task::kToyB:
      return "toy_b";
    case Task::kMovieLensCf:
      return "movielens_cf";
  }
  return "unknown";
}

json ExperimentConfig::to_json() const {
  json group_list = json::array();
  for (const auto& g : groups) {
    group_list.push_back({{"name", g.name}, {"range", {g.begin, g.end}}});
  }
  return {
      {"task", to_string(task)},
      {"seed", seed},
      {"output_dir", output_dir},
      {"scheme", {{"groups", group_list}, {"subsets", subsets}}},
      {"architecture", {{"hidden", hidden}, {"activation", attrimix::to_string(activation)}}},
      {"training",
       {{"learning_rate", training.learning_rate},
        {"plateau_factor", training.plateau_factor},
        {"plateau_patience", training.plateau_patience},
        {"lr_floor", training.lr_floor},
        {"batch_size", training.batch_size},
        {"epochs", training.epochs},
        {"selection", selection_json(training.selection)},
        {"inference_selection", selection_json(training.inference_selection)},
        {"objective", attrimix::to_string(training.objective)},
        {"keep_best", training.keep_best}}},
      {"data",
       {{"samples_per_cluster", samples_per_cluster},
        {"test_samples_per_cluster", test_samples_per_cluster},
        {"sigma", sigma},
        {"validation_fraction", validation_fraction},
        {"path", data_path},
        {"negatives_per_positive", negatives_per_positive},
        {"eval_negatives", eval_negatives}}},
      {"output", {{"grid_resolution", grid_resolution}}},
  };
}

ExperimentConfig parse_config(const json& doc) {
  ExperimentConfig c;
  Reader root(doc, "");
  c.task = task_from_string(root.string("task"), "task");
  c.seed = root.unsigned_int("seed", 0);
  c.output_dir = root.string("output_dir", c.output_dir);

  {
    Reader scheme(root.at("scheme"), "scheme");
    const json& groups = scheme.at("groups");
    if (!groups.is_array() || groups.empty()) {
      throw ConfigError("scheme.groups: expected a non-empty list");
    }
    for (std::size_t k = 0; k < groups.size(); ++k) {
      const std::string at = "scheme.groups[" + std::to_string(k) + "]";
      Reader g(groups[k], at);
      GroupDecl decl;
      decl.name = g.string("name");
      const json& range = g.at("range");
      if (!range.is_array() || range.size() != 2 || !range[0].is_number_unsigned() ||
          !range[1].is_number_unsigned()) {
        throw ConfigError(at + ".range: expected [begin, end] feature indices");
      }
      decl.begin = range[0].get<std::size_t>();
      decl.end = range[1].get<std::size_t>();
      if (decl.end <= decl.begin) {
        throw ConfigError(at + ".range: end must exceed begin");
      }
      g.finish();
      c.groups.push_back(std::move(decl));
    }
    const json& subsets = scheme.at("subsets");
    if (!subsets.is_array() || subsets.empty()) {
      throw ConfigError("scheme.subsets: expected a non-empty list");
    }
    for (std::size_t k = 0; k < subsets.size(); ++k) {
      const std::string at = "scheme.subsets[" + std::to_string(k) + "]";
      if (!subsets[k].is_array()) throw ConfigError(at + ": expected a list of group names");
      std::vector<std::string> names;
      for (const json& name : subsets[k]) {
        if (!name.is_string()) throw ConfigError(at + ": group names must be strings");
        names.push_back(name.get<std::string>());
      }
      c.subsets.push_back(std::move(names));
    }
    scheme.finish();
  }

  // Validates groups and subsets with messages naming the subset.
  const InterpretationScheme scheme = scheme_from_config(c);

  {
    Reader arch(root.at("architecture"), "architecture");
    c.hidden = parse_hidden(arch.at("hidden"), scheme.num_subsets());
    try {
      c.activation = activation_from_string(arch.string("activation", std::string("relu")));
    } catch (const ConfigError&) {
      throw;
    } catch (const Error& e) {
      throw ConfigError(std::string("architecture.activation: ") + e.what());
    }
    arch.finish();
  }

  if (root.has("training")) {
    Reader t(root.at("training"), "training");
    GemConfig& g = c.training;
    g.learning_rate = t.number("learning_rate", g.learning_rate);
    g.plateau_factor = t.number("plateau_factor", g.plateau_factor);
    g.plateau_patience = t.unsigned_int("plateau_patience", g.plateau_patience);
    g.lr_floor = t.number("lr_floor", g.lr_floor);
    g.batch_size = t.unsigned_int("batch_size", g.batch_size);
    g.epochs = t.unsigned_int("epochs", g.epochs);
    if (t.has("selection")) g.selection = parse_selection(t.at("selection"), "training.selection");
    g.inference_selection = t.has("inference_selection")
                                ? parse_selection(t.at("inference_selection"),
                                                  "training.inference_selection")
                                : g.selection;
    try {
      g.objective = objective_from_string(t.string("objective", std::string("mixture")));
    } catch (const Error& e) {
      throw ConfigError(std::string("training.objective: ") + e.what());
    }
    g.keep_best = t.boolean("keep_best", g.keep_best);
    t.finish();
    try {
      g.validate();
    } catch (const Error& e) {
      throw ConfigError(std::string("training: ") + e.what());
    }
    if (g.objective == Objective::kPlain && scheme.num_subsets() != 1) {
      throw ConfigError("training.objective: 'plain' needs a single-subset scheme");
    }
  }

  if (root.has("data")) {
    Reader d(root.at("data"), "data");
    c.samples_per_cluster = d.unsigned_int("samples_per_cluster", c.samples_per_cluster);
    c.test_samples_per_cluster =
        d.unsigned_int("test_samples_per_cluster", c.test_samples_per_cluster);
    c.sigma = d.number("sigma", c.sigma);
    c.validation_fraction = d.number("validation_fraction", c.validation_fraction);
    c.data_path = d.string("path", c.data_path);
    c.negatives_per_positive = d.unsigned_int("negatives_per_positive", c.negatives_per_positive);
    c.eval_negatives = d.unsigned_int("eval_negatives", c.eval_negatives);
    d.finish();
  }
  if (root.has("output")) {
    Reader o(root.at("output"), "output");
    c.grid_resolution = o.unsigned_int("grid_resolution", c.grid_resolution);
    o.finish();
  }
  root.finish();

  const bool toy = c.task != Task::kMovieLensCf;
  if (toy) {
    if (scheme.num_features() != 2) {
      throw ConfigError("scheme.groups: toy tasks have exactly 2 input features");
    }
    if (c.samples_per_cluster == 0 || c.test_samples_per_cluster == 0) {
      throw ConfigError("data: samples per cluster must be positive");
    }
    if (!(c.sigma > 0.0)) throw ConfigError("data.sigma: must be > 0");
    if (!(c.validation_fraction >= 0.0 && c.validation_fraction < 1.0)) {
      throw ConfigError("data.validation_fraction: must lie in [0, 1)");
    }
    if (c.grid_resolution < 2) throw ConfigError("output.grid_resolution: must be >= 2");
  } else {
    if (c.data_path.empty()) throw ConfigError("data.path: required for movielens_cf");
    if (c.eval_negatives == 0) throw ConfigError("data.eval_negatives: must be positive");
  }
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read config " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(path.string() + ": invalid JSON: " + e.what());
  }
  return parse_config(doc);
}

InterpretationScheme scheme_from_config(const ExperimentConfig& config) {
  std::size_t num_features = 0;
  std::vector<FeatureGroup> groups;
  for (const auto& g : config.groups) {
    FeatureGroup fg{g.name, {}};
    for (std::size_t f = g.begin; f < g.end; ++f) fg.features.push_back(f);
    num_features = std::max(num_features, g.end);
    groups.push_back(std::move(fg));
  }
  std::optional<FeaturePartition> partition;
  try {
    partition.emplace(num_features, std::move(groups));
  } catch (const Error& e) {
    throw ConfigError(std::string("scheme.groups: ") + e.what());
  }
  std::vector<GroupSet> subsets;
  for (std::size_t k = 0; k < config.subsets.size(); ++k) {
    const std::string at = "scheme.subsets[" + std::to_string(k) + "]";
    if (config.subsets[k].empty()) throw ConfigError(at + ": empty subset");
    GroupSet set;
    for (const auto& name : config.subsets[k]) {
      try {
        set.push_back(partition->group_index(name));
      } catch (const UnknownGroup&) {
        throw ConfigError(at + ": unknown group '" + name + "'");
      }
    }
    subsets.push_back(std::move(set));
  }
  try {
    return build_scheme(*partition, std::move(subsets));
  } catch (const Error& e) {
    throw ConfigError(std::string("scheme.subsets: ") + e.what());
  }
}

void apply_overrides(ExperimentConfig& config, const RunOverrides& overrides) {
  if (overrides.seed) config.seed = *overrides.seed;
  if (overrides.output_dir) config.output_dir = *overrides.output_dir;
  if (overrides.epochs) config.training.epochs = *overrides.epochs;
}

std::filesystem::path resolve_data_path(const std::string& path) {
  const std::filesystem::path p(path);
  if (p.is_absolute()) return p;
  if (const char* root = std::getenv(kDataRootEnv); root != nullptr && *root != '\0') {
    return std::filesystem::path(root) / p;
  }
  return p;
}

RunResult run_experiment(const ExperimentConfig& config) {
  const auto start = std::chrono::steady_clock::now();
  const InterpretationScheme scheme = scheme_from_config(config);
  const std::filesystem::path dir(config.output_dir);
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());

  json report = {{"task", to_string(config.task)}};
  json body = config.task == Task::kMovieLensCf ? run_movielens(config, scheme, dir)
                                                : run_toy(config, scheme, dir);
  report.update(body);
  report["config"] = config.to_json();
  report["selection"] = {{"training", selection_json(config.training.selection)},
                         {"inference", selection_json(config.training.inference_selection)}};
  const std::chrono::duration<double> elapsed = std::chrono::steady_clock::now() - start;
  report["wall_clock_seconds"] = elapsed.count();
  write_json(dir / "report.json", report);
  return {report, dir};
}

CompareResult compare_reports(const json& a, const json& b) {
  const auto task_of = [](const json& r, const char* which) {
    if (!r.is_object() || !r.contains("task") || !r["task"].is_string() ||
        !r.contains("metrics") || !r["metrics"].is_object()) {
      throw ConfigError(std::string("report ") + which + ": not an attrimix report");
    }
    return r["task"].get<std::string>();
  };
  const std::string ta = task_of(a, "A");
  const std::string tb = task_of(b, "B");
  if (ta != tb) throw ConfigError("reports are for different tasks: " + ta + " vs " + tb);

  std::set<std::string> ka, kb;
  for (const auto& [k, v] : a["metrics"].items()) ka.insert(k);
  for (const auto& [k, v] : b["metrics"].items()) kb.insert(k);
  if (ka != kb) throw ConfigError("reports have different metric keys");

  CompareResult out;
  std::ostringstream text;
  text << "task " << ta << '\n';
  for (const auto& key : ka) {
    const double va = a["metrics"][key].get<double>();
    const double vb = b["metrics"][key].get<double>();
    out.deltas[key] = vb - va;
    text << key << ": " << format_double(va) << " -> " << format_double(vb)
         << " (delta " << format_double(vb - va) << ")\n";
  }
  if (a.contains("parameter_count") && b.contains("parameter_count")) {
    text << "parameter_count: " << a["parameter_count"].get<long long>() << " -> "
         << b["parameter_count"].get<long long>() << '\n';
  }

  const auto argmax = [](const json& r) {
    std::vector<double> v;
    const json& h = r.at("attribution_histogram");
    for (const json& e : h.at("experts")) v.push_back(e.at("argmax_fraction").get<double>());
    v.push_back(h.at("no_selection_fraction").get<double>());
    return v;
  };
  const auto ha = argmax(a);
  const auto hb = argmax(b);
  if (ha.size() == hb.size()) {
    double tv = 0.0;
    for (std::size_t i = 0; i < ha.size(); ++i) tv += std::abs(ha[i] - hb[i]);
    out.argmax_tv_distance = 0.5 * tv;
    text << "attribution argmax total variation: " << format_double(*out.argmax_tv_distance)
         << '\n';
  } else {
    text << "attribution histograms not comparable: " << ha.size() - 1 << " vs "
         << hb.size() - 1 << " experts\n";
  }
  out.summary = text.str();
  return out;
}

}  // namespace attrimix
