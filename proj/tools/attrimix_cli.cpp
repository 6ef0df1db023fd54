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


// attrimix run <config.json> | attrimix compare <a.json> <b.json>

#include <cstdint>
#include <fstream>
#include <iostream>
#include <string>

#include <nlohmann/json.hpp>

#include "CLI11.hpp"
#include "attrimix/errors.hpp"
#include "attrimix/experiment.hpp"

namespace {

using namespace attrimix;

int run_command(const std::string& config_path, const RunOverrides& overrides) {
  ExperimentConfig config = load_config(config_path);
  apply_overrides(config, overrides);
  const RunResult result = run_experiment(config);
  std::cout << "wrote " << result.output_dir.string() << "/report.json\n";
  for (const auto& [key, value] : result.report["metrics"].items()) {
    std::cout << "  " << key << " = " << value.dump() << '\n';
  }
  return kExitOk;
}

nlohmann::json read_report(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read report " + path);
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(path + ": invalid JSON: " + e.what());
  }
}

int compare_command(const std::string& a, const std::string& b) {
  const CompareResult result = compare_reports(read_report(a), read_report(b));
  std::cout << result.summary;
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Interpretable mixtures of input-restricted experts"};
  app.require_subcommand(1);

  std::string config_path;
  std::uint64_t seed = 0;
  std::string out_dir;
  std::size_t epochs = 0;
  auto* run = app.add_subcommand("run", "train and evaluate one experiment");
  run->add_option("config", config_path, "experiment config (JSON)")->required();
  auto* seed_opt = run->add_option("--seed", seed, "override the config seed");
  auto* out_opt = run->add_option("--out-dir", out_dir, "override the output directory");
  auto* epochs_opt = run->add_option("--epochs", epochs, "override the epoch count");
  run->footer(std::string("Relative dataset paths resolve against $") + kDataRootEnv +
              " when set.");

  std::string report_a, report_b;
  auto* compare = app.add_subcommand("compare", "per-metric deltas of two reports");
  compare->add_option("a", report_a, "first report.json")->required();
  compare->add_option("b", report_b, "second report.json")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    if (run->parsed()) {
      RunOverrides overrides;
      if (*seed_opt) overrides.seed = seed;
      if (*out_opt) overrides.output_dir = out_dir;
      if (*epochs_opt) overrides.epochs = epochs;
      return run_command(config_path, overrides);
    }
    return compare_command(report_a, report_b);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const DivergenceError& e) {
    std::cerr << "training diverged: " << e.what() << '\n';
    return kExitDivergence;
  } catch (const IoError& e) {
    std::cerr << "io error: " << e.what() << '\n';
    return kExitIo;
  } catch (const ParseError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kExitIo;
  } catch (const ReferenceError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kExitIo;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
