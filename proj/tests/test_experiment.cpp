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


#include <sys/wait.h>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <gtest/gtest.h>

#include "attrimix/errors.hpp"
#include "attrimix/experiment.hpp"

namespace attrimix {
namespace {

namespace fs = std::filesystem;

nlohmann::json toy_config(const fs::path& out) {
  auto doc = nlohmann::json::parse(R"({
    "task": "toy_b",
    "seed": 3,
    "scheme": {
      "groups": [{"name": "X1", "range": [0, 1]}, {"name": "X2", "range": [1, 2]}],
      "subsets": [["X1"], ["X2"], ["X1", "X2"]]
    },
    "architecture": {"hidden": [4, 4], "activation": "relu"},
    "training": {"batch_size": 32, "epochs": 2},
    "data": {"samples_per_cluster": 40, "test_samples_per_cluster": 10},
    "output": {"grid_resolution": 7}
  })");
  doc["output_dir"] = out.string();
  return doc;
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("attrimix_test_" + name);
  fs::remove_all(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string config_error(const nlohmann::json& doc) {
  try {
    parse_config(doc);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

TEST(Config, UnknownGroupNamesTheSubset) {
  auto doc = toy_config("x");
  doc["scheme"]["subsets"][1] = {"X3"};
  const std::string msg = config_error(doc);
  EXPECT_NE(msg.find("scheme.subsets[1]"), std::string::npos) << msg;
  EXPECT_NE(msg.find("X3"), std::string::npos) << msg;
}

TEST(Config, FieldErrors) {
  auto bad_lr = toy_config("x");
  bad_lr["training"]["learning_rate"] = -1.0;
  EXPECT_NE(config_error(bad_lr), "");
  auto typo = toy_config("x");
  typo["training"]["epoch"] = 3;
  EXPECT_NE(config_error(typo).find("epoch"), std::string::npos);
  auto widths = toy_config("x");
  widths["architecture"]["hidden"] = nlohmann::json::array({nlohmann::json::array({4, 4})});
  EXPECT_NE(config_error(widths), "");
  auto task = toy_config("x");
  task["task"] = "toy_c";
  EXPECT_NE(config_error(task).find("task"), std::string::npos);
  auto cf = toy_config("x");
  cf["task"] = "movielens_cf";
  EXPECT_NE(config_error(cf), "");
}

TEST(Config, EchoParsesBack) {
  const auto c = parse_config(toy_config("out"));
  const auto again = parse_config(c.to_json());
  EXPECT_EQ(again.to_json(), c.to_json());
  EXPECT_EQ(again.hidden, (std::vector<std::vector<std::size_t>>{{4, 4, 4}, {4, 4, 4}}));
  EXPECT_EQ(again.grid_resolution, 7u);
}

TEST(Config, Overrides) {
  auto c = parse_config(toy_config("out"));
  apply_overrides(c, RunOverrides{9, "elsewhere", 5});
  EXPECT_EQ(c.seed, 9u);
  EXPECT_EQ(c.output_dir, "elsewhere");
  EXPECT_EQ(c.training.epochs, 5u);
}

TEST(Config, DataRoot) {
  ::setenv(kDataRootEnv, "/srv/data", 1);
  EXPECT_EQ(resolve_data_path("ml-100k"), fs::path("/srv/data/ml-100k"));
  EXPECT_EQ(resolve_data_path("/abs/ml"), fs::path("/abs/ml"));
  ::unsetenv(kDataRootEnv);
  EXPECT_EQ(resolve_data_path("ml-100k"), fs::path("ml-100k"));
}

nlohmann::json without_clock(nlohmann::json report) {
  report.erase("wall_clock_seconds");
  return report;
}

TEST(Run, ToyOutputsAndDeterminism) {
  const fs::path a = scratch("run_a"), b = scratch("run_b");
  const auto ra = run_experiment(parse_config(toy_config(a)));
  auto cb = parse_config(toy_config(b));
  const auto rb = run_experiment(cb);
  for (const char* f : {"report.json", "history.csv", "attributions.csv", "grid.csv", "model.json"}) {
    EXPECT_TRUE(fs::exists(a / f)) << f;
  }
  // Only the output directory and the clock may differ.
  auto ja = without_clock(nlohmann::json::parse(slurp(a / "report.json")));
  auto jb = without_clock(nlohmann::json::parse(slurp(b / "report.json")));
  jb["config"]["output_dir"] = ja["config"]["output_dir"];
  EXPECT_EQ(ja.dump(2), jb.dump(2));
  EXPECT_EQ(slurp(a / "grid.csv"), slurp(b / "grid.csv"));

  std::istringstream grid(slurp(a / "grid.csv"));
  std::string header, line;
  std::getline(grid, header);
  EXPECT_EQ(header, "x1,x2,y_hat,alpha_1,alpha_2,alpha_3");
  std::size_t rows = 0;
  while (std::getline(grid, line)) {
    ++rows;
    EXPECT_EQ(std::count(line.begin(), line.end(), ','), 5);
  }
  EXPECT_EQ(rows, 49u);

  const auto& r = ra.report;
  EXPECT_EQ(r["task"], "toy_b");
  for (const auto& [k, v] : r["metrics"].items()) {
    EXPECT_GE(v.get<double>(), 0.0) << k;
    EXPECT_LE(v.get<double>(), 1.0) << k;
  }
  double total = r["attribution_histogram"]["no_selection_fraction"].get<double>();
  for (const auto& e : r["attribution_histogram"]["experts"]) total += e["argmax_fraction"].get<double>();
  EXPECT_NEAR(total, 1.0, 1e-9);
  EXPECT_GT(r["parameter_count"].get<int>(), 0);

  // The echoed config reproduces the run.
  auto echo = parse_config(r["config"]);
  const fs::path c = scratch("run_c");
  echo.output_dir = c.string();
  const auto rc = run_experiment(echo);
  EXPECT_EQ(rc.report["metrics"], r["metrics"]);
  for (const auto& p : {a, b, c}) fs::remove_all(p);
}

TEST(Compare, DeltasAndErrors) {
  const nlohmann::json a = {{"task", "movielens_cf"},
                            {"metrics", {{"hr@10", 0.5}, {"ndcg@10", 0.3}}},
                            {"parameter_count", 10},
                            {"attribution_histogram",
                             {{"experts", {{{"argmax_fraction", 1.0}}}},
                              {"no_selection_fraction", 0.0}}}};
  const auto same = compare_reports(a, a);
  for (const auto& [k, d] : same.deltas) EXPECT_EQ(d, 0.0) << k;
  ASSERT_TRUE(same.argmax_tv_distance.has_value());
  EXPECT_EQ(*same.argmax_tv_distance, 0.0);

  auto b = a;
  b["metrics"]["hr@10"] = 0.56;
  b["attribution_histogram"]["experts"] = {{{"argmax_fraction", 0.25}}, {{"argmax_fraction", 0.75}}};
  const auto diff = compare_reports(a, b);
  EXPECT_NEAR(diff.deltas.at("hr@10"), 0.06, 1e-12);
  EXPECT_FALSE(diff.argmax_tv_distance.has_value());
  EXPECT_NE(diff.summary.find("hr@10"), std::string::npos);

  auto other = a;
  other["task"] = "toy_b";
  EXPECT_THROW(compare_reports(a, other), ConfigError);
  auto disjoint = a;
  disjoint["metrics"] = {{"accuracy", 0.9}};
  EXPECT_THROW(compare_reports(a, disjoint), ConfigError);
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(ATTRIMIX_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

void write_json(const fs::path& p, const nlohmann::json& doc) {
  std::ofstream(p) << doc.dump(2);
}

TEST(Cli, ExitCodes) {
  const fs::path dir = scratch("cli");
  fs::create_directories(dir);
  auto good = toy_config(dir / "out");
  good["training"]["epochs"] = 1;
  write_json(dir / "good.json", good);
  EXPECT_EQ(run_cli("run " + (dir / "good.json").string()), kExitOk);
  EXPECT_TRUE(fs::exists(dir / "out" / "report.json"));
  EXPECT_EQ(run_cli("run " + (dir / "good.json").string() + " --epochs 0 --out-dir " +
                    (dir / "zero").string()),
            kExitOk);
  EXPECT_EQ(nlohmann::json::parse(slurp(dir / "zero" / "report.json"))["training"]["epochs_run"], 0);

  auto bad = good;
  bad["scheme"]["subsets"][2] = {"X1", "X9"};
  write_json(dir / "bad.json", bad);
  EXPECT_EQ(run_cli("run " + (dir / "bad.json").string()), kExitConfig);
  EXPECT_EQ(run_cli("run " + (dir / "missing.json").string()), kExitIo);
  std::ofstream(dir / "broken.json") << "{ not json";
  EXPECT_EQ(run_cli("run " + (dir / "broken.json").string()), kExitConfig);

  auto nan = good;
  nan["training"]["learning_rate"] = 1e300;
  nan["output_dir"] = (dir / "nan").string();
  write_json(dir / "nan.json", nan);
  EXPECT_EQ(run_cli("run " + (dir / "nan.json").string()), kExitDivergence);

  const std::string rep = (dir / "out" / "report.json").string();
  EXPECT_EQ(run_cli("compare " + rep + " " + rep), kExitOk);
  write_json(dir / "other.json", {{"task", "toy_a"}, {"metrics", {{"accuracy", 1.0}}}});
  EXPECT_EQ(run_cli("compare " + rep + " " + (dir / "other.json").string()), kExitConfig);
  fs::remove_all(dir);
}

}  // namespace
}  // namespace attrimix
