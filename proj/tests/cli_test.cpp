/*
 * Copyright 2026 The sleepx Authors.
 *
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

#include <gtest/gtest.h>
#include <unistd.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "sleepx/cli.hpp"

namespace sleepx {
namespace {

namespace fs = std::filesystem;

struct RunResult {
  int code = 0;
  std::string out, err;
};

RunResult run(std::vector<std::string> args) {
  args.insert(args.begin(), "sleepx");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

// Scratch directory with a small cohort and a briefly trained checkpoint,
// shared by the suite.
class CliTest : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    dir_ = fs::temp_directory_path() / ("sleepx_cli_test_" + std::to_string(::getpid()));
    fs::create_directories(dir_);
    ASSERT_EQ(run({"synth", "--subjects", "60", "--timesteps", "4", "--seed", "3", "--out",
                   path("data.csv")}).code, 0);
    ASSERT_EQ(run(train_args("model.json")).code, 0);
  }
  static void TearDownTestSuite() { fs::remove_all(dir_); }

  static std::string path(const std::string& name) { return (dir_ / name).string(); }
  static std::vector<std::string> train_args(const std::string& out) {
    return {"train", "--data", path("data.csv"), "--arch", "lstm", "--seed", "5", "--train-size",
            "50", "--test-size", "10", "--epochs", "4", "--hidden", "8", "--out", path(out)};
  }
  // A subject and a class it is not predicted as.
  static std::pair<std::string, std::string> subject_and_other_class() {
    const auto ckpt = load_checkpoint(path("model.json"));
    const auto data = parse_csv(path("data.csv"));
    const Prediction p = predict_sequence(ckpt, data[0]);
    return {data[0].subject_id, class_names()[p.predicted == 0 ? 1 : 0]};
  }

  static fs::path dir_;
};

fs::path CliTest::dir_;

TEST(Cli, HelpAndUsageErrors) {
  const RunResult help = run({"--help"});
  EXPECT_EQ(help.code, 0);
  EXPECT_NE(help.out.find("counterfactual"), std::string::npos);
  EXPECT_EQ(run({"train", "--help"}).code, 0);
  EXPECT_EQ(run({"--version"}).code, 0);
  EXPECT_EQ(run({}).code, 1);
  EXPECT_EQ(run({"synth", "--bogus"}).code, 1);
  EXPECT_EQ(run({"frobnicate"}).code, 1);
  EXPECT_EQ(run({"train"}).code, 1);  // --data is required
  EXPECT_EQ(run({"train", "--data", "x.csv", "--arch", "rnn"}).code, 1);
}

TEST_F(CliTest, SynthWritesRequestedSubjects) {
  const RunResult r = run({"synth", "--subjects", "422", "--seed", "7", "--out", path("big.csv")});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto data = parse_csv(path("big.csv"));
  EXPECT_EQ(data.size(), 422u);
  for (const auto& s : data) EXPECT_EQ(s.length(), 7u);
  std::ifstream in(path("big.csv"));
  std::string header;
  std::getline(in, header);
  std::string expected;
  for (const auto& col : Schema::sleep_health().csv_header()) {
    expected += (expected.empty() ? "" : ",") + col;
  }
  EXPECT_EQ(header, expected);
}

TEST_F(CliTest, ResolvedConfigIsLoggedWithDefaults) {
  const RunResult r = run({"synth", "--subjects", "3", "--out", path("tiny.csv")});
  ASSERT_EQ(r.code, 0);
  const auto config = r.err.find("# resolved configuration");
  ASSERT_NE(config, std::string::npos);
  EXPECT_LT(config, r.err.find("synth: wrote"));
  EXPECT_NE(r.err.find("seed=7"), std::string::npos);
  EXPECT_NE(r.err.find("label-noise=0.05"), std::string::npos);
}

TEST_F(CliTest, ConfigFileSitsBetweenDefaultsAndFlags) {
  {
    std::ofstream cfg(path("synth.toml"));
    cfg << "[synth]\nsubjects=5\nseed=11\n";
  }
  RunResult r = run({"--config", path("synth.toml"), "synth", "--out", path("c1.csv")});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(parse_csv(path("c1.csv")).size(), 5u);
  EXPECT_NE(r.err.find("seed=11"), std::string::npos);
  r = run({"--config", path("synth.toml"), "synth", "--subjects", "8", "--out", path("c2.csv")});
  ASSERT_EQ(r.code, 0);
  EXPECT_EQ(parse_csv(path("c2.csv")).size(), 8u);
}

TEST_F(CliTest, DataDirectoryFromEnvironment) {
  ::setenv(cli::kDataDirEnv, dir_.c_str(), 1);
  const RunResult r = run({"predict", "--checkpoint", path("model.json"), "--data", "data.csv",
                           "--subject", "S01"});
  ::unsetenv(cli::kDataDirEnv);
  ASSERT_EQ(r.code, 0) << r.err;
  const auto doc = nlohmann::json::parse(r.out);
  EXPECT_EQ(doc["predictions"].size(), 1u);
  EXPECT_EQ(doc["predictions"][0]["subject_id"], "S01");
}

TEST_F(CliTest, DataErrorsExitTwo) {
  EXPECT_EQ(run({"predict", "--checkpoint", path("model.json"), "--data", path("missing.csv")}).code, 2);
  EXPECT_EQ(run({"predict", "--checkpoint", path("missing.json"), "--data", path("data.csv")}).code, 2);
  {
    std::ofstream bad(path("bad.csv"));
    bad << "subject_id,timestep,stress_level\nS1,zero,4\n";
  }
  EXPECT_EQ(run({"predict", "--checkpoint", path("model.json"), "--data", path("bad.csv")}).code, 2);
  EXPECT_EQ(run({"train", "--data", path("data.csv"), "--train-size", "500"}).code, 2);
}

TEST_F(CliTest, TrainIsByteReproducible) {
  ASSERT_EQ(run(train_args("again.json")).code, 0);
  EXPECT_EQ(slurp(path("model.json")), slurp(path("again.json")));
  EXPECT_EQ(slurp(path("model.json.history.csv")), slurp(path("again.json.history.csv")));
  const RunResult r = run(train_args("third.json"));
  const auto summary = nlohmann::json::parse(r.out);
  EXPECT_EQ(summary["model_hash"], checkpoint_hash(load_checkpoint(path("model.json"))));
  EXPECT_EQ(summary["test"]["total"], 10);
}

TEST_F(CliTest, ShapIsByteReproducible) {
  const auto [subject, other] = subject_and_other_class();
  const std::vector<std::string> args = {"shap", "--checkpoint", path("model.json"), "--data",
                                         path("data.csv"), "--subject", subject, "--samples",
                                         "200", "--background-size", "10"};
  const RunResult a = run(args), b = run(args);
  ASSERT_EQ(a.code, 0) << a.err;
  EXPECT_EQ(a.out, b.out);
  const auto doc = nlohmann::json::parse(a.out);
  EXPECT_EQ(doc["subject_id"], subject);
  EXPECT_EQ(doc["method"], "kernel");
  EXPECT_LT(doc["efficiency_residual"].get<double>(), 1e-9);
}

TEST_F(CliTest, ShapExactTooLargeIsUsageError) {
  const auto [subject, other] = subject_and_other_class();
  EXPECT_EQ(run({"shap", "--checkpoint", path("model.json"), "--data", path("data.csv"),
                 "--subject", subject, "--method", "exact", "--granularity", "timestep"})
                .code,
            1);
  EXPECT_EQ(run({"shap", "--checkpoint", path("model.json"), "--data", path("data.csv"),
                 "--subject", "nobody"})
                .code,
            1);
}

TEST_F(CliTest, CounterfactualIsByteReproducible) {
  const auto [subject, other] = subject_and_other_class();
  const std::vector<std::string> args = {
      "counterfactual", "--checkpoint", path("model.json"), "--data", path("data.csv"),
      "--subject", subject, "--target", other, "--mutable", "stress_level,quality_of_sleep",
      "--scope", "sustained_shift", "--max-iters", "200", "--plot", path("trace")};
  const RunResult a = run(args);
  ASSERT_EQ(a.code, 0) << a.err;
  const std::string trace = slurp(path("trace.csv"));
  const RunResult b = run(args);
  EXPECT_EQ(a.out, b.out);
  EXPECT_EQ(trace, slurp(path("trace.csv")));
  const auto doc = nlohmann::json::parse(a.out);
  EXPECT_EQ(doc["scope"], "sustained_shift");
  EXPECT_EQ(doc["target_name"], other);
  // Header plus one row per step.
  EXPECT_EQ(std::count(trace.begin(), trace.end(), '\n'), 5);
  EXPECT_NE(slurp(path("trace.svg")).find("<svg"), std::string::npos);
}

TEST_F(CliTest, CounterfactualUsageErrors) {
  const auto [subject, other] = subject_and_other_class();
  const std::vector<std::string> base = {"counterfactual", "--checkpoint", path("model.json"),
                                         "--data", path("data.csv"), "--subject", subject};
  auto with = [&](std::vector<std::string> extra) {
    auto args = base;
    args.insert(args.end(), extra.begin(), extra.end());
    return run(args).code;
  };
  EXPECT_EQ(with({"--target", other, "--mutable", "age"}), 1);
  EXPECT_EQ(with({"--target", other, "--weight", "stress_level"}), 1);
  EXPECT_EQ(with({"--target", other, "--scope", "monthly"}), 1);
  const auto ckpt = load_checkpoint(path("model.json"));
  const auto pred = predict_sequence(ckpt, cli::find_subject(parse_csv(path("data.csv")), subject));
  EXPECT_EQ(with({"--target", class_names()[pred.predicted]}), 1);
}

TEST_F(CliTest, ScatterHasOneRecordPerSubjectAndIsStable) {
  const std::vector<std::string> args = {"evaluate", "--checkpoint", path("model.json"), "--data",
                                         path("data.csv"), "--subset", "test", "--seed", "5",
                                         "--train-size", "50", "--test-size", "10", "--scatter",
                                         path("scatter")};
  const RunResult a = run(args);
  ASSERT_EQ(a.code, 0) << a.err;
  const std::string csv = slurp(path("scatter.csv")), svg = slurp(path("scatter.svg"));
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 11);
  ASSERT_EQ(run(args).code, 0);
  EXPECT_EQ(csv, slurp(path("scatter.csv")));
  EXPECT_EQ(svg, slurp(path("scatter.svg")));
  EXPECT_EQ(nlohmann::json::parse(a.out)["metrics"]["total"], 10);

  ASSERT_EQ(run({"evaluate", "--checkpoint", path("model.json"), "--data", path("data.csv"),
                 "--scatter", path("all")})
                .code,
            0);
  const std::string all = slurp(path("all.csv"));
  EXPECT_EQ(std::count(all.begin(), all.end(), '\n'), 61);
}

TEST_F(CliTest, InputsAreNotModified) {
  const std::string data = slurp(path("data.csv")), model = slurp(path("model.json"));
  const auto [subject, other] = subject_and_other_class();
  run({"predict", "--checkpoint", path("model.json"), "--data", path("data.csv")});
  run({"evaluate", "--checkpoint", path("model.json"), "--data", path("data.csv")});
  run({"shap", "--checkpoint", path("model.json"), "--data", path("data.csv"), "--subject",
       subject, "--samples", "40", "--background-size", "4"});
  run({"counterfactual", "--checkpoint", path("model.json"), "--data", path("data.csv"),
       "--subject", subject, "--target", other, "--max-iters", "20"});
  run(train_args("other.json"));
  EXPECT_EQ(data, slurp(path("data.csv")));
  EXPECT_EQ(model, slurp(path("model.json")));
}

// ---------------------------------------------------------------------------
// Plot emitters

TEST_F(CliTest, ShapPlotMatrixShape) {
  const auto [subject, other] = subject_and_other_class();
  ASSERT_EQ(run({"shap", "--checkpoint", path("model.json"), "--data", path("data.csv"),
                 "--subject", subject, "--granularity", "timestep", "--samples", "300",
                 "--background-size", "5", "--plot", path("matrix")})
                .code,
            0);
  const std::string csv = slurp(path("matrix.csv"));
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 5);  // header + 4 steps
  EXPECT_EQ(csv.substr(0, csv.find('\n')).find("timestep,age,gender"), 0u);
  EXPECT_NE(slurp(path("matrix.svg")).find("stress_level"), std::string::npos);
}

TEST(Plots, EmptyScatterIsDataError) {
  const ModelCheckpoint ckpt;
  EXPECT_THROW(prediction_scatter(ckpt, {}), SizeError);
}

TEST(Plots, SvgEscapesText) { EXPECT_EQ(svg::escape("a<b&\"c\">"), "a&lt;b&amp;&quot;c&quot;&gt;"); }

}  // namespace
}  // namespace sleepx
