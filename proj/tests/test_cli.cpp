#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <sstream>
#include <sys/wait.h>

#include "test_support.hpp"

using icesar::testing::TempDir;

namespace {

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

int run(const std::string& args, const std::string& stderr_file = "/dev/null") {
  const std::string cmd = std::string("\"") + ICESAR_CLI_PATH + "\" " + args + " > /dev/null 2> \"" + stderr_file + "\"";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

const char* kSmallConfig = R"({
  "seed": 11,
  "synth": {"n_samples": 48, "side": 16},
  "cnn": {"epochs": 2, "batch_size": 8, "conv_channels": [4, 6, 8], "dense_units": 8},
  "gbm": {"n_trees": 10},
  "stack": {"k_folds": 3, "cnn_epochs": 1}
})";

}  // namespace

TEST(Cli, UnknownFlagExitsTwoWithUsage) {
  TempDir dir("cli_flag");
  const auto err = dir.str("err.txt");
  EXPECT_EQ(run("synth --bogus", err), 2);
  const auto text = slurp(err);
  EXPECT_NE(text.find("--bogus"), std::string::npos);
  EXPECT_NE(text.find("Usage"), std::string::npos);
  EXPECT_EQ(run("frobnicate", err), 2);
  EXPECT_EQ(run("", err), 2);
  EXPECT_EQ(run("--help"), 0);
}

TEST(Cli, RuntimeErrorIsOneLine) {
  TempDir dir("cli_err");
  const auto err = dir.str("err.txt");
  EXPECT_EQ(run("train-gbm --out \"" + dir.str("run") + "\"", err), 1);
  const auto text = slurp(err);
  EXPECT_EQ(text.rfind("icesar: error: ", 0), 0u);
  EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 1);
}

TEST(Cli, SynthTrainEvalChain) {
  TempDir dir("cli_chain");
  std::ofstream(dir.str("c.json")) << kSmallConfig;
  const auto out = dir.str("run");
  const std::string common = " --config \"" + dir.str("c.json") + "\" --out \"" + out + "\"";
  ASSERT_EQ(run("synth" + common), 0);
  ASSERT_EQ(run("train-cnn" + common), 0);
  ASSERT_EQ(run("eval" + common), 0);
  const auto doc = nlohmann::json::parse(slurp(dir.path() / "run" / "metrics.json"));
  EXPECT_EQ(doc["n"].get<int>(), 10);
  EXPECT_EQ(doc["config"]["seed"].get<int>(), 11);
  EXPECT_TRUE(std::filesystem::exists(dir.path() / "run" / "config.json"));
  EXPECT_TRUE(std::filesystem::exists(dir.path() / "run" / "history.csv"));

  ASSERT_EQ(run("predict --model \"" + out + "/cnn_model.json\"" + common), 0);
  EXPECT_TRUE(std::filesystem::exists(dir.path() / "run" / "submission.csv"));
  ASSERT_EQ(run("train-gbm" + common), 0);
  ASSERT_EQ(run("features" + common), 0);
  ASSERT_EQ(run("augment --set augment.multiplier=2" + common), 0);
  ASSERT_EQ(run("report --ids synth_000000" + common), 0);
  EXPECT_TRUE(std::filesystem::exists(dir.path() / "run" / "report" / "metrics.json"));
}

TEST(Cli, SeedOverrideIsRecorded) {
  TempDir dir("cli_seed");
  const auto out = dir.str("run");
  ASSERT_EQ(run("synth --seed 5 --set synth.n_samples=10 --set synth.side=8 --out \"" + out + "\""), 0);
  const auto cfg = nlohmann::json::parse(slurp(dir.path() / "run" / "config.json"));
  EXPECT_EQ(cfg["seed"].get<int>(), 5);
  EXPECT_EQ(cfg["synth"]["n_samples"].get<int>(), 10);
}

TEST(Cli, IdenticalRunsAreByteIdentical) {
  TempDir dir("cli_det");
  std::ofstream(dir.str("c.json")) << kSmallConfig;
  std::string metrics[2];
  for (int k = 0; k < 2; ++k) {
    const auto out = dir.str("run" + std::to_string(k));
    const std::string common = " --config \"" + dir.str("c.json") + "\" --out \"" + out + "\"";
    ASSERT_EQ(run("synth" + common), 0);
    ASSERT_EQ(run("train-gbm" + common), 0);
    ASSERT_EQ(run("eval" + common), 0);
    metrics[k] = slurp(std::filesystem::path(out) / "metrics.json");
  }
  EXPECT_FALSE(metrics[0].empty());
  EXPECT_EQ(metrics[0], metrics[1]);
}
