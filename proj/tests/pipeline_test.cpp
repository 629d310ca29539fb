#include "bayeswind/pipeline.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "bayeswind/error.hpp"
#include "gtest/gtest.h"

namespace bayeswind::cli {
namespace {

namespace fs = std::filesystem;

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

RunConfig tiny(const fs::path& dir) {
  RunConfig c;
  c.output_dir = dir.string();
  c.hidden = 4;
  c.epochs = 1;
  c.batch_size = 64;
  c.learning_rate = 0.005;
  c.mc_samples = 10;
  c.sweep_samples = {10, 20};
  c.synth.n_steps = 400;
  return c;
}

class PipelineTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("bayeswind_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }
  fs::path dir_;
  std::ostringstream log_;
};

TEST(RunConfig, DefaultsMatchMethod) {
  const RunConfig c;
  EXPECT_EQ(c.window_len, 12u);
  EXPECT_EQ(c.hidden, 64u);
  EXPECT_EQ(c.epochs, 30u);
  EXPECT_EQ(c.batch_size, 800u);
  EXPECT_EQ(c.learning_rate, 0.001);
  EXPECT_EQ(c.mc_samples, 10u);
  EXPECT_EQ(c.pearson_threshold, 0.7);
  EXPECT_EQ(c.beta, 20.0);
  EXPECT_EQ(c.alpha, 0.5);
  c.validate();
}

TEST(RunConfig, JsonRoundTrip) {
  RunConfig c = tiny("somewhere");
  c.kl_weight = 0.25;
  c.split_boundary = "2018-01-03T00:00:00Z";
  c.synth.events.push_back({10, 5, {0, 1}, 12.5});
  const RunConfig back = config_from_json(to_json(c));
  EXPECT_EQ(to_json(back), to_json(c));
  EXPECT_EQ(config_hash(back), config_hash(c));
}

TEST(RunConfig, HashIgnoresPathsButNotParameters) {
  RunConfig a = tiny("a");
  RunConfig b = tiny("b");
  EXPECT_EQ(config_hash(a), config_hash(b));
  b.seed = 1;
  EXPECT_NE(config_hash(a), config_hash(b));
}

TEST(RunConfig, RejectsUnknownKeysAndBadValues) {
  auto expect_invalid = [](const nlohmann::json& j) {
    try {
      config_from_json(j);
      FAIL() << j.dump();
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::kConfigInvalid);
    }
  };
  expect_invalid({{"hiden", 3}});
  expect_invalid({{"layers", 2}});
  expect_invalid({{"optimizer", "rmsprop"}});
  expect_invalid({{"train_fraction", 1.5}});
  expect_invalid({{"alpha", -0.5}});
}

TEST(ExitCodes, Mapping) {
  EXPECT_EQ(exit_code_for(ErrorCode::kConfigInvalid), 2);
  EXPECT_EQ(exit_code_for(ErrorCode::kDivergedLoss), 4);
  EXPECT_EQ(exit_code_for(ErrorCode::kMissingValue), 3);
  EXPECT_EQ(exit_code_for(ErrorCode::kUpstreamMissing), 3);
}

TEST_F(PipelineTest, PrepareFarmAlignsObservations) {
  const RunConfig c = tiny(dir_);
  const auto series = synth::generate(c.synth);
  const auto fd = prepare_farm(c, series[0]);
  EXPECT_EQ(fd.test_offset, 320u);
  EXPECT_EQ(fd.train.size(), 320u - 12);
  EXPECT_EQ(fd.test.size(), 80u - 12);
  for (std::size_t i = 0; i < fd.test.size(); ++i) {
    EXPECT_EQ(fd.test_obs[i], series[0].values[fd.test_offset + 12 + i]);
    EXPECT_NEAR(fd.norm.invert(fd.test.labels[i]), fd.test_obs[i], 1e-12);
  }
}

TEST_F(PipelineTest, PredictWithoutModelIsUpstreamMissing) {
  const RunConfig c = tiny(dir_);
  run_synth(c, log_);
  try {
    run_predict(c, log_);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kUpstreamMissing);
  }
}

TEST_F(PipelineTest, TrainWithoutDataIsUpstreamMissing) {
  try {
    run_train(tiny(dir_), 0, log_);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kUpstreamMissing);
  }
}

TEST_F(PipelineTest, TrainTwiceIsByteIdentical) {
  const RunConfig c = tiny(dir_);
  run_synth(c, log_);
  run_train(c, 2, log_);
  const std::string first = slurp(c.model_file(2));
  ASSERT_FALSE(first.empty());
  run_train(c, 2, log_);
  EXPECT_EQ(slurp(c.model_file(2)), first);
  EXPECT_FALSE(fs::exists(c.model_file(0)));
}

TEST_F(PipelineTest, FullRunProducesEveryArtifact) {
  const RunConfig c = tiny(dir_);
  run_all(c, log_);
  EXPECT_TRUE(fs::exists(c.data_file()));
  EXPECT_TRUE(fs::exists(c.graph_file()));
  EXPECT_TRUE(fs::exists(c.heatmap_file()));
  for (int f = 0; f < 6; ++f) {
    EXPECT_TRUE(fs::exists(c.model_file(f)));
    EXPECT_TRUE(fs::exists(c.prediction_file(f)));
    EXPECT_TRUE(fs::exists(c.corrected_file(f)));
  }
  EXPECT_TRUE(fs::exists(c.report_dir() / "report.txt"));
  const std::string pred = slurp(c.prediction_file(0));
  EXPECT_EQ(pred.rfind("# " + artifact_stamp(c), 0), 0u);
}

#ifdef BAYESWIND_CLI_PATH
int run_cli(const std::string& args) {
  const std::string cmd = std::string(BAYESWIND_CLI_PATH) + " -q " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

TEST_F(PipelineTest, CliExitCodes) {
  EXPECT_EQ(run_cli("--out " + dir_.string() + " predict"), 3);
  EXPECT_EQ(run_cli("--out " + dir_.string() + " --steps 300 synth"), 0);
  EXPECT_EQ(run_cli("--bogus synth"), 2);
  fs::create_directories(dir_);
  std::ofstream(dir_ / "bad.json") << R"({"hidden": 0})";
  EXPECT_EQ(run_cli("-c " + (dir_ / "bad.json").string() + " synth"), 2);
}
#endif

}  // namespace
}  // namespace bayeswind::cli
