#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "bayeswind/bbb.hpp"
#include "bayeswind/error.hpp"
#include "bayeswind/eval_report.hpp"
#include "bayeswind/spatial.hpp"
#include "bayeswind/synth.hpp"
#include "json.hpp"

namespace bayeswind::cli {

inline constexpr int kArtifactSchemaVersion = 1;

struct RunConfig {
  std::size_t window_len = 12;
  std::size_t hidden = 64;
  std::size_t layers = 1;
  std::size_t epochs = 30;
  std::size_t batch_size = 800;
  double learning_rate = 0.001;
  double pi = 1.0;
  double sigma1 = 1.0;
  double sigma2 = 0.1;
  std::optional<double> kl_weight;  // null: 1 / batches per epoch
  std::string optimizer = "adam";   // adam | sgd
  double init_mu_std = 0.05;
  double init_rho = -5.0;
  std::size_t mc_samples = 10;
  std::vector<std::size_t> sweep_samples = {10, 50, 100};
  double pearson_threshold = 0.7;
  double beta = 20.0;
  double alpha = 0.5;
  std::uint64_t seed = 0;
  double train_fraction = 0.8;
  std::optional<std::string> split_boundary;  // ISO-8601; overrides train_fraction
  bool clamp_lower = false;
  std::string output_dir = "run";
  std::string data_path;  // empty: <output_dir>/data.csv
  synth::SynthConfig synth;

  // Throws ConfigInvalid.
  void validate() const;

  bbb::TrainConfig train_config(int farm_id) const;
  spatial::CorrectionConfig correction() const { return {beta, alpha}; }
  // Shared by all farms so that draw k uses the same noise everywhere.
  std::uint64_t mc_seed() const { return seed ^ 0x6d635f73616d706cULL; }

  std::filesystem::path data_file() const;
  std::filesystem::path model_file(int farm) const;
  std::filesystem::path prediction_file(int farm) const;
  std::filesystem::path corrected_file(int farm) const;
  std::filesystem::path graph_file() const;
  std::filesystem::path heatmap_file() const;
  std::filesystem::path report_dir() const;
};

nlohmann::json to_json(const RunConfig& cfg);
// Missing keys keep their defaults; unknown keys are rejected. Throws ConfigInvalid.
RunConfig config_from_json(const nlohmann::json& j);
RunConfig load_config(const std::filesystem::path& path);

// FNV-1a over the canonical JSON of the configuration without its paths, so
// the same experiment hashes identically wherever it is written.
std::string config_hash(const RunConfig& cfg);
// "schema=1 config_hash=<hash> seed=<seed>", embedded in every artifact.
std::string artifact_stamp(const RunConfig& cfg);

// Exit codes: 0 success, 2 config error, 3 data error, 4 numeric divergence.
int exit_code_for(ErrorCode code);

struct FarmData {
  ingest::PowerSeries raw_train;
  ingest::PowerSeries raw_test;
  ingest::NormalizationSpec norm;
  ingest::WindowedDataset train;
  ingest::WindowedDataset test;
  std::vector<double> test_obs;  // MW, aligned with test windows
  std::size_t test_offset = 0;   // series index of the first test point
};

// Splits and windows one farm of the loaded data.
FarmData prepare_farm(const RunConfig& cfg, const ingest::PowerSeries& series);
std::vector<ingest::PowerSeries> load_data(const RunConfig& cfg);

void run_synth(const RunConfig& cfg, std::ostream& log);
// Trains one farm, or all farms when `farm` is empty.
void run_train(const RunConfig& cfg, std::optional<int> farm, std::ostream& log);
void run_predict(const RunConfig& cfg, std::ostream& log);
void run_graph(const RunConfig& cfg, std::ostream& log);
void run_correct(const RunConfig& cfg, std::ostream& log);
eval::EvalReport run_eval(const RunConfig& cfg, std::ostream& log);
void run_all(const RunConfig& cfg, std::ostream& log);

}  // namespace bayeswind::cli
