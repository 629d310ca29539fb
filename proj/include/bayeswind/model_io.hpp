#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "bayeswind/bbb.hpp"
#include "bayeswind/data_ingest.hpp"
#include "json.hpp"

namespace bayeswind::model_io {

inline constexpr int kModelSchemaVersion = 1;

// Everything needed to reproduce predictions for one farm.
struct ModelFile {
  int schema_version = kModelSchemaVersion;
  std::string config_hash;
  std::uint64_t seed = 0;
  int farm_id = 0;
  std::size_t window_len = 12;
  nlohmann::json config;  // echo of the effective run configuration
  ingest::NormalizationSpec normalization;
  double kl_weight = 0.0;
  std::vector<double> epoch_loss;
  std::vector<double> epoch_mse;
  bbb::VariationalParams params;
};

nlohmann::json to_json(const ModelFile& m);
// Throws SchemaMismatch for missing fields, wrong schema version or tensor shapes.
ModelFile from_json(const nlohmann::json& j);

// Doubles are written in shortest round-trip form, so reading back restores
// every parameter bit for bit.
void save_model(const std::filesystem::path& path, const ModelFile& m);
// Throws UpstreamMissing if the file does not exist.
ModelFile load_model(const std::filesystem::path& path);

}  // namespace bayeswind::model_io
