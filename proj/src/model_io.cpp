#include "bayeswind/model_io.hpp"

#include <fstream>

#include "bayeswind/error.hpp"

namespace bayeswind::model_io {

nlohmann::json to_json(const ModelFile& m) {
  nlohmann::json j;
  j["schema_version"] = m.schema_version;
  j["kind"] = "bayeswind.model";
  j["config_hash"] = m.config_hash;
  j["seed"] = m.seed;
  j["farm_id"] = m.farm_id;
  j["window_len"] = m.window_len;
  j["config"] = m.config;
  j["normalization"] = {{"farm_id", m.normalization.farm_id},
                        {"min_val", m.normalization.min_val},
                        {"max_val", m.normalization.max_val}};
  j["kl_weight"] = m.kl_weight;
  j["history"] = {{"epoch_loss", m.epoch_loss}, {"epoch_mse", m.epoch_mse}};
  const auto& shape = m.params.shape();
  j["shape"] = {{"hidden", shape.hidden}, {"input", shape.input}};
  nlohmann::json tensors = nlohmann::json::array();
  const auto mu = m.params.mu.values();
  const auto rho = m.params.rho.values();
  for (const auto& spec : lstm::tensor_layout(shape)) {
    const auto off = static_cast<std::ptrdiff_t>(spec.offset);
    const auto end = off + static_cast<std::ptrdiff_t>(spec.size());
    tensors.push_back({{"name", spec.name},
                       {"shape", {spec.rows, spec.cols}},
                       {"mu", std::vector<double>(mu.begin() + off, mu.begin() + end)},
                       {"rho", std::vector<double>(rho.begin() + off, rho.begin() + end)}});
  }
  j["tensors"] = std::move(tensors);
  return j;
}

ModelFile from_json(const nlohmann::json& j) {
  try {
    ModelFile m;
    m.schema_version = j.at("schema_version").get<int>();
    if (m.schema_version != kModelSchemaVersion) {
      throw Error(ErrorCode::kSchemaMismatch,
                  "unsupported model schema " + std::to_string(m.schema_version));
    }
    m.config_hash = j.at("config_hash").get<std::string>();
    m.seed = j.at("seed").get<std::uint64_t>();
    m.farm_id = j.at("farm_id").get<int>();
    m.window_len = j.at("window_len").get<std::size_t>();
    m.config = j.at("config");
    const auto& norm = j.at("normalization");
    m.normalization = {norm.at("farm_id").get<int>(), norm.at("min_val").get<double>(),
                       norm.at("max_val").get<double>()};
    m.kl_weight = j.at("kl_weight").get<double>();
    m.epoch_loss = j.at("history").at("epoch_loss").get<std::vector<double>>();
    m.epoch_mse = j.at("history").at("epoch_mse").get<std::vector<double>>();
    const lstm::LstmShape shape{j.at("shape").at("hidden").get<std::size_t>(),
                                j.at("shape").at("input").get<std::size_t>()};
    std::vector<double> mu;
    std::vector<double> rho;
    const auto layout = lstm::tensor_layout(shape);
    const auto& tensors = j.at("tensors");
    if (tensors.size() != layout.size()) {
      throw Error(ErrorCode::kSchemaMismatch, "expected " + std::to_string(layout.size()) +
                                                  " tensors");
    }
    for (std::size_t t = 0; t < layout.size(); ++t) {
      const auto& tj = tensors[t];
      const auto dims = tj.at("shape").get<std::vector<std::size_t>>();
      if (tj.at("name").get<std::string>() != layout[t].name || dims.size() != 2 ||
          dims[0] != layout[t].rows || dims[1] != layout[t].cols) {
        throw Error(ErrorCode::kSchemaMismatch, "tensor " + layout[t].name + " has wrong shape");
      }
      const auto tm = tj.at("mu").get<std::vector<double>>();
      const auto tr = tj.at("rho").get<std::vector<double>>();
      if (tm.size() != layout[t].size() || tr.size() != layout[t].size()) {
        throw Error(ErrorCode::kSchemaMismatch, "tensor " + layout[t].name + " has wrong length");
      }
      mu.insert(mu.end(), tm.begin(), tm.end());
      rho.insert(rho.end(), tr.begin(), tr.end());
    }
    m.params = {lstm::LstmParams(shape, std::move(mu)), lstm::LstmParams(shape, std::move(rho))};
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kSchemaMismatch, std::string("model json: ") + e.what());
  }
}

void save_model(const std::filesystem::path& path, const ModelFile& m) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::kIoError, "cannot write " + path.string());
  out << to_json(m).dump(1) << '\n';
}

ModelFile load_model(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kUpstreamMissing, "missing model file " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kSchemaMismatch, path.string() + ": " + e.what());
  }
  return from_json(j);
}

}  // namespace bayeswind::model_io
