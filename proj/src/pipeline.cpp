#include "bayeswind/pipeline.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <set>

#include "bayeswind/mc_predict.hpp"
#include "bayeswind/model_io.hpp"

namespace bayeswind::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

[[noreturn]] void invalid(const std::string& what) { throw Error(ErrorCode::kConfigInvalid, what); }

json synth_to_json(const synth::SynthConfig& s) {
  json corr = json::array();
  for (std::size_t i = 0; i < s.target_corr.rows(); ++i) {
    json row = json::array();
    for (std::size_t k = 0; k < s.target_corr.cols(); ++k) row.push_back(s.target_corr(i, k));
    corr.push_back(std::move(row));
  }
  json events = json::array();
  for (const auto& e : s.events) {
    events.push_back({{"t0", e.t0}, {"duration", e.duration}, {"farms", e.farms},
                      {"magnitude", e.magnitude}});
  }
  return {{"n_farms", s.n_farms},
          {"n_steps", s.n_steps},
          {"step_minutes", s.step_minutes},
          {"start", s.start},
          {"capacity", s.capacity},
          {"target_corr", std::move(corr)},
          {"ar_coeff", s.ar_coeff},
          {"noise_std", s.noise_std},
          {"diurnal_amplitude", s.diurnal_amplitude},
          {"seed", s.seed},
          {"events", std::move(events)}};
}

synth::SynthConfig synth_from_json(const json& j) {
  static const std::set<std::string> kKeys = {
      "n_farms",  "n_steps",   "step_minutes",      "start", "capacity", "target_corr",
      "corr",     "ar_coeff",  "noise_std",         "diurnal_amplitude", "seed", "events"};
  for (const auto& [key, _] : j.items()) {
    if (!kKeys.contains(key)) invalid("unknown synth key '" + key + "'");
  }
  synth::SynthConfig s;
  if (j.contains("n_farms")) {
    s.n_farms = j["n_farms"].get<std::size_t>();
    s.capacity.assign(s.n_farms, 100.0);
    s.target_corr = synth::SynthConfig::uniform_correlation(s.n_farms, 0.75);
  }
  if (j.contains("n_steps")) s.n_steps = j["n_steps"].get<std::size_t>();
  if (j.contains("step_minutes")) s.step_minutes = j["step_minutes"].get<int>();
  if (j.contains("start")) s.start = j["start"].get<std::string>();
  if (j.contains("capacity")) {
    if (j["capacity"].is_number()) {
      s.capacity.assign(s.n_farms, j["capacity"].get<double>());
    } else {
      s.capacity = j["capacity"].get<std::vector<double>>();
    }
  }
  if (j.contains("corr")) {
    s.target_corr = synth::SynthConfig::uniform_correlation(s.n_farms, j["corr"].get<double>());
  }
  if (j.contains("target_corr")) {
    const auto rows = j["target_corr"].get<std::vector<std::vector<double>>>();
    numerics::Matrix m(rows.size(), rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
      if (rows[i].size() != rows.size()) invalid("target_corr must be square");
      for (std::size_t k = 0; k < rows.size(); ++k) m(i, k) = rows[i][k];
    }
    s.target_corr = std::move(m);
  }
  if (j.contains("ar_coeff")) s.ar_coeff = j["ar_coeff"].get<double>();
  if (j.contains("noise_std")) s.noise_std = j["noise_std"].get<double>();
  if (j.contains("diurnal_amplitude")) s.diurnal_amplitude = j["diurnal_amplitude"].get<double>();
  if (j.contains("seed")) s.seed = j["seed"].get<std::uint64_t>();
  if (j.contains("events")) {
    for (const auto& e : j["events"]) {
      s.events.push_back({e.at("t0").get<std::size_t>(), e.at("duration").get<std::size_t>(),
                          e.at("farms").get<std::vector<std::size_t>>(),
                          e.at("magnitude").get<double>()});
    }
  }
  return s;
}

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

void RunConfig::validate() const {
  if (window_len < 1) invalid("window_len must be positive");
  if (hidden < 1) invalid("hidden must be positive");
  if (layers != 1) invalid("only single-layer networks are supported (layers = 1)");
  if (mc_samples < 2) invalid("mc_samples must be at least 2");
  for (std::size_t n : sweep_samples) {
    if (n < 2) invalid("sweep_samples entries must be at least 2");
  }
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) invalid("train_fraction must lie in (0, 1)");
  if (optimizer != "adam" && optimizer != "sgd") invalid("optimizer must be 'adam' or 'sgd'");
  if (!(pearson_threshold >= -1.0 && pearson_threshold <= 1.0)) {
    invalid("pearson_threshold must lie in [-1, 1]");
  }
  train_config(0).validate();
  correction().validate();
  try {
    synth.validate();
    if (split_boundary) ingest::parse_iso8601(*split_boundary);
  } catch (const Error& e) {
    if (e.code() == ErrorCode::kConfigInvalid) throw;
    invalid(e.what());
  }
  if (output_dir.empty()) invalid("output_dir must not be empty");
}

bbb::TrainConfig RunConfig::train_config(int farm_id) const {
  bbb::TrainConfig tc;
  tc.epochs = epochs;
  tc.batch_size = batch_size;
  tc.learning_rate = learning_rate;
  tc.prior = {pi, sigma1, sigma2};
  tc.kl_weight = kl_weight;
  tc.seed = seed + static_cast<std::uint64_t>(farm_id);
  tc.optimizer = optimizer == "sgd" ? bbb::Optimizer::kSgd : bbb::Optimizer::kAdam;
  tc.init_mu_std = init_mu_std;
  tc.init_rho = init_rho;
  return tc;
}

fs::path RunConfig::data_file() const {
  return data_path.empty() ? fs::path(output_dir) / "data.csv" : fs::path(data_path);
}
fs::path RunConfig::model_file(int farm) const {
  return fs::path(output_dir) / "models" / ("model_farm" + std::to_string(farm) + ".json");
}
fs::path RunConfig::prediction_file(int farm) const {
  return fs::path(output_dir) / "predictions" / ("prediction_farm" + std::to_string(farm) + ".csv");
}
fs::path RunConfig::corrected_file(int farm) const {
  return fs::path(output_dir) / "predictions" / ("corrected_farm" + std::to_string(farm) + ".csv");
}
fs::path RunConfig::graph_file() const { return fs::path(output_dir) / "graph.json"; }
fs::path RunConfig::heatmap_file() const { return fs::path(output_dir) / "corr_heatmap.csv"; }
fs::path RunConfig::report_dir() const { return fs::path(output_dir) / "report"; }

json to_json(const RunConfig& c) {
  return {{"window_len", c.window_len},
          {"hidden", c.hidden},
          {"layers", c.layers},
          {"epochs", c.epochs},
          {"batch_size", c.batch_size},
          {"learning_rate", c.learning_rate},
          {"pi", c.pi},
          {"sigma1", c.sigma1},
          {"sigma2", c.sigma2},
          {"kl_weight", c.kl_weight ? json(*c.kl_weight) : json(nullptr)},
          {"optimizer", c.optimizer},
          {"init_mu_std", c.init_mu_std},
          {"init_rho", c.init_rho},
          {"mc_samples", c.mc_samples},
          {"sweep_samples", c.sweep_samples},
          {"pearson_threshold", c.pearson_threshold},
          {"beta", c.beta},
          {"alpha", c.alpha},
          {"seed", c.seed},
          {"train_fraction", c.train_fraction},
          {"split_boundary", c.split_boundary ? json(*c.split_boundary) : json(nullptr)},
          {"clamp_lower", c.clamp_lower},
          {"output_dir", c.output_dir},
          {"data_path", c.data_path},
          {"synth", synth_to_json(c.synth)}};
}

RunConfig config_from_json(const json& j) {
  if (!j.is_object()) invalid("config must be a JSON object");
  RunConfig c;
  const json defaults = to_json(c);
  for (const auto& [key, _] : j.items()) {
    if (!defaults.contains(key)) invalid("unknown config key '" + key + "'");
  }
  try {
    auto get = [&](const char* key, auto& field) {
      if (j.contains(key)) field = j[key].get<std::remove_reference_t<decltype(field)>>();
    };
    get("window_len", c.window_len);
    get("hidden", c.hidden);
    get("layers", c.layers);
    get("epochs", c.epochs);
    get("batch_size", c.batch_size);
    get("learning_rate", c.learning_rate);
    get("pi", c.pi);
    get("sigma1", c.sigma1);
    get("sigma2", c.sigma2);
    if (j.contains("kl_weight") && !j["kl_weight"].is_null()) c.kl_weight = j["kl_weight"].get<double>();
    get("optimizer", c.optimizer);
    get("init_mu_std", c.init_mu_std);
    get("init_rho", c.init_rho);
    get("mc_samples", c.mc_samples);
    get("sweep_samples", c.sweep_samples);
    get("pearson_threshold", c.pearson_threshold);
    get("beta", c.beta);
    get("alpha", c.alpha);
    get("seed", c.seed);
    get("train_fraction", c.train_fraction);
    if (j.contains("split_boundary") && !j["split_boundary"].is_null()) {
      c.split_boundary = j["split_boundary"].get<std::string>();
    }
    get("clamp_lower", c.clamp_lower);
    get("output_dir", c.output_dir);
    get("data_path", c.data_path);
    if (j.contains("synth")) c.synth = synth_from_json(j["synth"]);
  } catch (const json::exception& e) {
    invalid(std::string("config: ") + e.what());
  }
  c.validate();
  return c;
}

RunConfig load_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) invalid("cannot open config " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    invalid(path.string() + ": " + e.what());
  }
  return config_from_json(j);
}

std::string config_hash(const RunConfig& cfg) {
  json j = to_json(cfg);
  j.erase("output_dir");
  j.erase("data_path");
  const std::string text = j.dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string artifact_stamp(const RunConfig& cfg) {
  return "schema=" + std::to_string(kArtifactSchemaVersion) + " config_hash=" + config_hash(cfg) +
         " seed=" + std::to_string(cfg.seed);
}

int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::kConfigInvalid: return 2;
    case ErrorCode::kDivergedLoss: return 4;
    default: return 3;
  }
}

std::vector<ingest::PowerSeries> load_data(const RunConfig& cfg) {
  const fs::path path = cfg.data_file();
  if (!fs::exists(path)) {
    throw Error(ErrorCode::kUpstreamMissing, "missing data file " + path.string());
  }
  return ingest::load_csv(path);
}

FarmData prepare_farm(const RunConfig& cfg, const ingest::PowerSeries& series) {
  ingest::Timestamp boundary;
  if (cfg.split_boundary) {
    boundary = ingest::parse_iso8601(*cfg.split_boundary);
  } else {
    const auto cut = static_cast<std::size_t>(cfg.train_fraction * static_cast<double>(series.size()));
    boundary = series.timestamp(cut);
  }
  auto split = ingest::split_train_test(series, boundary, cfg.window_len);
  FarmData fd;
  fd.norm = ingest::NormalizationSpec::fit(split.train);
  fd.train = ingest::make_windows(ingest::normalize(split.train, fd.norm), cfg.window_len,
                                  ingest::SplitTag::kTrain);
  fd.test = ingest::make_windows(ingest::normalize(split.test, fd.norm), cfg.window_len,
                                 ingest::SplitTag::kTest);
  fd.test_obs.assign(split.test.values.begin() + static_cast<std::ptrdiff_t>(cfg.window_len),
                     split.test.values.end());
  fd.test_offset = split.train.size();
  fd.raw_train = std::move(split.train);
  fd.raw_test = std::move(split.test);
  return fd;
}

void run_synth(const RunConfig& cfg, std::ostream& log) {
  cfg.validate();
  const auto series = synth::generate(cfg.synth);
  const fs::path path = cfg.data_file();
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  const std::vector<std::string> meta = {artifact_stamp(cfg) + " kind=synthetic_data"};
  ingest::write_csv(path, series, meta);
  log << "synth: wrote " << series.size() << " farms x " << cfg.synth.n_steps << " steps to "
      << path.string() << '\n';
}

void run_train(const RunConfig& cfg, std::optional<int> farm, std::ostream& log) {
  cfg.validate();
  const auto data = load_data(cfg);
  if (farm && (*farm < 0 || static_cast<std::size_t>(*farm) >= data.size())) {
    invalid("farm " + std::to_string(*farm) + " not in data (" + std::to_string(data.size()) +
            " farms)");
  }
  fs::create_directories(cfg.model_file(0).parent_path());
  for (const auto& series : data) {
    if (farm && series.farm_id != *farm) continue;
    const FarmData fd = prepare_farm(cfg, series);
    const bbb::TrainConfig tc = cfg.train_config(series.farm_id);
    const auto result = bbb::train(fd.train, tc, lstm::LstmShape{cfg.hidden, 1});
    model_io::ModelFile m;
    m.config_hash = config_hash(cfg);
    m.seed = cfg.seed;
    m.farm_id = series.farm_id;
    m.window_len = cfg.window_len;
    m.config = to_json(cfg);
    m.config.erase("output_dir");
    m.config.erase("data_path");
    m.normalization = fd.norm;
    m.kl_weight = result.kl_weight;
    m.epoch_loss = result.epoch_loss;
    m.epoch_mse = result.epoch_mse;
    m.params = result.params;
    model_io::save_model(cfg.model_file(series.farm_id), m);
    log << "train: farm " << series.farm_id << " windows=" << fd.train.size()
        << " kl_weight=" << format_double(result.kl_weight);
    for (std::size_t e = 0; e < result.epoch_loss.size(); ++e) {
      log << (e == 0 ? " loss[" : ",") << format_double(result.epoch_loss[e]);
    }
    log << "]\n";
  }
}

namespace {

model_io::ModelFile load_farm_model(const RunConfig& cfg, int farm) {
  auto m = model_io::load_model(cfg.model_file(farm));
  if (m.window_len != cfg.window_len || m.farm_id != farm) {
    throw Error(ErrorCode::kConfigInvalid, "model " + cfg.model_file(farm).string() +
                                               " does not match the configuration");
  }
  return m;
}

std::vector<std::string> stamp_lines(const RunConfig& cfg, const std::string& kind) {
  return {artifact_stamp(cfg) + " kind=" + kind};
}

}  // namespace

void run_predict(const RunConfig& cfg, std::ostream& log) {
  cfg.validate();
  const auto data = load_data(cfg);
  fs::create_directories(cfg.prediction_file(0).parent_path());
  const numerics::RngStream base(cfg.mc_seed());
  for (const auto& series : data) {
    const auto model = load_farm_model(cfg, series.farm_id);
    const FarmData fd = prepare_farm(cfg, series);
    const auto ws = mc::width_series(model.params, model.normalization, fd.test, cfg.mc_samples, base);
    mc::write_prediction_csv(cfg.prediction_file(series.farm_id), ws,
                             stamp_lines(cfg, "prediction farm=" + std::to_string(series.farm_id)),
                             cfg.clamp_lower);
    log << "predict: farm " << series.farm_id << " windows=" << ws.estimates.size()
        << " mean w90/w95/w99 = " << format_double(ws.mean_width[0]) << " / "
        << format_double(ws.mean_width[1]) << " / " << format_double(ws.mean_width[2]) << '\n';
  }
}

void run_graph(const RunConfig& cfg, std::ostream& log) {
  cfg.validate();
  const auto data = load_data(cfg);
  std::vector<ingest::PowerSeries> train;
  for (const auto& s : data) train.push_back(prepare_farm(cfg, s).raw_train);
  const auto graph = spatial::build_graph(train, cfg.pearson_threshold);
  json j = spatial::graph_to_json(graph);
  j["schema_version"] = kArtifactSchemaVersion;
  j["config_hash"] = config_hash(cfg);
  j["seed"] = cfg.seed;
  fs::create_directories(fs::path(cfg.output_dir));
  {
    std::ofstream out(cfg.graph_file());
    if (!out) throw Error(ErrorCode::kIoError, "cannot write " + cfg.graph_file().string());
    out << j.dump(1) << '\n';
  }
  std::ofstream heat(cfg.heatmap_file());
  if (!heat) throw Error(ErrorCode::kIoError, "cannot write " + cfg.heatmap_file().string());
  heat << "# " << artifact_stamp(cfg) << " kind=correlation_heatmap\n";
  spatial::write_heatmap_csv(heat, graph);
  log << "graph: " << graph.n_farms << " farms, " << graph.edges.size() << " edges at threshold "
      << format_double(graph.threshold) << '\n';
}

namespace {

spatial::FarmGraph load_graph(const RunConfig& cfg) {
  std::ifstream in(cfg.graph_file());
  if (!in) throw Error(ErrorCode::kUpstreamMissing, "missing graph file " + cfg.graph_file().string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kSchemaMismatch, cfg.graph_file().string() + ": " + e.what());
  }
  return spatial::graph_from_json(j);
}

}  // namespace

void run_correct(const RunConfig& cfg, std::ostream& log) {
  cfg.validate();
  const auto graph = load_graph(cfg);
  std::vector<mc::WidthSeries> farms;
  for (std::size_t s = 0; s < graph.n_farms; ++s) {
    farms.push_back(mc::read_prediction_csv(cfg.prediction_file(static_cast<int>(s))));
  }
  const auto corrected = spatial::correct_series(farms, graph, cfg.correction());
  for (std::size_t s = 0; s < farms.size(); ++s) {
    const int farm = static_cast<int>(s);
    spatial::write_corrected_csv(cfg.corrected_file(farm), farms[s], corrected[s],
                                 stamp_lines(cfg, "corrected farm=" + std::to_string(farm)));
    std::size_t changed = 0;
    for (std::size_t t = 0; t < corrected[s][2].size(); ++t) {
      if (corrected[s][2][t] != farms[s].estimates[t].width(mc::Level::k99)) ++changed;
    }
    log << "correct: farm " << farm << " adjusted " << changed << " of "
        << corrected[s][2].size() << " steps at 99%\n";
  }
}

eval::EvalReport run_eval(const RunConfig& cfg, std::ostream& log) {
  cfg.validate();
  const auto data = load_data(cfg);
  eval::EvalReport report;
  std::vector<std::vector<mc::PredictionSamples>> farm_samples;
  const numerics::RngStream base(cfg.mc_seed());
  for (const auto& series : data) {
    const int farm = series.farm_id;
    const FarmData fd = prepare_farm(cfg, series);
    const auto corrected = spatial::read_corrected_csv(cfg.corrected_file(farm));
    if (corrected.series.estimates.size() != fd.test_obs.size()) {
      throw Error(ErrorCode::kLengthMismatch, "predictions for farm " + std::to_string(farm) +
                                                  " do not match the test split");
    }
    auto metrics = eval::farm_metrics(farm, corrected.series, corrected.corrected, fd.test_obs);

    for (const auto& ev : cfg.synth.events) {
      if (std::find(ev.farms.begin(), ev.farms.end(), static_cast<std::size_t>(farm)) ==
          ev.farms.end()) {
        continue;
      }
      // Test window i predicts series index test_offset + window_len + i.
      const std::size_t first_label = fd.test_offset + cfg.window_len;
      const std::size_t lo = std::max(ev.t0, first_label);
      const std::size_t hi = std::min(ev.t0 + ev.duration, first_label + fd.test_obs.size());
      if (lo >= hi) continue;
      eval::EventCoverage ec{lo - first_label, hi - first_label, 0.0, 0.0};
      const auto n = static_cast<std::ptrdiff_t>(ec.end - ec.begin);
      const auto b = static_cast<std::ptrdiff_t>(ec.begin);
      const std::span<const mc::IntervalEstimate> est(corrected.series.estimates);
      const std::span<const double> obs(fd.test_obs);
      ec.before = eval::coverage(est.subspan(ec.begin, ec.end - ec.begin),
                                 obs.subspan(ec.begin, ec.end - ec.begin), mc::Level::k99);
      std::vector<double> mu;
      for (auto it = est.begin() + b; it != est.begin() + b + n; ++it) mu.push_back(it->mu_hat);
      ec.after = eval::coverage(
          mu, std::span<const double>(corrected.corrected[2]).subspan(ec.begin, ec.end - ec.begin),
          obs.subspan(ec.begin, ec.end - ec.begin));
      metrics.event = ec;
      break;
    }
    report.farms.push_back(metrics);

    const auto model = load_farm_model(cfg, farm);
    if (farm == report.sweep_farm) {
      report.sweep = eval::sampling_sweep(model.params, model.normalization, fd.test, fd.test_obs,
                                          cfg.sweep_samples, base);
    }
    farm_samples.push_back(
        mc::sample_dataset(model.params, model.normalization, fd.test, cfg.mc_samples, base));
  }
  report.aggregate = eval::aggregate_analysis(farm_samples);
  const auto tables = eval::render_tables(report);
  const std::vector<std::string> meta = {artifact_stamp(cfg) + " kind=report"};
  eval::write_report_bundle(cfg.report_dir(), tables, meta);
  log << tables.text;
  return report;
}

void run_all(const RunConfig& cfg, std::ostream& log) {
  run_synth(cfg, log);
  run_train(cfg, std::nullopt, log);
  run_predict(cfg, log);
  run_graph(cfg, log);
  run_correct(cfg, log);
  run_eval(cfg, log);
}

}  // namespace bayeswind::cli
