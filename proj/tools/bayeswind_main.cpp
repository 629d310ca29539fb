// bayeswind: synth -> train -> predict -> graph -> correct -> eval.

#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "bayeswind/error.hpp"
#include "bayeswind/pipeline.hpp"

using bayeswind::Error;
using bayeswind::ErrorCode;
namespace cli = bayeswind::cli;

namespace {

struct Overrides {
  std::string config_path;
  std::optional<std::string> out;
  std::optional<std::string> data;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> epochs;
  std::optional<std::size_t> hidden;
  std::optional<std::size_t> batch_size;
  std::optional<std::size_t> mc_samples;
  std::optional<std::size_t> steps;
  std::optional<int> farm;
  bool quiet = false;
};

cli::RunConfig effective_config(const Overrides& o) {
  nlohmann::json j = nlohmann::json::object();
  if (!o.config_path.empty()) j = cli::to_json(cli::load_config(o.config_path));
  if (o.out) j["output_dir"] = *o.out;
  if (o.data) j["data_path"] = *o.data;
  if (o.seed) j["seed"] = *o.seed;
  if (o.epochs) j["epochs"] = *o.epochs;
  if (o.hidden) j["hidden"] = *o.hidden;
  if (o.batch_size) j["batch_size"] = *o.batch_size;
  if (o.mc_samples) j["mc_samples"] = *o.mc_samples;
  if (o.steps) j["synth"]["n_steps"] = *o.steps;
  return cli::config_from_json(j);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bayesian LSTM uncertainty widths for distributed wind farms"};
  app.require_subcommand(1);
  Overrides o;
  app.add_option("-c,--config", o.config_path, "JSON run configuration");
  app.add_option("-o,--out", o.out, "output directory");
  app.add_option("--data", o.data, "input CSV (default <out>/data.csv)");
  app.add_option("--seed", o.seed, "experiment seed");
  app.add_option("--epochs", o.epochs, "training epochs");
  app.add_option("--hidden", o.hidden, "LSTM hidden size");
  app.add_option("--batch-size", o.batch_size, "mini-batch size");
  app.add_option("--mc-samples", o.mc_samples, "Monte-Carlo samples per prediction");
  app.add_option("--steps", o.steps, "synthetic series length");
  app.add_flag("-q,--quiet", o.quiet, "suppress progress output");

  auto* synth = app.add_subcommand("synth", "generate synthetic multi-farm data");
  auto* train = app.add_subcommand("train", "train per-farm Bayesian LSTM models");
  train->add_option("--farm", o.farm, "train a single farm");
  auto* predict = app.add_subcommand("predict", "Monte-Carlo intervals on the test split");
  auto* graph = app.add_subcommand("graph", "Pearson farm graph");
  auto* correct = app.add_subcommand("correct", "spatial width correction");
  auto* evaluate = app.add_subcommand("eval", "metrics and report tables");
  auto* all = app.add_subcommand("all", "run the full pipeline");
  auto* dump = app.add_subcommand("dump-config", "print the effective configuration");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  std::ofstream null_stream;
  std::ostream& log = o.quiet ? null_stream : std::cerr;
  try {
    const cli::RunConfig cfg = effective_config(o);
    if (*synth) cli::run_synth(cfg, log);
    if (*train) cli::run_train(cfg, o.farm, log);
    if (*predict) cli::run_predict(cfg, log);
    if (*graph) cli::run_graph(cfg, log);
    if (*correct) cli::run_correct(cfg, log);
    if (*evaluate) cli::run_eval(cfg, log);
    if (*all) cli::run_all(cfg, log);
    if (*dump) std::cout << cli::to_json(cfg).dump(2) << '\n';
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return cli::exit_code_for(e.code());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  }
  return 0;
}
