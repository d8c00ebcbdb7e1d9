// lyapnet command-line tool.
//
//   lyapnet analyze    --network NET.json --inputs INPUTS.csv [--depth J] --out REPORT.csv
//   lyapnet generate   --config GEN.json --out NET.json
//   lyapnet train      --config TRAIN.json --data-kind KIND --out NET.json [--loss-out LOSS.csv]
//   lyapnet experiment NAME [--config CFG.json] --out DIR
//
// Exit codes: 0 success, 2 usage/config error, 3 numeric/runtime failure.

#include "lyapnet/experiments.hpp"
#include "lyapnet/generators.hpp"
#include "lyapnet/io.hpp"
#include "lyapnet/report.hpp"
#include "lyapnet/spectral.hpp"
#include "lyapnet/trainer.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

namespace fs = std::filesystem;
using namespace lyapnet;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 2;
constexpr int kExitNumeric = 3;

void log_stage(const std::string& msg) { std::cerr << "lyapnet: " << msg << "\n"; }

Json load_json(const fs::path& path) {
  try {
    return Json::parse(read_file(path));
  } catch (const Json::parse_error& e) {
    throw UsageError(path.string() + ": " + e.what());
  }
}

int cmd_analyze(const fs::path& network_path, const fs::path& inputs_path, std::optional<long long> depth_opt,
                const fs::path& out_path) {
  const NetworkSpec net = load_network(network_path);
  log_stage("loaded network with " + std::to_string(net.transitions()) + " transitions");
  const std::vector<Vector> inputs = parse_numeric_csv(read_file(inputs_path), inputs_path.string());
  if (inputs.empty()) throw UsageError(inputs_path.string() + ": no input rows");
  for (std::size_t i = 0; i < inputs.size(); ++i)
    if (inputs[i].size() != net.input_dim)
      throw UsageError(inputs_path.string() + ": input row " + std::to_string(i) + " has " +
                       std::to_string(inputs[i].size()) + " fields, network input_dim is " +
                       std::to_string(net.input_dim));
  std::size_t depth = net.transitions();
  if (depth_opt) {
    if (*depth_opt < 1 || static_cast<std::size_t>(*depth_opt) > net.transitions())
      throw UsageError("--depth must lie in [1, " + std::to_string(net.transitions()) + "]");
    depth = static_cast<std::size_t>(*depth_opt);
  }
  const auto blocks = parallel_map(inputs.size(), [&](std::size_t i) {
    try {
      const Analysis a = analyze(net, inputs[i], depth, i);
      return spectrum_csv_rows(a.spectrum, a.report);
    } catch (const NumericError& e) {
      throw NumericError("input row " + std::to_string(i) + ": " + e.what());
    }
  });
  std::string csv = kSpectrumCsvHeader;
  for (const auto& b : blocks) csv += b;
  write_file_atomic(out_path, csv);
  log_stage("wrote " + out_path.string() + " (" + std::to_string(inputs.size()) + " inputs)");
  return kExitOk;
}

int cmd_generate(const fs::path& config_path, const fs::path& out_path) {
  const GeneratorConfig cfg = generator_config_from_json(load_json(config_path));
  const NetworkSpec net = build_network(cfg);
  save_network(net, out_path);
  log_stage("wrote " + out_path.string());
  return kExitOk;
}

int cmd_train(const fs::path& config_path, const std::string& data_kind, const fs::path& out_path,
              fs::path loss_path) {
  const DatasetKind kind = dataset_kind_from_string(data_kind);
  const Json j = load_json(config_path);
  json_detail::reject_unknown(j, {"network", "network_file", "train", "data"}, "train config");
  if (j.contains("network") == j.contains("network_file"))
    throw UsageError("train config: give exactly one of \"network\" or \"network_file\"");

  NetworkSpec net;
  if (j.contains("network")) {
    GeneratorConfig g;
    g.input_dim = dataset_input_dim(kind);
    g.output_dim = dataset_target_dim(kind);
    net = build_network(generator_config_from_json(j.at("network"), g, "train config.network"));
  } else {
    if (!j.at("network_file").is_string()) throw UsageError("train config.network_file: expected a path");
    fs::path p = j.at("network_file").get<std::string>();
    if (p.is_relative()) p = config_path.parent_path() / p;
    net = load_network(p);
  }
  const TrainConfig tc = j.contains("train") ? train_config_from_json(j.at("train")) : TrainConfig{};
  std::size_t n = 64;
  double noise = 0.0;
  std::uint64_t data_seed = 0;
  if (j.contains("data")) {
    const Json& d = j.at("data");
    json_detail::reject_unknown(d, {"n", "noise", "seed"}, "train config.data");
    n = experiment_json::count(d, "n", n, "train config.data");
    noise = experiment_json::real(d, "noise", noise, "train config.data");
    data_seed = experiment_json::count(d, "seed", data_seed, "train config.data");
  }
  const Dataset data = make_dataset(kind, n, noise, data_seed);
  log_stage("training on " + std::to_string(data.size()) + " " + data.name + " samples");
  const TrainResult res = train(net, data, tc);
  if (loss_path.empty()) {
    loss_path = out_path;
    loss_path.replace_extension(".loss.csv");
  }
  save_network(res.network, out_path);
  write_file_atomic(loss_path, loss_history_csv(res.loss_history));
  log_stage("final training loss " + format_double(res.loss_history.back()));
  log_stage("wrote " + out_path.string() + " and " + loss_path.string());
  return kExitOk;
}

int cmd_experiment(const std::string& name, const fs::path& config_path, const fs::path& out_dir) {
  const Json cfg = config_path.empty() ? Json::object() : load_json(config_path);
  log_stage("running " + name);
  const ExperimentOutput out = run_experiment(name, cfg);
  for (const auto& p : write_experiment(out, out_dir)) log_stage("wrote " + p.string());
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Finite-time Lyapunov spectra of feedforward networks"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string("lyapnet ") + kVersion);

  std::string network, inputs, out, config, data_kind, loss_out, name;
  std::optional<long long> depth;

  auto* analyze_cmd = app.add_subcommand("analyze", "FTLE spectrum per input row");
  analyze_cmd->add_option("--network", network, "network JSON")->required();
  analyze_cmd->add_option("--inputs", inputs, "CSV of input vectors, one per row")->required();
  analyze_cmd->add_option("--depth", depth, "depth j (default: all transitions)");
  analyze_cmd->add_option("--out", out, "report CSV")->required();

  auto* generate_cmd = app.add_subcommand("generate", "random network from a generator config");
  generate_cmd->add_option("--config", config, "generator config JSON")->required();
  generate_cmd->add_option("--out", out, "network JSON")->required();

  auto* train_cmd = app.add_subcommand("train", "SGD training on a synthetic task");
  train_cmd->add_option("--config", config, "training config JSON")->required();
  train_cmd->add_option("--data-kind", data_kind, "noisy-sine | two-clusters | linear")->required();
  train_cmd->add_option("--out", out, "trained network JSON")->required();
  train_cmd->add_option("--loss-out", loss_out, "loss history CSV (default: <out>.loss.csv)");

  auto* experiment_cmd = app.add_subcommand("experiment", "run a named study");
  experiment_cmd->add_option("name", name, "width-scaling | activation | depth-profile | overfit | prune")
      ->required();
  experiment_cmd->add_option("--config", config, "study config JSON (default: built-in)");
  experiment_cmd->add_option("--out", out, "output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (analyze_cmd->parsed()) return cmd_analyze(network, inputs, depth, out);
    if (generate_cmd->parsed()) return cmd_generate(config, out);
    if (train_cmd->parsed()) return cmd_train(config, data_kind, out, loss_out);
    if (experiment_cmd->parsed()) return cmd_experiment(name, config, out);
  } catch (const UsageError& e) {
    std::cerr << "lyapnet: error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const NumericError& e) {
    std::cerr << "lyapnet: numeric failure: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const std::exception& e) {
    std::cerr << "lyapnet: failure: " << e.what() << "\n";
    return kExitNumeric;
  }
  return kExitUsage;
}
