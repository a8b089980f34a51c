// fedsim CLI: gen-data / run / report.
//
// Exit codes: 0 success, 1 configuration or input validation error,
// 2 runtime failure.

#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "fedsim/cli.hpp"
#include "fedsim/error.hpp"
#include "fedsim/version.hpp"

namespace {

struct CommonArgs {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
};

fedsim::cli::ExperimentConfig resolve_config(const CommonArgs& args) {
  fedsim::cli::ExperimentConfig config =
      args.config_path.empty()
          ? fedsim::cli::ExperimentConfig{}
          : fedsim::cli::load_config(args.config_path);
  if (args.seed.has_value()) {
    config.seed = *args.seed;
  }
  if (args.out.has_value()) {
    config.out_dir = *args.out;
  }
  return config;
}

void add_common(CLI::App* cmd, CommonArgs& args) {
  cmd->add_option("--config", args.config_path, "experiment config file");
  cmd->add_option("--seed", args.seed, "override the config seed");
  cmd->add_option("--out", args.out, "override the output directory");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"deterministic multi-center federated learning simulator"};
  app.set_version_flag("--version", fedsim::kEngineVersion);
  app.require_subcommand(1);

  CommonArgs gen_args;
  std::string gen_csv;
  CLI::App* gen = app.add_subcommand(
      "gen-data", "generate a synthetic cohort CSV from the built-in profiles");
  add_common(gen, gen_args);
  gen->add_option("--csv", gen_csv, "output CSV path (default <out>/cohort.csv)");

  CommonArgs run_args;
  CLI::App* run = app.add_subcommand(
      "run", "run cross-validated centralized and federated training");
  add_common(run, run_args);

  std::string manifest_path;
  CLI::App* report =
      app.add_subcommand("report", "print the mean±std table for a manifest");
  report->add_option("manifest", manifest_path, "manifest.json path")
      ->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (gen->parsed()) {
      const fedsim::cli::ExperimentConfig config = resolve_config(gen_args);
      const std::string csv_path =
          gen_csv.empty() ? config.out_dir + "/cohort.csv" : gen_csv;
      const fedsim::cli::GenDataResult result =
          fedsim::cli::cmd_gen_data(config, csv_path);
      std::cout << result.counts_table;
      std::cout << "wrote " << result.csv_path << "\n";
    } else if (run->parsed()) {
      const fedsim::cli::ExperimentConfig config = resolve_config(run_args);
      const fedsim::cli::RunOutputs outputs = fedsim::cli::cmd_run(config);
      std::cout << "wrote " << outputs.manifest_path << "\n";
      std::cout << "wrote " << outputs.metrics_csv_path << "\n";
      std::cout << fedsim::cli::render_report(outputs.manifest_json);
    } else if (report->parsed()) {
      std::cout << fedsim::cli::cmd_report(manifest_path);
    }
  } catch (const fedsim::ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
