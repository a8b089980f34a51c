#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fedsim/cohort.hpp"
#include "fedsim/federation.hpp"

namespace fedsim::cli {

enum class Task { kBinary, kThreeClass };
enum class DataSource { kBuiltin, kCsv };

/// Which held-out split drives best-checkpoint selection.
enum class CheckpointSplit { kValidation, kTest };

/// One federated algorithm to run, as configured. The label is the config
/// token ("fedavg", "fedprox:0.1") and names the algorithm in every report.
struct AlgorithmSpec {
  fed::Algorithm kind = fed::Algorithm::kFedAvg;
  double mu = 0.0;
  std::string label = "fedavg";
};

struct DataConfig {
  DataSource source = DataSource::kBuiltin;
  cohort::Modality modality = cohort::Modality::kT1;
  int feature_dim = 8;
  double center_shift = 1.0;
  double class_separation = 2.0;
  std::string csv_path;
};

struct EvalConfig {
  CheckpointSplit checkpoint_split = CheckpointSplit::kValidation;
  double validation_fraction = 0.25;
};

struct ExperimentConfig {
  Task task = Task::kBinary;
  std::uint64_t seed = 42;
  std::string out_dir = "runs/out";
  DataConfig data;
  int model_layers = 2;
  int model_growth = 8;
  int rounds = 100;
  int local_epochs = 1;
  int batch_size = 16;
  fed::Optimizer optimizer = fed::Optimizer::kAdamW;
  bool reset_optimizer_each_round = true;
  std::vector<AlgorithmSpec> algorithms{AlgorithmSpec{}};
  int cv_folds = 4;
  EvalConfig eval;
};

/// Parses the key=value config grammar ('#' comments, dotted keys; the full
/// key list is documented in the README). Unknown or duplicate keys are
/// validation errors.
ExperimentConfig parse_config_text(const std::string& text);

ExperimentConfig load_config(const std::string& path);

/// Rejects out-of-range fields. Throws ValidationError.
void validate_config(const ExperimentConfig& config);

/// 16-hex-digit digest of every semantically meaningful field (the output
/// directory is excluded; two configs hash equal iff they run the same
/// experiment).
std::string config_hash(const ExperimentConfig& config);

struct GenDataResult {
  std::string csv_path;
  std::string counts_table;  // per-center class counts plus a totals row
};

/// Generates the synthetic cohort and writes it as CSV.
GenDataResult cmd_gen_data(const ExperimentConfig& config,
                           const std::string& csv_path);

struct RunOutputs {
  std::string manifest_path;
  std::string metrics_csv_path;
  std::string checkpoint_dir;
  std::string manifest_json;  // exact bytes written to manifest_path
};

/// Full experiment: k-fold split, centralized baseline plus every configured
/// federated algorithm per fold, test metrics of each best checkpoint, and
/// the JSON manifest + flat metrics CSV + checkpoint files under out_dir.
RunOutputs cmd_run(const ExperimentConfig& config);

/// Renders the mean +/- std table (4 decimals, "n/a" for undefined metrics)
/// from a manifest file.
std::string cmd_report(const std::string& manifest_path);

/// Same, from manifest bytes already in memory.
std::string render_report(const std::string& manifest_json);

}  // namespace fedsim::cli
