#include "fedsim/cli.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>

#include <json.hpp>

#include "fedsim/version.hpp"

namespace fedsim::cli {

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

namespace {

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t");
  if (begin == std::string::npos) {
    return "";
  }
  const auto end = s.find_last_not_of(" \t");
  return s.substr(begin, end - begin + 1);
}

long parse_long(const std::string& key, const std::string& value) {
  long out = 0;
  const auto [ptr, ec] =
      std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc() || ptr != value.data() + value.size()) {
    throw ValidationError("config: " + key + " expects an integer, got '" +
                          value + "'");
  }
  return out;
}

std::uint64_t parse_u64(const std::string& key, const std::string& value) {
  std::uint64_t out = 0;
  const auto [ptr, ec] =
      std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc() || ptr != value.data() + value.size()) {
    throw ValidationError("config: " + key +
                          " expects an unsigned integer, got '" + value + "'");
  }
  return out;
}

double parse_double(const std::string& key, const std::string& value) {
  double out = 0.0;
  const auto [ptr, ec] =
      std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc() || ptr != value.data() + value.size() ||
      !std::isfinite(out)) {
    throw ValidationError("config: " + key + " expects a finite real, got '" +
                          value + "'");
  }
  return out;
}

bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "true") {
    return true;
  }
  if (value == "false") {
    return false;
  }
  throw ValidationError("config: " + key + " expects true or false, got '" +
                        value + "'");
}

std::vector<AlgorithmSpec> parse_algorithms(const std::string& value) {
  std::vector<AlgorithmSpec> out;
  std::string rest = value;
  while (!rest.empty()) {
    const std::size_t comma = rest.find(',');
    std::string token = trim(rest.substr(0, comma));
    rest = comma == std::string::npos ? "" : rest.substr(comma + 1);
    if (token.empty()) {
      continue;
    }
    AlgorithmSpec spec;
    spec.label = token;
    if (token == "fedavg") {
      spec.kind = fed::Algorithm::kFedAvg;
      spec.mu = 0.0;
    } else if (token.rfind("fedprox:", 0) == 0) {
      spec.kind = fed::Algorithm::kFedProx;
      spec.mu = parse_double("fed.algorithms", token.substr(8));
      if (spec.mu < 0.0) {
        throw ValidationError("config: fedprox mu must be >= 0");
      }
    } else {
      throw ValidationError(
          "config: fed.algorithms entries must be 'fedavg' or 'fedprox:<mu>'"
          ", got '" + token + "'");
    }
    out.push_back(std::move(spec));
  }
  return out;
}

std::string format_g17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string sanitize_label(const std::string& label) {
  std::string out = label;
  for (char& c : out) {
    if (!std::isalnum(static_cast<unsigned char>(c)) && c != '.' && c != '-' &&
        c != '_') {
      c = '_';
    }
  }
  return out;
}

}  // namespace

ExperimentConfig parse_config_text(const std::string& text) {
  ExperimentConfig config;
  std::set<std::string> seen;
  std::map<std::string, std::function<void(const std::string&)>> setters;

  setters["task"] = [&](const std::string& v) {
    if (v == "binary") {
      config.task = Task::kBinary;
    } else if (v == "three_class") {
      config.task = Task::kThreeClass;
    } else {
      throw ValidationError("config: task must be binary or three_class");
    }
  };
  setters["seed"] = [&](const std::string& v) {
    config.seed = parse_u64("seed", v);
  };
  setters["out"] = [&](const std::string& v) { config.out_dir = v; };
  setters["data.source"] = [&](const std::string& v) {
    if (v == "builtin") {
      config.data.source = DataSource::kBuiltin;
    } else if (v == "csv") {
      config.data.source = DataSource::kCsv;
    } else {
      throw ValidationError("config: data.source must be builtin or csv");
    }
  };
  setters["data.modality"] = [&](const std::string& v) {
    if (v == "T1" || v == "t1") {
      config.data.modality = cohort::Modality::kT1;
    } else if (v == "T2" || v == "t2") {
      config.data.modality = cohort::Modality::kT2;
    } else {
      throw ValidationError("config: data.modality must be T1 or T2");
    }
  };
  setters["data.feature_dim"] = [&](const std::string& v) {
    config.data.feature_dim = static_cast<int>(parse_long("data.feature_dim", v));
  };
  setters["data.center_shift"] = [&](const std::string& v) {
    config.data.center_shift = parse_double("data.center_shift", v);
  };
  setters["data.class_separation"] = [&](const std::string& v) {
    config.data.class_separation = parse_double("data.class_separation", v);
  };
  setters["data.csv_path"] = [&](const std::string& v) {
    config.data.csv_path = v;
  };
  setters["model.layers"] = [&](const std::string& v) {
    config.model_layers = static_cast<int>(parse_long("model.layers", v));
  };
  setters["model.growth"] = [&](const std::string& v) {
    config.model_growth = static_cast<int>(parse_long("model.growth", v));
  };
  setters["fed.algorithms"] = [&](const std::string& v) {
    config.algorithms = parse_algorithms(v);
  };
  setters["fed.rounds"] = [&](const std::string& v) {
    config.rounds = static_cast<int>(parse_long("fed.rounds", v));
  };
  setters["fed.local_epochs"] = [&](const std::string& v) {
    config.local_epochs = static_cast<int>(parse_long("fed.local_epochs", v));
  };
  setters["fed.batch_size"] = [&](const std::string& v) {
    config.batch_size = static_cast<int>(parse_long("fed.batch_size", v));
  };
  setters["fed.optimizer"] = [&](const std::string& v) {
    if (v == "sgd") {
      config.optimizer = fed::Optimizer::kSgd;
    } else if (v == "adamw") {
      config.optimizer = fed::Optimizer::kAdamW;
    } else {
      throw ValidationError("config: fed.optimizer must be sgd or adamw");
    }
  };
  setters["fed.reset_optimizer_each_round"] = [&](const std::string& v) {
    config.reset_optimizer_each_round =
        parse_bool("fed.reset_optimizer_each_round", v);
  };
  setters["cv.folds"] = [&](const std::string& v) {
    config.cv_folds = static_cast<int>(parse_long("cv.folds", v));
  };
  setters["eval.checkpoint_split"] = [&](const std::string& v) {
    if (v == "validation") {
      config.eval.checkpoint_split = CheckpointSplit::kValidation;
    } else if (v == "test") {
      config.eval.checkpoint_split = CheckpointSplit::kTest;
    } else {
      throw ValidationError(
          "config: eval.checkpoint_split must be validation or test");
    }
  };
  setters["eval.validation_fraction"] = [&](const std::string& v) {
    config.eval.validation_fraction =
        parse_double("eval.validation_fraction", v);
  };

  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::size_t hash = line.find('#');
    if (hash != std::string::npos) {
      line.resize(hash);
    }
    line = trim(line);
    if (line.empty()) {
      continue;
    }
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos) {
      throw ValidationError("config line " + std::to_string(line_no) +
                            ": expected key = value");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    const auto it = setters.find(key);
    if (it == setters.end()) {
      throw ValidationError("config line " + std::to_string(line_no) +
                            ": unknown key '" + key + "'");
    }
    if (!seen.insert(key).second) {
      throw ValidationError("config line " + std::to_string(line_no) +
                            ": duplicate key '" + key + "'");
    }
    it->second(value);
  }
  return config;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw IoError("config: cannot open '" + path + "'");
  }
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config_text(buf.str());
}

void validate_config(const ExperimentConfig& config) {
  if (config.data.source == DataSource::kBuiltin) {
    if (config.data.feature_dim < 1) {
      throw ValidationError("config: data.feature_dim must be >= 1");
    }
    if (config.data.center_shift < 0.0 || config.data.class_separation < 0.0) {
      throw ValidationError("config: data spread parameters must be >= 0");
    }
  } else if (config.data.csv_path.empty()) {
    throw ValidationError("config: data.csv_path required when data.source=csv");
  }
  if (config.model_layers < 0) {
    throw ValidationError("config: model.layers must be >= 0");
  }
  if (config.model_layers > 0 && config.model_growth < 1) {
    throw ValidationError("config: model.growth must be >= 1");
  }
  if (config.rounds < 1) {
    throw ValidationError("config: fed.rounds must be >= 1");
  }
  if (config.local_epochs < 1) {
    throw ValidationError("config: fed.local_epochs must be >= 1");
  }
  if (config.batch_size < 1) {
    throw ValidationError("config: fed.batch_size must be >= 1");
  }
  if (config.cv_folds < 2) {
    throw ValidationError("config: cv.folds must be >= 2");
  }
  if (!(config.eval.validation_fraction > 0.0 &&
        config.eval.validation_fraction < 1.0)) {
    throw ValidationError(
        "config: eval.validation_fraction must be in (0, 1)");
  }
}

std::string config_hash(const ExperimentConfig& config) {
  std::ostringstream canon;
  canon << "task=" << (config.task == Task::kBinary ? "binary" : "three_class")
        << '\n'
        << "seed=" << config.seed << '\n';
  if (config.data.source == DataSource::kBuiltin) {
    canon << "data.source=builtin\n"
          << "data.modality="
          << (config.data.modality == cohort::Modality::kT1 ? "T1" : "T2")
          << '\n'
          << "data.feature_dim=" << config.data.feature_dim << '\n'
          << "data.center_shift=" << format_g17(config.data.center_shift)
          << '\n'
          << "data.class_separation="
          << format_g17(config.data.class_separation) << '\n';
  } else {
    canon << "data.source=csv\n"
          << "data.csv_path=" << config.data.csv_path << '\n';
  }
  canon << "model.layers=" << config.model_layers << '\n'
        << "model.growth=" << config.model_growth << '\n';
  canon << "fed.algorithms=";
  for (std::size_t i = 0; i < config.algorithms.size(); ++i) {
    const AlgorithmSpec& a = config.algorithms[i];
    if (i > 0) {
      canon << ',';
    }
    canon << (a.kind == fed::Algorithm::kFedAvg ? "fedavg" : "fedprox")
          << ':' << format_g17(a.mu);
  }
  canon << '\n'
        << "fed.rounds=" << config.rounds << '\n'
        << "fed.local_epochs=" << config.local_epochs << '\n'
        << "fed.batch_size=" << config.batch_size << '\n'
        << "fed.optimizer="
        << (config.optimizer == fed::Optimizer::kSgd ? "sgd" : "adamw") << '\n'
        << "fed.reset_optimizer_each_round="
        << (config.reset_optimizer_each_round ? 1 : 0) << '\n'
        << "cv.folds=" << config.cv_folds << '\n'
        << "eval.checkpoint_split="
        << (config.eval.checkpoint_split == CheckpointSplit::kValidation
                ? "validation"
                : "test")
        << '\n'
        << "eval.validation_fraction="
        << format_g17(config.eval.validation_fraction) << '\n';

  const std::string s = canon.str();
  std::uint64_t h = 1469598103934665603ULL;  // FNV-1a 64
  for (const unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(h));
  return buf;
}

namespace {

cohort::Cohort build_cohort(const ExperimentConfig& config) {
  if (config.data.source == DataSource::kBuiltin) {
    return cohort::synth_generate(cohort::builtin_profiles(config.data.modality),
                                  config.data.feature_dim,
                                  config.data.center_shift,
                                  config.data.class_separation, config.seed);
  }
  return cohort::load_csv(config.data.csv_path);
}

void ensure_parent_dir(const std::string& path) {
  const fs::path parent = fs::path(path).parent_path();
  if (parent.empty()) {
    return;
  }
  std::error_code ec;
  fs::create_directories(parent, ec);
  if (ec) {
    throw IoError("cannot create directory '" + parent.string() +
                  "': " + ec.message());
  }
}

void write_file(const std::string& path, const std::string& bytes) {
  ensure_parent_dir(path);
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw IoError("cannot write '" + path + "'");
  }
  out << bytes;
  if (!out) {
    throw IoError("write to '" + path + "' failed");
  }
}

std::string format_counts_table(const std::vector<cohort::CenterProfile>& profiles) {
  std::ostringstream out;
  char line[128];
  std::snprintf(line, sizeof(line), "%-8s %8s %9s %10s %7s\n", "center",
                "no_risk", "low_risk", "high_risk", "total");
  out << line;
  int no = 0;
  int low = 0;
  int high = 0;
  for (const cohort::CenterProfile& p : profiles) {
    std::snprintf(line, sizeof(line), "%-8s %8d %9d %10d %7d\n",
                  p.name.c_str(), p.no_risk, p.low_risk, p.high_risk,
                  p.total());
    out << line;
    no += p.no_risk;
    low += p.low_risk;
    high += p.high_risk;
  }
  std::snprintf(line, sizeof(line), "%-8s %8d %9d %10d %7d\n", "Total", no,
                low, high, no + low + high);
  out << line;
  return out.str();
}

/// Moves a seeded, per-(center, class) stratified slice of the training data
/// into validation sets; train keeps the remainder.
std::vector<std::vector<model::LabeledExample>> carve_validation(
    std::vector<std::vector<model::LabeledExample>>& train, int num_classes,
    double fraction, std::uint64_t fold_seed) {
  std::vector<std::vector<model::LabeledExample>> val(train.size());
  for (std::size_t c = 0; c < train.size(); ++c) {
    std::vector<model::LabeledExample> kept;
    kept.reserve(train[c].size());
    std::vector<model::LabeledExample> taken;
    for (int y = 0; y < num_classes; ++y) {
      std::vector<std::size_t> cell;
      for (std::size_t i = 0; i < train[c].size(); ++i) {
        if (train[c][i].label == y) {
          cell.push_back(i);
        }
      }
      numkit::RngStream rng(fold_seed, {numkit::StreamPurpose::kValSplit,
                                        static_cast<std::uint32_t>(c),
                                        static_cast<std::uint32_t>(y)});
      numkit::shuffle(cell, rng);
      std::size_t n_val = 0;
      if (cell.size() >= 2) {
        n_val = std::max<std::size_t>(
            1, static_cast<std::size_t>(
                   std::floor(fraction * static_cast<double>(cell.size()))));
      }
      for (std::size_t i = 0; i < cell.size(); ++i) {
        (i < n_val ? taken : kept).push_back(train[c][cell[i]]);
      }
    }
    train[c] = std::move(kept);
    val[c] = std::move(taken);
  }
  return val;
}

std::vector<fed::EvalSet> make_eval_sets(
    const cohort::Cohort& data,
    const std::vector<std::vector<model::LabeledExample>>& per_center) {
  std::vector<fed::EvalSet> out;
  out.reserve(per_center.size());
  for (std::size_t c = 0; c < per_center.size(); ++c) {
    out.push_back(fed::EvalSet{data.centers[c].profile.name, per_center[c]});
  }
  return out;
}

ordered_json json_opt(const std::optional<double>& v) {
  if (v.has_value()) {
    return *v;
  }
  return nullptr;
}

ordered_json report_to_json(const metrics::EvalReport& report, int fold,
                            const std::string& label) {
  ordered_json entry;
  entry["fold"] = fold;
  entry["algorithm"] = label;
  entry["centers"] = ordered_json::array();
  for (const metrics::CenterEval& ce : report.per_center) {
    ordered_json cj;
    cj["name"] = ce.name;
    cj["n_test"] = ce.n_test;
    cj["acc"] = json_opt(ce.acc);
    cj["auc"] = json_opt(ce.auc);
    entry["centers"].push_back(std::move(cj));
  }
  entry["global"] = {{"acc", json_opt(report.global_acc)},
                     {"auc", json_opt(report.global_auc)}};
  return entry;
}

struct MetricSeries {
  std::vector<double> accs;
  std::vector<double> aucs;

  void add(const std::optional<double>& acc, const std::optional<double>& auc) {
    if (acc.has_value()) {
      accs.push_back(*acc);
    }
    if (auc.has_value()) {
      aucs.push_back(*auc);
    }
  }
};

ordered_json series_summary(const MetricSeries& series) {
  ordered_json out;
  if (!series.accs.empty()) {
    const metrics::MeanStd ms = metrics::cv_summary(series.accs);
    out["acc_mean"] = ms.mean;
    out["acc_std"] = ms.std;
  } else {
    out["acc_mean"] = nullptr;
    out["acc_std"] = nullptr;
  }
  if (!series.aucs.empty()) {
    const metrics::MeanStd ms = metrics::cv_summary(series.aucs);
    out["auc_mean"] = ms.mean;
    out["auc_std"] = ms.std;
  } else {
    out["auc_mean"] = nullptr;
    out["auc_std"] = nullptr;
  }
  return out;
}

std::string csv_opt(const std::optional<double>& v) {
  if (v.has_value()) {
    return format_g17(*v);
  }
  return "n/a";
}

}  // namespace

GenDataResult cmd_gen_data(const ExperimentConfig& config,
                           const std::string& csv_path) {
  validate_config(config);
  if (config.data.source != DataSource::kBuiltin) {
    throw ValidationError("gen-data requires data.source=builtin");
  }
  const cohort::Cohort data = build_cohort(config);
  ensure_parent_dir(csv_path);
  cohort::save_csv(data, csv_path);
  std::vector<cohort::CenterProfile> profiles;
  profiles.reserve(data.centers.size());
  for (const cohort::CenterData& center : data.centers) {
    profiles.push_back(center.profile);
  }
  return GenDataResult{csv_path, format_counts_table(profiles)};
}

RunOutputs cmd_run(const ExperimentConfig& config) {
  validate_config(config);
  const cohort::Cohort data = build_cohort(config);
  const int num_classes = config.task == Task::kBinary ? 2 : 3;

  if (config.task == Task::kThreeClass) {
    if (data.num_classes != 3) {
      throw ValidationError(
          "three_class task requires a cohort with risk-level labels");
    }
    if (!config.algorithms.empty()) {
      for (const cohort::CenterData& center : data.centers) {
        for (int y = 0; y < 3; ++y) {
          if (center.profile.count_for(y) == 0) {
            throw ValidationError(
                "three_class federated runs need every (center, class) cell "
                "populated; center " + center.profile.name +
                " has no class-" + std::to_string(y) + " cases");
          }
        }
      }
    }
  }

  model::DenseNetConfig mcfg;
  mcfg.input_dim = data.feature_dim;
  mcfg.num_layers = config.model_layers;
  mcfg.growth = config.model_growth;
  mcfg.num_classes = num_classes;

  const cohort::FoldAssignment assignment =
      cohort::stratified_kfold(data, config.cv_folds, config.seed);

  std::vector<std::string> run_labels;
  run_labels.push_back("centralized");
  for (const AlgorithmSpec& spec : config.algorithms) {
    run_labels.push_back(spec.label);
  }

  // (algorithm, center) -> fold series; center index data.centers.size()
  // stands for Global.
  const std::size_t n_centers = data.centers.size();
  std::vector<std::vector<MetricSeries>> summary_series(
      run_labels.size(), std::vector<MetricSeries>(n_centers + 1));
  // csv cell: (algorithm, center, fold) -> (acc, auc)
  std::vector<std::vector<std::vector<std::pair<std::optional<double>,
                                                std::optional<double>>>>>
      csv_cells(run_labels.size(),
                std::vector<std::vector<std::pair<std::optional<double>,
                                                  std::optional<double>>>>(
                    n_centers + 1));

  ordered_json folds_json = ordered_json::array();
  const std::string checkpoint_dir =
      (fs::path(config.out_dir) / "checkpoints").string();

  for (int fold = 0; fold < config.cv_folds; ++fold) {
    cohort::FoldSplit split = cohort::split_fold(data, assignment, fold);
    if (config.task == Task::kBinary && data.num_classes == 3) {
      for (auto* part : {&split.train, &split.test}) {
        for (std::vector<model::LabeledExample>& examples : *part) {
          for (model::LabeledExample& ex : examples) {
            ex.label = cohort::binarize(ex.label);
          }
        }
      }
    }
    const std::uint64_t fold_seed =
        numkit::derive_seed(config.seed, static_cast<std::uint64_t>(fold));

    const std::vector<fed::EvalSet> test_sets =
        make_eval_sets(data, split.test);
    std::vector<fed::EvalSet> checkpoint_sets;
    if (config.eval.checkpoint_split == CheckpointSplit::kValidation) {
      const auto val = carve_validation(split.train, num_classes,
                                        config.eval.validation_fraction,
                                        fold_seed);
      checkpoint_sets = make_eval_sets(data, val);
    } else {
      checkpoint_sets = test_sets;
    }

    std::uint64_t train_total = 0;
    for (std::size_t c = 0; c < split.train.size(); ++c) {
      if (split.train[c].empty()) {
        throw ValidationError("fold " + std::to_string(fold) + ": center " +
                              data.centers[c].profile.name +
                              " has no training examples");
      }
      train_total += split.train[c].size();
    }

    fed::FedConfig base;
    base.rounds = config.rounds;
    base.local_epochs = config.local_epochs;
    base.batch_size = config.batch_size;
    base.optimizer = config.optimizer;
    base.seed = fold_seed;
    base.reset_optimizer_each_round = config.reset_optimizer_each_round;

    for (std::size_t r = 0; r < run_labels.size(); ++r) {
      fed::FedConfig run_cfg = base;
      fed::RunResult result;
      if (r == 0) {
        run_cfg.algorithm = fed::Algorithm::kFedAvg;
        run_cfg.mu = 0.0;
        std::vector<model::LabeledExample> pooled;
        pooled.reserve(static_cast<std::size_t>(train_total));
        for (const auto& center_train : split.train) {
          pooled.insert(pooled.end(), center_train.begin(), center_train.end());
        }
        result = fed::run_centralized(run_cfg, mcfg, std::move(pooled),
                                      checkpoint_sets);
      } else {
        const AlgorithmSpec& spec = config.algorithms[r - 1];
        run_cfg.algorithm = spec.kind;
        run_cfg.mu = spec.mu;
        std::vector<fed::ClientState> clients(split.train.size());
        for (std::size_t c = 0; c < split.train.size(); ++c) {
          clients[c].client_id = static_cast<std::uint32_t>(c);
          clients[c].dataset = split.train[c];
        }
        result = fed::run_federated(run_cfg, mcfg, clients, checkpoint_sets);
      }

      const metrics::EvalReport test_report =
          fed::evaluate(result.state.best_params, mcfg, test_sets, fold);

      const fed::RoundUpdate checkpoint{
          0, result.state.best_round,
          train_total, result.state.best_params};
      const std::vector<std::uint8_t> checkpoint_bytes =
          fed::encode_update(checkpoint);
      write_file((fs::path(checkpoint_dir) /
                  (sanitize_label(run_labels[r]) + "_fold" +
                   std::to_string(fold) + ".bin"))
                     .string(),
                 std::string(reinterpret_cast<const char*>(
                                 checkpoint_bytes.data()),
                             checkpoint_bytes.size()));

      folds_json.push_back(report_to_json(test_report, fold, run_labels[r]));
      for (std::size_t c = 0; c < test_report.per_center.size(); ++c) {
        summary_series[r][c].add(test_report.per_center[c].acc,
                                 test_report.per_center[c].auc);
        csv_cells[r][c].emplace_back(test_report.per_center[c].acc,
                                     test_report.per_center[c].auc);
      }
      summary_series[r][n_centers].add(test_report.global_acc,
                                       test_report.global_auc);
      csv_cells[r][n_centers].emplace_back(test_report.global_acc,
                                           test_report.global_auc);
    }
  }

  ordered_json manifest;
  manifest["config_hash"] = config_hash(config);
  manifest["seed"] = config.seed;
  manifest["engine_version"] = kEngineVersion;
  manifest["cv_folds"] = config.cv_folds;
  manifest["folds"] = std::move(folds_json);
  ordered_json summary;
  for (std::size_t r = 0; r < run_labels.size(); ++r) {
    ordered_json entry;
    entry["centers"] = ordered_json::array();
    for (std::size_t c = 0; c < n_centers; ++c) {
      ordered_json cj;
      cj["name"] = data.centers[c].profile.name;
      const ordered_json stats = series_summary(summary_series[r][c]);
      for (const auto& [key, value] : stats.items()) {
        cj[key] = value;
      }
      entry["centers"].push_back(std::move(cj));
    }
    entry["global"] = series_summary(summary_series[r][n_centers]);
    summary[run_labels[r]] = std::move(entry);
  }
  manifest["summary"] = std::move(summary);

  std::ostringstream csv;
  csv << "algorithm,center,fold,acc,auc\n";
  for (std::size_t c = 0; c <= n_centers; ++c) {
    const std::string center_name =
        c < n_centers ? data.centers[c].profile.name : std::string("Global");
    for (std::size_t r = 0; r < run_labels.size(); ++r) {
      for (std::size_t f = 0; f < csv_cells[r][c].size(); ++f) {
        csv << run_labels[r] << ',' << center_name << ',' << f << ','
            << csv_opt(csv_cells[r][c][f].first) << ','
            << csv_opt(csv_cells[r][c][f].second) << '\n';
      }
    }
  }

  RunOutputs outputs;
  outputs.manifest_path = (fs::path(config.out_dir) / "manifest.json").string();
  outputs.metrics_csv_path = (fs::path(config.out_dir) / "metrics.csv").string();
  outputs.checkpoint_dir = checkpoint_dir;
  outputs.manifest_json = manifest.dump(2);
  outputs.manifest_json.push_back('\n');
  write_file(outputs.manifest_path, outputs.manifest_json);
  write_file(outputs.metrics_csv_path, csv.str());
  return outputs;
}

namespace {

std::string format_mean_std(const ordered_json& mean, const ordered_json& std) {
  if (mean.is_null() || std.is_null()) {
    return "n/a";
  }
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%.4f±%.4f", mean.get<double>(),
                std.get<double>());
  return buf;
}

}  // namespace

std::string render_report(const std::string& manifest_json) {
  ordered_json manifest;
  try {
    manifest = ordered_json::parse(manifest_json);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("manifest: not valid JSON: ") + e.what());
  }
  if (!manifest.contains("summary") || !manifest["summary"].is_object() ||
      !manifest.contains("config_hash") || !manifest.contains("seed")) {
    throw FormatError("manifest: missing config_hash/seed/summary");
  }

  const ordered_json& summary = manifest["summary"];
  std::size_t label_width = 9;  // "algorithm"
  for (const auto& [label, entry] : summary.items()) {
    (void)entry;
    label_width = std::max(label_width, label.size());
  }

  std::ostringstream out;
  out << "run " << manifest["config_hash"].get<std::string>() << "  seed "
      << manifest["seed"] << "  folds "
      << (manifest.contains("cv_folds") ? manifest["cv_folds"].dump()
                                        : std::string("?"))
      << "\n";

  // Center order from the first algorithm entry; Global printed last.
  std::vector<std::string> center_names;
  for (const auto& [label, entry] : summary.items()) {
    (void)label;
    if (!entry.contains("centers") || !entry["centers"].is_array()) {
      throw FormatError("manifest: summary entry lacks centers");
    }
    for (const auto& cj : entry["centers"]) {
      center_names.push_back(cj.at("name").get<std::string>());
    }
    break;
  }

  auto print_block = [&](const std::string& title,
                         const std::function<const ordered_json*(
                             const ordered_json&)>& pick) {
    out << "\n== " << title << " ==\n";
    out << "  " << std::string(label_width - 9, ' ') << "algorithm"
        << "  acc              auc\n";
    for (const auto& [label, entry] : summary.items()) {
      const ordered_json* stats = pick(entry);
      if (stats == nullptr) {
        throw FormatError("manifest: summary block missing for " + title);
      }
      std::string padded = label;
      padded.resize(label_width, ' ');
      out << "  " << padded << "  ";
      std::string acc = format_mean_std((*stats)["acc_mean"], (*stats)["acc_std"]);
      // the +/- glyph is 2 bytes; pad to a 15-char visual column
      const std::size_t visual = acc.size() - (acc == "n/a" ? 0 : 2);
      out << acc << std::string(visual < 15 ? 15 - visual + 2 : 2, ' ')
          << format_mean_std((*stats)["auc_mean"], (*stats)["auc_std"]) << "\n";
    }
  };

  for (std::size_t c = 0; c < center_names.size(); ++c) {
    print_block("Center: " + center_names[c],
                [&](const ordered_json& entry) -> const ordered_json* {
                  if (!entry.contains("centers") ||
                      c >= entry["centers"].size()) {
                    return nullptr;
                  }
                  return &entry["centers"][c];
                });
  }
  print_block("Global", [](const ordered_json& entry) -> const ordered_json* {
    if (!entry.contains("global")) {
      return nullptr;
    }
    return &entry["global"];
  });
  return out.str();
}

std::string cmd_report(const std::string& manifest_path) {
  std::ifstream in(manifest_path, std::ios::binary);
  if (!in) {
    throw IoError("report: cannot open '" + manifest_path + "'");
  }
  std::ostringstream buf;
  buf << in.rdbuf();
  return render_report(buf.str());
}

}  // namespace fedsim::cli
