#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fedsim/metrics.hpp"
#include "fedsim/model.hpp"
#include "fedsim/numkit.hpp"

namespace fedsim::fed {

enum class Algorithm { kFedAvg, kFedProx };
enum class Optimizer { kSgd, kAdamW };

struct FedConfig {
  Algorithm algorithm = Algorithm::kFedAvg;
  double mu = 0.0;  // proximal strength; fedprox with mu = 0 behaves as fedavg
  int rounds = 100;
  int local_epochs = 1;
  int batch_size = 16;
  Optimizer optimizer = Optimizer::kAdamW;
  std::uint64_t seed = 0;
  bool reset_optimizer_each_round = true;
};

/// One institution: its local dataset and (when optimizer state persists
/// across rounds) its AdamW moments.
struct ClientState {
  std::uint32_t client_id = 0;
  std::vector<model::LabeledExample> dataset;
  model::AdamWState opt;

  std::size_t n_samples() const { return dataset.size(); }
};

/// The client -> server message: updated parameters plus the sample count
/// that weights them in the aggregate.
struct RoundUpdate {
  std::uint32_t client_id = 0;
  std::uint32_t round = 0;
  std::uint64_t n_samples = 0;
  ParamVector params;

  bool operator==(const RoundUpdate&) const = default;
};

/// Wire format: magic "FSIM", version 0x01, then little-endian
/// client_id u32, round u32, n_samples u64, param_len u64, and param_len
/// IEEE-754 doubles. 29 header bytes + 8 per parameter.
std::vector<std::uint8_t> encode_update(const RoundUpdate& update);

/// Inverse of encode_update, bit-exact. Throws FormatError on a bad magic or
/// version, LengthError when the buffer size disagrees with the declared
/// parameter count, CorruptionError on non-finite parameters or a zero
/// sample count.
RoundUpdate decode_update(std::span<const std::uint8_t> bytes);

/// E local epochs of mini-batch training from the broadcast parameters.
/// Batches come from a per-(client, round) shuffle stream; the final short
/// batch is kept. Under fedprox every gradient carries the proximal pull
/// toward the broadcast parameters.
RoundUpdate local_update(ClientState& client, const ParamVector& global_params,
                         const FedConfig& cfg,
                         const model::DenseNetConfig& model_cfg,
                         std::uint32_t round);

/// Sample-count-weighted mean of the updates, client order fixed by
/// ascending client_id. All updates must carry the same round.
ParamVector aggregate(std::vector<RoundUpdate> updates);

/// One center's held-out examples, used for per-round evaluation and
/// checkpoint selection.
struct EvalSet {
  std::string name;
  std::vector<model::LabeledExample> examples;
};

/// Scores eval sets with the given parameters. For binary models the
/// positive-class probability feeds per-center and pooled AUC; otherwise
/// AUC is reported as undefined.
metrics::EvalReport evaluate(const ParamVector& params,
                             const model::DenseNetConfig& model_cfg,
                             const std::vector<EvalSet>& eval_sets,
                             int fold_id);

struct GlobalModelState {
  ParamVector params;
  std::uint32_t round = 0;  // rounds completed
  ParamVector best_params;
  std::optional<double> best_auc;
  std::uint32_t best_round = 0;
};

struct RunResult {
  GlobalModelState state;
  std::vector<metrics::EvalReport> history;  // one report per round
};

/// The round loop: broadcast, local updates (passed through the wire codec),
/// weighted aggregation, evaluation, and best-pooled-AUC checkpointing.
/// When no round ever yields a defined pooled AUC, best_params falls back to
/// the final parameters.
RunResult run_federated(const FedConfig& cfg,
                        const model::DenseNetConfig& model_cfg,
                        std::vector<ClientState>& clients,
                        const std::vector<EvalSet>& eval_sets);

/// Baseline: the same schedule and checkpointing on the pooled dataset,
/// realized as a single-client round loop so a one-client federated run and
/// the centralized run coincide bit for bit.
RunResult run_centralized(const FedConfig& cfg,
                          const model::DenseNetConfig& model_cfg,
                          std::vector<model::LabeledExample> pooled,
                          const std::vector<EvalSet>& eval_sets);

}  // namespace fedsim::fed
