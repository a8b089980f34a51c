#include "fedsim/federation.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <limits>
#include <numeric>

namespace fedsim::fed {

namespace {

constexpr std::uint8_t kMagic[4] = {'F', 'S', 'I', 'M'};
constexpr std::uint8_t kVersion = 0x01;
constexpr std::size_t kHeaderBytes = 4 + 1 + 4 + 4 + 8 + 8;

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) {
    out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
}

void put_u64(std::vector<std::uint8_t>& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) {
    out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
}

std::uint32_t get_u32(const std::uint8_t* p) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) {
    v |= static_cast<std::uint32_t>(p[i]) << (8 * i);
  }
  return v;
}

std::uint64_t get_u64(const std::uint8_t* p) {
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) {
    v |= static_cast<std::uint64_t>(p[i]) << (8 * i);
  }
  return v;
}

void check_fed_config(const FedConfig& cfg) {
  if (cfg.rounds < 1) {
    throw ValueError("fed config: rounds must be >= 1");
  }
  if (cfg.local_epochs < 1) {
    throw ValueError("fed config: local_epochs must be >= 1");
  }
  if (cfg.batch_size < 1) {
    throw ValueError("fed config: batch_size must be >= 1");
  }
  if (cfg.mu < 0.0) {
    throw ValueError("fed config: mu must be >= 0");
  }
}

}  // namespace

std::vector<std::uint8_t> encode_update(const RoundUpdate& update) {
  if (update.n_samples == 0) {
    throw ValueError("encode_update: n_samples must be > 0");
  }
  if (!numkit::all_finite(update.params)) {
    throw CorruptionError("encode_update: non-finite parameter");
  }
  std::vector<std::uint8_t> out;
  out.reserve(kHeaderBytes + 8 * update.params.size());
  out.insert(out.end(), std::begin(kMagic), std::end(kMagic));
  out.push_back(kVersion);
  put_u32(out, update.client_id);
  put_u32(out, update.round);
  put_u64(out, update.n_samples);
  put_u64(out, static_cast<std::uint64_t>(update.params.size()));
  for (const double p : update.params) {
    put_u64(out, std::bit_cast<std::uint64_t>(p));
  }
  return out;
}

RoundUpdate decode_update(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < kHeaderBytes) {
    throw LengthError("decode_update: buffer shorter than the 29-byte header");
  }
  if (std::memcmp(bytes.data(), kMagic, 4) != 0) {
    throw FormatError("decode_update: bad magic");
  }
  if (bytes[4] != kVersion) {
    throw FormatError("decode_update: unsupported version " +
                      std::to_string(bytes[4]));
  }
  RoundUpdate update;
  update.client_id = get_u32(bytes.data() + 5);
  update.round = get_u32(bytes.data() + 9);
  update.n_samples = get_u64(bytes.data() + 13);
  const std::uint64_t param_len = get_u64(bytes.data() + 21);
  if (update.n_samples == 0) {
    throw CorruptionError("decode_update: zero sample count");
  }
  const std::size_t payload = bytes.size() - kHeaderBytes;
  if (payload % 8 != 0 || param_len != payload / 8) {
    throw LengthError("decode_update: declared " + std::to_string(param_len) +
                      " parameters, buffer carries " +
                      std::to_string(payload) + " payload bytes");
  }
  update.params.resize(static_cast<std::size_t>(param_len));
  for (std::size_t i = 0; i < update.params.size(); ++i) {
    const double v = std::bit_cast<double>(get_u64(bytes.data() + kHeaderBytes + 8 * i));
    if (!std::isfinite(v)) {
      throw CorruptionError("decode_update: non-finite parameter at index " +
                            std::to_string(i));
    }
    update.params[i] = v;
  }
  return update;
}

RoundUpdate local_update(ClientState& client, const ParamVector& global_params,
                         const FedConfig& cfg,
                         const model::DenseNetConfig& model_cfg,
                         std::uint32_t round) {
  check_fed_config(cfg);
  if (client.dataset.empty()) {
    throw EmptyInputError("local_update: client " +
                          std::to_string(client.client_id) +
                          " has no examples");
  }
  if (global_params.size() != model::param_count(model_cfg)) {
    throw DimensionError("local_update: broadcast parameter length mismatch");
  }

  ParamVector params = global_params;
  // Proximal anchor stays at the broadcast parameters for the whole round.
  const model::ProxTerm prox{cfg.mu, global_params};
  const model::ProxTerm* prox_ptr =
      (cfg.algorithm == Algorithm::kFedProx && cfg.mu != 0.0) ? &prox : nullptr;

  if (cfg.optimizer == Optimizer::kAdamW &&
      (cfg.reset_optimizer_each_round || client.opt.m.size() != params.size())) {
    client.opt = model::AdamWState::fresh(params.size());
  }

  numkit::RngStream shuffle_rng(
      cfg.seed, {numkit::StreamPurpose::kShuffle, client.client_id, round});
  std::vector<std::size_t> order(client.dataset.size());
  std::vector<model::LabeledExample> batch;
  batch.reserve(static_cast<std::size_t>(cfg.batch_size));

  for (int epoch = 0; epoch < cfg.local_epochs; ++epoch) {
    std::iota(order.begin(), order.end(), 0);
    numkit::shuffle(order, shuffle_rng);
    const double lr = model::lr_schedule(
        model::global_epoch(round, cfg.local_epochs, epoch));
    for (std::size_t start = 0; start < order.size();
         start += static_cast<std::size_t>(cfg.batch_size)) {
      const std::size_t stop =
          std::min(order.size(), start + static_cast<std::size_t>(cfg.batch_size));
      batch.clear();
      for (std::size_t i = start; i < stop; ++i) {
        batch.push_back(client.dataset[order[i]]);
      }
      const model::LossGrad lg =
          model::loss_and_grad(params, model_cfg, batch, prox_ptr);
      if (cfg.optimizer == Optimizer::kSgd) {
        params = model::sgd_step(params, lg.grad, lr);
      } else {
        model::adamw_step(client.opt, params, lg.grad, lr);
      }
    }
  }
  return RoundUpdate{client.client_id, round,
                     static_cast<std::uint64_t>(client.dataset.size()),
                     std::move(params)};
}

ParamVector aggregate(std::vector<RoundUpdate> updates) {
  if (updates.empty()) {
    throw EmptyInputError("aggregate: no updates");
  }
  std::sort(updates.begin(), updates.end(),
            [](const RoundUpdate& a, const RoundUpdate& b) {
              return a.client_id < b.client_id;
            });
  for (std::size_t i = 1; i < updates.size(); ++i) {
    if (updates[i].client_id == updates[i - 1].client_id) {
      throw ProtocolError("aggregate: duplicate update from client " +
                          std::to_string(updates[i].client_id));
    }
    if (updates[i].round != updates.front().round) {
      throw ProtocolError("aggregate: updates from mixed rounds");
    }
  }
  std::vector<ParamVector> vs;
  std::vector<double> weights;
  vs.reserve(updates.size());
  weights.reserve(updates.size());
  for (RoundUpdate& u : updates) {
    weights.push_back(static_cast<double>(u.n_samples));
    vs.push_back(std::move(u.params));
  }
  return numkit::weighted_mean(vs, weights);
}

metrics::EvalReport evaluate(const ParamVector& params,
                             const model::DenseNetConfig& model_cfg,
                             const std::vector<EvalSet>& eval_sets,
                             int fold_id) {
  metrics::EvalReport report;
  report.fold_id = fold_id;
  const bool binary = model_cfg.num_classes == 2;
  std::vector<metrics::ScoredExample> pooled;
  for (std::size_t c = 0; c < eval_sets.size(); ++c) {
    const EvalSet& es = eval_sets[c];
    metrics::CenterEval ce;
    ce.name = es.name;
    ce.n_test = static_cast<std::int64_t>(es.examples.size());
    std::vector<metrics::ScoredExample> scored;
    scored.reserve(es.examples.size());
    for (const model::LabeledExample& ex : es.examples) {
      if (ex.label < 0 || ex.label >= model_cfg.num_classes) {
        throw ValueError("evaluate: label out of range in eval set " + es.name);
      }
      const std::vector<double> logits =
          model::forward(params, model_cfg, ex.features);
      metrics::ScoredExample se;
      se.center_id = static_cast<int>(c);
      se.true_label = ex.label;
      se.predicted = model::predict(logits);
      se.score = binary ? model::softmax_probs(logits)[1]
                        : std::numeric_limits<double>::quiet_NaN();
      scored.push_back(se);
    }
    if (!scored.empty()) {
      ce.acc = metrics::accuracy(scored);
      if (binary) {
        ce.auc = metrics::maybe_auc(scored);
        pooled.insert(pooled.end(), scored.begin(), scored.end());
      }
    }
    report.per_center.push_back(std::move(ce));
  }
  std::vector<std::pair<std::int64_t, double>> center_accs;
  for (const metrics::CenterEval& ce : report.per_center) {
    if (ce.acc.has_value()) {
      center_accs.emplace_back(ce.n_test, *ce.acc);
    }
  }
  if (!center_accs.empty()) {
    report.global_acc = metrics::global_weighted_acc(center_accs);
  }
  if (binary && !pooled.empty()) {
    report.global_auc = metrics::maybe_pooled_auc(pooled);
  }
  return report;
}

RunResult run_federated(const FedConfig& cfg,
                        const model::DenseNetConfig& model_cfg,
                        std::vector<ClientState>& clients,
                        const std::vector<EvalSet>& eval_sets) {
  check_fed_config(cfg);
  if (clients.empty()) {
    throw EmptyInputError("run_federated: no clients");
  }
  for (std::size_t i = 0; i < clients.size(); ++i) {
    for (std::size_t j = i + 1; j < clients.size(); ++j) {
      if (clients[i].client_id == clients[j].client_id) {
        throw ProtocolError("run_federated: duplicate client id " +
                            std::to_string(clients[i].client_id));
      }
    }
  }

  numkit::RngStream init_rng(cfg.seed,
                             {numkit::StreamPurpose::kModelInit, 0, 0});
  RunResult result;
  GlobalModelState& global = result.state;
  global.params = model::init_params(model_cfg, init_rng);
  result.history.reserve(static_cast<std::size_t>(cfg.rounds));

  for (std::uint32_t round = 0;
       round < static_cast<std::uint32_t>(cfg.rounds); ++round) {
    std::vector<RoundUpdate> updates;
    updates.reserve(clients.size());
    for (ClientState& client : clients) {
      // Every update crosses the wire format, so the codec is exercised on
      // every run.
      const RoundUpdate sent =
          local_update(client, global.params, cfg, model_cfg, round);
      RoundUpdate received = decode_update(encode_update(sent));
      if (received.round != round) {
        throw ProtocolError("run_federated: update for round " +
                            std::to_string(received.round) + " during round " +
                            std::to_string(round));
      }
      updates.push_back(std::move(received));
    }
    global.params = aggregate(std::move(updates));
    global.round = round + 1;

    metrics::EvalReport report =
        evaluate(global.params, model_cfg, eval_sets, static_cast<int>(round));
    if (report.global_auc.has_value() &&
        (!global.best_auc.has_value() ||
         *report.global_auc > *global.best_auc)) {
      global.best_auc = report.global_auc;
      global.best_params = global.params;
      global.best_round = round;
    }
    result.history.push_back(std::move(report));
  }
  if (!global.best_auc.has_value()) {
    global.best_params = global.params;
    global.best_round = global.round == 0 ? 0 : global.round - 1;
  }
  return result;
}

RunResult run_centralized(const FedConfig& cfg,
                          const model::DenseNetConfig& model_cfg,
                          std::vector<model::LabeledExample> pooled,
                          const std::vector<EvalSet>& eval_sets) {
  if (pooled.empty()) {
    throw EmptyInputError("run_centralized: empty dataset");
  }
  std::vector<ClientState> single(1);
  single[0].client_id = 0;
  single[0].dataset = std::move(pooled);
  return run_federated(cfg, model_cfg, single, eval_sets);
}

}  // namespace fedsim::fed
