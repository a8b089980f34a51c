#include "fedsim/model.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace fedsim::model {

namespace {

void check_config(const DenseNetConfig& cfg) {
  if (cfg.input_dim < 1) {
    throw ValueError("model: input_dim must be >= 1");
  }
  if (cfg.num_layers < 0) {
    throw ValueError("model: num_layers must be >= 0");
  }
  if (cfg.num_layers > 0 && cfg.growth < 1) {
    throw ValueError("model: growth must be >= 1");
  }
  if (cfg.num_classes < 2) {
    throw ValueError("model: num_classes must be >= 2");
  }
}

int layer_input_dim(const DenseNetConfig& cfg, int layer) {
  return cfg.input_dim + (layer - 1) * cfg.growth;
}

int head_input_dim(const DenseNetConfig& cfg) {
  return cfg.input_dim + cfg.num_layers * cfg.growth;
}

}  // namespace

std::size_t param_count(const DenseNetConfig& cfg) {
  check_config(cfg);
  std::size_t n = 0;
  for (int j = 1; j <= cfg.num_layers; ++j) {
    n += static_cast<std::size_t>(layer_input_dim(cfg, j)) * cfg.growth +
         cfg.growth;
  }
  n += static_cast<std::size_t>(head_input_dim(cfg)) * cfg.num_classes +
       cfg.num_classes;
  return n;
}

ParamVector init_params(const DenseNetConfig& cfg, numkit::RngStream& rng) {
  check_config(cfg);
  ParamVector params;
  params.reserve(param_count(cfg));
  auto emit_block = [&](int fan_in, int units) {
    const double stddev = std::sqrt(2.0 / fan_in);
    for (int i = 0; i < units * fan_in; ++i) {
      params.push_back(stddev * rng.next_gaussian());
    }
    for (int i = 0; i < units; ++i) {
      params.push_back(0.0);
    }
  };
  for (int j = 1; j <= cfg.num_layers; ++j) {
    emit_block(layer_input_dim(cfg, j), cfg.growth);
  }
  emit_block(head_input_dim(cfg), cfg.num_classes);
  return params;
}

std::vector<double> forward(const ParamVector& params,
                            const DenseNetConfig& cfg,
                            std::span<const double> features) {
  check_config(cfg);
  if (params.size() != param_count(cfg)) {
    throw DimensionError("forward: parameter vector length " +
                         std::to_string(params.size()) + ", expected " +
                         std::to_string(param_count(cfg)));
  }
  if (features.size() != static_cast<std::size_t>(cfg.input_dim)) {
    throw DimensionError("forward: feature length " +
                         std::to_string(features.size()) + ", expected " +
                         std::to_string(cfg.input_dim));
  }
  std::vector<double> acts(head_input_dim(cfg));
  std::copy(features.begin(), features.end(), acts.begin());
  std::size_t offset = 0;
  for (int j = 1; j <= cfg.num_layers; ++j) {
    const int in_j = layer_input_dim(cfg, j);
    const std::size_t bias_at = offset + static_cast<std::size_t>(cfg.growth) * in_j;
    for (int u = 0; u < cfg.growth; ++u) {
      double z = params[bias_at + u];
      const std::size_t row = offset + static_cast<std::size_t>(u) * in_j;
      for (int i = 0; i < in_j; ++i) {
        z += params[row + i] * acts[i];
      }
      acts[in_j + u] = z > 0.0 ? z : 0.0;
    }
    offset = bias_at + cfg.growth;
  }
  const int in_head = head_input_dim(cfg);
  const std::size_t bias_at = offset + static_cast<std::size_t>(cfg.num_classes) * in_head;
  std::vector<double> logits(cfg.num_classes);
  for (int c = 0; c < cfg.num_classes; ++c) {
    double z = params[bias_at + c];
    const std::size_t row = offset + static_cast<std::size_t>(c) * in_head;
    for (int i = 0; i < in_head; ++i) {
      z += params[row + i] * acts[i];
    }
    logits[c] = z;
  }
  return logits;
}

std::vector<double> softmax_probs(std::span<const double> logits) {
  if (logits.empty()) {
    throw EmptyInputError("softmax_probs: no logits");
  }
  const double shift = *std::max_element(logits.begin(), logits.end());
  std::vector<double> probs(logits.size());
  double denom = 0.0;
  for (std::size_t c = 0; c < logits.size(); ++c) {
    probs[c] = std::exp(logits[c] - shift);
    denom += probs[c];
  }
  for (double& p : probs) {
    p /= denom;
  }
  return probs;
}

int predict(std::span<const double> logits) {
  if (logits.empty()) {
    throw EmptyInputError("predict: no logits");
  }
  int best = 0;
  for (std::size_t c = 1; c < logits.size(); ++c) {
    if (logits[c] > logits[best]) {
      best = static_cast<int>(c);
    }
  }
  return best;
}

double softmax_cross_entropy(std::span<const double> logits, int label) {
  if (logits.empty()) {
    throw EmptyInputError("softmax_cross_entropy: no logits");
  }
  if (label < 0 || static_cast<std::size_t>(label) >= logits.size()) {
    throw ValueError("softmax_cross_entropy: label " + std::to_string(label) +
                     " out of range");
  }
  const double shift = *std::max_element(logits.begin(), logits.end());
  double denom = 0.0;
  for (const double z : logits) {
    denom += std::exp(z - shift);
  }
  return shift + std::log(denom) - logits[label];
}

LossGrad loss_and_grad(const ParamVector& params, const DenseNetConfig& cfg,
                       std::span<const LabeledExample> batch,
                       const ProxTerm* prox) {
  check_config(cfg);
  if (batch.empty()) {
    throw EmptyInputError("loss_and_grad: empty batch");
  }
  if (params.size() != param_count(cfg)) {
    throw DimensionError("loss_and_grad: parameter vector length mismatch");
  }
  if (prox != nullptr && prox->anchor.size() != params.size()) {
    throw DimensionError("loss_and_grad: proximal anchor length mismatch");
  }

  const int in_head = head_input_dim(cfg);
  const double inv_batch = 1.0 / static_cast<double>(batch.size());

  LossGrad out;
  out.grad.assign(params.size(), 0.0);
  std::vector<double> acts(in_head);
  std::vector<double> d_acts(in_head);
  std::vector<double> logits(cfg.num_classes);

  double loss_sum = 0.0;
  for (const LabeledExample& ex : batch) {
    if (ex.features.size() != static_cast<std::size_t>(cfg.input_dim)) {
      throw DimensionError("loss_and_grad: feature length mismatch");
    }
    if (ex.label < 0 || ex.label >= cfg.num_classes) {
      throw ValueError("loss_and_grad: label out of range");
    }

    // Forward, keeping all activations for the backward pass.
    std::copy(ex.features.begin(), ex.features.end(), acts.begin());
    std::size_t offset = 0;
    for (int j = 1; j <= cfg.num_layers; ++j) {
      const int in_j = layer_input_dim(cfg, j);
      const std::size_t bias_at =
          offset + static_cast<std::size_t>(cfg.growth) * in_j;
      for (int u = 0; u < cfg.growth; ++u) {
        double z = params[bias_at + u];
        const std::size_t row = offset + static_cast<std::size_t>(u) * in_j;
        for (int i = 0; i < in_j; ++i) {
          z += params[row + i] * acts[i];
        }
        acts[in_j + u] = z > 0.0 ? z : 0.0;
      }
      offset = bias_at + cfg.growth;
    }
    const std::size_t head_weights = offset;
    const std::size_t head_bias =
        head_weights + static_cast<std::size_t>(cfg.num_classes) * in_head;
    for (int c = 0; c < cfg.num_classes; ++c) {
      double z = params[head_bias + c];
      const std::size_t row =
          head_weights + static_cast<std::size_t>(c) * in_head;
      for (int i = 0; i < in_head; ++i) {
        z += params[row + i] * acts[i];
      }
      logits[c] = z;
    }
    loss_sum += softmax_cross_entropy(logits, ex.label);

    // Backward. d(mean loss)/d(logit c) = (softmax_c - [c == label]) / B.
    const std::vector<double> probs = softmax_probs(logits);
    std::fill(d_acts.begin(), d_acts.end(), 0.0);
    for (int c = 0; c < cfg.num_classes; ++c) {
      const double dz =
          (probs[c] - (c == ex.label ? 1.0 : 0.0)) * inv_batch;
      const std::size_t row =
          head_weights + static_cast<std::size_t>(c) * in_head;
      for (int i = 0; i < in_head; ++i) {
        out.grad[row + i] += dz * acts[i];
        d_acts[i] += params[row + i] * dz;
      }
      out.grad[head_bias + c] += dz;
    }
    for (int j = cfg.num_layers; j >= 1; --j) {
      const int in_j = layer_input_dim(cfg, j);
      const std::size_t block =
          offset - (static_cast<std::size_t>(cfg.growth) * in_j + cfg.growth);
      const std::size_t bias_at =
          block + static_cast<std::size_t>(cfg.growth) * in_j;
      for (int u = 0; u < cfg.growth; ++u) {
        const double dz = acts[in_j + u] > 0.0 ? d_acts[in_j + u] : 0.0;
        const std::size_t row = block + static_cast<std::size_t>(u) * in_j;
        for (int i = 0; i < in_j; ++i) {
          out.grad[row + i] += dz * acts[i];
          d_acts[i] += params[row + i] * dz;
        }
        out.grad[bias_at + u] += dz;
      }
      offset = block;
    }
  }
  out.loss = loss_sum * inv_batch;

  // Skipped entirely at mu == 0 so the plain path stays bit-identical.
  if (prox != nullptr && prox->mu != 0.0) {
    double sq = 0.0;
    for (std::size_t i = 0; i < params.size(); ++i) {
      const double d = params[i] - prox->anchor[i];
      sq += d * d;
      out.grad[i] += prox->mu * d;
    }
    out.loss += 0.5 * prox->mu * sq;
  }
  return out;
}

ParamVector sgd_step(const ParamVector& params, const ParamVector& grad,
                     double lr) {
  if (params.size() != grad.size()) {
    throw DimensionError("sgd_step: gradient length mismatch");
  }
  if (!(lr > 0.0)) {
    throw ValueError("sgd_step: learning rate must be positive");
  }
  ParamVector out(params.size());
  for (std::size_t i = 0; i < params.size(); ++i) {
    out[i] = params[i] - lr * grad[i];
  }
  return out;
}

AdamWState AdamWState::fresh(std::size_t n, AdamWParams hp) {
  AdamWState st;
  st.m.assign(n, 0.0);
  st.v.assign(n, 0.0);
  st.step_count = 0;
  st.hyper = hp;
  return st;
}

void adamw_step(AdamWState& state, ParamVector& params, const ParamVector& grad,
                double lr) {
  if (params.size() != grad.size() || state.m.size() != params.size() ||
      state.v.size() != params.size()) {
    throw DimensionError("adamw_step: length mismatch");
  }
  const AdamWParams& hp = state.hyper;
  state.step_count += 1;
  const double bc1 = 1.0 - std::pow(hp.beta1, static_cast<double>(state.step_count));
  const double bc2 = 1.0 - std::pow(hp.beta2, static_cast<double>(state.step_count));
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double g = grad[i];
    state.m[i] = hp.beta1 * state.m[i] + (1.0 - hp.beta1) * g;
    state.v[i] = hp.beta2 * state.v[i] + (1.0 - hp.beta2) * g * g;
    const double m_hat = state.m[i] / bc1;
    const double v_hat = state.v[i] / bc2;
    const double step = lr * m_hat / (std::sqrt(v_hat) + hp.eps);
    const double decay = lr * hp.weight_decay * params[i];
    params[i] = params[i] - step - decay;
  }
}

double lr_schedule(long epoch) {
  if (epoch < 0) {
    throw ValueError("lr_schedule: epoch must be >= 0");
  }
  return std::pow(10.0, -3.0 - static_cast<double>(epoch / 30));
}

}  // namespace fedsim::model
