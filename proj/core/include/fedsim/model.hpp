#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "fedsim/numkit.hpp"

namespace fedsim::model {

/// Densely connected multilayer perceptron: hidden layer j consumes the
/// concatenation of the raw input and every previous layer's output
/// (input_dim + (j-1)*growth features) and emits `growth` features; the
/// classifier head consumes input_dim + num_layers*growth features.
///
/// Flat parameter layout, in order:
///   for each hidden layer j = 1..L:  W_j row-major [growth x in_j], b_j [growth]
///   head:                            W   row-major [classes x in_head], b [classes]
struct DenseNetConfig {
  int input_dim = 1;
  int num_layers = 0;  // L; 0 means a pure linear classifier
  int growth = 1;      // units emitted per hidden layer
  int num_classes = 2;
};

struct LabeledExample {
  std::vector<double> features;
  int label = 0;
};

/// Exact number of parameters implied by the connectivity rule.
std::size_t param_count(const DenseNetConfig& cfg);

/// He-style init: weights ~ N(0, sqrt(2/fan_in)), biases exactly 0.
ParamVector init_params(const DenseNetConfig& cfg, numkit::RngStream& rng);

/// Logits for one example. Throws DimensionError on shape mismatch.
std::vector<double> forward(const ParamVector& params,
                            const DenseNetConfig& cfg,
                            std::span<const double> features);

/// Max-shifted softmax; entries in [0,1], summing to 1.
std::vector<double> softmax_probs(std::span<const double> logits);

/// Argmax class index; ties broken toward the lowest index.
int predict(std::span<const double> logits);

/// -log softmax(logits)[label], computed via max-shifted log-sum-exp.
double softmax_cross_entropy(std::span<const double> logits, int label);

/// Quadratic pull toward an anchor parameter vector:
/// adds (mu/2) * ||w - anchor||^2 to the objective.
struct ProxTerm {
  double mu = 0.0;
  ParamVector anchor;
};

struct LossGrad {
  double loss = 0.0;
  ParamVector grad;
};

/// Mean softmax cross-entropy over the batch plus the optional proximal
/// term, together with the analytic gradient of that exact scalar.
/// With prox == nullptr or prox->mu == 0 the result is bit-identical to the
/// plain objective.
LossGrad loss_and_grad(const ParamVector& params, const DenseNetConfig& cfg,
                       std::span<const LabeledExample> batch,
                       const ProxTerm* prox = nullptr);

/// params - lr * grad.
ParamVector sgd_step(const ParamVector& params, const ParamVector& grad,
                     double lr);

struct AdamWParams {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.01;
};

struct AdamWState {
  ParamVector m;  // first moment
  ParamVector v;  // second moment
  long step_count = 0;
  AdamWParams hyper;

  static AdamWState fresh(std::size_t n, AdamWParams hp = {});
};

/// One AdamW step with bias correction and decoupled weight decay:
///   t <- t+1;  m <- b1 m + (1-b1) g;  v <- b2 v + (1-b2) g^2
///   w <- w - lr * m_hat / (sqrt(v_hat) + eps) - lr * weight_decay * w
void adamw_step(AdamWState& state, ParamVector& params, const ParamVector& grad,
                double lr);

/// 0.001 * 10^-(epoch / 30): tenfold decay every 30 epochs.
double lr_schedule(long epoch);

/// Epoch index shared by federated and centralized schedules.
inline long global_epoch(long round, long local_epochs, long local_epoch) {
  return round * local_epochs + local_epoch;
}

}  // namespace fedsim::model
