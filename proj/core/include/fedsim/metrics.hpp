#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "fedsim/error.hpp"

namespace fedsim::metrics {

/// One scored test example. `score` is the positive-class probability;
/// `predicted` is 1 iff score > 0.5 (argmax over (p0, p1) with the tie at
/// exactly 0.5 going to class 0).
struct ScoredExample {
  int center_id = 0;
  int true_label = 0;  // {0, 1}
  double score = 0.0;
  int predicted = 0;
};

/// Fraction of examples with predicted == true_label.
double accuracy(std::span<const ScoredExample> examples);

/// Mann-Whitney AUC via midranks, O(n log n):
///   (#{score_pos > score_neg} + 0.5 #{score_pos == score_neg}) / (P * N).
/// The numerator is accumulated exactly (doubled, in integers), so the result
/// equals the O(P*N) pair-enumeration value bit for bit.
/// Throws UndefinedMetricError when only one class is present.
double auc(std::span<const ScoredExample> examples);

/// auc() that reports the single-class case as nullopt instead of throwing.
std::optional<double> maybe_auc(std::span<const ScoredExample> examples);

/// Test-size-weighted mean of per-center accuracies:
/// sum(n_k * acc_k) / sum(n_k).
double global_weighted_acc(
    const std::vector<std::pair<std::int64_t, double>>& per_center);

/// AUC over the concatenation of all centers' labels and scores. This is not
/// the mean of per-center AUCs: ranking is judged across the whole pool.
double pooled_auc(std::span<const ScoredExample> examples);

std::optional<double> maybe_pooled_auc(std::span<const ScoredExample> examples);

struct MeanStd {
  double mean = 0.0;
  double std = 0.0;
};

/// Mean and sample standard deviation (n-1 divisor; a single value has
/// std 0) of cross-validation fold metrics.
MeanStd cv_summary(std::span<const double> values);

/// Per-center slice of an evaluation. Metrics are absent when they are
/// undefined on the slice (empty set, single-class AUC).
struct CenterEval {
  std::string name;
  std::int64_t n_test = 0;
  std::optional<double> acc;
  std::optional<double> auc;
};

struct EvalReport {
  std::vector<CenterEval> per_center;
  std::optional<double> global_acc;  // test-size-weighted mean of center ACCs
  std::optional<double> global_auc;  // AUC of the pooled scores
  int fold_id = 0;                   // fold index, or round index in histories
};

}  // namespace fedsim::metrics
