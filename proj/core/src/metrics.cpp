#include "fedsim/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace fedsim::metrics {

double accuracy(std::span<const ScoredExample> examples) {
  if (examples.empty()) {
    throw EmptyInputError("accuracy: no examples");
  }
  std::int64_t correct = 0;
  for (const ScoredExample& e : examples) {
    if (e.predicted == e.true_label) {
      ++correct;
    }
  }
  return static_cast<double>(correct) / static_cast<double>(examples.size());
}

double auc(std::span<const ScoredExample> examples) {
  std::int64_t pos = 0;
  std::int64_t neg = 0;
  for (const ScoredExample& e : examples) {
    if (!std::isfinite(e.score)) {
      throw ValueError("auc: non-finite score");
    }
    (e.true_label == 1 ? pos : neg) += 1;
  }
  if (pos == 0 || neg == 0) {
    throw UndefinedMetricError(
        "auc: undefined without both a positive and a negative example");
  }

  std::vector<std::size_t> order(examples.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return examples[a].score < examples[b].score;
  });

  // U = sum of positive midranks - P(P+1)/2. Doubled midranks are integers
  // (a tie group over 1-based ranks [a, b] has 2*midrank = a + b), so the
  // doubled numerator is exact.
  std::int64_t two_rank_sum_pos = 0;
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    while (j < order.size() &&
           examples[order[j]].score == examples[order[i]].score) {
      ++j;
    }
    const std::int64_t two_midrank =
        static_cast<std::int64_t>(i + 1) + static_cast<std::int64_t>(j);
    for (std::size_t k = i; k < j; ++k) {
      if (examples[order[k]].true_label == 1) {
        two_rank_sum_pos += two_midrank;
      }
    }
    i = j;
  }
  const std::int64_t two_u = two_rank_sum_pos - pos * (pos + 1);
  return static_cast<double>(two_u) / static_cast<double>(2 * pos * neg);
}

std::optional<double> maybe_auc(std::span<const ScoredExample> examples) {
  std::int64_t pos = 0;
  std::int64_t neg = 0;
  for (const ScoredExample& e : examples) {
    (e.true_label == 1 ? pos : neg) += 1;
  }
  if (pos == 0 || neg == 0) {
    return std::nullopt;
  }
  return auc(examples);
}

double global_weighted_acc(
    const std::vector<std::pair<std::int64_t, double>>& per_center) {
  if (per_center.empty()) {
    throw EmptyInputError("global_weighted_acc: no centers");
  }
  double weighted = 0.0;
  double total = 0.0;
  for (const auto& [n, acc] : per_center) {
    if (n <= 0) {
      throw ValueError("global_weighted_acc: center test size must be > 0");
    }
    weighted += static_cast<double>(n) * acc;
    total += static_cast<double>(n);
  }
  return weighted / total;
}

double pooled_auc(std::span<const ScoredExample> examples) {
  return auc(examples);
}

std::optional<double> maybe_pooled_auc(std::span<const ScoredExample> examples) {
  return maybe_auc(examples);
}

MeanStd cv_summary(std::span<const double> values) {
  if (values.empty()) {
    throw EmptyInputError("cv_summary: no values");
  }
  double sum = 0.0;
  for (const double v : values) {
    sum += v;
  }
  MeanStd out;
  out.mean = sum / static_cast<double>(values.size());
  if (values.size() == 1) {
    out.std = 0.0;
    return out;
  }
  double sq = 0.0;
  for (const double v : values) {
    const double d = v - out.mean;
    sq += d * d;
  }
  out.std = std::sqrt(sq / static_cast<double>(values.size() - 1));
  return out;
}

}  // namespace fedsim::metrics
