#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "fedsim/error.hpp"

namespace fedsim {

/// Flat model parameters. Entries are 64-bit reals and are expected to stay
/// finite; combining operations require equal lengths.
using ParamVector = std::vector<double>;

namespace numkit {

/// Purpose tag of an RNG stream. Values are frozen: they feed the stream key
/// and changing them changes every downstream draw.
enum class StreamPurpose : std::uint32_t {
  kModelInit = 1,
  kShuffle = 2,
  kCenterOffset = 3,
  kSynthData = 4,
  kFoldSplit = 5,
  kValSplit = 6,
  kTest = 7,
};

struct StreamId {
  StreamPurpose purpose = StreamPurpose::kTest;
  std::uint32_t client = 0;
  std::uint32_t round = 0;
};

/// Counter-based pseudo-random stream keyed by (master_seed, purpose, client,
/// round). Streams with distinct keys are statistically independent, and a
/// stream's sequence never depends on when or where other streams are
/// consumed. Same key, same sequence, always.
class RngStream {
 public:
  RngStream(std::uint64_t master_seed, StreamId id);

  std::uint64_t next_u64();

  /// Uniform draw strictly inside (0, 1).
  double next_unit();

  /// Standard normal draw (Box-Muller, second value cached).
  double next_gaussian();

  /// Uniform integer in [0, bound). bound must be >= 1.
  std::uint64_t next_below(std::uint64_t bound);

 private:
  std::uint64_t state_;
  double cached_gaussian_ = 0.0;
  bool has_cached_ = false;
};

/// Derives a decorrelated child seed (used to give each CV fold its own
/// stream universe).
std::uint64_t derive_seed(std::uint64_t master_seed, std::uint64_t salt);

/// Deterministic Fisher-Yates shuffle driven by the given stream.
template <typename T>
void shuffle(std::vector<T>& values, RngStream& rng) {
  for (std::size_t i = values.size(); i > 1; --i) {
    std::swap(values[i - 1], values[rng.next_below(i)]);
  }
}

/// Sum of squared entries, accumulated left to right.
double l2_norm_sq(const ParamVector& v);

/// Component-wise (sum_k w_k * v_k) / (sum_k w_k), accumulated in the given
/// order. All vectors must share one length and weights must be positive.
ParamVector weighted_mean(const std::vector<ParamVector>& vs,
                          const std::vector<double>& weights);

/// Central-difference gradient oracle: (f(w + h e_i) - f(w - h e_i)) / 2h.
ParamVector finite_diff_grad(const std::function<double(const ParamVector&)>& f,
                             const ParamVector& w, double h = 1e-5);

/// n Gaussian draws with the given mean and stddev; stddev 0 yields n exact
/// copies of mean.
ParamVector draw_gaussian(RngStream& rng, std::size_t n, double mean,
                          double stddev);

bool all_finite(const ParamVector& v);

}  // namespace numkit
}  // namespace fedsim
