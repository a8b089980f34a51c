#include "fedsim/numkit.hpp"

#include <cmath>
#include <numbers>

namespace fedsim::numkit {

namespace {

constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

// SplitMix64 finalizer.
std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

}  // namespace

RngStream::RngStream(std::uint64_t master_seed, StreamId id) {
  std::uint64_t k = mix64(master_seed + kGolden);
  k = mix64(k ^ (static_cast<std::uint64_t>(id.purpose) + kGolden));
  k = mix64(k ^ ((static_cast<std::uint64_t>(id.client) << 32 |
                  static_cast<std::uint64_t>(id.round)) +
                 kGolden));
  state_ = k;
}

std::uint64_t RngStream::next_u64() {
  state_ += kGolden;
  return mix64(state_);
}

double RngStream::next_unit() {
  // (k + 0.5) / 2^52 for k in [0, 2^52): strictly inside (0, 1).
  return (static_cast<double>(next_u64() >> 12) + 0.5) * 0x1.0p-52;
}

double RngStream::next_gaussian() {
  if (has_cached_) {
    has_cached_ = false;
    return cached_gaussian_;
  }
  const double u1 = next_unit();
  const double u2 = next_unit();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double theta = 2.0 * std::numbers::pi * u2;
  cached_gaussian_ = r * std::sin(theta);
  has_cached_ = true;
  return r * std::cos(theta);
}

std::uint64_t RngStream::next_below(std::uint64_t bound) {
  if (bound == 0) {
    throw ValueError("next_below: bound must be >= 1");
  }
  // Lemire multiply-shift with rejection: unbiased and cheap.
  unsigned __int128 m =
      static_cast<unsigned __int128>(next_u64()) * bound;
  auto lo = static_cast<std::uint64_t>(m);
  if (lo < bound) {
    const std::uint64_t threshold = -bound % bound;
    while (lo < threshold) {
      m = static_cast<unsigned __int128>(next_u64()) * bound;
      lo = static_cast<std::uint64_t>(m);
    }
  }
  return static_cast<std::uint64_t>(m >> 64);
}

std::uint64_t derive_seed(std::uint64_t master_seed, std::uint64_t salt) {
  return mix64(master_seed + kGolden * (salt + 2));
}

double l2_norm_sq(const ParamVector& v) {
  double acc = 0.0;
  for (const double x : v) {
    acc += x * x;
  }
  return acc;
}

ParamVector weighted_mean(const std::vector<ParamVector>& vs,
                          const std::vector<double>& weights) {
  if (vs.empty()) {
    throw EmptyInputError("weighted_mean: no vectors to aggregate");
  }
  if (vs.size() != weights.size()) {
    throw DimensionError("weighted_mean: " + std::to_string(vs.size()) +
                         " vectors vs " + std::to_string(weights.size()) +
                         " weights");
  }
  const std::size_t n = vs.front().size();
  for (const ParamVector& v : vs) {
    if (v.size() != n) {
      throw DimensionError("weighted_mean: vector length mismatch");
    }
  }
  double total_weight = 0.0;
  for (const double w : weights) {
    if (!(w > 0.0)) {
      throw ValueError("weighted_mean: weights must be strictly positive");
    }
    total_weight += w;
  }
  ParamVector out(n, 0.0);
  for (std::size_t k = 0; k < vs.size(); ++k) {
    const double w = weights[k];
    const ParamVector& v = vs[k];
    for (std::size_t i = 0; i < n; ++i) {
      out[i] += w * v[i];
    }
  }
  for (double& x : out) {
    x /= total_weight;
  }
  return out;
}

ParamVector finite_diff_grad(const std::function<double(const ParamVector&)>& f,
                             const ParamVector& w, double h) {
  if (!(h > 0.0)) {
    throw ValueError("finite_diff_grad: step must be positive");
  }
  ParamVector grad(w.size());
  ParamVector probe = w;
  for (std::size_t i = 0; i < w.size(); ++i) {
    probe[i] = w[i] + h;
    const double fp = f(probe);
    probe[i] = w[i] - h;
    const double fm = f(probe);
    probe[i] = w[i];
    if (!std::isfinite(fp) || !std::isfinite(fm)) {
      throw ValueError("finite_diff_grad: objective returned a non-finite value");
    }
    grad[i] = (fp - fm) / (2.0 * h);
  }
  return grad;
}

ParamVector draw_gaussian(RngStream& rng, std::size_t n, double mean,
                          double stddev) {
  if (n == 0) {
    throw ValueError("draw_gaussian: n must be >= 1");
  }
  if (stddev < 0.0) {
    throw ValueError("draw_gaussian: stddev must be >= 0");
  }
  ParamVector out(n);
  for (std::size_t i = 0; i < n; ++i) {
    out[i] = mean + stddev * rng.next_gaussian();
  }
  return out;
}

bool all_finite(const ParamVector& v) {
  for (const double x : v) {
    if (!std::isfinite(x)) {
      return false;
    }
  }
  return true;
}

}  // namespace fedsim::numkit
