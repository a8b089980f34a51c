#include <benchmark/benchmark.h>

#include <vector>

#include "fedsim/federation.hpp"
#include "fedsim/metrics.hpp"
#include "fedsim/model.hpp"
#include "fedsim/numkit.hpp"

namespace fd = fedsim::fed;
namespace md = fedsim::model;
namespace mt = fedsim::metrics;
namespace nk = fedsim::numkit;
using fedsim::ParamVector;

namespace {

constexpr std::uint64_t kSeed = 0xBE7Cull;

std::vector<md::LabeledExample> make_batch(std::size_t n, int dim) {
  nk::RngStream rng(kSeed, {nk::StreamPurpose::kTest, 0, 0});
  std::vector<md::LabeledExample> out(n);
  for (auto& ex : out) {
    ex.features = nk::draw_gaussian(rng, static_cast<std::size_t>(dim), 0.0, 1.0);
    ex.label = static_cast<int>(rng.next_below(2));
  }
  return out;
}

void BM_LossAndGrad(benchmark::State& state) {
  const md::DenseNetConfig cfg{16, static_cast<int>(state.range(0)), 8, 2};
  nk::RngStream init(kSeed, {nk::StreamPurpose::kModelInit, 0, 0});
  const ParamVector params = md::init_params(cfg, init);
  const auto batch = make_batch(16, 16);
  for (auto _ : state) {
    benchmark::DoNotOptimize(md::loss_and_grad(params, cfg, batch));
  }
  state.SetItemsProcessed(state.iterations() * 16);
}
BENCHMARK(BM_LossAndGrad)->Arg(1)->Arg(3)->Arg(6);

void BM_Aggregate(benchmark::State& state) {
  nk::RngStream rng(kSeed, {nk::StreamPurpose::kTest, 1, 0});
  std::vector<fd::RoundUpdate> updates;
  for (std::uint32_t c = 0; c < 7; ++c) {
    updates.push_back(fd::RoundUpdate{
        c, 0, 64 + c, nk::draw_gaussian(rng, static_cast<std::size_t>(state.range(0)),
                                        0.0, 1.0)});
  }
  for (auto _ : state) {
    auto copy = updates;
    benchmark::DoNotOptimize(fd::aggregate(std::move(copy)));
  }
}
BENCHMARK(BM_Aggregate)->Arg(1024)->Arg(65536);

void BM_CodecRoundTrip(benchmark::State& state) {
  nk::RngStream rng(kSeed, {nk::StreamPurpose::kTest, 2, 0});
  fd::RoundUpdate u;
  u.client_id = 3;
  u.round = 11;
  u.n_samples = 128;
  u.params = nk::draw_gaussian(rng, static_cast<std::size_t>(state.range(0)),
                               0.0, 1.0);
  for (auto _ : state) {
    benchmark::DoNotOptimize(fd::decode_update(fd::encode_update(u)));
  }
  state.SetBytesProcessed(state.iterations() *
                          static_cast<std::int64_t>(29 + 8 * u.params.size()));
}
BENCHMARK(BM_CodecRoundTrip)->Arg(1024)->Arg(65536);

void BM_RankAuc(benchmark::State& state) {
  nk::RngStream rng(kSeed, {nk::StreamPurpose::kTest, 3, 0});
  std::vector<mt::ScoredExample> xs(static_cast<std::size_t>(state.range(0)));
  for (auto& e : xs) {
    e.true_label = static_cast<int>(rng.next_below(2));
    e.score = rng.next_unit();
    e.predicted = e.score > 0.5 ? 1 : 0;
  }
  xs[0].true_label = 1;
  xs[1].true_label = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(mt::auc(xs));
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_RankAuc)->Arg(256)->Arg(4096)->Arg(65536);

void BM_LocalUpdateRound(benchmark::State& state) {
  const md::DenseNetConfig cfg{8, 2, 6, 2};
  nk::RngStream init(kSeed, {nk::StreamPurpose::kModelInit, 0, 0});
  const ParamVector w0 = md::init_params(cfg, init);
  fd::FedConfig fed_cfg;
  fed_cfg.seed = kSeed;
  fed_cfg.batch_size = 16;
  fd::ClientState client;
  client.client_id = 0;
  client.dataset = make_batch(static_cast<std::size_t>(state.range(0)), 8);
  std::uint32_t round = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        fd::local_update(client, w0, fed_cfg, cfg, round++));
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_LocalUpdateRound)->Arg(64)->Arg(512);

}  // namespace

BENCHMARK_MAIN();
