#include <benchmark/benchmark.h>

#include "driftlearn/model.hpp"
#include "driftlearn/rng.hpp"

using namespace driftlearn;

namespace {

RealMatrix random_batch(std::size_t n, std::size_t d, std::uint64_t seed) {
  Rng rng(seed);
  RealMatrix m(n, d);
  for (auto& v : m.data) v = rng.uniform(-2.0, 2.0);
  return m;
}

}  // namespace

static void BM_ForwardBatch(benchmark::State& state) {
  const MlpClassifier m = make_mlp(2, 64, 64, 2, 1);
  const RealMatrix xs = random_batch(static_cast<std::size_t>(state.range(0)), 2, 2);
  for (auto _ : state) {
    benchmark::DoNotOptimize(forward_batch(m, xs));
  }
}
BENCHMARK(BM_ForwardBatch)->Arg(64)->Arg(512);

static void BM_LossAndGrad(benchmark::State& state) {
  const MlpClassifier m = make_mlp(2, 64, 64, 2, 1);
  const auto n = static_cast<std::size_t>(state.range(0));
  const RealMatrix xs = random_batch(n, 2, 3);
  Rng rng(4);
  std::vector<int> ys(n);
  for (auto& y : ys) y = static_cast<int>(rng.uniform_index(2));
  for (auto _ : state) {
    benchmark::DoNotOptimize(ce_loss_and_grad(m, xs, ys));
  }
}
BENCHMARK(BM_LossAndGrad)->Arg(64)->Arg(512);

static void BM_FlattenRoundTrip(benchmark::State& state) {
  MlpClassifier m = make_mlp(64, 64, 64, 10, 1);
  for (auto _ : state) {
    std::vector<double> flat = flatten(m);
    unflatten(m, flat);
    benchmark::DoNotOptimize(m);
  }
}
BENCHMARK(BM_FlattenRoundTrip);
