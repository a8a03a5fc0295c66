#include <benchmark/benchmark.h>

#include "driftlearn/linalg.hpp"
#include "driftlearn/rng.hpp"

using namespace driftlearn;

namespace {

RealMatrix random_matrix(std::size_t rows, std::size_t cols, std::uint64_t seed) {
  Rng rng(seed);
  RealMatrix m(rows, cols);
  for (auto& v : m.data) v = rng.uniform(-1.0, 1.0);
  return m;
}

}  // namespace

static void BM_SvdActivationSample(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const RealMatrix a = random_matrix(n, 64, 1);
  for (auto _ : state) {
    benchmark::DoNotOptimize(svd(a));
  }
}
BENCHMARK(BM_SvdActivationSample)->Arg(64)->Arg(256)->Arg(512);

static void BM_EnergyBasis(benchmark::State& state) {
  const RealMatrix a = random_matrix(static_cast<std::size_t>(state.range(0)), 64, 2);
  for (auto _ : state) {
    benchmark::DoNotOptimize(energy_basis(transpose(a), 0.9));
  }
}
BENCHMARK(BM_EnergyBasis)->Arg(128)->Arg(512);

static void BM_Project(benchmark::State& state) {
  const RealMatrix basis = energy_basis(random_matrix(64, 64, 3), 0.9);
  Rng rng(4);
  std::vector<double> v(64);
  for (auto& x : v) x = rng.uniform(-1.0, 1.0);
  for (auto _ : state) {
    benchmark::DoNotOptimize(project(v, basis));
  }
}
BENCHMARK(BM_Project);
