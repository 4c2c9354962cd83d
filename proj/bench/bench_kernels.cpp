#include <benchmark/benchmark.h>

#include "palign/fixtures.hpp"
#include "palign/framework.hpp"
#include "palign/rigidity.hpp"
#include "palign/spectral.hpp"
#include "palign/stress.hpp"

using namespace palign;

namespace {

Exec exec_of(const benchmark::State& s) { return s.range(1) ? Exec::parallel : Exec::serial; }

GeneratedFramework grid(int resolution, int tiles) {
  GridSpec spec;
  spec.resolution = resolution;
  spec.tiles = tiles;
  spec.overlap = 0.5;
  spec.seed = 1;
  return generate_grid_framework(spec);
}

void BM_AssembleStress(benchmark::State& state) {
  const auto g = grid(static_cast<int>(state.range(0)), static_cast<int>(state.range(0)) / 4);
  const auto lap = build_graph_laplacian(g.fw);
  const auto bd = build_patch_matrices(g.fw);
  Eigen::MatrixXd LpinvBt, C;
  for (auto _ : state) {
    kernels::assemble_stress(g.fw, lap.laplacian_pinv, bd, LpinvBt, C, exec_of(state));
    benchmark::DoNotOptimize(C.data());
  }
  state.counters["m"] = g.fw.m;
}
BENCHMARK(BM_AssembleStress)->ArgsProduct({{12, 20, 28}, {0, 1}})->Unit(benchmark::kMillisecond);

void BM_PairwiseOverlapRanks(benchmark::State& state) {
  const auto g = grid(static_cast<int>(state.range(0)), static_cast<int>(state.range(0)) / 4);
  for (auto _ : state) benchmark::DoNotOptimize(pairwise_overlap_ranks(g.fw, exec_of(state)));
}
BENCHMARK(BM_PairwiseOverlapRanks)->ArgsProduct({{12, 20}, {0, 1}})->Unit(benchmark::kMillisecond);

void BM_PartitionCheck(benchmark::State& state) {
  // 4x4 tiles give m = 16, i.e. 2^15 - 1 bipartitions.
  const auto g = grid(16, static_cast<int>(state.range(0)));
  const auto sys = build_patch_stress(g.fw);
  for (auto _ : state) benchmark::DoNotOptimize(partition_necessary_check(sys, g.truth, 16, exec_of(state)));
}
BENCHMARK(BM_PartitionCheck)->ArgsProduct({{3, 4}, {0, 1}})->Unit(benchmark::kMillisecond);

void BM_NoiseSweep(benchmark::State& state) {
  const auto g = named_fixture("grid", 1);
  SweepConfig cfg;
  cfg.eps = {0.0, 0.05, 0.1, 0.15, 0.2};
  cfg.trials = static_cast<int>(state.range(0));
  cfg.exec = exec_of(state);
  for (auto _ : state) benchmark::DoNotOptimize(noise_sweep_experiment(g.fw, g.truth, cfg));
}
BENCHMARK(BM_NoiseSweep)->ArgsProduct({{2}, {0, 1}})->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
