#include <benchmark/benchmark.h>

#include <numeric>

#include "tatc/config.hpp"
#include "tatc/objectives.hpp"
#include "tatc/spectral.hpp"
#include "tatc/trainer.hpp"

namespace {

using namespace tatc;

// phi over every U-Maze cell, as in one representation update.
void BM_PhiForwardAll(benchmark::State& state) {
  const GridSpec spec = builtin_maze("u-maze");
  Rng rng(1);
  const nn::Mlp phi({spec.onehot_dim(), 128, {{nn::HeadKind::kLinear, 2}}}, rng);
  for (auto _ : state) benchmark::DoNotOptimize(objectives::embed_all(phi));
}
BENCHMARK(BM_PhiForwardAll);

objectives::ReprBatch umaze_batch(const GridSpec& spec, Rng& rng) {
  objectives::ReprBatch b;
  const int n = spec.onehot_dim();
  for (int i = 0; i < 1100; ++i) {
    b.positives.push_back({uniform_index(n, rng), uniform_index(n, rng)});
    b.negatives.push_back({uniform_index(n, rng), uniform_index(n, rng)});
  }
  for (int p = 0; p < 60; ++p) {
    auto& path = b.skill_paths.emplace_back();
    for (int k = 0; k <= 30; ++k) path.push_back(uniform_index(n, rng));
  }
  return b;
}

void BM_TatcLossAndGrad(benchmark::State& state) {
  const GridSpec spec = builtin_maze("u-maze");
  Rng rng(2);
  const nn::Mlp phi({spec.onehot_dim(), 128, {{nn::HeadKind::kLinear, 2}}}, rng);
  const auto batch = umaze_batch(spec, rng);
  for (auto _ : state) benchmark::DoNotOptimize(objectives::tatc_loss(phi, batch));
}
BENCHMARK(BM_TatcLossAndGrad);

void BM_LapLossAndGrad(benchmark::State& state) {
  const GridSpec spec = builtin_maze("u-maze");
  Rng rng(3);
  const nn::Mlp phi({spec.onehot_dim(), 128, {{nn::HeadKind::kLinear, 2}}}, rng);
  const auto batch = umaze_batch(spec, rng);
  for (auto _ : state) benchmark::DoNotOptimize(objectives::lap_loss(phi, batch));
}
BENCHMARK(BM_LapLossAndGrad);

void BM_Eigensolve(benchmark::State& state) {
  const GridSpec spec = builtin_maze(state.range(0) == 0 ? "4-rooms" : "u-maze");
  const auto graph = spectral::build_graph(spec);
  for (auto _ : state) benchmark::DoNotOptimize(spectral::eig(graph, 3));
  state.SetLabel(std::to_string(spec.onehot_dim()) + " cells");
}
BENCHMARK(BM_Eigensolve)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_TrainingIteration(benchmark::State& state) {
  Trainer t(default_config("u-maze"));
  for (auto _ : state) benchmark::DoNotOptimize(t.run_iteration());
}
BENCHMARK(BM_TrainingIteration)->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();
