#include <benchmark/benchmark.h>

#include <random>

#include "segphrase/eval.hpp"
#include "segphrase/gmm.hpp"
#include "segphrase/imaging.hpp"
#include "segphrase/latent.hpp"
#include "segphrase/mrf.hpp"
#include "segphrase/relations.hpp"

using namespace segphrase;

namespace {

MrfProblem grid_problem(int side, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<std::array<double, 2>> unary;
  std::vector<PairwiseTerm> edges;
  for (int i = 0; i < side * side; ++i) unary.push_back({u(rng), u(rng)});
  for (int y = 0; y < side; ++y)
    for (int x = 0; x < side; ++x) {
      const int i = y * side + x;
      if (x + 1 < side) edges.push_back({i, i + 1, 0.3 * u(rng)});
      if (y + 1 < side) edges.push_back({i, i + side, 0.3 * u(rng)});
    }
  return MrfProblem(std::move(unary), std::move(edges));
}

void BM_MinCutGrid(benchmark::State& state) {
  const MrfProblem p = grid_problem(static_cast<int>(state.range(0)), 7);
  for (auto _ : state) benchmark::DoNotOptimize(min_cut_infer(p));
  state.SetComplexityN(state.range(0) * state.range(0));
}
BENCHMARK(BM_MinCutGrid)->RangeMultiplier(2)->Range(8, 128)->Complexity();

void BM_Superpixels(benchmark::State& state) {
  SceneConfig sc;
  sc.size = static_cast<int>(state.range(0));
  const SyntheticScene scene = make_scene(sc);
  for (auto _ : state) benchmark::DoNotOptimize(compute_superpixels(scene.image, 200));
}
BENCHMARK(BM_Superpixels)->Arg(64)->Arg(128)->Arg(256);

void BM_GmmFit(benchmark::State& state) {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> n(0.0, 1.0);
  Samples samples(static_cast<std::size_t>(state.range(0)), std::vector<double>(24));
  for (auto& s : samples)
    for (auto& v : s) v = n(rng) + (rng() % 3);
  for (auto _ : state) benchmark::DoNotOptimize(fit(samples, 5, 11));
}
BENCHMARK(BM_GmmFit)->Arg(200)->Arg(1000);

void BM_EmLearn(benchmark::State& state) {
  std::vector<TrainingInstance> insts;
  for (std::uint64_t s = 0; s < 5; ++s) {
    SceneConfig sc;
    sc.seed = s;
    const SyntheticScene scene = make_scene(sc);
    const SuperpixelMap sp = compute_superpixels(scene.image, 200);
    insts.push_back(make_training_instance(extract_features(scene.image, sp), sp, scene.box));
  }
  for (auto _ : state) benchmark::DoNotOptimize(em_learn(insts, LatentConfig{}));
}
BENCHMARK(BM_EmLearn);

void BM_EntailmentGraph(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  ScoreMatrix s(n, std::vector<double>(n, 0.0));
  for (int x = 0; x < n; ++x)
    for (int y = 0; y < n; ++y)
      if (x != y) s[x][y] = u(rng);
  const auto mode = state.range(1) ? SolverMode::kExact : SolverMode::kGreedy;
  for (auto _ : state) benchmark::DoNotOptimize(solve_entailment_graph(s, 0.1, mode));
}
BENCHMARK(BM_EntailmentGraph)->Args({4, 1})->Args({5, 1})->Args({6, 1})->Args({6, 0})->Args({20, 0});

}  // namespace

BENCHMARK_MAIN();
