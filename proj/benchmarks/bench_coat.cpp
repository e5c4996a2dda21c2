#include <benchmark/benchmark.h>

#include <coat/eval_sim.hpp>
#include <coat/partition.hpp>
#include <coat/stats.hpp>

namespace {

const coat::SimulatedData& tree_data() {
  static const auto d = coat::generate_scenario(coat::Scenario::parse("tree1"), 1000, 42);
  return d;
}

void BM_FitCoat(benchmark::State& state) {
  const auto& sim = tree_data();
  coat::FitConfig cfg;
  cfg.engine = static_cast<coat::EngineKind>(state.range(0));
  for (auto _ : state) {
    auto model = coat::fit_coat(sim.data, cfg);
    benchmark::DoNotOptimize(model.nodes.size());
  }
  state.SetLabel(coat::to_string(cfg.engine));
}
BENCHMARK(BM_FitCoat)->DenseRange(0, 3)->Unit(benchmark::kMillisecond);

void BM_FindBestSplit(benchmark::State& state) {
  const auto sim = coat::generate_scenario(coat::Scenario::parse("stump3"), state.range(0), 7);
  coat::FitConfig cfg;
  for (auto _ : state) {
    auto split = coat::find_best_split(sim.data.y, sim.data.covariates[0], 0, cfg);
    benchmark::DoNotOptimize(split);
  }
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_FindBestSplit)->RangeMultiplier(4)->Range(64, 16384)->Complexity();

void BM_LinearStatistic(benchmark::State& state) {
  const auto sim = coat::generate_scenario(coat::Scenario::parse("null"), state.range(0), 3);
  const auto h = coat::engine_transform(coat::EngineKind::CTreeTrafo, sim.data.y);
  const auto g = coat::g_transform(sim.data.covariates[0]);
  const std::vector<double> w(sim.data.n(), 1.0);
  for (auto _ : state) {
    auto ls = coat::linear_statistic(g, h, w);
    benchmark::DoNotOptimize(coat::c_quad(ls).p_raw);
  }
}
BENCHMARK(BM_LinearStatistic)->RangeMultiplier(4)->Range(64, 16384);

}  // namespace

BENCHMARK_MAIN();
