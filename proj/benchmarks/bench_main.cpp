#include <numeric>

#include <benchmark/benchmark.h>

#include "trf/forest.hpp"
#include "trf/lasso.hpp"
#include "trf/simlab.hpp"
#include "trf/targeting.hpp"
#include "trf/theory.hpp"

using namespace trf;

namespace {

data::Dataset bench_data(std::size_t n, std::size_t p) {
  return sim::sample(sim::dgp_from_label("linear", p, 0.3, std::min<std::size_t>(5, p)), n, 42);
}

void BM_GrowTree(benchmark::State& state) {
  const auto ds = bench_data(static_cast<std::size_t>(state.range(0)), 20);
  std::vector<std::size_t> rows(ds.n());
  std::iota(rows.begin(), rows.end(), std::size_t{0});
  cart::TreeConfig cfg;
  for (auto _ : state) benchmark::DoNotOptimize(cart::grow_tree(ds, rows, cfg, 1));
}
BENCHMARK(BM_GrowTree)->Arg(200)->Arg(1000)->Arg(5000);

void BM_FitForest(benchmark::State& state) {
  const auto ds = bench_data(300, 100);
  forest::ForestConfig cfg;
  cfg.n_trees = static_cast<std::size_t>(state.range(0));
  cfg.tree.max_depth = 3;
  cfg.threads = 1;
  for (auto _ : state) benchmark::DoNotOptimize(forest::fit_forest(ds, cfg));
}
BENCHMARK(BM_FitForest)->Arg(50)->Arg(500)->Unit(benchmark::kMillisecond);

void BM_LassoFit(benchmark::State& state) {
  const auto ds = bench_data(300, static_cast<std::size_t>(state.range(0)));
  const auto design = targeting::StandardizedDesign::make(ds.features, ds.response);
  const double lambda = 0.05 * targeting::lambda_max(design);
  for (auto _ : state) benchmark::DoNotOptimize(targeting::lasso_fit(design, lambda));
}
BENCHMARK(BM_LassoFit)->Arg(20)->Arg(100)->Arg(500);

void BM_SelectTargets(benchmark::State& state) {
  const auto ds = bench_data(300, 100);
  for (auto _ : state) benchmark::DoNotOptimize(targeting::select_targets(ds, 10, targeting::Expansion::none));
}
BENCHMARK(BM_SelectTargets)->Unit(benchmark::kMillisecond);

void BM_SplitProb(benchmark::State& state) {
  const auto dgp = sim::dgp_from_label("linear", 8, 0.3);
  for (auto _ : state) benchmark::DoNotOptimize(sim::estimate_split_prob(dgp, static_cast<std::size_t>(state.range(0)), 100, 7, 1));
}
BENCHMARK(BM_SplitProb)->Arg(100)->Arg(400)->Unit(benchmark::kMillisecond);

void BM_CstarNumeric(benchmark::State& state) {
  const auto fn = theory::piecewise15_fn();
  for (auto _ : state) benchmark::DoNotOptimize(theory::cstar_numeric(fn));
}
BENCHMARK(BM_CstarNumeric)->Unit(benchmark::kMillisecond);

void BM_UpperBound(benchmark::State& state) {
  const auto a = static_cast<std::size_t>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(theory::upper_bound_split_prob(a, 5, a / 3));
}
BENCHMARK(BM_UpperBound)->Arg(40)->Arg(500);

}  // namespace

BENCHMARK_MAIN();
