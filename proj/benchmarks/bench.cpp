#include <benchmark/benchmark.h>

#include <numbers>

#include "ikeda/classical.hpp"
#include "ikeda/control.hpp"

using namespace ikeda;

static void BM_BlockConstruction(benchmark::State& st) {
  const FockCutoff cut(static_cast<int>(st.range(0)));
  for (auto _ : st) {
    BlockUnitary U({0.4, std::numbers::pi / 4, Orientation::I}, cut);
    benchmark::DoNotOptimize(U);
  }
}
BENCHMARK(BM_BlockConstruction)->Arg(20)->Arg(40)->Arg(60)->Unit(benchmark::kMillisecond);

static void BM_BlockApply(benchmark::State& st) {
  const FockCutoff cut(static_cast<int>(st.range(0)));
  const BlockUnitary U({0.4, std::numbers::pi / 4, Orientation::I}, cut);
  const TwoModeState s = tensor_product(make_coherent(2.0, cut), vacuum(cut));
  for (auto _ : st) benchmark::DoNotOptimize(U.apply(s));
}
BENCHMARK(BM_BlockApply)->Arg(30)->Arg(45)->Arg(60)->Unit(benchmark::kMicrosecond);

static void BM_ForwardPass(benchmark::State& st) {
  const FockCutoff cut(60);
  const ForwardModel model(LoopConfig::preset().pair, cut);
  for (auto _ : st) benchmark::DoNotOptimize(model.forward(4.0));
}
BENCHMARK(BM_ForwardPass)->Unit(benchmark::kMicrosecond);

static void BM_Lyapunov(benchmark::State& st) {
  const MapConfig c = MapConfig::chaotic();
  for (auto _ : st) benchmark::DoNotOptimize(lyapunov(c, 0.0, st.range(0)));
  st.SetItemsProcessed(st.iterations() * st.range(0));
}
BENCHMARK(BM_Lyapunov)->Arg(10000)->Arg(100000)->Unit(benchmark::kMillisecond);

static void BM_Husimi(benchmark::State& st) {
  const FockCutoff cut(60);
  const DensityOperator rho = reduce_mode(forward_pass(4.0, LoopConfig::preset().pair, cut), "r");
  const int n = static_cast<int>(st.range(0));
  for (auto _ : st) benchmark::DoNotOptimize(husimi_q(rho, {-7, 7, -7, 7}, n, n));
}
BENCHMARK(BM_Husimi)->Arg(41)->Arg(81)->Unit(benchmark::kMillisecond);

static void BM_ConditionalLoop(benchmark::State& st) {
  const LoopConfig cfg = LoopConfig::preset();
  for (auto _ : st) benchmark::DoNotOptimize(run_loop(cfg));
}
BENCHMARK(BM_ConditionalLoop)->Unit(benchmark::kMillisecond);
BENCHMARK_MAIN();
