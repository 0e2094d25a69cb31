#include <benchmark/benchmark.h>

#include <random>

#include "shadowlane/attack.hpp"
#include "shadowlane/defense.hpp"
#include "shadowlane/safety.hpp"
#include "shadowlane/solar.hpp"

using namespace shadowlane;

namespace {

const std::vector<RoadScene>& scenes() {
  static const auto s = standard_scenes();
  return s;
}

const ReferenceDetector& detector() {
  static const ReferenceDetector d({scenes()[0].camera, scenes()[0].grid});
  return d;
}

const Image& attacked() {
  static const Image img = compose(scenes()[1], NSConfig{0.16, 25, 0.1, 5, 1.8}).image;
  return img;
}

}  // namespace

static void BM_SolarPosition(benchmark::State& st) {
  double h = 0;
  for (auto _ : st) {
    benchmark::DoNotOptimize(solar::solar_position({2023, 12, 22, h}, {34.0, -82.0}));
    h = h > 23 ? 0 : h + 0.01;
  }
}
BENCHMARK(BM_SolarPosition);

static void BM_GenerateSweep(benchmark::State& st) {
  for (auto _ : st) benchmark::DoNotOptimize(generate_sweep(SweepBounds::standard(), PurgeVariant::Geometric));
}
BENCHMARK(BM_GenerateSweep)->Unit(benchmark::kMillisecond);

static void BM_Compose(benchmark::State& st) {
  ComposeOptions o;
  o.subsamples = static_cast<int>(st.range(0));
  scenes();  // build outside the timed loop
  for (auto _ : st) benchmark::DoNotOptimize(compose(scenes()[1], NSConfig{0.16, 25, 0.1, 5, 1.8}, o));
}
BENCHMARK(BM_Compose)->Arg(1)->Arg(2)->Unit(benchmark::kMillisecond);

static void BM_Preprocess(benchmark::State& st) {
  attacked();
  for (auto _ : st) benchmark::DoNotOptimize(preprocess_only(attacked(), {}));
}
BENCHMARK(BM_Preprocess)->Unit(benchmark::kMillisecond);

static void BM_Detect(benchmark::State& st) {
  for (auto _ : st) benchmark::DoNotOptimize(detector().detect(attacked()));
}
BENCHMARK(BM_Detect)->Unit(benchmark::kMillisecond);

static void BM_DiffLanes(benchmark::State& st) {
  const int n = static_cast<int>(st.range(0));
  std::mt19937_64 rng(3);
  std::bernoulli_distribution on(0.1);
  Mask a(n, n, 1), b(n, n, 1);
  for (auto& v : a.data) v = on(rng) ? 255 : 0;
  for (auto& v : b.data) v = on(rng) ? 255 : 0;
  for (auto _ : st) benchmark::DoNotOptimize(diff_lanes(a, b, 261));
  st.SetItemsProcessed(st.iterations() * n * n);
}
BENCHMARK(BM_DiffLanes)->Arg(64)->Arg(640);

static void BM_LuminosityFilter(benchmark::State& st) {
  for (auto _ : st) benchmark::DoNotOptimize(luminosity_filter(attacked()));
}
BENCHMARK(BM_LuminosityFilter)->Unit(benchmark::kMillisecond);

static void BM_SweepPair(benchmark::State& st) {
  const std::vector<NSConfig> cfg{{0.16, 25, 0.1, 5, 1.8}};
  for (auto _ : st) benchmark::DoNotOptimize(run_sweep({scenes()[1]}, cfg, detector(), {}, 261.0));
}
BENCHMARK(BM_SweepPair)->Unit(benchmark::kMillisecond);

static void BM_VehicleStep(benchmark::State& st) {
  sim::VehicleState s;
  s.speed = 15;
  for (auto _ : st) {
    s = sim::step(s, 0.05, 0.05);
    benchmark::DoNotOptimize(s);
  }
}
BENCHMARK(BM_VehicleStep);
BENCHMARK_MAIN();
