#include "qfc/kernels.hpp"

#include <benchmark/benchmark.h>

#include <numeric>

using namespace qfc;

namespace {

cmt::ConverterParams params() {
  cmt::ConverterParams p;
  p.signal = {1283e-9, 0.02, 0.01, 1.0};
  p.idler = {704e-9, 0.03, 0.02, 1.2};
  p.geometry = cmt::ResonatorGeometry::from_group_index(1e-3, 2.0);
  return p;
}

// range(0) is the job count; 0 selects the serial reference.
void efficiency_map(benchmark::State& state) {
  const auto p = params();
  const auto pumps = cmt::PumpPair::from_powers(3.0, 5.0);
  const auto g = kernels::detuning_grid(p, cmt::optimal_detunings(p, 3.0, 5.0), 5.0, 401);
  const int jobs = static_cast<int>(state.range(0));
  for (auto _ : state) {
    auto m = jobs == 0 ? kernels::serial::efficiency_map(p, pumps, g) : kernels::efficiency_map(p, pumps, g, jobs);
    benchmark::DoNotOptimize(m.data());
  }
  state.SetItemsProcessed(state.iterations() * 401 * 401);
}

void max_efficiency_batch(benchmark::State& state) {
  const auto p = params();
  std::vector<kernels::PowerPoint> pts;
  for (int k = 0; k < 100000; ++k)
    pts.push_back({1e-3 * (k % 1000 + 1), 1e-3 * (k / 100 + 1)});
  const int jobs = static_cast<int>(state.range(0));
  for (auto _ : state) {
    auto r = jobs == 0 ? kernels::serial::max_efficiency_batch(p, pts) : kernels::max_efficiency_batch(p, pts, jobs);
    benchmark::DoNotOptimize(r.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(pts.size()));
}

void generate_batch(benchmark::State& state) {
  photon::SourceConfig c;
  c.pair_rate_hz = 1e5;
  c.herald_noise_hz = 1e4;
  c.converted_noise_hz = 1e4;
  c.duration_s = 0.2;
  std::vector<std::uint64_t> seeds(16);
  std::iota(seeds.begin(), seeds.end(), 1);
  const int jobs = static_cast<int>(state.range(0));
  for (auto _ : state) {
    auto r = jobs == 0 ? kernels::serial::generate_batch(c, seeds) : kernels::generate_batch(c, seeds, jobs);
    benchmark::DoNotOptimize(r.data());
  }
}

} // namespace

BENCHMARK(efficiency_map)->Arg(0)->Arg(1)->Arg(2)->Arg(4)->Unit(benchmark::kMillisecond);
BENCHMARK(max_efficiency_batch)->Arg(0)->Arg(1)->Arg(2)->Arg(4)->Unit(benchmark::kMillisecond);
BENCHMARK(generate_batch)->Arg(0)->Arg(1)->Arg(2)->Arg(4)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
