// Benchmarks comparing the OpenMP sweep kernels against the serial reference.
#include <benchmark/benchmark.h>

#include "spectra1d/floquet.hpp"
#include "spectra1d/parallel.hpp"
#include "spectra1d/spectral.hpp"

namespace {

using namespace spectra1d;

void BM_DiscriminantScan(benchmark::State& state, Exec mode) {
  auto v0 = PeriodicPotential::parse("mathieu:1.0");
  const Grid grid = Grid::linspace(0.0, 40.0, 512);
  for (auto _ : state) {
    auto vals = map_indexed<double>(
        grid.size(), [&](std::size_t i) { return discriminant(v0, grid[i]); }, mode);
    benchmark::DoNotOptimize(vals.data());
  }
}

void BM_DensityGrid(benchmark::State& state, Exec mode) {
  auto v0 = PeriodicPotential::parse("mathieu:1.0");
  auto v = DecayingPotential::parse("bump:5,0,1");
  const Grid grid = Grid::linspace(3.5, 6.5, 24);
  for (auto _ : state) {
    auto vals = map_indexed<double>(
        grid.size(),
        [&](std::size_t i) { return density_prufer(v0, v, 2.0, grid[i]).density; },
        mode);
    benchmark::DoNotOptimize(vals.data());
  }
}

void BM_PrueferResonance(benchmark::State& state, Exec mode) {
  auto v0 = PeriodicPotential::zero();
  auto v = DecayingPotential::parse("wvn:1,1,1,0");
  const Grid grid = Grid::linspace(0.85, 1.15, 16);
  for (auto _ : state) {
    auto rep = separate_set_scan(v0, v, 1e-2, 0.25, 0.0, 0.5, 10, grid, 1e6,
                                 Tolerance::tight(), mode);
    benchmark::DoNotOptimize(rep.selected_count);
  }
}

}  // namespace

BENCHMARK_CAPTURE(BM_DiscriminantScan, serial, spectra1d::Exec::serial)
    ->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(BM_DiscriminantScan, openmp, spectra1d::Exec::parallel)
    ->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(BM_DensityGrid, serial, spectra1d::Exec::serial)
    ->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(BM_DensityGrid, openmp, spectra1d::Exec::parallel)
    ->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(BM_PrueferResonance, serial, spectra1d::Exec::serial)
    ->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(BM_PrueferResonance, openmp, spectra1d::Exec::parallel)
    ->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
