// Microbenchmarks for the hot paths: interpolation, nearest-point queries,
// closed-loop episodes, and the distribution metrics.

#include <benchmark/benchmark.h>

#include <vector>

#include "crossim/dynamics.hpp"
#include "crossim/geometry.hpp"
#include "crossim/rng.hpp"
#include "crossim/search.hpp"
#include "crossim/stats.hpp"

namespace {

crossim::RoadSpec fixture_spec() {
    return crossim::generate_random_road(7, 8);
}

void BM_Interpolate(benchmark::State& state) {
    const crossim::RoadSpec spec = fixture_spec();
    for (auto _ : state) {
        benchmark::DoNotOptimize(crossim::interpolate_catmull_rom(spec));
    }
}
BENCHMARK(BM_Interpolate);

void BM_NearestPoint(benchmark::State& state) {
    const crossim::RoadPolyline poly = crossim::interpolate_catmull_rom(fixture_spec());
    crossim::Rng rng(11);
    std::vector<double> xs, ys;
    for (int i = 0; i < 256; ++i) {
        xs.push_back(rng.uniform(0.0, 250.0));
        ys.push_back(rng.uniform(0.0, 250.0));
    }
    std::size_t i = 0;
    for (auto _ : state) {
        benchmark::DoNotOptimize(
            crossim::nearest_on_polyline(poly, xs[i % xs.size()], ys[i % ys.size()]));
        ++i;
    }
}
BENCHMARK(BM_NearestPoint);

void BM_Episode(benchmark::State& state) {
    const crossim::RoadPolyline poly = crossim::interpolate_catmull_rom(fixture_spec());
    const crossim::DrivingModelConfig model = crossim::autopilot_reference();
    crossim::SimulatorConfig sim;
    crossim::EpisodeLimits limits;
    for (auto _ : state) {
        benchmark::DoNotOptimize(
            crossim::run_episode(model, sim, poly, 4.0, limits, 99));
    }
}
BENCHMARK(BM_Episode);

void BM_Wasserstein(benchmark::State& state) {
    crossim::Rng rng(3);
    std::vector<double> a, b;
    for (int i = 0; i < 4096; ++i) {
        a.push_back(rng.gaussian(0.0, 1.0));
        b.push_back(rng.gaussian(0.3, 1.2));
    }
    for (auto _ : state) {
        benchmark::DoNotOptimize(crossim::wasserstein_1d(a, b));
    }
}
BENCHMARK(BM_Wasserstein);

void BM_SearchSmall(benchmark::State& state) {
    const crossim::DrivingModelConfig model = crossim::autopilot_reference();
    crossim::SimulatorConfig sim;
    crossim::SearchConfig cfg;
    cfg.population_size = 5;
    cfg.iterations = 5;
    cfg.seed = 21;
    for (auto _ : state) {
        benchmark::DoNotOptimize(crossim::run_search(model, sim, cfg));
    }
}
BENCHMARK(BM_SearchSmall)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
