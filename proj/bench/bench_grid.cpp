#include <benchmark/benchmark.h>

#include "cachesim/experiment.hpp"
#include "cachesim/trace.hpp"
#include "cachesim/workload.hpp"

using namespace cachesim;

namespace {

ExperimentConfig bench_config() {
    ExperimentConfig config;
    config.workloads = {"uniform(200)", "zipf(200,1.0)"};
    config.length = 2000;
    config.cache_sizes = {10, 50};
    config.policies = {"lru", "marker", "blind-oracle", "alternating-oracle", "combine-det(blind-oracle,lru)"};
    config.noise = {"exact", "additive-uniform(50)"};
    config.seeds = 4;
    config.master_seed = 1;
    return config;
}

void BM_GridSerial(benchmark::State& state) {
    const auto config = bench_config();
    for (auto _ : state) benchmark::DoNotOptimize(run_grid_serial(config));
}

void BM_GridParallel(benchmark::State& state) {
    const auto config = bench_config();
    const int threads = static_cast<int>(state.range(0));
    for (auto _ : state) benchmark::DoNotOptimize(run_grid_parallel(config, threads));
}

void BM_Inversions(benchmark::State& state) {
    const auto trace = generate(WorkloadSpec::parse("zipf(500,0.9)", static_cast<Time>(state.range(0)), 3));
    const auto nu = compute_next_occurrence(trace);
    const auto omega = generate_predictions(trace, nu, NoiseModel::lognormal(1.0, 5));
    for (auto _ : state) benchmark::DoNotOptimize(compute_losses(nu, omega));
    state.SetComplexityN(state.range(0));
}

}  // namespace

BENCHMARK(BM_GridSerial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_GridParallel)->Arg(1)->Arg(2)->Arg(4)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Inversions)->RangeMultiplier(4)->Range(1 << 10, 1 << 16)->Complexity(benchmark::oNLogN);

BENCHMARK_MAIN();
