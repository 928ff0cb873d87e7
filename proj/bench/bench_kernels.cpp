// Serial reference implementations against their OpenMP counterparts.

#include <benchmark/benchmark.h>

#include "nestcast/mcsim.hpp"
#include "nestcast/power.hpp"

namespace {

using namespace nestcast;

mcsim::ExperimentGrid table_cell(std::size_t reps) {
    mcsim::ExperimentGrid g;
    g.T = {1000};
    g.phi1 = {0.95};
    g.variants = {{nesttest::Variant::s0_adj, 1.0, 0.9, 0.0},
                  {nesttest::Variant::sbar_adj, 0.0, 0.9, 0.8},
                  {nesttest::Variant::dm, 0.0, 0.0, 0.0},
                  {nesttest::Variant::cw, 0.0, 0.0, 0.0}};
    g.n_reps = reps;
    return g;
}

void BM_ExperimentSerial(benchmark::State& state) {
    const auto g = table_cell(static_cast<std::size_t>(state.range(0)));
    for (auto _ : state) benchmark::DoNotOptimize(mcsim::run_experiment_serial(g));
    state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_ExperimentParallel(benchmark::State& state) {
    const auto g = table_cell(static_cast<std::size_t>(state.range(0)));
    for (auto _ : state) benchmark::DoNotOptimize(mcsim::run_experiment(g));
    state.SetItemsProcessed(state.iterations() * state.range(0));
}

power::OuSpec ou_spec(std::size_t paths) {
    power::OuSpec s;
    s.c = {5.0, 5.0};
    s.p1 = 1;
    s.n_steps = 1000;
    s.n_paths = paths;
    s.seed = 1;
    return s;
}

void BM_OuSerial(benchmark::State& state) {
    const auto s = ou_spec(static_cast<std::size_t>(state.range(0)));
    const auto cfg = nesttest::SpreadConfig::sbar_preset(0.8, 0.9, true);
    for (auto _ : state) benchmark::DoNotOptimize(power::simulate_ou_noncentrality_serial(s, {2.0}, 1.0, 0.25, cfg));
    state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_OuParallel(benchmark::State& state) {
    const auto s = ou_spec(static_cast<std::size_t>(state.range(0)));
    const auto cfg = nesttest::SpreadConfig::sbar_preset(0.8, 0.9, true);
    for (auto _ : state) benchmark::DoNotOptimize(power::simulate_ou_noncentrality(s, {2.0}, 1.0, 0.25, cfg));
    state.SetItemsProcessed(state.iterations() * state.range(0));
}

}  // namespace

BENCHMARK(BM_ExperimentSerial)->Arg(500)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_ExperimentParallel)->Arg(500)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_OuSerial)->Arg(2000)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_OuParallel)->Arg(2000)->Unit(benchmark::kMillisecond)->UseRealTime();

BENCHMARK_MAIN();
