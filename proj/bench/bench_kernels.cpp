// Serial reference vs OpenMP for the Monte Carlo kernels. Both paths give
// bit-identical results, so only wall time differs. Rates use wall time:
// the main thread's CPU time undercounts the parallel runs.

#include <benchmark/benchmark.h>
#include <omp.h>

#include <vector>

#include "fpg/mfg_solver.hpp"
#include "fpg/nash_solver.hpp"
#include "fpg/simulator.hpp"

using namespace fpg;

namespace {

std::vector<AgentType> het3() {
    return {{1, 2.0, 0.5, 1.5, 0.10, 0.2, 0.30}, {1.5, 0.5, 0.8, 0.7, 0.15, 0.1, 0.25}, {0.8, 3.0, 0.3, 1.0, 0.08, 0.3, 0.10}};
}

TypeDistribution two_point() {
    return TypeDistribution::discrete({{1.0, 0.6, 0.3, 1.0, 0.10, 0.2, 0.25}, {1.0, 2.0, 0.7, 1.5, 0.12, 0.1, 0.30}},
                                      {0.4, 0.6});
}

Execution exec_of(const benchmark::State& s) { return s.range(0) ? Execution::parallel : Execution::serial; }

void label(benchmark::State& s) { s.SetLabel(s.range(0) ? "omp x" + std::to_string(omp_get_max_threads()) : "serial"); }

void BM_SimulateWealth(benchmark::State& state) {
    const auto ag = het3();
    const auto eq = solve_nash(ag, 2.0);
    std::vector<Strategy> st;
    for (std::size_t i = 0; i < ag.size(); ++i) st.push_back({eq.pi[i], eq.strategies[i].consumption, 1.0});
    SimConfig cfg;
    cfg.n_paths = 20000;
    cfg.dt = 1.0 / 500.0;
    for (auto _ : state) benchmark::DoNotOptimize(simulate_wealth(ag, st, cfg, exec_of(state)));
    state.SetItemsProcessed(state.iterations() * cfg.n_paths);
    label(state);
}

void BM_QDriftTest(benchmark::State& state) {
    const auto ag = het3();
    const auto setup = drift_setup(ag, solve_nash(ag, 2.0));
    const std::vector<Perturbation> pert{{0.0, 1.0, "optimal"}, {0.2, 1.0, "pi+0.2"}, {0.0, 1.3, "c*1.3"}};
    SimConfig cfg;
    cfg.n_paths = 10000;
    cfg.dt = 1.0 / 500.0;
    cfg.antithetic = true;
    for (auto _ : state) benchmark::DoNotOptimize(q_drift_test(setup, pert, cfg, 4, exec_of(state)));
    state.SetItemsProcessed(state.iterations() * cfg.n_paths);
    label(state);
}

void BM_MfgMomentsSampler(benchmark::State& state) {
    BoxSampler box;
    box.ranges = {{{1.0, 1.0}, {1.5, 3.0}, {0.0, 0.6}, {0.5, 2.0}, {0.05, 0.15}, {0.1, 0.3}, {0.1, 0.3}}};
    const auto d = TypeDistribution::sampler(box);
    for (auto _ : state) benchmark::DoNotOptimize(mfg_moments(d, 200000, 7, exec_of(state)));
    state.SetItemsProcessed(state.iterations() * 200000);
    label(state);
}

void BM_MfConsistency(benchmark::State& state) {
    const auto d = two_point();
    const MfgEquilibrium eq(d, 2.0);
    SimConfig cfg;
    cfg.dt = 0.01;
    cfg.n_common = 32;
    cfg.n_idio = 2048;
    for (auto _ : state)
        benchmark::DoNotOptimize(
            mf_consistency_test(d, [&](const AgentType& t) { return eq.strategy(t); }, cfg, 4, exec_of(state)));
    label(state);
}

}  // namespace

BENCHMARK(BM_SimulateWealth)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_QDriftTest)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_MfgMomentsSampler)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_MfConsistency)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond)->UseRealTime();

BENCHMARK_MAIN();
