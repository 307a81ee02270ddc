#include <benchmark/benchmark.h>

#include "qepkit/harness.hpp"

using namespace qepkit;

namespace {

Exec exec_of(const benchmark::State& state) {
    return state.range(0) == 0 ? Exec::Serial : Exec::Parallel;
}

void label(benchmark::State& state) { state.SetLabel(state.range(0) == 0 ? "serial" : "parallel"); }

void BM_CheckProjectedSolution(benchmark::State& state) {
    const Problem p = make_builtin("ex4.1");
    const Vec x = vec({0.0965, 0, 0, 0.0745, 0.1092});
    const Vec y = vec({0.096552, -0.268553, -0.265827, 0.074467, 0.109249});
    for (auto _ : state)
        benchmark::DoNotOptimize(
            check_projected_solution(p.inst, x, y, 20000, 1e-3, 0, exec_of(state)));
    label(state);
}
BENCHMARK(BM_CheckProjectedSolution)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond)->UseRealTime();

void BM_CheckAssumptions(benchmark::State& state) {
    const Problem p = make_builtin("emm10", {0, 1, 0});
    for (auto _ : state)
        benchmark::DoNotOptimize(check_assumptions(p.inst, 20000, 0, exec_of(state)));
    label(state);
}
BENCHMARK(BM_CheckAssumptions)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond)->UseRealTime();

void BM_DualGap(benchmark::State& state) {
    const Problem p = make_builtin("ex4.2", {100, 1, 0});
    const Vec y = Vec::Constant(100, 0.5);
    for (auto _ : state)
        benchmark::DoNotOptimize(dual_gap(p.inst.f, p.inst.C, 1.0, y, 64, 0, exec_of(state)));
    label(state);
}
BENCHMARK(BM_DualGap)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond)->UseRealTime();

void BM_Oracle(benchmark::State& state) {
    const Problem p = make_builtin("ex4.3", {1, 1, 0});
    for (auto _ : state)
        benchmark::DoNotOptimize(brute_force_oracle(p.inst, 1e-3, exec_of(state)));
    label(state);
}
BENCHMARK(BM_Oracle)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond)->UseRealTime();

}  // namespace

BENCHMARK_MAIN();
