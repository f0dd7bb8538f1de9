#include <benchmark/benchmark.h>

#include "fixedcost/dual_pricer.hpp"
#include "fixedcost/limit_solver.hpp"
#include "fixedcost/primal_hedger.hpp"

namespace {

using namespace fixedcost;

void BM_SolveDual(benchmark::State& state) {
    const int n = static_cast<int>(state.range(0));
    const auto spec = BinomialSpec::make(100.0, 0.2, n, 0.5 / n);
    const auto payoff = Payoff::call(100.0);
    for (auto _ : state) benchmark::DoNotOptimize(solve_dual(spec, payoff).value);
    state.SetComplexityN(n);
}
BENCHMARK(BM_SolveDual)->RangeMultiplier(2)->Range(16, 128)->Unit(benchmark::kMillisecond)->Complexity();

void BM_SolveHjb(benchmark::State& state) {
    const int nx = static_cast<int>(state.range(0));
    const auto grid = HjbGrid::centered(100.0, 0.2, 16, nx);
    const auto payoff = Payoff::call(100.0);
    for (auto _ : state)
        benchmark::DoNotOptimize(solve_hjb(100.0, 0.2, 0.5, payoff, grid, HjbOptions{std::nullopt, false}).value_at_s0);
}
BENCHMARK(BM_SolveHjb)->Arg(201)->Arg(401)->Arg(801)->Unit(benchmark::kMillisecond);

void BM_VerifyExhaustive(benchmark::State& state) {
    const int n = static_cast<int>(state.range(0));
    const auto spec = BinomialSpec::make(100.0, 0.2, n, 0.05);
    const auto payoff = Payoff::call(100.0);
    const auto sol = solve_dual(spec, payoff);
    const auto tree = build_replication(spec, payoff, sol.policy);
    for (auto _ : state) benchmark::DoNotOptimize(verify_tree(tree, payoff, sol.value, Exhaustive{}).min_surplus);
    state.SetItemsProcessed(state.iterations() * (std::int64_t{1} << n));
}
BENCHMARK(BM_VerifyExhaustive)->Arg(10)->Arg(12)->Arg(14)->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();
