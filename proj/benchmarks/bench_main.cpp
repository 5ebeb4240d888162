#include <benchmark/benchmark.h>

#include "rsma/datagen.hpp"
#include "rsma/pgd.hpp"
#include "rsma/unfold.hpp"

namespace {

using namespace rsma;

ProblemInstance instance(std::uint64_t seed) {
    Rng rng(seed);
    return sample_instance(SystemConfig{}, rng);
}

void BM_NetworkForward(benchmark::State& state) {
    const ProblemInstance inst = instance(1);
    const NetworkParams params = init_params(3, static_cast<int>(state.range(0)), 1, InitScheme::random_small);
    for (auto _ : state) {
        benchmark::DoNotOptimize(network_forward(inst, params, 7).final_wsr());
    }
}
BENCHMARK(BM_NetworkForward)->Arg(2)->Arg(8)->Arg(12)->Unit(benchmark::kMicrosecond);

void BM_FpOracle(benchmark::State& state) {
    const ProblemInstance inst = instance(2);
    SolverOptions opts = SolverOptions::oracle_defaults(3);
    opts.tol = 1.0 / static_cast<double>(state.range(0));
    for (auto _ : state) {
        benchmark::DoNotOptimize(solve_fp_oracle(inst, opts).trace.iterations_used);
    }
}
// tol = 1e-2 and 1e-4
BENCHMARK(BM_FpOracle)->Arg(100)->Arg(10000)->Unit(benchmark::kMillisecond);

void BM_PgdSolve(benchmark::State& state) {
    const ProblemInstance inst = instance(3);
    SolverOptions opts = SolverOptions::pgd_defaults(3);
    opts.max_iters = static_cast<int>(state.range(0));
    opts.tol = 1e-300;
    for (auto _ : state) {
        benchmark::DoNotOptimize(solve_pgd(inst, opts).trace.iterations_used);
    }
}
BENCHMARK(BM_PgdSolve)->Arg(100)->Unit(benchmark::kMicrosecond);

void BM_ParamGradients(benchmark::State& state) {
    std::vector<ProblemInstance> insts;
    std::vector<TrainingSample> batch;
    for (int q = 0; q < 8; ++q) {
        insts.push_back(instance(100 + q));
    }
    for (int q = 0; q < 8; ++q) {
        batch.push_back({&insts[q], 10.0, static_cast<std::uint64_t>(q)});
    }
    const NetworkParams params = init_params(3, 8, 1, InitScheme::random_small);
    for (auto _ : state) {
        benchmark::DoNotOptimize(param_gradients(batch, params, TrainConfig{}).loss);
    }
}
BENCHMARK(BM_ParamGradients)->Unit(benchmark::kMillisecond);

} // namespace
BENCHMARK_MAIN();
