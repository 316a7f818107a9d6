#include <benchmark/benchmark.h>

#include "mmi/bench.hpp"
#include "mmi/exact.hpp"
#include "mmi/mixed_mp.hpp"
#include "mmi/optimizers.hpp"
#include "mmi/trees.hpp"

namespace {

void bm_mixed_mp_hmm(benchmark::State& state) {
    auto m = mmi::gen_hmm(int(state.range(0)), 3, 0.8, 11);
    auto rho = mmi::rho_bethe(m);
    mmi::SolveConfig cfg;
    for (auto _ : state) {
        auto [b, rep] = mmi::mixed_mp_fixed_point(m, rho, cfg);
        benchmark::DoNotOptimize(rep.objective);
    }
}
BENCHMARK(bm_mixed_mp_hmm)->Arg(5)->Arg(10)->Arg(20);

void bm_cccp_hmm(benchmark::State& state) {
    auto m = mmi::gen_hmm(int(state.range(0)), 3, 0.8, 11);
    auto target = mmi::weights_bethe_truncated(m);
    auto decomp = mmi::default_decomposition(m, target);
    mmi::CccpConfig cfg;
    for (auto _ : state) {
        auto [b, rep] = mmi::cccp_solve(m, decomp, cfg);
        benchmark::DoNotOptimize(rep.trace.size());
    }
}
BENCHMARK(bm_cccp_hmm)->Arg(5)->Arg(10);

void bm_oracle_hmm(benchmark::State& state) {
    auto m = mmi::gen_hmm(int(state.range(0)), 3, 0.8, 11);
    for (auto _ : state) {
        auto r = mmi::marginal_map_bruteforce(m);
        benchmark::DoNotOptimize(r.phi_ab);
    }
}
BENCHMARK(bm_oracle_hmm)->Arg(6)->Arg(8)->Arg(10);

void bm_mixed_mp_grid(benchmark::State& state) {
    auto m = mmi::gen_ising(int(state.range(0)), int(state.range(0)),
                            mmi::IsingMode::Mixed, 0.8, 11);
    auto rho = mmi::rho_bethe(m);
    mmi::SolveConfig cfg;
    for (auto _ : state) {
        auto [b, rep] = mmi::mixed_mp_fixed_point(m, rho, cfg);
        benchmark::DoNotOptimize(rep.objective);
    }
}
BENCHMARK(bm_mixed_mp_grid)->Arg(6)->Arg(10);

}  // namespace

BENCHMARK_MAIN();
