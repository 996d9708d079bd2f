#include "neckflow/barriers.hpp"

#include <benchmark/benchmark.h>

#include <cmath>

using namespace neckflow;

namespace {

// Constants of the default scenario, frozen so the benchmark does not rerun the search.
constexpr double kRhoStar = 6.324555320336759;
constexpr double kGammaPlus = 0.10177;
constexpr double kGammaMinus = 0.10151;
constexpr double kD = 65536.0;
constexpr double kSigmaStar = 135.525;

void run(benchmark::State& state, const BarrierFamily& f, double t_hi, Exec exec) {
    const FlowParams p = derive_params(2, 3);
    GridSpec g;
    g.nr = int(state.range(0));
    g.nt = int(state.range(0));
    g.t_lo = t_hi * 1e-8;
    g.t_hi = t_hi;
    for (auto _ : state) {
        const CertificationReport r = verify_subsuper(f, g, p, exec);
        benchmark::DoNotOptimize(r.min_margin);
    }
    state.SetItemsProcessed(state.iterations() * g.nr * g.nt);
}

void BM_outer(benchmark::State& state, Exec exec) {
    const FlowParams p = derive_params(2, 3);
    const auto fam = outer_families(0.1, 0.1, 0.5, kRhoStar, p);
    run(state, fam.second, std::pow(0.5 / (3 * kRhoStar), 2), exec);
}

void BM_parabolic(benchmark::State& state, Exec exec) {
    const FlowParams p = derive_params(2, 3);
    const auto fam = parabolic_barriers(kGammaPlus, kGammaMinus, kD, kSigmaStar, kRhoStar, p);
    run(state, fam.second, 1e-12, exec);
}

} // namespace

BENCHMARK_CAPTURE(BM_outer, serial, Exec::serial)->Arg(200)->Arg(800)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(BM_outer, parallel, Exec::parallel)->Arg(200)->Arg(800)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(BM_parabolic, serial, Exec::serial)->Arg(200)->Arg(800)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(BM_parabolic, parallel, Exec::parallel)->Arg(200)->Arg(800)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
