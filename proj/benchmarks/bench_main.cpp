#include <benchmark/benchmark.h>

#include "charflux/charflux.hpp"

using namespace charflux;

static void BM_SampleDisplacement(benchmark::State& state) {
    const auto kernel = JumpKernel::nearest_neighbour(0.7);
    RngStream rng(1);
    const auto duration = static_cast<double>(state.range(0));
    for (auto _ : state) benchmark::DoNotOptimize(sample_displacement(kernel, duration, rng));
}
BENCHMARK(BM_SampleDisplacement)->Arg(1)->Arg(100)->Arg(10000);

static void BM_Poisson(benchmark::State& state) {
    RngStream rng(2);
    const auto mean = static_cast<double>(state.range(0));
    for (auto _ : state) benchmark::DoNotOptimize(poisson(rng, mean));
}
BENCHMARK(BM_Poisson)->Arg(3)->Arg(30)->Arg(3000);

static void BM_RateFunction(benchmark::State& state) {
    const auto kernel = JumpKernel::nearest_neighbour(0.7);
    double z = -0.9;
    for (auto _ : state) {
        benchmark::DoNotOptimize(rate_function(kernel, z));
        z = z > 0.9 ? -0.9 : z + 0.01;
    }
}
BENCHMARK(BM_RateFunction);

static void BM_WalkReplicate(benchmark::State& state) {
    SimConfig c;
    c.n = state.range(0);
    c.times = {0.5, 1.0, 2.0};
    c.base_points = {0.0};
    c.kernel = JumpKernel::nearest_neighbour(0.7);
    c.profile = Profile::linear(1.0);
    const WalkSimulator sim(c);
    std::uint64_t r = 0;
    for (auto _ : state) benchmark::DoNotOptimize(sim.simulate_replicate(RngStream(3).child(r++)));
}
BENCHMARK(BM_WalkReplicate)->Arg(200)->Arg(1600)->Arg(6400)->Unit(benchmark::kMicrosecond);

static void BM_EnsembleFinalize(benchmark::State& state) {
    EnsembleAccumulator acc(1600, {0.5, 1.0, 2.0}, {0.0, 1.0});
    RngStream rng(4);
    for (std::uint64_t r = 0; r < static_cast<std::uint64_t>(state.range(0)); ++r) {
        std::vector<std::int64_t> v(6);
        for (auto& x : v) x = poisson(rng, 10.0);
        acc.add(r, v);
    }
    for (auto _ : state) benchmark::DoNotOptimize(acc.finalize());
}
BENCHMARK(BM_EnsembleFinalize)->Arg(1000)->Arg(10000)->Unit(benchmark::kMillisecond);

static void BM_LisCount(benchmark::State& state) {
    RngStream rng(5);
    std::vector<PlanePoint> pts(static_cast<std::size_t>(state.range(0)));
    for (auto& p : pts) p = {rng.uniform(), rng.uniform()};
    for (auto _ : state) benchmark::DoNotOptimize(lis_count(pts));
    state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_LisCount)->RangeMultiplier(10)->Range(1000, 1000000)->Complexity(benchmark::oNLogN)->Unit(benchmark::kMillisecond);

static void BM_SecondOrderReplicate(benchmark::State& state) {
    const SecondOrderSetup setup;
    const auto sol = hopf_lax(setup.profile, setup.x, setup.t);
    std::uint64_t r = 0;
    for (auto _ : state) benchmark::DoNotOptimize(second_order_replicate(setup, sol, state.range(0), RngStream(6).child(r++)));
}
BENCHMARK(BM_SecondOrderReplicate)->Arg(250)->Arg(1000)->Unit(benchmark::kMillisecond);

static void BM_HopfLax(benchmark::State& state) {
    const auto profile = Profile::gaussian_bump(0.5, 2.0, 0.0, 0.2);
    for (auto _ : state) benchmark::DoNotOptimize(hopf_lax(profile, 0.3, 0.5));
}
BENCHMARK(BM_HopfLax)->Unit(benchmark::kMicrosecond);

static void BM_LimitSampler(benchmark::State& state) {
    std::vector<double> times;
    for (int k = 1; k <= state.range(0); ++k) times.push_back(0.1 * k);
    const LimitProcessSampler sampler(CovKernel::equilibrium(1.0, 1.0), times);
    RngStream rng(7);
    for (auto _ : state) benchmark::DoNotOptimize(sampler.draw(rng));
}
BENCHMARK(BM_LimitSampler)->Arg(8)->Arg(64);

static void BM_SigmaSquares(benchmark::State& state) {
    const std::vector<double> theta{1.0, -0.5, 2.0}, times{0.5, 1.0, 2.0};
    for (auto _ : state) benchmark::DoNotOptimize(sigma_squares(theta, times, 1.0, 1.5, 1.0));
}
BENCHMARK(BM_SigmaSquares)->Unit(benchmark::kMillisecond);
BENCHMARK_MAIN();
