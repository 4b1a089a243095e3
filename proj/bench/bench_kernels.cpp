#include <benchmark/benchmark.h>

#include <vector>

#include "pnp/kernels.hpp"
#include "pnp/rng.hpp"

namespace k = pnp::kernels;

namespace {

std::vector<double> filled(std::size_t n, std::uint64_t seed, double lo = -1.0, double hi = 1.0)
{
    pnp::Rng rng(seed);
    std::vector<double> v(n);
    for (double& e : v) e = rng.uniform(lo, hi);
    return v;
}

template <bool Parallel>
void BM_axpy(benchmark::State& st)
{
    const auto n = static_cast<std::size_t>(st.range(0));
    const auto x = filled(n, 1), y = filled(n, 2);
    std::vector<double> out(n);
    for (auto _ : st) {
        if constexpr (Parallel)
            k::parallel::axpy(0.5, x, y, out);
        else
            k::serial::axpy(0.5, x, y, out);
        benchmark::DoNotOptimize(out.data());
    }
    st.SetBytesProcessed(static_cast<std::int64_t>(st.iterations() * n * 3 * sizeof(double)));
}

template <bool Parallel>
void BM_dot(benchmark::State& st)
{
    const auto n = static_cast<std::size_t>(st.range(0));
    const auto x = filled(n, 3), y = filled(n, 4);
    for (auto _ : st) {
        const double d = Parallel ? k::parallel::dot(x, y) : k::serial::dot(x, y);
        benchmark::DoNotOptimize(d);
    }
    st.SetBytesProcessed(static_cast<std::int64_t>(st.iterations() * n * 2 * sizeof(double)));
}

template <bool Parallel>
void BM_gkl_prox(benchmark::State& st)
{
    const auto n = static_cast<std::size_t>(st.range(0));
    const auto v = filled(n, 5, 0.0, 100.0), x = filled(n, 6);
    std::vector<double> out(n);
    for (auto _ : st) {
        if constexpr (Parallel)
            k::parallel::gkl_prox(0.5, 0.01, v, x, out);
        else
            k::serial::gkl_prox(0.5, 0.01, v, x, out);
        benchmark::DoNotOptimize(out.data());
    }
}

template <bool Parallel>
void BM_conv(benchmark::State& st)
{
    const auto side = static_cast<std::size_t>(st.range(0));
    const auto img = filled(side * side, 7);
    const auto taps = filled(15 * 15, 8, 0.0, 1.0);
    std::vector<double> out(side * side);
    for (auto _ : st) {
        if constexpr (Parallel)
            k::parallel::conv_plane(img, side, side, taps, 15, 15, 7, 7, false, out);
        else
            k::serial::conv_plane(img, side, side, taps, 15, 15, 7, 7, false, out);
        benchmark::DoNotOptimize(out.data());
    }
}

}  // namespace

BENCHMARK(BM_axpy<false>)->Name("axpy/serial")->Arg(1 << 14)->Arg(1 << 20);
BENCHMARK(BM_axpy<true>)->Name("axpy/parallel")->Arg(1 << 14)->Arg(1 << 20);
BENCHMARK(BM_dot<false>)->Name("dot/serial")->Arg(1 << 14)->Arg(1 << 20);
BENCHMARK(BM_dot<true>)->Name("dot/parallel")->Arg(1 << 14)->Arg(1 << 20);
BENCHMARK(BM_gkl_prox<false>)->Name("gkl_prox/serial")->Arg(1 << 14)->Arg(1 << 20);
BENCHMARK(BM_gkl_prox<true>)->Name("gkl_prox/parallel")->Arg(1 << 14)->Arg(1 << 20);
BENCHMARK(BM_conv<false>)->Name("conv15x15/serial")->Arg(128)->Arg(256);
BENCHMARK(BM_conv<true>)->Name("conv15x15/parallel")->Arg(128)->Arg(256);

BENCHMARK_MAIN();
