#include "pnp/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace pnp::kernels {

namespace {

inline double soft(double t, double x)
{
    if (x > t) return x - t;
    if (x < -t) return x + t;
    return 0.0;
}

// Closed-form prox of the Poisson negative log-likelihood for one coordinate.
inline double gkl_one(double gamma_eta, double gamma, double v, double x)
{
    const double s = x - gamma_eta;
    return 0.5 * (s + std::sqrt(s * s + 4.0 * gamma * v));
}

// Accumulates one convolution output sample. Shared by both versions so the
// summation order is identical.
inline double conv_sample(std::span<const double> plane, std::size_t height, std::size_t width,
                          std::span<const double> taps, std::size_t kh, std::size_t kw,
                          std::size_t ay, std::size_t ax, bool adjoint, std::size_t r,
                          std::size_t c)
{
    const auto h = static_cast<std::int64_t>(height);
    const auto w = static_cast<std::int64_t>(width);
    double acc = 0.0;
    for (std::size_t i = 0; i < kh; ++i) {
        const std::int64_t di = static_cast<std::int64_t>(i) - static_cast<std::int64_t>(ay);
        std::int64_t rr = adjoint ? static_cast<std::int64_t>(r) + di
                                  : static_cast<std::int64_t>(r) - di;
        rr %= h;
        if (rr < 0) rr += h;
        for (std::size_t j = 0; j < kw; ++j) {
            const std::int64_t dj = static_cast<std::int64_t>(j) - static_cast<std::int64_t>(ax);
            std::int64_t cc = adjoint ? static_cast<std::int64_t>(c) + dj
                                      : static_cast<std::int64_t>(c) - dj;
            cc %= w;
            if (cc < 0) cc += w;
            acc += taps[i * kw + j] * plane[static_cast<std::size_t>(rr * w + cc)];
        }
    }
    return acc;
}

template <class F>
double blocked_reduce(std::size_t n, F&& partial)
{
    const std::size_t nblocks = (n + reduction_block - 1) / reduction_block;
    std::vector<double> partials(nblocks, 0.0);
#pragma omp parallel for schedule(static)
    for (std::int64_t b = 0; b < static_cast<std::int64_t>(nblocks); ++b) {
        const std::size_t lo = static_cast<std::size_t>(b) * reduction_block;
        const std::size_t hi = std::min(n, lo + reduction_block);
        partials[static_cast<std::size_t>(b)] = partial(lo, hi);
    }
    double acc = 0.0;
    for (double p : partials) acc += p;
    return acc;
}

}  // namespace

namespace serial {

void axpy(double a, std::span<const double> x, std::span<const double> y, std::span<double> out)
{
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = a * x[i] + y[i];
}

void axpby(double a, std::span<const double> x, double b, std::span<const double> y,
           std::span<double> out)
{
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = a * x[i] + b * y[i];
}

void scale(double a, std::span<const double> x, std::span<double> out)
{
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = a * x[i];
}

void clamp(double lo, double hi, std::span<const double> x, std::span<double> out)
{
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::clamp(x[i], lo, hi);
}

void soft_threshold(double t, std::span<const double> x, std::span<double> out)
{
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = soft(t, x[i]);
}

void gkl_prox(double gamma_eta, double gamma, std::span<const double> v,
              std::span<const double> x, std::span<double> out)
{
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = gkl_one(gamma_eta, gamma, v[i], x[i]);
}

double dot(std::span<const double> x, std::span<const double> y)
{
    double acc = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) acc += x[i] * y[i];
    return acc;
}

double sum_sq(std::span<const double> x)
{
    double acc = 0.0;
    for (double v : x) acc += v * v;
    return acc;
}

double dist_sq(std::span<const double> x, std::span<const double> y)
{
    double acc = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double d = x[i] - y[i];
        acc += d * d;
    }
    return acc;
}

void conv_plane(std::span<const double> plane, std::size_t height, std::size_t width,
                std::span<const double> taps, std::size_t kh, std::size_t kw, std::size_t ay,
                std::size_t ax, bool adjoint, std::span<double> out)
{
    for (std::size_t r = 0; r < height; ++r)
        for (std::size_t c = 0; c < width; ++c)
            out[r * width + c] =
                conv_sample(plane, height, width, taps, kh, kw, ay, ax, adjoint, r, c);
}

}  // namespace serial

namespace parallel {

void axpy(double a, std::span<const double> x, std::span<const double> y, std::span<double> out)
{
    const auto n = static_cast<std::int64_t>(out.size());
#pragma omp parallel for schedule(static)
    for (std::int64_t i = 0; i < n; ++i) out[i] = a * x[i] + y[i];
}

void axpby(double a, std::span<const double> x, double b, std::span<const double> y,
           std::span<double> out)
{
    const auto n = static_cast<std::int64_t>(out.size());
#pragma omp parallel for schedule(static)
    for (std::int64_t i = 0; i < n; ++i) out[i] = a * x[i] + b * y[i];
}

void scale(double a, std::span<const double> x, std::span<double> out)
{
    const auto n = static_cast<std::int64_t>(out.size());
#pragma omp parallel for schedule(static)
    for (std::int64_t i = 0; i < n; ++i) out[i] = a * x[i];
}

void clamp(double lo, double hi, std::span<const double> x, std::span<double> out)
{
    const auto n = static_cast<std::int64_t>(out.size());
#pragma omp parallel for schedule(static)
    for (std::int64_t i = 0; i < n; ++i) out[i] = std::clamp(x[i], lo, hi);
}

void soft_threshold(double t, std::span<const double> x, std::span<double> out)
{
    const auto n = static_cast<std::int64_t>(out.size());
#pragma omp parallel for schedule(static)
    for (std::int64_t i = 0; i < n; ++i) out[i] = soft(t, x[i]);
}

void gkl_prox(double gamma_eta, double gamma, std::span<const double> v,
              std::span<const double> x, std::span<double> out)
{
    const auto n = static_cast<std::int64_t>(out.size());
#pragma omp parallel for schedule(static)
    for (std::int64_t i = 0; i < n; ++i) out[i] = gkl_one(gamma_eta, gamma, v[i], x[i]);
}

double dot(std::span<const double> x, std::span<const double> y)
{
    return blocked_reduce(x.size(), [&](std::size_t lo, std::size_t hi) {
        return serial::dot(x.subspan(lo, hi - lo), y.subspan(lo, hi - lo));
    });
}

double sum_sq(std::span<const double> x)
{
    return blocked_reduce(x.size(), [&](std::size_t lo, std::size_t hi) {
        return serial::sum_sq(x.subspan(lo, hi - lo));
    });
}

double dist_sq(std::span<const double> x, std::span<const double> y)
{
    return blocked_reduce(x.size(), [&](std::size_t lo, std::size_t hi) {
        return serial::dist_sq(x.subspan(lo, hi - lo), y.subspan(lo, hi - lo));
    });
}

void conv_plane(std::span<const double> plane, std::size_t height, std::size_t width,
                std::span<const double> taps, std::size_t kh, std::size_t kw, std::size_t ay,
                std::size_t ax, bool adjoint, std::span<double> out)
{
    const auto h = static_cast<std::int64_t>(height);
#pragma omp parallel for schedule(static)
    for (std::int64_t r = 0; r < h; ++r)
        for (std::size_t c = 0; c < width; ++c)
            out[static_cast<std::size_t>(r) * width + c] =
                conv_sample(plane, height, width, taps, kh, kw, ay, ax, adjoint,
                            static_cast<std::size_t>(r), c);
}

}  // namespace parallel

int max_threads()
{
#ifdef _OPENMP
    return omp_get_max_threads();
#else
    return 1;
#endif
}

namespace {
inline bool go_parallel(std::size_t n) { return n >= parallel_threshold && max_threads() > 1; }
}  // namespace

void axpy(double a, std::span<const double> x, std::span<const double> y, std::span<double> out)
{
    go_parallel(out.size()) ? parallel::axpy(a, x, y, out) : serial::axpy(a, x, y, out);
}

void axpby(double a, std::span<const double> x, double b, std::span<const double> y,
           std::span<double> out)
{
    go_parallel(out.size()) ? parallel::axpby(a, x, b, y, out) : serial::axpby(a, x, b, y, out);
}

void scale(double a, std::span<const double> x, std::span<double> out)
{
    go_parallel(out.size()) ? parallel::scale(a, x, out) : serial::scale(a, x, out);
}

void clamp(double lo, double hi, std::span<const double> x, std::span<double> out)
{
    go_parallel(out.size()) ? parallel::clamp(lo, hi, x, out) : serial::clamp(lo, hi, x, out);
}

void soft_threshold(double t, std::span<const double> x, std::span<double> out)
{
    go_parallel(out.size()) ? parallel::soft_threshold(t, x, out)
                            : serial::soft_threshold(t, x, out);
}

void gkl_prox(double gamma_eta, double gamma, std::span<const double> v,
              std::span<const double> x, std::span<double> out)
{
    go_parallel(out.size()) ? parallel::gkl_prox(gamma_eta, gamma, v, x, out)
                            : serial::gkl_prox(gamma_eta, gamma, v, x, out);
}

// Reductions switch on length alone so the result never depends on the
// thread count.
double dot(std::span<const double> x, std::span<const double> y)
{
    return x.size() >= parallel_threshold ? parallel::dot(x, y) : serial::dot(x, y);
}

double sum_sq(std::span<const double> x)
{
    return x.size() >= parallel_threshold ? parallel::sum_sq(x) : serial::sum_sq(x);
}

double dist_sq(std::span<const double> x, std::span<const double> y)
{
    return x.size() >= parallel_threshold ? parallel::dist_sq(x, y) : serial::dist_sq(x, y);
}

void conv_plane(std::span<const double> plane, std::size_t height, std::size_t width,
                std::span<const double> taps, std::size_t kh, std::size_t kw, std::size_t ay,
                std::size_t ax, bool adjoint, std::span<double> out)
{
    if (go_parallel(plane.size() * taps.size() / 8))
        parallel::conv_plane(plane, height, width, taps, kh, kw, ay, ax, adjoint, out);
    else
        serial::conv_plane(plane, height, width, taps, kh, kw, ay, ax, adjoint, out);
}

}  // namespace pnp::kernels
