#include <doctest.h>

#include <cmath>
#include <vector>

#include "pnp/kernels.hpp"
#include "pnp/rng.hpp"

using namespace pnp;
namespace k = pnp::kernels;

namespace {

std::vector<double> randvec(Rng& rng, std::size_t n, double lo = -1.0, double hi = 1.0)
{
    std::vector<double> v(n);
    for (double& e : v) e = rng.uniform(lo, hi);
    return v;
}

}  // namespace

TEST_CASE("element-wise kernels: serial and parallel agree bitwise")
{
    Rng rng(1);
    for (std::size_t n : {1u, 17u, 4096u, 50001u}) {
        const auto x = randvec(rng, n), y = randvec(rng, n);
        const auto v = randvec(rng, n, 0.0, 5.0);
        std::vector<double> a(n), b(n);

        k::serial::axpy(0.7, x, y, a);
        k::parallel::axpy(0.7, x, y, b);
        CHECK(a == b);
        k::serial::axpby(0.7, x, -1.3, y, a);
        k::parallel::axpby(0.7, x, -1.3, y, b);
        CHECK(a == b);
        k::serial::scale(2.5, x, a);
        k::parallel::scale(2.5, x, b);
        CHECK(a == b);
        k::serial::clamp(-0.2, 0.4, x, a);
        k::parallel::clamp(-0.2, 0.4, x, b);
        CHECK(a == b);
        k::serial::soft_threshold(0.3, x, a);
        k::parallel::soft_threshold(0.3, x, b);
        CHECK(a == b);
        k::serial::gkl_prox(0.2, 0.1, v, x, a);
        k::parallel::gkl_prox(0.2, 0.1, v, x, b);
        CHECK(a == b);
    }
}

TEST_CASE("reductions: parallel is deterministic and close to serial")
{
    Rng rng(2);
    for (std::size_t n : {3u, 4096u, 4097u, 100000u}) {
        const auto x = randvec(rng, n), y = randvec(rng, n);
        const double d1 = k::parallel::dot(x, y);
        CHECK(d1 == k::parallel::dot(x, y));
        CHECK(d1 == doctest::Approx(k::serial::dot(x, y)).epsilon(1e-12));
        CHECK(k::parallel::sum_sq(x) == doctest::Approx(k::serial::sum_sq(x)).epsilon(1e-12));
        CHECK(k::parallel::dist_sq(x, y) == doctest::Approx(k::serial::dist_sq(x, y)).epsilon(1e-12));
    }
}

TEST_CASE("soft threshold values")
{
    const std::vector<double> x{-2.0, -0.5, 0.0, 0.5, 2.0};
    std::vector<double> out(5);
    k::soft_threshold(1.0, x, out);
    CHECK(out == std::vector<double>{-1.0, 0.0, 0.0, 0.0, 1.0});
}

TEST_CASE("clamp values")
{
    const std::vector<double> x{-0.5, 0.3, 1.7};
    std::vector<double> out(3);
    k::clamp(0.0, 1.0, x, out);
    CHECK(out == std::vector<double>{0.0, 0.3, 1.0});
}

TEST_CASE("spatial convolution: serial, parallel and a naive oracle")
{
    Rng rng(3);
    const std::size_t h = 9, w = 11, kh = 3, kw = 5, ay = 1, ax = 3;
    const auto img = randvec(rng, h * w);
    const auto taps = randvec(rng, kh * kw);
    for (bool adjoint : {false, true}) {
        std::vector<double> ref(h * w, 0.0);
        for (std::size_t r = 0; r < h; ++r)
            for (std::size_t c = 0; c < w; ++c)
                for (std::size_t i = 0; i < kh; ++i)
                    for (std::size_t j = 0; j < kw; ++j) {
                        const long dr = static_cast<long>(i) - static_cast<long>(ay);
                        const long dc = static_cast<long>(j) - static_cast<long>(ax);
                        // forward: out[r,c] += k[i,j] x[r-dr, c-dc]; adjoint flips the offsets
                        const long sr = adjoint ? static_cast<long>(r) + dr : static_cast<long>(r) - dr;
                        const long sc = adjoint ? static_cast<long>(c) + dc : static_cast<long>(c) - dc;
                        const std::size_t rr = static_cast<std::size_t>((sr % (long)h + (long)h) % (long)h);
                        const std::size_t cc = static_cast<std::size_t>((sc % (long)w + (long)w) % (long)w);
                        ref[r * w + c] += taps[i * kw + j] * img[rr * w + cc];
                    }
        std::vector<double> s(h * w), p(h * w);
        k::serial::conv_plane(img, h, w, taps, kh, kw, ay, ax, adjoint, s);
        k::parallel::conv_plane(img, h, w, taps, kh, kw, ay, ax, adjoint, p);
        CHECK(s == p);
        for (std::size_t i = 0; i < s.size(); ++i) REQUIRE(std::abs(s[i] - ref[i]) < 1e-12);
    }
}

TEST_CASE("thread count is positive")
{
    CHECK(k::max_threads() >= 1);
}
