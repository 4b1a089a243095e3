#include <doctest.h>

#include <cmath>
#include <numbers>

#include "pnp/dct.hpp"
#include "pnp/rng.hpp"

using namespace pnp;

TEST_CASE("basis is orthonormal")
{
    for (std::size_t n : {1u, 4u, 7u, 16u}) {
        const auto c = Dct2d::basis(n);
        for (std::size_t a = 0; a < n; ++a)
            for (std::size_t b = 0; b < n; ++b) {
                double s = 0.0;
                for (std::size_t i = 0; i < n; ++i) s += c[a * n + i] * c[b * n + i];
                REQUIRE(s == doctest::Approx(a == b ? 1.0 : 0.0).epsilon(1e-13));
            }
    }
}

TEST_CASE("forward matches the DCT-II definition")
{
    Rng rng(1);
    const std::size_t h = 5, w = 6;
    const ImageBuffer x = rng.uniform_image(Shape{w, h, 1});
    const ImageBuffer y = Dct2d(h, w).forward(x);
    const double pi = std::numbers::pi;
    for (std::size_t k = 0; k < h; ++k)
        for (std::size_t l = 0; l < w; ++l) {
            double s = 0.0;
            for (std::size_t i = 0; i < h; ++i)
                for (std::size_t j = 0; j < w; ++j)
                    s += x.at(0, i, j) * std::cos(pi * (2 * i + 1) * k / (2.0 * h)) *
                         std::cos(pi * (2 * j + 1) * l / (2.0 * w));
            s *= (k == 0 ? std::sqrt(1.0 / h) : std::sqrt(2.0 / h)) *
                 (l == 0 ? std::sqrt(1.0 / w) : std::sqrt(2.0 / w));
            REQUIRE(std::abs(y.at(0, k, l) - s) < 1e-12);
        }
}

TEST_CASE("round trip and energy preservation per channel")
{
    Rng rng(2);
    const ImageBuffer x = rng.normal_image(Shape{8, 12, 3});
    const Dct2d d(12, 8);
    const ImageBuffer y = d.forward(x);
    CHECK(std::abs(l2_norm(y) - l2_norm(x)) < 1e-12 * l2_norm(x));
    CHECK(max_abs(d.inverse(y) - x) < 1e-13);
}

TEST_CASE("shape mismatch throws")
{
    CHECK_THROWS_AS(Dct2d(4, 4).forward(ImageBuffer(Shape{5, 4, 1})), ShapeError);
}
