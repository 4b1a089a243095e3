#include <doctest.h>

#include <cmath>

#include "pnp/image.hpp"
#include "pnp/rng.hpp"

using namespace pnp;

TEST_CASE("axpy examples")
{
    const ImageBuffer y = ImageBuffer::vector({3.0, 4.0});
    const ImageBuffer x = ImageBuffer::vector({1.0, 2.0});

    const ImageBuffer any = ImageBuffer::vector({123.0, -7.5});
    CHECK(axpy(0.0, any, y).data()[0] == 3.0);
    CHECK(axpy(0.0, any, y).data()[1] == 4.0);

    const ImageBuffer zero(y.shape());
    const ImageBuffer r1 = axpy(1.0, zero, y);
    CHECK(r1[0] == 3.0);
    CHECK(r1[1] == 4.0);

    const ImageBuffer r2 = axpy(2.0, x, y);
    CHECK(r2[0] == 5.0);
    CHECK(r2[1] == 8.0);
}

TEST_CASE("axpy rejects mismatched shapes")
{
    CHECK_THROWS_AS(axpy(1.0, ImageBuffer(Shape{2, 1, 1}), ImageBuffer(Shape{3, 1, 1})), ShapeError);
    CHECK_THROWS_AS(axpy(1.0, ImageBuffer(Shape{2, 2, 1}), ImageBuffer(Shape{4, 1, 1})), ShapeError);
}

TEST_CASE("l2 norm examples")
{
    CHECK(l2_norm(ImageBuffer::vector({3.0, 4.0})) == 5.0);
    CHECK(l2_norm(ImageBuffer(Shape{5, 3, 2})) == 0.0);
}

TEST_CASE("l2 norm matches naive summation")
{
    Rng rng(11);
    for (std::size_t len : {64u, 4097u, 50000u}) {
        const ImageBuffer x = rng.normal_image(Shape{len, 1, 1});
        // Kahan-compensated accumulation in reverse order.
        long double s = 0.0L, c = 0.0L;
        for (std::size_t i = len; i-- > 0;) {
            const long double yv = static_cast<long double>(x[i]) * x[i] - c;
            const long double t = s + yv;
            c = (t - s) - yv;
            s = t;
        }
        const double ref = std::sqrt(static_cast<double>(s));
        CHECK(std::abs(l2_norm(x) - ref) <= 1e-12 * ref);
    }
}

TEST_CASE("dot, distance and max_abs")
{
    const ImageBuffer a = ImageBuffer::vector({1.0, -2.0, 3.0});
    const ImageBuffer b = ImageBuffer::vector({4.0, 5.0, -6.0});
    CHECK(dot(a, b) == doctest::Approx(4.0 - 10.0 - 18.0));
    CHECK(distance(a, b) == doctest::Approx(std::sqrt(9.0 + 49.0 + 81.0)));
    CHECK(max_abs(b) == 6.0);
}

TEST_CASE("planar layout and reshaping")
{
    ImageBuffer x(Shape{3, 2, 2});
    for (std::size_t i = 0; i < x.size(); ++i) x[i] = static_cast<double>(i);
    CHECK(x.at(0, 0, 0) == 0.0);
    CHECK(x.at(0, 1, 2) == 5.0);
    CHECK(x.at(1, 0, 0) == 6.0);
    CHECK(x.plane(1).size() == 6);
    CHECK(x.plane(1)[0] == 6.0);
    const ImageBuffer r = x.reshaped(Shape{12, 1, 1});
    CHECK(r[7] == 7.0);
    CHECK_THROWS_AS(x.reshaped(Shape{5, 1, 1}), ShapeError);
}

TEST_CASE("concat and split are inverse")
{
    Rng rng(3);
    const ImageBuffer a = rng.uniform_image(Shape{4, 3, 1});
    const ImageBuffer b = rng.uniform_image(Shape{4, 3, 2});
    const ImageBuffer ab = concat(a, b);
    CHECK(ab.shape() == Shape{4, 3, 3});
    const auto [a2, b2] = split(ab, a.shape(), b.shape());
    CHECK(distance(a, a2) == 0.0);
    CHECK(distance(b, b2) == 0.0);

    const ImageBuffer c = rng.uniform_image(Shape{5, 1, 1});
    const ImageBuffer ac = concat(a, c);
    CHECK(ac.size() == 17);
    const auto [a3, c3] = split(ac, a.shape(), c.shape());
    CHECK(distance(a, a3) == 0.0);
    CHECK(distance(c, c3) == 0.0);
}

TEST_CASE("finiteness")
{
    ImageBuffer x(Shape{2, 2, 1}, 0.5);
    CHECK(x.all_finite());
    x[3] = std::nan("");
    CHECK_FALSE(x.all_finite());
    x[3] = INFINITY;
    CHECK_FALSE(x.all_finite());
}
