#include <doctest.h>

#include <cmath>

#include "pnp/dct.hpp"
#include "pnp/denoisers.hpp"
#include "pnp/protocol.hpp"
#include "pnp/rng.hpp"

using namespace pnp;

TEST_CASE("identity denoiser")
{
    Rng rng(1);
    IdentityDenoiser id;
    const ImageBuffer x = rng.normal_image(Shape{5, 4, 2});
    CHECK(distance(id(x), x) == 0.0);
    const FneReport r = check_fne(id, rng, 200);
    CHECK(std::abs(r.max_ratio - 1.0) <= 1e-12);
    CHECK(r.violations == 0);
}

TEST_CASE("transform threshold: examples")
{
    Rng rng(2);
    const ImageBuffer x = rng.uniform_image(Shape{8, 8, 1});
    TransformThresholdDenoiser t0(0.0);
    CHECK(max_abs(t0(x) - x) <= 1e-12);
    TransformThresholdDenoiser t1(0.1);
    CHECK(max_abs(t1(ImageBuffer(Shape{8, 8, 1}))) == 0.0);
    CHECK(t1.descriptor().find("0.1") != std::string::npos);
    CHECK_THROWS(TransformThresholdDenoiser(-1.0));
}

TEST_CASE("transform threshold is the scalar prox per coefficient")
{
    // prox of t|c| at c: argmin_y t|y| + (y-c)^2/2, found by scanning the
    // three candidate stationary points c-t, c+t and 0.
    Rng rng(3);
    const ImageBuffer x = rng.uniform_image(Shape{8, 8, 1});
    const double t = 0.1;
    TransformThresholdDenoiser d(t);
    const Dct2d dct(8, 8);
    const ImageBuffer c = dct.forward(x);
    ImageBuffer expect(c.shape());
    for (std::size_t i = 0; i < c.size(); ++i) {
        double best = 0.0, bestv = 0.5 * c[i] * c[i];
        for (double y : {c[i] - t, c[i] + t}) {
            const double v = t * std::abs(y) + 0.5 * (y - c[i]) * (y - c[i]);
            if (v < bestv) {
                bestv = v;
                best = y;
            }
        }
        expect[i] = best;
    }
    CHECK(max_abs(d(x) - dct.inverse(expect)) < 1e-12);
}

TEST_CASE("transform threshold handles multiple shapes")
{
    Rng rng(4);
    TransformThresholdDenoiser d(0.05);
    CHECK(d(rng.uniform_image(Shape{8, 8, 1})).shape() == Shape{8, 8, 1});
    CHECK(d(rng.uniform_image(Shape{6, 10, 3})).shape() == Shape{6, 10, 3});
}

TEST_CASE("FNE checks")
{
    Rng rng(5);
    TransformThresholdDenoiser t(0.1);
    const FneReport r = check_fne(t, rng, 1000);
    CHECK(r.pairs_tested == 1000);
    CHECK(r.max_ratio <= 1.0 + 1e-9);
    CHECK(r.violations == 0);

    ScaledDenoiser half(0.5);
    CHECK(half.declared_fne());
    CHECK(check_fne(half, rng, 100).max_ratio <= 1e-12);

    ScaledDenoiser expansive(1.5);
    CHECK_FALSE(expansive.declared_fne());
    const FneReport e = check_fne(expansive, rng, 100);
    CHECK(e.max_ratio == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(e.violations == 100);
    CHECK(e.worst.size() == 5);
    CHECK(e.worst.front().ratio >= e.worst.back().ratio);

    CHECK_THROWS(check_fne(half, rng, 0));
}

TEST_CASE("FNE sampling near a trajectory")
{
    Rng rng(6);
    FneSampling s;
    s.shape = Shape{8, 8, 1};
    for (int i = 0; i < 5; ++i) s.trajectory.push_back(rng.uniform_image(s.shape));
    TransformThresholdDenoiser t(0.05);
    const FneReport r = check_fne(t, rng, 40, s);
    CHECK(r.pairs_tested + r.pairs_skipped == 40);
    CHECK(r.max_ratio <= 1.0 + 1e-9);
    bool near = false;
    for (const auto& p : r.worst) near = near || p.source != "uniform";
    ScaledDenoiser exp(1.5);
    const FneReport re = check_fne(exp, rng, 40, s);
    for (const auto& p : re.worst) near = near || p.source != "uniform";
    CHECK(near);
}

TEST_CASE("denoiser factory")
{
    CHECK(make_denoiser("identity")->descriptor() == "identity");
    CHECK(make_denoiser("dct:0.05")->declared_fne());
    CHECK(make_denoiser("dct-threshold:0.05")->declared_fne());
    CHECK_FALSE(make_denoiser("scaled:1.5")->declared_fne());
    CHECK_THROWS_AS(make_denoiser("bm3d"), std::invalid_argument);
    CHECK_THROWS_AS(make_denoiser("dct:abc"), std::invalid_argument);
    CHECK_THROWS_AS(make_denoiser("external"), std::invalid_argument);
}

TEST_CASE("external denoiser through a peer")
{
    const std::string ep = std::string("exec:") + PNP_ECHO + " --mode dct:0.05";
    auto d = make_denoiser("external", ep);
    CHECK_FALSE(d->declared_fne());
    Rng rng(7);
    const ImageBuffer x = rng.uniform_image(Shape{8, 8, 1});
    TransformThresholdDenoiser local(0.05);
    CHECK(max_abs((*d)(x) - local(x)) < 1e-6);  // 32-bit wire

    FneSampling s;
    s.shape = Shape{8, 8, 1};
    const FneReport r = check_fne(*d, rng, 50, s);
    CHECK(r.max_ratio <= 1.0 + 1e-3);

    auto bad = make_denoiser("external", std::string("exec:") + PNP_ECHO + " --mode wrong-shape");
    CHECK_THROWS_AS((*bad)(x), ShapeError);
}
