#include <doctest.h>

#include <cmath>
#include <set>

#include "pnp/rng.hpp"

using namespace pnp;

TEST_CASE("same seed, same stream")
{
    Rng a(42), b(42), c(43);
    bool differs = false;
    for (int i = 0; i < 100; ++i) {
        const double u = a.uniform();
        CHECK(u == b.uniform());
        differs = differs || (u != c.uniform());
    }
    CHECK(differs);
}

TEST_CASE("mt19937_64 reference value")
{
    // 10000th output for the default seed, fixed by the C++ standard.
    std::mt19937_64 e;
    e.discard(9999);
    CHECK(e() == 9981545732273789042ull);
}

TEST_CASE("uniform range and moments")
{
    Rng rng(1);
    const int n = 200000;
    double s = 0.0, s2 = 0.0;
    for (int i = 0; i < n; ++i) {
        const double u = rng.uniform();
        REQUIRE(u >= 0.0);
        REQUIRE(u < 1.0);
        s += u;
        s2 += u * u;
    }
    CHECK(std::abs(s / n - 0.5) < 0.005);
    CHECK(std::abs(s2 / n - 1.0 / 3.0) < 0.005);
}

TEST_CASE("below is unbiased over a small range")
{
    Rng rng(5);
    int counts[3] = {0, 0, 0};
    for (int i = 0; i < 30000; ++i) ++counts[rng.below(3)];
    for (int c : counts) CHECK(std::abs(c - 10000) < 400);
}

TEST_CASE("normal moments")
{
    Rng rng(2);
    const int n = 200000;
    double s = 0.0, s2 = 0.0, s4 = 0.0;
    for (int i = 0; i < n; ++i) {
        const double z = rng.normal();
        s += z;
        s2 += z * z;
        s4 += z * z * z * z;
    }
    CHECK(std::abs(s / n) < 0.01);
    CHECK(std::abs(s2 / n - 1.0) < 0.02);
    CHECK(std::abs(s4 / n - 3.0) < 0.1);
}

TEST_CASE("poisson mean and variance in both regimes")
{
    Rng rng(7);
    for (double mean : {0.3, 4.0, 29.0, 31.0, 100.0, 5000.0}) {
        const int n = 100000;
        double s = 0.0, s2 = 0.0;
        for (int i = 0; i < n; ++i) {
            const double k = static_cast<double>(rng.poisson(mean));
            s += k;
            s2 += k * k;
        }
        const double m = s / n;
        const double var = s2 / n - m * m;
        INFO("mean " << mean);
        CHECK(std::abs(m - mean) < 5.0 * std::sqrt(mean / n));
        CHECK(std::abs(var / mean - 1.0) < 0.03);
    }
}

TEST_CASE("poisson pmf at a large mean")
{
    // Frequencies of a few central values against the exact pmf.
    Rng rng(9);
    const double mean = 50.0;
    const int n = 400000;
    std::vector<int> hist(200, 0);
    for (int i = 0; i < n; ++i) {
        const auto k = rng.poisson(mean);
        if (k < hist.size()) ++hist[k];
    }
    for (int k : {35, 45, 50, 55, 65}) {
        const double p = std::exp(-mean + k * std::log(mean) - std::lgamma(k + 1.0));
        const double sd = std::sqrt(n * p * (1 - p));
        INFO("k " << k);
        CHECK(std::abs(hist[k] - n * p) < 5.0 * sd);
    }
}

TEST_CASE("poisson of non-positive mean is zero")
{
    Rng rng(0);
    CHECK(rng.poisson(0.0) == 0);
    CHECK(rng.poisson(-3.0) == 0);
}
