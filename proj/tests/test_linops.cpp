#include <doctest.h>

#include <Eigen/Dense>

#include <cmath>
#include <filesystem>

#include "pnp/linops.hpp"
#include "pnp/rng.hpp"

using namespace pnp;

namespace {

double adjoint_gap(const LinearOperator& op, Rng& rng)
{
    const ImageBuffer x = rng.normal_image(op.input_shape());
    const ImageBuffer y = rng.normal_image(op.output_shape());
    const double lhs = dot(op.forward(x), y);
    const double rhs = dot(x, op.adjoint(y));
    return std::abs(lhs - rhs) / std::max(std::abs(lhs), 1e-300);
}

ConvolutionKernel random_kernel(Rng& rng, std::size_t h, std::size_t w)
{
    std::vector<double> taps(h * w);
    for (double& t : taps) t = rng.uniform(-0.5, 1.0);
    return ConvolutionKernel::centered(h, w, taps);
}

double dense_svd_max(std::size_t rows, std::size_t cols, const std::vector<double>& m)
{
    Eigen::MatrixXd a(rows, cols);
    for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t c = 0; c < cols; ++c) a(r, c) = m[r * cols + c];
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(a.transpose() * a);
    return std::sqrt(es.eigenvalues().maxCoeff());
}

}  // namespace

TEST_CASE("convolution: delta and DC response")
{
    Rng rng(1);
    const Shape s{8, 6, 2};
    const ImageBuffer x = rng.uniform_image(s);
    for (ConvPath p : {ConvPath::spatial, ConvPath::frequency}) {
        CHECK(distance(conv_circular(ConvolutionKernel::delta(), x, p), x) < 1e-14);
        const ConvolutionKernel k = random_kernel(rng, 3, 3);
        const ImageBuffer c(s, 0.7);
        const ImageBuffer out = conv_circular(k, c, p);
        for (double v : out.data()) REQUIRE(v == doctest::Approx(0.7 * k.sum()).epsilon(1e-12));
    }
}

TEST_CASE("convolution matches a direct summation oracle on both paths")
{
    Rng rng(2);
    const Shape s{8, 8, 1};
    const ImageBuffer x = rng.uniform_image(s);
    const ConvolutionKernel k = random_kernel(rng, 3, 3);
    ImageBuffer ref(s);
    for (std::size_t r = 0; r < 8; ++r)
        for (std::size_t c = 0; c < 8; ++c) {
            double acc = 0.0;
            for (std::size_t i = 0; i < 3; ++i)
                for (std::size_t j = 0; j < 3; ++j)
                    acc += k.at(i, j) * x.at(0, (r + 8 + 1 - i) % 8, (c + 8 + 1 - j) % 8);
            ref.at(0, r, c) = acc;
        }
    CHECK(max_abs(conv_circular(k, x, ConvPath::spatial) - ref) < 1e-10);
    CHECK(max_abs(conv_circular(k, x, ConvPath::frequency) - ref) < 1e-10);
}

TEST_CASE("adjoint identity on every operator")
{
    Rng rng(3);
    const Shape s{12, 10, 3};
    std::vector<OperatorPtr> ops;
    ops.push_back(std::make_shared<IdentityOperator>(s));
    ops.push_back(std::make_shared<ZeroOperator>(s, Shape{4, 4, 1}));
    ops.push_back(std::make_shared<ConvolutionOperator>(random_kernel(rng, 3, 3), s, ConvPath::spatial));
    ops.push_back(std::make_shared<ConvolutionOperator>(random_kernel(rng, 7, 5), s, ConvPath::frequency));
    ops.push_back(std::make_shared<MaskOperator>(SamplingMask::random(12, 10, 0.2, rng), 3));
    std::vector<double> m(5 * 7);
    for (double& e : m) e = rng.normal();
    ops.push_back(std::make_shared<MatrixOperator>(5, 7, m));
    ops.push_back(stack(ops[2], ops[0]));
    ops.push_back(stack(ops[4], ops[3]));
    for (const auto& op : ops) {
        INFO(op->describe());
        for (int t = 0; t < 3; ++t) CHECK(adjoint_gap(*op, rng) < 1e-10);
    }
}

TEST_CASE("convolution norm examples")
{
    const Shape s{16, 16, 1};
    CHECK(opnorm_conv(ConvolutionKernel::delta(), s) == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(opnorm_conv(ConvolutionKernel::box(3), s) == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("convolution norm matches power iteration")
{
    Rng rng(4);
    const Shape s{16, 16, 1};
    for (int t = 0; t < 3; ++t) {
        const ConvolutionKernel k = random_kernel(rng, 5, 5);
        ConvolutionOperator op(k, s);
        const double exact = opnorm_conv(k, s);
        CHECK(op.norm_bound() == doctest::Approx(exact).epsilon(1e-14));
        const double est = power_iteration(op, rng, {5000, 1e-15});
        CHECK(std::abs(est - exact) <= 1e-6 * exact);
    }
}

TEST_CASE("identity and mask norms")
{
    Rng rng(5);
    IdentityOperator id(Shape{6, 5, 1});
    CHECK(std::abs(power_iteration(id, 50, rng) - 1.0) <= 1e-12);
    SamplingMask m = SamplingMask::all_keep(6, 5);
    for (std::size_t i = 1; i < m.keep.size(); ++i) m.keep[i] = 0;
    MaskOperator mo(m, 1);
    CHECK(std::abs(power_iteration(mo, 50, rng) - 1.0) <= 1e-9);
}

TEST_CASE("dense matrix norm against an eigendecomposition oracle")
{
    Rng rng(6);
    std::vector<double> m(16);
    for (double& e : m) e = rng.normal();
    MatrixOperator op(4, 4, m);
    const double svd = dense_svd_max(4, 4, m);
    CHECK(std::abs(power_iteration(op, 200, rng) - svd) <= 1e-6 * svd);
    CHECK(op.norm_bound() >= svd);
}

TEST_CASE("mask examples")
{
    Rng rng(7);
    const ImageBuffer x = rng.uniform_image(Shape{5, 4, 2});
    CHECK(distance(apply_mask(SamplingMask::all_keep(5, 4), x), x) == 0.0);

    SamplingMask one = SamplingMask::all_keep(5, 4);
    for (auto& k : one.keep) k = 0;
    one.keep[7] = 1;
    const ImageBuffer y = apply_mask(one, x);
    std::size_t nonzero = 0;
    for (double v : y.data()) nonzero += v != 0.0;
    CHECK(nonzero == 2);  // one pixel, two channels
    CHECK(y.at(0, 1, 2) == x.at(0, 1, 2));

    const SamplingMask r = SamplingMask::random(5, 4, 0.4, rng);
    CHECK(r.masked() == 8);
    const ImageBuffer once = apply_mask(r, x);
    CHECK(distance(apply_mask(r, once), once) == 0.0);
}

TEST_CASE("stacked operator norm bounds")
{
    Rng rng(8);
    const Shape s{16, 16, 1};
    auto phi = std::make_shared<ConvolutionOperator>(
        normalize_kernel(ConvolutionKernel::gaussian(5, 1.0), s), s);
    auto id = std::make_shared<IdentityOperator>(s);
    CHECK(stack(phi, id)->norm_bound() == doctest::Approx(std::sqrt(2.0)).epsilon(1e-12));

    auto zero = std::make_shared<ZeroOperator>(s, s);
    const OperatorPtr zi = stack(zero, id);
    CHECK(zi->norm_bound() == 1.0);
    CHECK(std::abs(power_iteration(*zi, 50, rng) - 1.0) < 1e-12);

    std::vector<double> a(16), b(16);
    for (double& e : a) e = rng.normal();
    for (double& e : b) e = rng.normal();
    auto A = std::make_shared<MatrixOperator>(4, 4, a);
    auto B = std::make_shared<MatrixOperator>(4, 4, b);
    const OperatorPtr ab = stack(A, B);
    const double est = power_iteration(*ab, 500, rng);
    const double sa = dense_svd_max(4, 4, a), sb = dense_svd_max(4, 4, b);
    CHECK(est <= std::sqrt(sa * sa + sb * sb) + 1e-9);
    CHECK(est <= ab->norm_bound() + 1e-9);
}

TEST_CASE("kernel normalization")
{
    const Shape s{16, 16, 1};
    const ConvolutionKernel d = normalize_kernel(ConvolutionKernel::delta(), s);
    CHECK(d.taps.size() == 1);
    CHECK(d.taps[0] == doctest::Approx(1.0));

    ConvolutionKernel two = ConvolutionKernel::delta();
    two.taps[0] = 2.0;
    CHECK(normalize_kernel(two, s).taps[0] == doctest::Approx(1.0).epsilon(1e-14));

    const ConvolutionKernel g = normalize_kernel(ConvolutionKernel::gaussian(5, 1.2), s);
    CHECK(std::abs(opnorm_conv(g, s) - 1.0) <= 1e-12);
}

TEST_CASE("kernel text format round-trips")
{
    const ConvolutionKernel k = ConvolutionKernel::gaussian(3, 0.8);
    const ConvolutionKernel back = parse_kernel(format_kernel(k));
    CHECK(back.height == 3);
    CHECK(back.width == 3);
    for (std::size_t i = 0; i < 9; ++i) CHECK(back.taps[i] == doctest::Approx(k.taps[i]).epsilon(1e-15));
    CHECK_THROWS(parse_kernel("2 2\n1 2\n3\n"));
    CHECK_THROWS(parse_kernel(""));
}

TEST_CASE("shipped kernels load with the tabulated Frobenius norms")
{
    const std::filesystem::path dir = std::filesystem::path(PNP_SOURCE_DIR) / "data" / "kernels";
    const std::pair<char, double> table[] = {{'a', 0.2246}, {'b', 0.1933}, {'c', 0.1907}, {'d', 0.1778},
                                             {'e', 0.2255}, {'f', 0.2163}, {'g', 0.1917}, {'h', 0.1737},
                                             {'i', 0.1763}, {'j', 0.1429}};
    for (const auto& [name, norm] : table) {
        INFO("kernel " << name);
        const ConvolutionKernel k = load_kernel(dir / (std::string(1, name) + ".txt"));
        CHECK(k.sum() == doctest::Approx(1.0).epsilon(1e-9));
        CHECK(std::abs(k.frobenius_norm() - norm) < 5e-5);
    }
}
