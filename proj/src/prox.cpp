#include "pnp/prox.hpp"

#include <spdlog/spdlog.h>

#include <cmath>
#include <limits>

#include "pnp/kernels.hpp"

namespace pnp {

ImageBuffer ProxFn::operator()(double gamma, const ImageBuffer& x) const
{
    return eval(gamma, x);
}

Ball2Spec::Ball2Spec(ImageBuffer c, double r) : center(std::move(c)), radius(r)
{
    if (!(radius > 0.0)) throw std::invalid_argument("l2 ball radius must be positive");
}

GklSpec::GklSpec(ImageBuffer v, double eta_, double lambda_)
    : observation(std::move(v)), eta(eta_), lambda(lambda_)
{
    if (!(eta > 0.0)) throw std::invalid_argument("GKL scaling eta must be positive");
    if (!(lambda > 0.0)) throw std::invalid_argument("GKL weight lambda must be positive");
    std::size_t clamped = 0;
    for (double& vi : observation.data()) {
        if (!std::isfinite(vi)) throw std::invalid_argument("GKL observation has non-finite entries");
        if (vi < 0.0) {
            if (vi < -negative_tolerance)
                throw std::invalid_argument("GKL observation has negative counts");
            vi = 0.0;
            ++clamped;
        }
    }
    if (clamped)
        spdlog::warn("GKL observation: clamped {} slightly negative entries to 0", clamped);
}

ImageBuffer proj_box(double lo, double hi, const ImageBuffer& x)
{
    if (!(lo < hi)) throw std::invalid_argument("proj_box: requires lo < hi");
    ImageBuffer out(x.shape());
    kernels::clamp(lo, hi, x.data(), out.data());
    return out;
}

ImageBuffer proj_l2_ball(const Ball2Spec& spec, const ImageBuffer& x)
{
    const double d = distance(x, spec.center);
    if (d <= spec.radius) return x;
    return axpy(spec.radius / d, x - spec.center, spec.center);
}

ImageBuffer prox_gkl(const GklSpec& spec, double gamma, const ImageBuffer& x)
{
    if (!(gamma > 0.0)) throw std::invalid_argument("prox_gkl: gamma must be positive");
    require_same_shape(spec.observation, x, "prox_gkl");
    const double g = spec.lambda * gamma;
    ImageBuffer out(x.shape());
    kernels::gkl_prox(g * spec.eta, g, spec.observation.data(), x.data(), out.data());
    return out;
}

double gkl_value(const GklSpec& spec, const ImageBuffer& x)
{
    require_same_shape(spec.observation, x, "gkl_value");
    constexpr double inf = std::numeric_limits<double>::infinity();
    double acc = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double v = spec.observation[i];
        const double xi = x[i];
        if (v > 0.0 && xi > 0.0)
            acc += spec.eta * xi - v * std::log(spec.eta * xi);
        else if (v == 0.0 && xi >= 0.0)
            acc += spec.eta * xi;
        else
            return inf;
    }
    return acc;
}

ImageBuffer gkl_gradient(const GklSpec& spec, const ImageBuffer& x)
{
    require_same_shape(spec.observation, x, "gkl_gradient");
    ImageBuffer g(x.shape());
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double v = spec.observation[i];
        if (v == 0.0)
            g[i] = spec.eta;
        else
            g[i] = x[i] > 0.0 ? spec.eta - v / x[i] : std::numeric_limits<double>::infinity();
    }
    return g;
}

ImageBuffer prox_conjugate(const ProxFn& p, double gamma, const ImageBuffer& x)
{
    if (!(gamma > 0.0)) throw std::invalid_argument("prox_conjugate: gamma must be positive");
    return axpy(-gamma, p(1.0 / gamma, scaled(1.0 / gamma, x)), x);
}

ProxFn zero_prox()
{
    return {"zero", [](double, const ImageBuffer& x) { return x; }};
}

ProxFn box_prox(double lo, double hi)
{
    if (!(lo < hi)) throw std::invalid_argument("box_prox: requires lo < hi");
    return {"box[" + std::to_string(lo) + "," + std::to_string(hi) + "]",
            [lo, hi](double, const ImageBuffer& x) { return proj_box(lo, hi, x); }};
}

ProxFn ball_prox(Ball2Spec spec)
{
    const std::string d = "ball(r=" + std::to_string(spec.radius) + ")";
    return {d, [s = std::move(spec)](double, const ImageBuffer& x) { return proj_l2_ball(s, x); }};
}

ProxFn gkl_prox(GklSpec spec)
{
    const std::string d =
        "gkl(eta=" + std::to_string(spec.eta) + ",lambda=" + std::to_string(spec.lambda) + ")";
    return {d, [s = std::move(spec)](double gamma, const ImageBuffer& x) {
                return prox_gkl(s, gamma, x);
            }};
}

ImageBuffer dct_soft_threshold(const Dct2d& dct, double t, const ImageBuffer& x)
{
    if (!(t >= 0.0)) throw std::invalid_argument("soft threshold must be nonnegative");
    ImageBuffer coeffs = dct.forward(x);
    kernels::soft_threshold(t, coeffs.data(), coeffs.data());
    return dct.inverse(coeffs);
}

ProxFn l1_dct_prox(double weight, std::shared_ptr<const Dct2d> dct)
{
    if (!(weight >= 0.0)) throw std::invalid_argument("l1_dct_prox: negative weight");
    return {"l1dct(w=" + std::to_string(weight) + ")",
            [weight, dct = std::move(dct)](double gamma, const ImageBuffer& x) {
                return dct_soft_threshold(*dct, weight * gamma, x);
            }};
}

ProxFn quadratic_prox(ImageBuffer center, double weight)
{
    if (!(weight >= 0.0)) throw std::invalid_argument("quadratic_prox: negative weight");
    return {"quadratic(w=" + std::to_string(weight) + ")",
            [c = std::move(center), weight](double gamma, const ImageBuffer& x) {
                const double gw = gamma * weight;
                return axpby(1.0 / (1.0 + gw), x, gw / (1.0 + gw), c);
            }};
}

ProxFn conjugate(ProxFn p)
{
    std::string d = "conj(" + p.descriptor + ")";
    return {std::move(d), [p = std::move(p)](double gamma, const ImageBuffer& x) {
                return prox_conjugate(p, gamma, x);
            }};
}

}  // namespace pnp
