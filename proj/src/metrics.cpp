#include "pnp/metrics.hpp"

#include <spdlog/spdlog.h>

#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

namespace pnp {

void NoiseModel::validate() const
{
    switch (kind) {
    case Kind::none: return;
    case Kind::gaussian:
        if (!(sigma >= 0.0) || !std::isfinite(sigma))
            throw std::invalid_argument("gaussian noise sigma must be >= 0");
        return;
    case Kind::poisson:
        if (!(eta > 0.0) || !std::isfinite(eta))
            throw std::invalid_argument("poisson scaling eta must be > 0");
        return;
    }
}

std::string NoiseModel::describe() const
{
    switch (kind) {
    case Kind::gaussian: return "gaussian(sigma=" + std::to_string(sigma) + ")";
    case Kind::poisson: return "poisson(eta=" + std::to_string(eta) + ")";
    default: return "none";
    }
}

ImageBuffer degrade(const ImageBuffer& u, const DegradationSpec& spec, Rng& rng)
{
    spec.noise.validate();
    const auto d = u.data();
    for (double v : d) {
        if (v < 0.0 || v > 1.0) {
            spdlog::warn("degrade: input has values outside [0,1]");
            break;
        }
    }
    ImageBuffer clean = spec.op ? spec.op->forward(u) : u;
    switch (spec.noise.kind) {
    case NoiseModel::Kind::none: return clean;
    case NoiseModel::Kind::gaussian:
        if (spec.noise.sigma == 0.0) return clean;
        for (double& v : clean.data()) v += spec.noise.sigma * rng.normal();
        return clean;
    case NoiseModel::Kind::poisson: {
        std::size_t clamped = 0;
        for (double& v : clean.data()) {
            double mean = spec.noise.eta * v;
            if (mean < 0.0) {
                mean = 0.0;
                ++clamped;
            }
            v = static_cast<double>(rng.poisson(mean));
        }
        if (clamped) spdlog::warn("degrade: clamped {} negative Poisson means to 0", clamped);
        return clean;
    }
    }
    return clean;
}

double psnr(const ImageBuffer& x, const ImageBuffer& ref, double peak)
{
    require_same_shape(x, ref, "psnr");
    if (x.empty()) throw ShapeError("psnr: empty image");
    const double d = distance(x, ref);
    if (d == 0.0) return std::numeric_limits<double>::infinity();
    const double mse = d * d / static_cast<double>(x.size());
    return 10.0 * std::log10(peak * peak / mse);
}

namespace {

constexpr std::size_t ssim_window = 11;
constexpr double ssim_sigma = 1.5;

std::vector<double> ssim_weights()
{
    std::vector<double> g(ssim_window);
    const double c = (ssim_window - 1) / 2.0;
    double s = 0.0;
    for (std::size_t i = 0; i < ssim_window; ++i) {
        const double t = (static_cast<double>(i) - c) / ssim_sigma;
        g[i] = std::exp(-0.5 * t * t);
        s += g[i];
    }
    for (double& v : g) v /= s;
    return g;
}

}  // namespace

double ssim(const ImageBuffer& x, const ImageBuffer& ref, double peak)
{
    require_same_shape(x, ref, "ssim");
    if (x.width() < ssim_window || x.height() < ssim_window)
        throw ShapeError("ssim: image smaller than the 11x11 window");
    const double c1 = (0.01 * peak) * (0.01 * peak);
    const double c2 = (0.03 * peak) * (0.03 * peak);
    const auto g = ssim_weights();
    const std::size_t h = x.height(), w = x.width();
    const std::size_t oh = h - ssim_window + 1, ow = w - ssim_window + 1;

    double total = 0.0;
    for (std::size_t c = 0; c < x.channels(); ++c) {
        double acc = 0.0;
        for (std::size_t r0 = 0; r0 < oh; ++r0) {
            for (std::size_t c0 = 0; c0 < ow; ++c0) {
                double mx = 0, my = 0, sxx = 0, syy = 0, sxy = 0;
                for (std::size_t i = 0; i < ssim_window; ++i) {
                    for (std::size_t j = 0; j < ssim_window; ++j) {
                        const double wt = g[i] * g[j];
                        const double a = x.at(c, r0 + i, c0 + j);
                        const double b = ref.at(c, r0 + i, c0 + j);
                        mx += wt * a;
                        my += wt * b;
                        sxx += wt * a * a;
                        syy += wt * b * b;
                        sxy += wt * a * b;
                    }
                }
                const double vx = sxx - mx * mx, vy = syy - my * my, cxy = sxy - mx * my;
                acc += ((2 * mx * my + c1) * (2 * cxy + c2)) /
                       ((mx * mx + my * my + c1) * (vx + vy + c2));
            }
        }
        total += acc / static_cast<double>(oh * ow);
    }
    return total / static_cast<double>(x.channels());
}

double update_rate(const ImageBuffer& x_n, const ImageBuffer& x_prev)
{
    require_same_shape(x_n, x_prev, "update_rate");
    const double base = l2_norm(x_prev);
    if (base == 0.0) throw std::domain_error("update_rate: previous iterate is zero");
    return distance(x_n, x_prev) / base;
}

}  // namespace pnp
