#pragma once

#include <cstdint>
#include <string>

#include "pnp/image.hpp"
#include "pnp/linops.hpp"
#include "pnp/rng.hpp"

namespace pnp {

struct NoiseModel {
    enum class Kind { none, gaussian, poisson };
    Kind kind = Kind::none;
    double sigma = 0.0;  // gaussian
    double eta = 1.0;    // poisson scaling

    static NoiseModel none() { return {}; }
    static NoiseModel gaussian(double sigma) { return {Kind::gaussian, sigma, 1.0}; }
    static NoiseModel poisson(double eta) { return {Kind::poisson, 0.0, eta}; }

    void validate() const;
    std::string describe() const;
};

struct DegradationSpec {
    OperatorPtr op;  // null means identity
    NoiseModel noise;
};

/// v = N(op u). Gaussian adds sigma * N(0,1) per entry. Poisson returns raw
/// counts Poisson(eta * [op u]_i); negative means are clamped to 0 with a
/// warning.
ImageBuffer degrade(const ImageBuffer& u, const DegradationSpec& spec, Rng& rng);

/// 10 log10(peak^2 / MSE) with the MSE taken over all channels jointly.
/// Identical inputs give +inf.
double psnr(const ImageBuffer& x, const ImageBuffer& ref, double peak = 1.0);

/// Mean single-scale SSIM over all valid 11x11 windows (Gaussian weights,
/// sigma 1.5), averaged over channels. Throws ShapeError when the image is
/// smaller than the window.
double ssim(const ImageBuffer& x, const ImageBuffer& ref, double peak = 1.0);

/// ||x_n - x_prev|| / ||x_prev||. Throws std::domain_error when x_prev = 0.
double update_rate(const ImageBuffer& x_n, const ImageBuffer& x_prev);

}  // namespace pnp
