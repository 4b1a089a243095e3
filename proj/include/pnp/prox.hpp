#pragma once

#include <functional>
#include <memory>
#include <string>

#include "pnp/dct.hpp"
#include "pnp/image.hpp"

namespace pnp {

/// A proximity operator x -> prox_{gamma F}(x) for a fixed convex F.
struct ProxFn {
    std::string descriptor;
    std::function<ImageBuffer(double gamma, const ImageBuffer& x)> eval;

    ImageBuffer operator()(double gamma, const ImageBuffer& x) const;
};

/// l2 ball centered at `center` with radius `radius` > 0.
struct Ball2Spec {
    ImageBuffer center;
    double radius = 1.0;

    Ball2Spec() = default;
    Ball2Spec(ImageBuffer center, double radius);
};

/// Weighted Poisson data fidelity lambda * GKL_v(.) with scaling eta.
///
/// Observations are raw counts. Entries of `observation` that are negative
/// by less than `negative_tolerance` are clamped to zero with a warning;
/// anything more negative is rejected.
struct GklSpec {
    ImageBuffer observation;
    double eta = 1.0;
    double lambda = 1.0;

    static constexpr double negative_tolerance = 1e-6;

    GklSpec() = default;
    GklSpec(ImageBuffer observation, double eta, double lambda = 1.0);
};

ImageBuffer proj_box(double lo, double hi, const ImageBuffer& x);
ImageBuffer proj_l2_ball(const Ball2Spec& spec, const ImageBuffer& x);

/// prox of gamma * lambda * GKL_v, coordinate-wise:
/// 0.5 * (x - g*eta + sqrt((x - g*eta)^2 + 4*g*v)) with g = lambda * gamma.
ImageBuffer prox_gkl(const GklSpec& spec, double gamma, const ImageBuffer& x);

/// GKL_v(x) = sum_i eta*x_i - v_i*log(eta*x_i) (v_i > 0, x_i > 0), eta*x_i
/// (v_i = 0, x_i >= 0), +inf otherwise. The lambda weight is not applied.
double gkl_value(const GklSpec& spec, const ImageBuffer& x);

/// Gradient of GKL_v at x (eta - v/x where v > 0, eta where v = 0). Entries
/// with v_i > 0 and x_i <= 0 are +inf.
ImageBuffer gkl_gradient(const GklSpec& spec, const ImageBuffer& x);

/// prox_{gamma F*}(x) = x - gamma * prox_{F/gamma}(x / gamma) (Moreau).
ImageBuffer prox_conjugate(const ProxFn& p, double gamma, const ImageBuffer& x);

// ProxFn factories.

ProxFn zero_prox();
ProxFn box_prox(double lo, double hi);
ProxFn ball_prox(Ball2Spec spec);
ProxFn gkl_prox(GklSpec spec);
/// prox of weight * ||DCT x||_1: soft thresholding of DCT coefficients at
/// weight * gamma.
ProxFn l1_dct_prox(double weight, std::shared_ptr<const Dct2d> dct);
/// prox of (weight/2) ||x - center||^2.
ProxFn quadratic_prox(ImageBuffer center, double weight);
/// The prox of F* built from the prox of F.
ProxFn conjugate(ProxFn p);

/// Soft-threshold of every DCT coefficient at t, mapped back.
ImageBuffer dct_soft_threshold(const Dct2d& dct, double t, const ImageBuffer& x);

}  // namespace pnp
