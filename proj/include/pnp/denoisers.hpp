#pragma once

#include <memory>
#include <string>
#include <vector>

#include "pnp/dct.hpp"
#include "pnp/image.hpp"
#include "pnp/protocol.hpp"
#include "pnp/rng.hpp"

namespace pnp {

/// The operator J plugged into the solver.
///
/// Contract when `declared_fne()` is true: J is firmly nonexpansive on the
/// whole space, i.e. Q = 2J - Id is nonexpansive. Evaluation must be defined
/// for every finite input and preserve the shape.
class Denoiser {
public:
    virtual ~Denoiser() = default;
    virtual ImageBuffer denoise(const ImageBuffer& x) = 0;
    virtual std::string descriptor() const = 0;
    virtual bool declared_fne() const = 0;

    ImageBuffer operator()(const ImageBuffer& x) { return denoise(x); }
};

class IdentityDenoiser final : public Denoiser {
public:
    ImageBuffer denoise(const ImageBuffer& x) override { return x; }
    std::string descriptor() const override { return "identity"; }
    bool declared_fne() const override { return true; }
};

/// Soft thresholding in the orthonormal 2-D DCT domain: the prox of
/// t * ||DCT x||_1.
class TransformThresholdDenoiser final : public Denoiser {
public:
    explicit TransformThresholdDenoiser(double threshold);
    ImageBuffer denoise(const ImageBuffer& x) override;
    std::string descriptor() const override;
    bool declared_fne() const override { return true; }
    double threshold() const { return threshold_; }

private:
    const Dct2d& transform_for(const ImageBuffer& x);

    double threshold_;
    std::shared_ptr<const Dct2d> dct_;
};

/// x -> s * x. Firmly nonexpansive iff 0 <= s <= 1; other factors exist to
/// exercise failure handling.
class ScaledDenoiser final : public Denoiser {
public:
    explicit ScaledDenoiser(double factor) : factor_(factor) {}
    ImageBuffer denoise(const ImageBuffer& x) override { return scaled(factor_, x); }
    std::string descriptor() const override;
    bool declared_fne() const override { return factor_ >= 0.0 && factor_ <= 1.0; }

private:
    double factor_;
};

/// A denoiser evaluated by a peer over the wire protocol. Values cross the
/// wire as 32-bit floats, so a round trip is lossy.
class ExternalDenoiser final : public Denoiser {
public:
    ExternalDenoiser(std::unique_ptr<protocol::Client> client, std::string endpoint);
    ImageBuffer denoise(const ImageBuffer& x) override;
    std::string descriptor() const override { return "external(" + endpoint_ + ")"; }
    bool declared_fne() const override { return false; }
    const protocol::Client& client() const { return *client_; }

private:
    std::unique_ptr<protocol::Client> client_;
    std::string endpoint_;
};

/// Parses "identity", "dct:<t>", "scaled:<s>" or "external" (with `endpoint`).
std::unique_ptr<Denoiser> make_denoiser(const std::string& spec, const std::string& endpoint = {});

struct FneSampling {
    Shape shape{16, 16, 1};
    double lo = -0.5;
    double hi = 1.5;
    /// Iterates from a solver run. When non-empty, half of the pairs are drawn
    /// near these points (the point and a small perturbation of it, or two
    /// consecutive iterates).
    std::vector<ImageBuffer> trajectory;
    double perturbation = 1e-2;
    double violation_slack = 1e-6;
    std::size_t keep_worst = 5;
};

struct FnePair {
    std::size_t index = 0;
    double ratio = 0.0;
    std::string source;  // "uniform", "perturbed" or "consecutive"
};

struct FneReport {
    std::size_t pairs_tested = 0;
    std::size_t pairs_skipped = 0;  // x == y
    double max_ratio = 0.0;
    std::size_t violations = 0;
    double violation_slack = 1e-6;
    std::vector<FnePair> worst;
};

/// Samples pairs (x, y) and reports max ||Qx - Qy|| / ||x - y|| with
/// Q = 2J - Id.
FneReport check_fne(Denoiser& j, Rng& rng, std::size_t pairs, const FneSampling& sampling = {});

}  // namespace pnp
