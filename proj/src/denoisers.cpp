#include "pnp/denoisers.hpp"

#include <algorithm>
#include <stdexcept>

#include "pnp/prox.hpp"

namespace pnp {

TransformThresholdDenoiser::TransformThresholdDenoiser(double threshold) : threshold_(threshold)
{
    if (!(threshold >= 0.0)) throw std::invalid_argument("dct threshold must be nonnegative");
}

const Dct2d& TransformThresholdDenoiser::transform_for(const ImageBuffer& x)
{
    if (!dct_ || dct_->height() != x.height() || dct_->width() != x.width())
        dct_ = std::make_shared<const Dct2d>(x.height(), x.width());
    return *dct_;
}

ImageBuffer TransformThresholdDenoiser::denoise(const ImageBuffer& x)
{
    return dct_soft_threshold(transform_for(x), threshold_, x);
}

std::string TransformThresholdDenoiser::descriptor() const
{
    return "dct-threshold(" + std::to_string(threshold_) + ")";
}

std::string ScaledDenoiser::descriptor() const
{
    return "scaled(" + std::to_string(factor_) + ")";
}

ExternalDenoiser::ExternalDenoiser(std::unique_ptr<protocol::Client> client, std::string endpoint)
    : client_(std::move(client)), endpoint_(std::move(endpoint))
{
    if (!client_) throw std::invalid_argument("ExternalDenoiser: null client");
}

ImageBuffer ExternalDenoiser::denoise(const ImageBuffer& x) { return client_->denoise(x); }

std::unique_ptr<Denoiser> make_denoiser(const std::string& spec, const std::string& endpoint)
{
    auto param = [&](std::size_t prefix) {
        const std::string s = spec.substr(prefix);
        std::size_t used = 0;
        double v = 0.0;
        try {
            v = std::stod(s, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used != s.size() || s.empty())
            throw std::invalid_argument("bad denoiser parameter in '" + spec + "'");
        return v;
    };
    if (spec == "identity") return std::make_unique<IdentityDenoiser>();
    if (spec.rfind("dct:", 0) == 0) return std::make_unique<TransformThresholdDenoiser>(param(4));
    if (spec.rfind("dct-threshold:", 0) == 0)
        return std::make_unique<TransformThresholdDenoiser>(param(14));
    if (spec.rfind("scaled:", 0) == 0) return std::make_unique<ScaledDenoiser>(param(7));
    if (spec == "external") {
        if (endpoint.empty()) throw std::invalid_argument("external denoiser needs an endpoint");
        return std::make_unique<ExternalDenoiser>(protocol::connect(endpoint), endpoint);
    }
    throw std::invalid_argument("unknown denoiser '" + spec +
                                "' (identity, dct:<t>, scaled:<s>, external)");
}

FneReport check_fne(Denoiser& j, Rng& rng, std::size_t pairs, const FneSampling& sampling)
{
    if (pairs == 0) throw std::invalid_argument("check_fne: pairs must be >= 1");
    FneReport rep;
    rep.violation_slack = sampling.violation_slack;
    const auto& traj = sampling.trajectory;
    const std::size_t n_traj = traj.empty() ? 0 : pairs / 2;

    auto q = [&j](const ImageBuffer& x) { return axpby(2.0, j(x), -1.0, x); };

    for (std::size_t k = 0; k < pairs; ++k) {
        ImageBuffer x, y;
        std::string source;
        if (k < n_traj) {
            const std::size_t i = static_cast<std::size_t>(rng.below(traj.size()));
            if (traj.size() > 1 && rng.uniform() < 0.5) {
                const std::size_t i2 = i + 1 < traj.size() ? i + 1 : i - 1;
                x = traj[i];
                y = traj[i2];
                source = "consecutive";
            } else {
                x = traj[i];
                const double scale = sampling.perturbation * std::max(1.0, max_abs(x));
                y = x + rng.uniform_image(x.shape(), -scale, scale);
                source = "perturbed";
            }
        } else {
            x = rng.uniform_image(sampling.shape, sampling.lo, sampling.hi);
            y = rng.uniform_image(sampling.shape, sampling.lo, sampling.hi);
            source = "uniform";
        }
        const double d = distance(x, y);
        if (!(d > 0.0)) {
            ++rep.pairs_skipped;
            continue;
        }
        const double ratio = distance(q(x), q(y)) / d;
        ++rep.pairs_tested;
        rep.max_ratio = std::max(rep.max_ratio, ratio);
        if (ratio > 1.0 + sampling.violation_slack) ++rep.violations;
        rep.worst.push_back({k, ratio, source});
        std::sort(rep.worst.begin(), rep.worst.end(),
                  [](const FnePair& a, const FnePair& b) { return a.ratio > b.ratio; });
        if (rep.worst.size() > sampling.keep_worst) rep.worst.resize(sampling.keep_worst);
    }
    return rep;
}

}  // namespace pnp
