#include "pnp/experiment.hpp"

#include <array>
#include <cmath>
#include <stdexcept>
#include <utility>

namespace pnp {

std::string to_string(Task t)
{
    return t == Task::deblur ? "deblur" : "inpaint";
}

Task task_from_string(const std::string& s)
{
    if (s == "deblur") return Task::deblur;
    if (s == "inpaint") return Task::inpaint;
    throw std::invalid_argument("unknown task '" + s + "' (deblur, inpaint)");
}

namespace {

constexpr std::array<double, 5> alpha_sigma{0.0025, 0.005, 0.01, 0.02, 0.04};
constexpr std::array<double, 5> alpha_deblur{0.82, 0.86, 0.92, 0.96, 1.00};
constexpr std::array<double, 5> alpha_inpaint{0.90, 0.82, 0.82, 1.00, 1.00};

constexpr std::array<double, 6> lambda_eta{1, 2, 10, 50, 100, 200};
constexpr std::array<double, 6> lambda_deblur{2e-3, 2e-3, 1.5e-3, 1.25e-3, 1.25e-3, 1e-3};
constexpr std::array<double, 6> lambda_inpaint{1.25e-3, 1.25e-3, 1e-3, 7.5e-4, 5e-4, 5e-4};

}  // namespace

double default_alpha(Task task, double sigma)
{
    const auto& table = task == Task::deblur ? alpha_deblur : alpha_inpaint;
    for (std::size_t i = 0; i < alpha_sigma.size(); ++i)
        if (std::abs(sigma - alpha_sigma[i]) <= 1e-12) return table[i];
    return 1.0;
}

double default_lambda(Task task, double eta)
{
    if (!(eta > 0.0)) throw std::invalid_argument("default_lambda: eta must be positive");
    const auto& table = task == Task::deblur ? lambda_deblur : lambda_inpaint;
    std::size_t best = 0;
    double best_d = std::abs(std::log(eta / lambda_eta[0]));
    for (std::size_t i = 1; i < lambda_eta.size(); ++i) {
        const double d = std::abs(std::log(eta / lambda_eta[i]));
        if (d < best_d) {
            best = i;
            best_d = d;
        }
    }
    return table[best];
}

std::size_t default_iterations(Task task, const NoiseModel& noise)
{
    const bool strong = noise.kind == NoiseModel::Kind::poisson && noise.eta <= 10.0;
    if (task == Task::deblur) return strong ? 4800 : 1200;
    return strong ? 12000 : 3000;
}

OperatorPtr ForwardModel::build() const
{
    if (task == Task::deblur) {
        if (!kernel) throw std::invalid_argument("deblur model without a kernel");
        return std::make_shared<ConvolutionOperator>(*kernel, shape);
    }
    Rng rng(mask_seed);
    return std::make_shared<MaskOperator>(
        SamplingMask::random(shape.width, shape.height, mask_fraction, rng), shape.channels);
}

nlohmann::json ForwardModel::to_json() const
{
    nlohmann::json j;
    j["task"] = to_string(task);
    j["shape"] = {{"width", shape.width}, {"height", shape.height}, {"channels", shape.channels}};
    if (kernel) {
        j["kernel"] = {{"height", kernel->height},
                       {"width", kernel->width},
                       {"anchor_row", kernel->anchor_row},
                       {"anchor_col", kernel->anchor_col},
                       {"taps", kernel->taps},
                       {"source", kernel_source}};
    }
    if (task == Task::inpaint) j["mask"] = {{"fraction", mask_fraction}, {"seed", mask_seed}};
    nlohmann::json n;
    switch (noise.kind) {
    case NoiseModel::Kind::none: n["kind"] = "none"; break;
    case NoiseModel::Kind::gaussian:
        n["kind"] = "gaussian";
        n["sigma"] = noise.sigma;
        break;
    case NoiseModel::Kind::poisson:
        n["kind"] = "poisson";
        n["eta"] = noise.eta;
        break;
    }
    n["seed"] = noise_seed;
    j["noise"] = n;
    j["input"] = input;
    return j;
}

ForwardModel ForwardModel::from_json(const nlohmann::json& j)
{
    ForwardModel m;
    m.task = task_from_string(j.at("task").get<std::string>());
    const auto& s = j.at("shape");
    m.shape = Shape{s.at("width").get<std::size_t>(), s.at("height").get<std::size_t>(),
                    s.at("channels").get<std::size_t>()};
    if (j.contains("kernel")) {
        const auto& k = j["kernel"];
        ConvolutionKernel ker;
        ker.height = k.at("height").get<std::size_t>();
        ker.width = k.at("width").get<std::size_t>();
        ker.anchor_row = k.at("anchor_row").get<std::size_t>();
        ker.anchor_col = k.at("anchor_col").get<std::size_t>();
        ker.taps = k.at("taps").get<std::vector<double>>();
        ker.validate();
        m.kernel = std::move(ker);
        m.kernel_source = k.value("source", "");
    }
    if (j.contains("mask")) {
        m.mask_fraction = j["mask"].at("fraction").get<double>();
        m.mask_seed = j["mask"].at("seed").get<std::uint64_t>();
    }
    const auto& n = j.at("noise");
    const std::string kind = n.at("kind").get<std::string>();
    if (kind == "gaussian")
        m.noise = NoiseModel::gaussian(n.at("sigma").get<double>());
    else if (kind == "poisson")
        m.noise = NoiseModel::poisson(n.at("eta").get<double>());
    else if (kind != "none")
        throw std::invalid_argument("unknown noise kind '" + kind + "'");
    m.noise_seed = n.value("seed", std::uint64_t{0});
    m.input = j.value("input", "");
    if (m.task == Task::deblur && !m.kernel) throw std::invalid_argument("deblur model without a kernel");
    return m;
}

}  // namespace pnp
