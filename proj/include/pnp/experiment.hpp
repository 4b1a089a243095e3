#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include <json.hpp>

#include "pnp/linops.hpp"
#include "pnp/metrics.hpp"

namespace pnp {

enum class Task { deblur, inpaint };

std::string to_string(Task t);
Task task_from_string(const std::string& s);

/// Multiplier alpha on epsilon = alpha * sigma * sqrt(K) for the Gaussian
/// setting. Tabulated for sigma in {0.0025, 0.005, 0.01, 0.02, 0.04}; other
/// values give 1.
double default_alpha(Task task, double sigma);

/// Weight lambda for the Poisson setting, tabulated for eta in
/// {1, 2, 10, 50, 100, 200}; other values use the nearest entry on a log scale.
double default_lambda(Task task, double eta);

/// 1200 (deblur) / 3000 (inpaint); 4800 / 12000 for Poisson with eta <= 10.
std::size_t default_iterations(Task task, const NoiseModel& noise);

/// Everything needed to rebuild the observation operator, stored next to a
/// degraded image as JSON.
struct ForwardModel {
    Task task = Task::deblur;
    Shape shape;
    std::optional<ConvolutionKernel> kernel;  // deblur
    std::string kernel_source;
    double mask_fraction = 0.2;  // inpaint
    std::uint64_t mask_seed = 0;
    NoiseModel noise;
    std::uint64_t noise_seed = 0;
    std::string input;

    OperatorPtr build() const;
    nlohmann::json to_json() const;
    static ForwardModel from_json(const nlohmann::json& j);
};

}  // namespace pnp
