#pragma once

#include <cstddef>
#include <functional>
#include <string>
#include <vector>

#include <json.hpp>

#include "pnp/denoisers.hpp"
#include "pnp/image.hpp"
#include "pnp/linops.hpp"
#include "pnp/prox.hpp"

namespace pnp {

enum class SolveStatus { converged, max_iters, diverged, rejected };

std::string to_string(SolveStatus s);
SolveStatus status_from_string(const std::string& s);

using RhoSchedule = std::function<double(std::size_t n)>;

struct SolverConfig {
    double gamma1 = 0.5;
    double gamma2 = 0.99;
    double rho = 1.0;
    /// Overrides `rho` when set.
    RhoSchedule rho_schedule;
    /// Lipschitz constant of grad f (0 when f is absent).
    double beta = 0.0;
    std::size_t max_iters = 1200;
    /// Stop once both the update rate c_n and the relative fixed-point
    /// residual fall below this.
    double stop_tol = 1e-6;
    std::size_t record_every = 1;
    /// Refuse to run when the parameter conditions fail.
    bool strict = true;
    /// c_n above this counts as divergence.
    double divergence_rate = 1e3;
    /// So does any primal or dual entry above this in magnitude, which keeps
    /// the returned state representable in 32-bit floats.
    double divergence_magnitude = 1e30;
    /// Store every k-th denoiser input (0 disables).
    std::size_t trajectory_every = 0;
    /// Optional ground truth for the PSNR trace.
    ImageBuffer reference;

    void validate() const;
    double rho_at(std::size_t n) const;
    nlohmann::json to_json() const;
};

struct ConditionReport {
    bool satisfied = false;
    double norm_bound_sq = 0.0;
    /// Step condition lhs > rhs: 1/gamma1 - gamma2 |L|^2 > beta/2. For the
    /// FBS baseline: step*lambda*|Phi|^2 < 2.
    double lhs = 0.0;
    double rhs = 0.0;
    double delta = 2.0;
    double rho_min = 0.0;
    double rho_max = 0.0;
    bool rho_constant = true;
    /// Name of the first violated clause, empty when satisfied.
    std::string violated;
    std::string note;

    nlohmann::json to_json() const;
};

/// Step-size condition, relaxation bound delta and the relaxation check.
ConditionReport check_conditions(const SolverConfig& cfg, double norm_bound_sq);

struct TraceRow {
    std::size_t n = 0;
    double update_rate = 0.0;
    /// ||(x~, y~) - (x, y)||
    double residual = 0.0;
    /// NaN when absent.
    double psnr = 0.0;
    double ball_violation = 0.0;
    double box_violation = 0.0;
    double seconds = 0.0;
};

struct RunReport {
    std::string solver;
    std::string denoiser;
    nlohmann::json config;
    ConditionReport conditions;
    SolveStatus status = SolveStatus::max_iters;
    std::size_t iterations = 0;
    double final_update_rate = 0.0;
    double final_residual = 0.0;
    double min_residual = 0.0;
    double final_ball_violation = 0.0;
    double final_box_violation = 0.0;
    bool stalled = false;
    std::string diagnostic;
    double wall_seconds = 0.0;
    std::vector<TraceRow> trace;
    nlohmann::json extra = nlohmann::json::object();

    nlohmann::json to_json() const;
    static RunReport from_json(const nlohmann::json& j);
    std::string to_csv() const;
};

struct SolveResult {
    ImageBuffer x;
    std::vector<ImageBuffer> duals;
    RunReport report;
    /// Denoiser inputs sampled every `trajectory_every` iterations.
    std::vector<ImageBuffer> trajectory;
};

/// min f(x) + g(x) + h(Lx).
struct PdsProblem {
    OperatorPtr L;
    /// prox of gamma * h^* (called with gamma = gamma2).
    ProxFn prox_h_conj;
    /// Empty when f = 0.
    std::function<ImageBuffer(const ImageBuffer&)> grad_f;
    ImageBuffer x0;
    /// Empty means zero.
    ImageBuffer y0;
};

/// Classical primal-dual splitting with prox_{gamma1 g}.
SolveResult pds_solve(const PdsProblem& problem, const ProxFn& prox_g, const SolverConfig& cfg);

/// The same iteration with the prox of g replaced by the denoiser J.
SolveResult pnp_pds_solve(const PdsProblem& problem, Denoiser& j, const SolverConfig& cfg);

/// ||Phi x - v|| <= epsilon, x in [lo, hi].
struct GaussianProblem {
    OperatorPtr phi;
    ImageBuffer v;
    double epsilon = 0.0;
    double lo = 0.0;
    double hi = 1.0;
};

/// lambda * GKL_v(Phi x) with scaling eta, x in [lo, hi]. `v` holds raw counts.
struct PoissonProblem {
    OperatorPtr phi;
    ImageBuffer v;
    double eta = 1.0;
    double lambda = 1.0;
    double lo = 0.0;
    double hi = 1.0;
};

/// Three-block iteration with L = (Phi, I). `x0` defaults to v (Gaussian)
/// or v / eta (Poisson), mapped through Phi^* when shapes differ.
SolveResult corollary_solve(const GaussianProblem& problem, Denoiser& j, const SolverConfig& cfg,
                            const ImageBuffer& x0 = {});
SolveResult corollary_solve(const PoissonProblem& problem, Denoiser& j, const SolverConfig& cfg,
                            const ImageBuffer& x0 = {});

/// x <- J(x - step * lambda * Phi^*(Phi x - v)).
struct FbsProblem {
    OperatorPtr phi;
    ImageBuffer v;
    double lambda = 1.0;
    double step = 1.0;
};

/// Convergence needs step * lambda * |Phi|^2 < 2; violating that is a
/// condition failure (rejected in strict mode).
SolveResult pnp_fbs_solve(const FbsProblem& problem, Denoiser& j, const SolverConfig& cfg,
                          const ImageBuffer& x0 = {});

/// sigma_J / (2 sigma |h|_F)
double lambda_opt(double sigma_j, double sigma, double kernel_frobenius);
/// sigma * sqrt(K)
double epsilon_opt(double sigma, std::size_t pixels);

/// Smallest convex program used as a reference:
///   l1_weight * ||DCT x||_1 + quad_weight/2 ||x - quad_center||^2
///   + indicator(||phi x - ball.center|| <= ball.radius) + indicator(x in box)
struct DrProblem {
    Shape shape;
    OperatorPtr phi;  // null: no ball term
    Ball2Spec ball;
    bool has_box = true;
    double lo = 0.0;
    double hi = 1.0;
    double l1_weight = 0.0;
    double quad_weight = 0.0;
    ImageBuffer quad_center;
};

struct DrOptions {
    double gamma = 1.0;
    /// On the fixed-point residual max_i ||q_i - u||.
    double tol = 1e-10;
    std::size_t max_iters = 200000;
    /// Starting point of every block (zero when empty).
    ImageBuffer x0;
};

struct DrResult {
    ImageBuffer x;
    std::size_t iterations = 0;
    double residual = 0.0;
};

class OracleError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Douglas-Rachford on the product space with consensus. Throws OracleError
/// when `max_iters` is reached before `tol`.
DrResult dr_oracle_solve(const DrProblem& problem, const DrOptions& opts = {});

/// || x - P_box(x - Phi^* grad GKL(Phi x)) ||: zero exactly at the minimizers
/// of GKL(Phi x) + indicator(box). Independent of lambda, which does not move
/// those minimizers.
double poisson_stationarity(const PoissonProblem& problem, const ImageBuffer& x);

}  // namespace pnp
