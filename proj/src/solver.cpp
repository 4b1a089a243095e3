#include "pnp/solver.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "pnp/metrics.hpp"

namespace pnp {

namespace {

constexpr double nan_v = std::numeric_limits<double>::quiet_NaN();
constexpr double inf_v = std::numeric_limits<double>::infinity();
using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0)
{
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

}  // namespace

std::string to_string(SolveStatus s)
{
    switch (s) {
    case SolveStatus::converged: return "converged";
    case SolveStatus::max_iters: return "max_iters";
    case SolveStatus::diverged: return "diverged";
    case SolveStatus::rejected: return "rejected";
    }
    return "unknown";
}

SolveStatus status_from_string(const std::string& s)
{
    for (auto v : {SolveStatus::converged, SolveStatus::max_iters, SolveStatus::diverged,
                   SolveStatus::rejected})
        if (to_string(v) == s) return v;
    throw std::invalid_argument("unknown solve status '" + s + "'");
}

// ---------------------------------------------------------------- config

void SolverConfig::validate() const
{
    if (!(gamma1 > 0.0) || !std::isfinite(gamma1))
        throw std::invalid_argument("gamma1 must be positive");
    if (!(gamma2 > 0.0) || !std::isfinite(gamma2))
        throw std::invalid_argument("gamma2 must be positive");
    if (!(beta >= 0.0)) throw std::invalid_argument("beta must be >= 0");
    if (max_iters < 1) throw std::invalid_argument("max_iters must be >= 1");
    if (record_every < 1) throw std::invalid_argument("record_every must be >= 1");
    if (!(stop_tol >= 0.0)) throw std::invalid_argument("stop_tol must be >= 0");
    if (!(divergence_magnitude > 0.0)) throw std::invalid_argument("divergence_magnitude must be positive");
}

double SolverConfig::rho_at(std::size_t n) const
{
    return rho_schedule ? rho_schedule(n) : rho;
}

nlohmann::json SolverConfig::to_json() const
{
    nlohmann::json j;
    j["gamma1"] = gamma1;
    j["gamma2"] = gamma2;
    if (rho_schedule)
        j["rho"] = "schedule";
    else
        j["rho"] = rho;
    j["beta"] = beta;
    j["max_iters"] = max_iters;
    j["stop_tol"] = stop_tol;
    j["record_every"] = record_every;
    j["strict"] = strict;
    j["divergence_rate"] = divergence_rate;
    j["divergence_magnitude"] = divergence_magnitude;
    j["has_reference"] = !reference.empty();
    return j;
}

nlohmann::json ConditionReport::to_json() const
{
    return {{"satisfied", satisfied}, {"norm_bound_sq", norm_bound_sq},
            {"lhs", lhs},             {"rhs", rhs},
            {"delta", delta},         {"rho_min", rho_min},
            {"rho_max", rho_max},     {"rho_constant", rho_constant},
            {"violated", violated},   {"note", note}};
}

ConditionReport check_conditions(const SolverConfig& cfg, double norm_bound_sq)
{
    cfg.validate();
    if (!(norm_bound_sq >= 0.0)) throw std::invalid_argument("norm bound must be >= 0");
    ConditionReport rep;
    rep.norm_bound_sq = norm_bound_sq;
    rep.lhs = 1.0 / cfg.gamma1 - cfg.gamma2 * norm_bound_sq;
    rep.rhs = cfg.beta / 2.0;
    const bool step_ok = rep.lhs > rep.rhs;
    if (cfg.beta == 0.0)
        rep.delta = 2.0;
    else
        rep.delta = rep.lhs > 0.0 ? 2.0 - (cfg.beta / 2.0) / rep.lhs : 0.0;

    rep.rho_constant = !cfg.rho_schedule;
    if (rep.rho_constant) {
        rep.rho_min = rep.rho_max = cfg.rho;
    } else {
        rep.rho_min = inf_v;
        rep.rho_max = -inf_v;
        for (std::size_t n = 0; n < cfg.max_iters; ++n) {
            const double r = cfg.rho_schedule(n);
            rep.rho_min = std::min(rep.rho_min, r);
            rep.rho_max = std::max(rep.rho_max, r);
        }
    }
    const bool rho_ok = rep.rho_min > 0.0 && rep.rho_max < rep.delta;

    if (!step_ok)
        rep.violated = "step_size";
    else if (!rho_ok)
        rep.violated = "relaxation";
    rep.satisfied = rep.violated.empty();

    if (rep.rho_constant)
        rep.note = rho_ok ? "constant rho in (0, delta): the divergent-sum condition holds"
                          : "constant rho outside (0, delta)";
    else
        rep.note = "schedule checked over the first max_iters terms only";
    return rep;
}

// ---------------------------------------------------------------- report

nlohmann::json RunReport::to_json() const
{
    nlohmann::json j;
    j["solver"] = solver;
    j["denoiser"] = denoiser;
    j["config"] = config;
    j["conditions"] = conditions.to_json();
    j["status"] = to_string(status);
    j["iterations"] = iterations;
    j["final_update_rate"] = final_update_rate;
    j["final_residual"] = final_residual;
    j["min_residual"] = min_residual;
    j["final_ball_violation"] = final_ball_violation;
    j["final_box_violation"] = final_box_violation;
    j["stalled"] = stalled;
    j["diagnostic"] = diagnostic;
    j["wall_seconds"] = wall_seconds;
    auto col = [this](auto field) {
        nlohmann::json a = nlohmann::json::array();
        for (const auto& r : trace) a.push_back(field(r));
        return a;
    };
    j["trace"] = {
        {"n", col([](const TraceRow& r) { return r.n; })},
        {"update_rate", col([](const TraceRow& r) { return r.update_rate; })},
        {"residual", col([](const TraceRow& r) { return r.residual; })},
        {"psnr", col([](const TraceRow& r) { return r.psnr; })},
        {"ball_violation", col([](const TraceRow& r) { return r.ball_violation; })},
        {"box_violation", col([](const TraceRow& r) { return r.box_violation; })},
        {"seconds", col([](const TraceRow& r) { return r.seconds; })},
    };
    j["extra"] = extra;
    return j;
}

namespace {

// NaN and infinities serialize as null.
double num(const nlohmann::json& j)
{
    return j.is_null() ? nan_v : j.get<double>();
}

}  // namespace

RunReport RunReport::from_json(const nlohmann::json& j)
{
    RunReport r;
    r.solver = j.at("solver").get<std::string>();
    r.denoiser = j.at("denoiser").get<std::string>();
    r.config = j.at("config");
    const auto& c = j.at("conditions");
    r.conditions.satisfied = c.at("satisfied").get<bool>();
    r.conditions.norm_bound_sq = num(c.at("norm_bound_sq"));
    r.conditions.lhs = num(c.at("lhs"));
    r.conditions.rhs = num(c.at("rhs"));
    r.conditions.delta = num(c.at("delta"));
    r.conditions.rho_min = num(c.at("rho_min"));
    r.conditions.rho_max = num(c.at("rho_max"));
    r.conditions.rho_constant = c.at("rho_constant").get<bool>();
    r.conditions.violated = c.at("violated").get<std::string>();
    r.conditions.note = c.at("note").get<std::string>();
    r.status = status_from_string(j.at("status").get<std::string>());
    r.iterations = j.at("iterations").get<std::size_t>();
    r.final_update_rate = num(j.at("final_update_rate"));
    r.final_residual = num(j.at("final_residual"));
    r.min_residual = num(j.at("min_residual"));
    r.final_ball_violation = num(j.at("final_ball_violation"));
    r.final_box_violation = num(j.at("final_box_violation"));
    r.stalled = j.at("stalled").get<bool>();
    r.diagnostic = j.at("diagnostic").get<std::string>();
    r.wall_seconds = num(j.at("wall_seconds"));
    const auto& t = j.at("trace");
    const std::size_t rows = t.at("n").size();
    for (const char* key : {"update_rate", "residual", "psnr", "ball_violation", "box_violation",
                            "seconds"})
        if (t.at(key).size() != rows) throw std::invalid_argument("trace columns differ in length");
    for (std::size_t i = 0; i < rows; ++i) {
        TraceRow row;
        row.n = t["n"][i].get<std::size_t>();
        row.update_rate = num(t["update_rate"][i]);
        row.residual = num(t["residual"][i]);
        row.psnr = num(t["psnr"][i]);
        row.ball_violation = num(t["ball_violation"][i]);
        row.box_violation = num(t["box_violation"][i]);
        row.seconds = num(t["seconds"][i]);
        r.trace.push_back(row);
    }
    if (j.contains("extra")) r.extra = j["extra"];
    return r;
}

std::string RunReport::to_csv() const
{
    std::ostringstream os;
    os.precision(17);
    os << "n,update_rate,residual,psnr,ball_violation,box_violation,seconds\n";
    for (const auto& r : trace)
        os << r.n << ',' << r.update_rate << ',' << r.residual << ',' << r.psnr << ','
           << r.ball_violation << ',' << r.box_violation << ',' << r.seconds << '\n';
    return os.str();
}

// ---------------------------------------------------------------- driver

namespace {

struct Iterate {
    ImageBuffer x;
    std::vector<ImageBuffer> y;
};

struct Step {
    Iterate next;
    Iterate tilde;
    ImageBuffer denoiser_input;
};

struct Violations {
    double ball = nan_v;
    double box = nan_v;
};

using StepFn = std::function<Step(const Iterate&, std::size_t)>;
using ViolationFn = std::function<Violations(const ImageBuffer&)>;

bool finite(const Iterate& it)
{
    if (!it.x.all_finite()) return false;
    return std::all_of(it.y.begin(), it.y.end(), [](const ImageBuffer& b) { return b.all_finite(); });
}

double magnitude(const Iterate& it)
{
    double m = max_abs(it.x);
    for (const auto& b : it.y) m = std::max(m, max_abs(b));
    return m;
}

double residual(const Iterate& a, const Iterate& b)
{
    double d = distance(a.x, b.x);
    double acc = d * d;
    for (std::size_t i = 0; i < a.y.size(); ++i) {
        d = distance(a.y[i], b.y[i]);
        acc += d * d;
    }
    return std::sqrt(acc);
}

double sq_norm(const Iterate& it)
{
    double acc = dot(it.x, it.x);
    for (const auto& y : it.y) acc += dot(y, y);
    return acc;
}

// c_n, falling back to the absolute change when the previous iterate is 0.
double change_rate(const ImageBuffer& x, const ImageBuffer& prev)
{
    const double base = l2_norm(prev);
    const double d = distance(x, prev);
    return base > 0.0 ? d / base : d;
}

Iterate relax(double rho, Iterate tilde, const Iterate& cur)
{
    if (rho == 1.0) return tilde;
    Iterate out;
    out.x = axpby(rho, tilde.x, 1.0 - rho, cur.x);
    for (std::size_t i = 0; i < cur.y.size(); ++i)
        out.y.push_back(axpby(rho, tilde.y[i], 1.0 - rho, cur.y[i]));
    return out;
}

void detect_stall(RunReport& rep, const std::vector<double>& history)
{
    if (rep.status != SolveStatus::max_iters || history.size() < 20) return;
    const bool violating = (std::isfinite(rep.final_ball_violation) && rep.final_ball_violation > 1e-6) ||
                           (std::isfinite(rep.final_box_violation) && rep.final_box_violation > 1e-6);
    if (!violating) return;
    const std::size_t q = history.size() / 4;
    const auto last = history.end();
    const double recent = *std::min_element(last - static_cast<std::ptrdiff_t>(q), last);
    const double before = *std::min_element(last - static_cast<std::ptrdiff_t>(2 * q),
                                            last - static_cast<std::ptrdiff_t>(q));
    if (recent > 0.5 * before) {
        rep.stalled = true;
        rep.diagnostic = "residual plateau with constraint violation; the constraint set may be "
                         "empty or the parameters too aggressive";
    }
}

SolveResult drive(Iterate start, const SolverConfig& cfg, RunReport rep, const StepFn& step,
                  const ViolationFn& violations)
{
    SolveResult res;
    const auto t0 = Clock::now();
    rep.config = cfg.to_json();
    rep.min_residual = inf_v;
    rep.final_update_rate = nan_v;
    rep.final_residual = nan_v;

    if (!rep.conditions.satisfied) {
        const std::string msg = "parameter condition violated (" + rep.conditions.violated + ")";
        if (cfg.strict) {
            rep.status = SolveStatus::rejected;
            rep.diagnostic = msg;
            const Violations v = violations(start.x);
            rep.final_ball_violation = v.ball;
            rep.final_box_violation = v.box;
            res.x = std::move(start.x);
            res.duals = std::move(start.y);
            res.report = std::move(rep);
            return res;
        }
        spdlog::warn("{}; running anyway (non-strict)", msg);
        rep.diagnostic = msg;
    }

    const bool want_psnr = !cfg.reference.empty() && cfg.reference.shape() == start.x.shape();
    Iterate cur = std::move(start);
    std::vector<double> history;
    rep.status = SolveStatus::max_iters;

    for (std::size_t n = 0; n < cfg.max_iters; ++n) {
        const auto ti = Clock::now();
        Step s = step(cur, n);
        if (cfg.trajectory_every && n % cfg.trajectory_every == 0 && s.denoiser_input.all_finite())
            res.trajectory.push_back(s.denoiser_input);

        const bool ok = finite(s.next);
        const double c = ok ? change_rate(s.next.x, cur.x) : nan_v;
        const bool huge = ok && magnitude(s.next) > cfg.divergence_magnitude;
        if (!ok || huge || c > cfg.divergence_rate) {
            rep.status = SolveStatus::diverged;
            if (!ok)
                rep.diagnostic = "non-finite iterate";
            else if (huge)
                rep.diagnostic = "iterate magnitude exceeded " + std::to_string(cfg.divergence_magnitude);
            else
                rep.diagnostic = "update rate " + std::to_string(c) + " exceeded the divergence limit";
            rep.diagnostic += " at iteration " + std::to_string(n + 1) + "; returning the last finite state";
            break;
        }
        const double r = residual(s.tilde, cur);
        cur = std::move(s.next);
        rep.iterations = n + 1;
        rep.final_update_rate = c;
        rep.final_residual = r;
        rep.min_residual = std::min(rep.min_residual, r);
        history.push_back(r);

        // The primal can stall while the duals still move, so both must settle.
        const double scale = std::sqrt(sq_norm(cur));
        const double rel_r = scale > 0.0 ? r / scale : r;
        const bool done = c < cfg.stop_tol && rel_r < cfg.stop_tol;
        if (n % cfg.record_every == 0 || done || n + 1 == cfg.max_iters) {
            const Violations v = violations(cur.x);
            rep.trace.push_back({n + 1, c, r, want_psnr ? psnr(cur.x, cfg.reference) : nan_v, v.ball,
                                 v.box, seconds_since(ti)});
        }
        if (done) {
            rep.status = SolveStatus::converged;
            break;
        }
    }

    const Violations v = violations(cur.x);
    rep.final_ball_violation = v.ball;
    rep.final_box_violation = v.box;
    detect_stall(rep, history);
    rep.wall_seconds = seconds_since(t0);
    res.x = std::move(cur.x);
    res.duals = std::move(cur.y);
    res.report = std::move(rep);
    return res;
}

double box_violation(double lo, double hi, const ImageBuffer& x)
{
    double v = 0.0;
    for (double xi : x.data()) v = std::max({v, lo - xi, xi - hi});
    return v;
}

Violations no_violations(const ImageBuffer&) { return {}; }

// Shared by pds_solve and pnp_pds_solve so that equal primal steps give
// bitwise-equal trajectories.
SolveResult run_pds(const PdsProblem& p, const std::function<ImageBuffer(const ImageBuffer&)>& primal,
                    const SolverConfig& cfg, RunReport rep)
{
    if (!p.L) throw std::invalid_argument("PdsProblem: missing operator L");
    if (!p.prox_h_conj.eval) throw std::invalid_argument("PdsProblem: missing prox of h*");
    if (p.x0.shape() != p.L->input_shape()) throw ShapeError("PdsProblem: x0 does not match L");
    const LinearOperator& L = *p.L;
    const double nb = L.norm_bound();
    rep.conditions = check_conditions(cfg, nb * nb);

    Iterate start{p.x0, {p.y0.empty() ? ImageBuffer(L.output_shape()) : p.y0}};
    if (start.y[0].shape() != L.output_shape()) throw ShapeError("PdsProblem: y0 does not match L");

    const double g1 = cfg.gamma1, g2 = cfg.gamma2;
    StepFn step = [&](const Iterate& it, std::size_t n) {
        ImageBuffer g = L.adjoint(it.y[0]);
        if (p.grad_f) g = g + p.grad_f(it.x);
        Step s;
        s.denoiser_input = axpy(-g1, g, it.x);
        ImageBuffer xt = primal(s.denoiser_input);
        require_same_shape(xt, it.x, "primal step output");
        ImageBuffer w = axpy(g2, L.forward(axpby(2.0, xt, -1.0, it.x)), it.y[0]);
        s.tilde = Iterate{std::move(xt), {p.prox_h_conj(g2, w)}};
        s.next = relax(cfg.rho_at(n), s.tilde, it);
        return s;
    };
    return drive(std::move(start), cfg, std::move(rep), step, no_violations);
}

ImageBuffer initial_point(const OperatorPtr& phi, const ImageBuffer& v, double scale, const ImageBuffer& x0)
{
    if (!x0.empty()) {
        if (x0.shape() != phi->input_shape()) throw ShapeError("x0 does not match the operator");
        return x0;
    }
    ImageBuffer base = scale == 1.0 ? v : scaled(scale, v);
    if (phi->input_shape() == phi->output_shape()) return base;
    return phi->adjoint(base);
}

// Three-block iteration with L = (Phi, I); `data_prox` is the prox of the
// data term D (its conjugate is taken via the Moreau identity).
SolveResult run_corollary(const OperatorPtr& phi, const ProxFn& data_prox, double lo, double hi,
                          ImageBuffer x0, Denoiser& j, const SolverConfig& cfg, RunReport rep,
                          const ViolationFn& violations)
{
    const double nphi = phi->norm_bound();
    rep.conditions = check_conditions(cfg, nphi * nphi + 1.0);
    const ProxFn box = box_prox(lo, hi);
    const LinearOperator& A = *phi;
    Iterate start{std::move(x0), {ImageBuffer(A.output_shape()), ImageBuffer(A.input_shape())}};

    const double g1 = cfg.gamma1, g2 = cfg.gamma2;
    StepFn step = [&](const Iterate& it, std::size_t n) {
        const ImageBuffer& x = it.x;
        Step s;
        s.denoiser_input = axpy(-g1, A.adjoint(it.y[0]) + it.y[1], x);
        ImageBuffer xt = j(s.denoiser_input);
        require_same_shape(xt, x, "denoiser output");
        const ImageBuffer d = axpby(2.0, xt, -1.0, x);
        ImageBuffer y1 = prox_conjugate(data_prox, g2, axpy(g2, A.forward(d), it.y[0]));
        ImageBuffer y2 = prox_conjugate(box, g2, axpy(g2, d, it.y[1]));
        s.tilde = Iterate{std::move(xt), {std::move(y1), std::move(y2)}};
        s.next = relax(cfg.rho_at(n), s.tilde, it);
        return s;
    };
    return drive(std::move(start), cfg, std::move(rep), step, violations);
}

}  // namespace

SolveResult pds_solve(const PdsProblem& problem, const ProxFn& prox_g, const SolverConfig& cfg)
{
    if (!prox_g.eval) throw std::invalid_argument("pds_solve: missing prox of g");
    RunReport rep;
    rep.solver = "pds";
    rep.denoiser = prox_g.descriptor;
    const double g1 = cfg.gamma1;
    return run_pds(problem, [&](const ImageBuffer& z) { return prox_g(g1, z); }, cfg, std::move(rep));
}

SolveResult pnp_pds_solve(const PdsProblem& problem, Denoiser& j, const SolverConfig& cfg)
{
    RunReport rep;
    rep.solver = "pnp-pds";
    rep.denoiser = j.descriptor();
    return run_pds(problem, [&](const ImageBuffer& z) { return j(z); }, cfg, std::move(rep));
}

SolveResult corollary_solve(const GaussianProblem& p, Denoiser& j, const SolverConfig& cfg,
                            const ImageBuffer& x0)
{
    if (!p.phi) throw std::invalid_argument("GaussianProblem: missing operator");
    if (p.v.shape() != p.phi->output_shape()) throw ShapeError("GaussianProblem: v does not match Phi");
    cfg.validate();
    RunReport rep;
    rep.solver = "pnp-pds-gaussian";
    rep.denoiser = j.descriptor();
    rep.extra["epsilon"] = p.epsilon;
    const ProxFn ball = ball_prox(Ball2Spec(p.v, p.epsilon));
    const OperatorPtr phi = p.phi;
    ViolationFn viol = [&p, phi](const ImageBuffer& x) {
        const double d = distance(phi->forward(x), p.v);
        return Violations{std::max(0.0, d / p.epsilon - 1.0), box_violation(p.lo, p.hi, x)};
    };
    return run_corollary(phi, ball, p.lo, p.hi, initial_point(phi, p.v, 1.0, x0), j, cfg,
                         std::move(rep), viol);
}

SolveResult corollary_solve(const PoissonProblem& p, Denoiser& j, const SolverConfig& cfg,
                            const ImageBuffer& x0)
{
    if (!p.phi) throw std::invalid_argument("PoissonProblem: missing operator");
    if (p.v.shape() != p.phi->output_shape()) throw ShapeError("PoissonProblem: v does not match Phi");
    cfg.validate();
    RunReport rep;
    rep.solver = "pnp-pds-poisson";
    rep.denoiser = j.descriptor();
    rep.extra["eta"] = p.eta;
    rep.extra["lambda"] = p.lambda;
    const ProxFn gkl = gkl_prox(GklSpec(p.v, p.eta, p.lambda));
    ViolationFn viol = [&p](const ImageBuffer& x) {
        return Violations{nan_v, box_violation(p.lo, p.hi, x)};
    };
    return run_corollary(p.phi, gkl, p.lo, p.hi, initial_point(p.phi, p.v, 1.0 / p.eta, x0), j, cfg,
                         std::move(rep), viol);
}

SolveResult pnp_fbs_solve(const FbsProblem& p, Denoiser& j, const SolverConfig& cfg,
                          const ImageBuffer& x0)
{
    if (!p.phi) throw std::invalid_argument("FbsProblem: missing operator");
    if (p.v.shape() != p.phi->output_shape()) throw ShapeError("FbsProblem: v does not match Phi");
    if (!(p.lambda > 0.0) || !(p.step > 0.0))
        throw std::invalid_argument("FbsProblem: lambda and step must be positive");
    cfg.validate();
    RunReport rep;
    rep.solver = "pnp-fbs";
    rep.denoiser = j.descriptor();
    rep.extra["lambda"] = p.lambda;
    rep.extra["step"] = p.step;

    const double nphi = p.phi->norm_bound();
    auto& c = rep.conditions;
    c.norm_bound_sq = nphi * nphi;
    c.lhs = p.step * p.lambda * c.norm_bound_sq;
    c.rhs = 2.0;
    c.delta = nan_v;
    c.rho_min = c.rho_max = nan_v;
    c.satisfied = c.lhs < c.rhs;
    c.violated = c.satisfied ? "" : "lambda_bound";
    c.note = "requires step * lambda * |Phi|^2 < 2; no relaxation";

    const LinearOperator& A = *p.phi;
    const double s = p.step * p.lambda;
    StepFn step = [&](const Iterate& it, std::size_t) {
        Step st;
        st.denoiser_input = axpy(-s, A.adjoint(A.forward(it.x) - p.v), it.x);
        ImageBuffer xn = j(st.denoiser_input);
        require_same_shape(xn, it.x, "denoiser output");
        st.tilde = Iterate{xn, {}};
        st.next = Iterate{std::move(xn), {}};
        return st;
    };
    return drive(Iterate{initial_point(p.phi, p.v, 1.0, x0), {}}, cfg, std::move(rep), step,
                 no_violations);
}

double lambda_opt(double sigma_j, double sigma, double kernel_frobenius)
{
    if (!(sigma > 0.0) || !(kernel_frobenius > 0.0))
        throw std::invalid_argument("lambda_opt: sigma and the kernel norm must be positive");
    return sigma_j / (2.0 * sigma * kernel_frobenius);
}

double epsilon_opt(double sigma, std::size_t pixels)
{
    if (!(sigma >= 0.0)) throw std::invalid_argument("epsilon_opt: sigma must be >= 0");
    if (pixels < 1) throw std::invalid_argument("epsilon_opt: K must be >= 1");
    return sigma * std::sqrt(static_cast<double>(pixels));
}

double poisson_stationarity(const PoissonProblem& p, const ImageBuffer& x)
{
    const GklSpec spec(p.v, p.eta, p.lambda);
    const ImageBuffer grad = p.phi->adjoint(gkl_gradient(spec, p.phi->forward(x)));
    if (!grad.all_finite()) return inf_v;
    return distance(x, proj_box(p.lo, p.hi, x - grad));
}

// ---------------------------------------------------------------- DR oracle

namespace {

struct Pt {
    ImageBuffer a;  // x block
    ImageBuffer b;  // z = phi x block (empty without phi)
};

double pt_dist(const Pt& p, const Pt& q)
{
    double d = distance(p.a, q.a);
    double acc = d * d;
    if (!p.b.empty()) {
        d = distance(p.b, q.b);
        acc += d * d;
    }
    return std::sqrt(acc);
}

// (I + A^* A) x = r by conjugate gradients; the matrix has spectrum in
// [1, 1 + |A|^2], so convergence is fast.
ImageBuffer solve_normal(const LinearOperator& A, const ImageBuffer& r, ImageBuffer x)
{
    auto apply = [&A](const ImageBuffer& u) { return u + A.adjoint(A.forward(u)); };
    ImageBuffer res = r - apply(x);
    ImageBuffer d = res;
    double rr = dot(res, res);
    const double stop = 1e-30 * std::max(dot(r, r), 1e-300);
    for (int k = 0; k < 1000 && rr > stop; ++k) {
        const ImageBuffer ad = apply(d);
        const double alpha = rr / dot(d, ad);
        x = axpy(alpha, d, x);
        res = axpy(-alpha, ad, res);
        const double rr_new = dot(res, res);
        d = axpy(rr_new / rr, d, res);
        rr = rr_new;
    }
    return x;
}

}  // namespace

DrResult dr_oracle_solve(const DrProblem& pr, const DrOptions& opts)
{
    if (!(opts.gamma > 0.0)) throw std::invalid_argument("dr_oracle_solve: gamma must be positive");
    if (pr.phi && pr.phi->input_shape() != pr.shape)
        throw ShapeError("dr_oracle_solve: operator does not match the shape");
    if (pr.has_box && !(pr.lo < pr.hi)) throw std::invalid_argument("dr_oracle_solve: bad box");
    if (pr.quad_weight > 0.0 && pr.quad_center.shape() != pr.shape)
        throw ShapeError("dr_oracle_solve: quadratic center does not match the shape");
    const double gamma = opts.gamma;
    const bool has_phi = static_cast<bool>(pr.phi);
    std::shared_ptr<const Dct2d> dct;
    if (pr.l1_weight > 0.0) dct = std::make_shared<const Dct2d>(pr.shape.height, pr.shape.width);

    using Prox = std::function<Pt(const Pt&)>;
    std::vector<Prox> proxes;
    // Regularizer on x, ball on z.
    proxes.push_back([&](const Pt& p) {
        Pt out;
        const double w = pr.quad_weight;
        ImageBuffer a = w > 0.0 ? axpby(1.0 / (1.0 + gamma * w), p.a, gamma * w / (1.0 + gamma * w),
                                        pr.quad_center)
                                : p.a;
        if (dct) a = dct_soft_threshold(*dct, gamma * pr.l1_weight / (1.0 + gamma * w), a);
        out.a = std::move(a);
        if (has_phi) out.b = proj_l2_ball(pr.ball, p.b);
        return out;
    });
    if (pr.has_box)
        proxes.push_back([&](const Pt& p) { return Pt{proj_box(pr.lo, pr.hi, p.a), p.b}; });
    if (has_phi) {
        proxes.push_back([&](const Pt& p) {
            const LinearOperator& A = *pr.phi;
            ImageBuffer x = solve_normal(A, p.a + A.adjoint(p.b), p.a);
            ImageBuffer z = A.forward(x);
            return Pt{std::move(x), std::move(z)};
        });
    }
    const std::size_t m = proxes.size();

    ImageBuffer x0 = opts.x0.empty() ? ImageBuffer(pr.shape) : opts.x0;
    if (x0.shape() != pr.shape) throw ShapeError("dr_oracle_solve: x0 does not match the shape");
    const Pt init{x0, has_phi ? pr.phi->forward(x0) : ImageBuffer()};
    std::vector<Pt> s(m, init);

    DrResult out;
    const double inv_m = 1.0 / static_cast<double>(m);
    for (std::size_t k = 0; k < opts.max_iters; ++k) {
        Pt u{scaled(inv_m, s[0].a), has_phi ? scaled(inv_m, s[0].b) : ImageBuffer()};
        for (std::size_t i = 1; i < m; ++i) {
            u.a = axpy(inv_m, s[i].a, u.a);
            if (has_phi) u.b = axpy(inv_m, s[i].b, u.b);
        }
        double res = 0.0;
        for (std::size_t i = 0; i < m; ++i) {
            Pt refl{axpby(2.0, u.a, -1.0, s[i].a),
                    has_phi ? axpby(2.0, u.b, -1.0, s[i].b) : ImageBuffer()};
            const Pt q = proxes[i](refl);
            res = std::max(res, pt_dist(q, u));
            s[i].a = s[i].a + q.a - u.a;
            if (has_phi) s[i].b = s[i].b + q.b - u.b;
        }
        out.iterations = k + 1;
        out.residual = res;
        out.x = u.a;
        if (res <= opts.tol) return out;
    }
    throw OracleError("dr_oracle_solve: no convergence after " + std::to_string(opts.max_iters) +
                      " iterations (residual " + std::to_string(out.residual) + ")");
}

}  // namespace pnp
