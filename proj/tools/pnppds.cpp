// pnppds: degrade images, restore them, check denoisers, report operator norms.

#include <CLI11.hpp>
#include <json.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "pnp/denoisers.hpp"
#include "pnp/experiment.hpp"
#include "pnp/io.hpp"
#include "pnp/kernels.hpp"
#include "pnp/linops.hpp"
#include "pnp/metrics.hpp"
#include "pnp/protocol.hpp"
#include "pnp/solver.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace pnp;

namespace {

enum Exit : int {
    exit_ok = 0,
    exit_error = 1,
    exit_max_iters = 2,
    exit_check_failed = 2,
    exit_diverged = 3,
    exit_rejected = 4,
};

// Flat JSON object as a CLI11 config source. Keys may use '_' for '-' and
// are routed to whichever subcommand was selected on the command line.
class JsonConfig : public CLI::Config {
public:
    explicit JsonConfig(const CLI::App* root) : root_(root) {}

    std::string to_config(const CLI::App* app, bool default_also, bool, std::string) const override
    {
        json j = json::object();
        for (const CLI::Option* opt : app->get_options()) {
            if (opt->get_lnames().empty() || opt->get_configurable() == false) continue;
            const std::string& name = opt->get_lnames().front();
            if (opt->count() > 0)
                j[name] = opt->as<std::string>();
            else if (default_also && !opt->get_default_str().empty())
                j[name] = opt->get_default_str();
        }
        return j.dump(2) + "\n";
    }

    std::vector<CLI::ConfigItem> from_config(std::istream& in) const override
    {
        json j;
        try {
            j = json::parse(in);
        } catch (const json::parse_error& e) {
            throw CLI::FileError(std::string("config is not valid JSON: ") + e.what());
        }
        if (!j.is_object()) throw CLI::FileError("config must be a flat JSON object");
        std::vector<std::string> parents;
        if (const auto subs = root_->get_subcommands(); !subs.empty()) parents.push_back(subs.front()->get_name());
        std::vector<CLI::ConfigItem> items;
        for (const auto& [key, value] : j.items()) {
            if (value.is_null()) continue;
            CLI::ConfigItem item;
            item.parents = parents;
            item.name = key;
            std::replace(item.name.begin(), item.name.end(), '_', '-');
            if (value.is_array()) {
                for (const auto& e : value) item.inputs.push_back(scalar(e));
            } else {
                item.inputs.push_back(scalar(value));
            }
            items.push_back(std::move(item));
        }
        return items;
    }

private:
    const CLI::App* root_;

    static std::string scalar(const json& v)
    {
        if (v.is_string()) return v.get<std::string>();
        if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
        if (v.is_number()) return v.dump();
        throw CLI::FileError("config values must be scalars or arrays of scalars");
    }
};


json read_json(const fs::path& p)
{
    std::ifstream in(p);
    if (!in) throw io::IoError("cannot open " + p.string());
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw io::IoError("invalid JSON in " + p.string() + ": " + e.what());
    }
}

void write_text(const fs::path& p, const std::string& text)
{
    if (p.has_parent_path()) fs::create_directories(p.parent_path());
    std::ofstream out(p);
    if (!out) throw io::IoError("cannot open " + p.string() + " for writing");
    out << text;
    if (!out) throw io::IoError("failed writing " + p.string());
}

fs::path sidecar_for(const fs::path& observation)
{
    return fs::path(observation.string() + ".json");
}

ImageBuffer clipped(const ImageBuffer& x)
{
    return proj_box(0.0, 1.0, x);
}

// ------------------------------------------------------------- degrade

struct DegradeArgs {
    std::string in, out, task = "deblur", kernel;
    bool normalize = true;
    double mask_frac = 0.2;
    std::optional<double> sigma, eta;
    std::uint64_t seed = 0;
};

int cmd_degrade(const DegradeArgs& a)
{
    if (a.sigma && a.eta) throw std::invalid_argument("give at most one of --sigma and --eta");
    const ImageBuffer u = io::read_image(a.in);

    ForwardModel m;
    m.task = task_from_string(a.task);
    m.shape = u.shape();
    m.input = a.in;
    if (m.task == Task::deblur) {
        if (a.kernel.empty()) throw std::invalid_argument("deblur needs --kernel");
        ConvolutionKernel k = load_kernel(a.kernel);
        m.kernel = a.normalize ? normalize_kernel(k, u.shape()) : k;
        m.kernel_source = a.kernel;
    } else {
        if (!(a.mask_frac >= 0.0 && a.mask_frac < 1.0))
            throw std::invalid_argument("--mask-frac must be in [0, 1)");
        m.mask_fraction = a.mask_frac;
        m.mask_seed = a.seed;
    }
    if (a.sigma) m.noise = NoiseModel::gaussian(*a.sigma);
    if (a.eta) m.noise = NoiseModel::poisson(*a.eta);
    m.noise.validate();
    m.noise_seed = a.seed + 1;

    if (m.noise.kind == NoiseModel::Kind::poisson && io::format_for(a.out) != io::Format::raw)
        throw std::invalid_argument("Poisson counts need a raw .pnpf output");

    Rng rng(m.noise_seed);
    const ImageBuffer v = degrade(u, {m.build(), m.noise}, rng);
    io::write_image(a.out, v);
    write_text(sidecar_for(a.out), m.to_json().dump(2) + "\n");
    std::printf("wrote %s (%s, %s)\n", a.out.c_str(), to_string(m.task).c_str(),
                m.noise.describe().c_str());
    return exit_ok;
}

// ------------------------------------------------------------- restore

struct RestoreArgs {
    std::string obs, model, ref, out, report;
    std::string solver = "pnp-pds";
    std::string denoiser = "identity";
    std::string endpoint;
    std::optional<double> sigma, eta, eps, alpha, lambda;
    double gamma1 = 0.5, gamma2 = 0.99, rho = 1.0;
    double fbs_step = 1.0;
    std::optional<std::size_t> max_iters;
    double tol = 1e-6;
    std::size_t record_every = 1;
    bool strict = true;
    std::uint64_t seed = 0;
};

int exit_for(SolveStatus s)
{
    switch (s) {
    case SolveStatus::converged: return exit_ok;
    case SolveStatus::max_iters: return exit_max_iters;
    case SolveStatus::diverged: return exit_diverged;
    case SolveStatus::rejected: return exit_rejected;
    }
    return exit_error;
}

double dct_weight(const std::string& spec)
{
    if (spec == "identity") return 0.0;
    auto d = make_denoiser(spec);
    if (auto* t = dynamic_cast<TransformThresholdDenoiser*>(d.get())) return t->threshold();
    throw std::invalid_argument("pds-oracle needs --denoiser identity or dct:<t>");
}

int cmd_restore(const RestoreArgs& a)
{
    const ImageBuffer v = io::read_image(a.obs);
    const fs::path model_path = a.model.empty() ? sidecar_for(a.obs) : fs::path(a.model);
    ForwardModel m = ForwardModel::from_json(read_json(model_path));
    if (m.shape != v.shape())
        throw std::invalid_argument("observation shape " + to_string(v.shape()) +
                                    " does not match the model " + to_string(m.shape));
    if (a.sigma) {
        if (m.noise.kind == NoiseModel::Kind::poisson)
            throw std::invalid_argument("--sigma given for a Poisson observation");
        m.noise = NoiseModel::gaussian(*a.sigma);
    }
    if (a.eta) {
        if (m.noise.kind != NoiseModel::Kind::poisson)
            throw std::invalid_argument("--eta given for a non-Poisson observation");
        m.noise.eta = *a.eta;
    }
    m.noise.validate();
    const OperatorPtr phi = m.build();
    const bool poisson = m.noise.kind == NoiseModel::Kind::poisson;

    SolverConfig cfg;
    cfg.gamma1 = a.gamma1;
    cfg.gamma2 = a.gamma2;
    cfg.rho = a.rho;
    cfg.max_iters = a.max_iters.value_or(default_iterations(m.task, m.noise));
    cfg.stop_tol = a.tol;
    cfg.record_every = a.record_every;
    cfg.strict = a.strict;
    cfg.validate();
    if (!a.ref.empty()) {
        cfg.reference = io::read_image(a.ref);
        if (cfg.reference.shape() != v.shape())
            throw std::invalid_argument("--ref shape does not match the observation");
    }

    json extra;
    double epsilon = 0.0, lambda = 0.0;
    if (!poisson) {
        const double sigma = m.noise.kind == NoiseModel::Kind::gaussian ? m.noise.sigma : 0.0;
        const double alpha = a.alpha.value_or(default_alpha(m.task, sigma));
        epsilon = a.eps.value_or(alpha * epsilon_opt(sigma, v.size()));
        if (!(epsilon > 0.0))
            throw std::invalid_argument("epsilon must be positive; give --eps for noise-free data");
        extra["alpha"] = alpha;
        extra["epsilon"] = epsilon;
    } else {
        lambda = a.lambda.value_or(default_lambda(m.task, m.noise.eta));
        extra["lambda"] = lambda;
    }

    SolveResult res;
    if (a.solver == "pnp-pds") {
        auto j = make_denoiser(a.denoiser, a.endpoint);
        res = poisson ? corollary_solve(PoissonProblem{phi, v, m.noise.eta, lambda}, *j, cfg)
                      : corollary_solve(GaussianProblem{phi, v, epsilon}, *j, cfg);
    } else if (a.solver == "pnp-fbs") {
        if (poisson) throw std::invalid_argument("pnp-fbs handles Gaussian observations only");
        if (!a.lambda) throw std::invalid_argument("pnp-fbs needs --lambda");
        auto j = make_denoiser(a.denoiser, a.endpoint);
        res = pnp_fbs_solve(FbsProblem{phi, v, *a.lambda, a.fbs_step}, *j, cfg);
    } else if (a.solver == "pds-oracle") {
        if (poisson) throw std::invalid_argument("pds-oracle handles Gaussian observations only");
        DrProblem dp;
        dp.shape = v.shape();
        dp.phi = phi;
        dp.ball = Ball2Spec(v, epsilon);
        dp.l1_weight = dct_weight(a.denoiser) / cfg.gamma1;
        DrOptions opts;
        opts.tol = a.tol;
        opts.max_iters = cfg.max_iters;
        RunReport& rep = res.report;
        rep.solver = "dr-oracle";
        rep.denoiser = a.denoiser;
        rep.config = cfg.to_json();
        rep.conditions.satisfied = true;
        rep.conditions.note = "reference solver; no parameter conditions";
        const auto t0 = std::chrono::steady_clock::now();
        try {
            const DrResult d = dr_oracle_solve(dp, opts);
            res.x = d.x;
            rep.status = SolveStatus::converged;
            rep.iterations = d.iterations;
            rep.final_residual = d.residual;
        } catch (const OracleError& e) {
            res.x = v;
            rep.status = SolveStatus::max_iters;
            rep.iterations = cfg.max_iters;
            rep.diagnostic = e.what();
        }
        rep.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        rep.final_ball_violation = std::max(0.0, distance(phi->forward(res.x), v) / epsilon - 1.0);
        double box = 0.0;
        for (double xi : res.x.data()) box = std::max({box, -xi, xi - 1.0});
        rep.final_box_violation = box;
    } else {
        throw std::invalid_argument("unknown --solver '" + a.solver + "' (pnp-pds, pnp-fbs, pds-oracle)");
    }

    RunReport& rep = res.report;
    for (auto& [k, val] : extra.items()) rep.extra[k] = val;
    rep.extra["observation"] = a.obs;
    rep.extra["model"] = m.to_json();
    rep.extra["x_min"] = *std::min_element(res.x.data().begin(), res.x.data().end());
    rep.extra["x_max"] = *std::max_element(res.x.data().begin(), res.x.data().end());
    if (!cfg.reference.empty()) {
        rep.extra["psnr"] = psnr(res.x, cfg.reference);
        rep.extra["psnr_clipped"] = psnr(clipped(res.x), cfg.reference);
        if (v.width() >= 11 && v.height() >= 11) rep.extra["ssim"] = ssim(res.x, cfg.reference);
    }

    if (!a.out.empty() && rep.status != SolveStatus::rejected) {
        // Clipping is for display; raw output keeps the solver's values.
        if (io::format_for(a.out) == io::Format::raw)
            io::write_raw(a.out, res.x);
        else
            io::write_image(a.out, clipped(res.x));
        rep.extra["output"] = a.out;
    }
    if (!a.report.empty()) {
        const fs::path rp(a.report);
        write_text(rp, rep.to_json().dump(2) + "\n");
        fs::path csv = rp;
        csv.replace_extension(".csv");
        write_text(csv, rep.to_csv());
    }

    std::printf("%s: %s after %zu iterations (c_n=%.3g, residual=%.3g)\n", rep.solver.c_str(),
                to_string(rep.status).c_str(), rep.iterations, rep.final_update_rate,
                rep.final_residual);
    if (!rep.diagnostic.empty()) std::fprintf(stderr, "%s\n", rep.diagnostic.c_str());
    if (rep.extra.contains("psnr"))
        std::printf("psnr %.4f dB\n", rep.extra["psnr"].get<double>());
    return exit_for(rep.status);
}

// ------------------------------------------------------------- check-denoiser

struct CheckArgs {
    std::string denoiser = "identity", endpoint, report;
    std::size_t pairs = 1000;
    std::uint64_t seed = 0;
    std::size_t width = 16, height = 16, channels = 1;
    double lo = -0.5, hi = 1.5;
    double threshold = 1e-3;
};

int cmd_check_denoiser(const CheckArgs& a)
{
    auto j = make_denoiser(a.denoiser, a.endpoint);
    Rng rng(a.seed);
    FneSampling s;
    s.shape = Shape{a.width, a.height, a.channels};
    s.lo = a.lo;
    s.hi = a.hi;
    const FneReport r = check_fne(*j, rng, a.pairs, s);
    const bool passed = r.max_ratio <= 1.0 + a.threshold;

    json out;
    out["denoiser"] = j->descriptor();
    out["declared_fne"] = j->declared_fne();
    out["pairs_tested"] = r.pairs_tested;
    out["pairs_skipped"] = r.pairs_skipped;
    out["max_ratio"] = r.max_ratio;
    out["violations"] = r.violations;
    out["violation_slack"] = r.violation_slack;
    out["threshold"] = a.threshold;
    out["passed"] = passed;
    out["seed"] = a.seed;
    out["worst"] = json::array();
    for (const auto& w : r.worst)
        out["worst"].push_back({{"index", w.index}, {"ratio", w.ratio}, {"source", w.source}});
    if (!a.report.empty()) write_text(a.report, out.dump(2) + "\n");
    std::printf("%s: max ratio %.12g over %zu pairs, %zu violations -> %s\n",
                j->descriptor().c_str(), r.max_ratio, r.pairs_tested, r.violations,
                passed ? "pass" : "FAIL");
    return passed ? exit_ok : exit_check_failed;
}

// ------------------------------------------------------------- opnorm

struct OpnormArgs {
    std::string kernel;
    std::size_t width = 64, height = 64;
    int iters = 1000;
    bool normalize = false;
    std::uint64_t seed = 0;
};

int cmd_opnorm(const OpnormArgs& a)
{
    const Shape shape{a.width, a.height, 1};
    ConvolutionKernel k = load_kernel(a.kernel);
    if (a.normalize) k = normalize_kernel(k, shape);
    const ConvolutionOperator op(k, shape);
    Rng rng(a.seed);
    PowerIterationOptions opts;
    opts.max_iters = a.iters;
    opts.rel_tol = 1e-13;
    const double power = power_iteration(op, rng, opts);
    std::printf("exact %.15g\npower %.15g\nfrobenius %.6g\n", opnorm_conv(k, shape), power,
                k.frobenius_norm());
    return exit_ok;
}

// ------------------------------------------------------------- bench

struct BenchArgs {
    std::size_t size = 256;
    int repeat = 20;
};

template <class F>
double time_ms(int repeat, F&& f)
{
    const auto t0 = std::chrono::steady_clock::now();
    for (int i = 0; i < repeat; ++i) f();
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count() /
           repeat;
}

int cmd_bench(const BenchArgs& a)
{
    Rng rng(1);
    const Shape shape{a.size, a.size, 3};
    const ImageBuffer x = rng.uniform_image(shape), y = rng.uniform_image(shape);
    ImageBuffer out(shape);
    const auto k = ConvolutionKernel::gaussian(3, 1.0);
    std::printf("threads %d, image %zux%zux3, %d repeats\n", kernels::max_threads(), a.size, a.size,
                a.repeat);
    std::printf("%-14s %12s %12s\n", "kernel", "serial ms", "parallel ms");
    auto row = [&](const char* name, auto serial, auto parallel) {
        std::printf("%-14s %12.4f %12.4f\n", name, time_ms(a.repeat, serial), time_ms(a.repeat, parallel));
    };
    row("axpy", [&] { kernels::serial::axpy(0.5, x.data(), y.data(), out.data()); },
        [&] { kernels::parallel::axpy(0.5, x.data(), y.data(), out.data()); });
    row("soft_threshold", [&] { kernels::serial::soft_threshold(0.1, x.data(), out.data()); },
        [&] { kernels::parallel::soft_threshold(0.1, x.data(), out.data()); });
    volatile double sink = 0.0;
    row("dot", [&] { sink = kernels::serial::dot(x.data(), y.data()); },
        [&] { sink = kernels::parallel::dot(x.data(), y.data()); });
    row("conv3x3", [&] {
            for (std::size_t c = 0; c < 3; ++c)
                kernels::serial::conv_plane(x.plane(c), a.size, a.size, k.taps, 3, 3, 1, 1, false,
                                            out.plane(c));
        },
        [&] {
            for (std::size_t c = 0; c < 3; ++c)
                kernels::parallel::conv_plane(x.plane(c), a.size, a.size, k.taps, 3, 3, 1, 1, false,
                                              out.plane(c));
        });
    (void)sink;
    return exit_ok;
}

}  // namespace

int main(int argc, char** argv)
{
    spdlog::set_default_logger(spdlog::stderr_color_st("pnppds"));

    CLI::App app{"Plug-and-play primal-dual image restoration"};
    app.require_subcommand(1);
    app.fallthrough();
    app.config_formatter(std::make_shared<JsonConfig>(&app));
    app.set_config("--config", "", "JSON file with flat keys named like the subcommand's flags");
    app.allow_config_extras(CLI::config_extras_mode::error);

    DegradeArgs da;
    auto* deg = app.add_subcommand("degrade", "Blur or mask an image and add noise");
    deg->add_option("--in", da.in, "Clean input image")->required();
    deg->add_option("--out", da.out, "Observation (.png/.pgm/.ppm/.pnpf); sidecar at <out>.json")->required();
    deg->add_option("--task", da.task, "deblur or inpaint")->check(CLI::IsMember({"deblur", "inpaint"}));
    deg->add_option("--kernel", da.kernel, "Kernel file (deblur)");
    deg->add_flag("--normalize-kernel,!--raw-kernel", da.normalize, "Scale the kernel to unit operator norm");
    deg->add_option("--mask-frac", da.mask_frac, "Fraction of masked pixels (inpaint)");
    deg->add_option("--sigma", da.sigma, "Gaussian noise level");
    deg->add_option("--eta", da.eta, "Poisson scaling");
    deg->add_option("--seed", da.seed, "Seed for the mask and the noise");

    RestoreArgs ra;
    auto* res = app.add_subcommand("restore", "Restore an observation");
    res->add_option("--obs,--in", ra.obs, "Observation written by degrade")->required();
    res->add_option("--model", ra.model, "Forward-model sidecar (default <obs>.json)");
    res->add_option("--ref", ra.ref, "Clean reference for PSNR/SSIM");
    res->add_option("--solver", ra.solver, "pnp-pds, pnp-fbs or pds-oracle");
    res->add_option("--denoiser", ra.denoiser, "identity, dct:<t>, scaled:<s> or external");
    res->add_option("--endpoint", ra.endpoint, "unix:<path>, tcp:<host>:<port> or exec:<command>");
    res->add_option("--sigma", ra.sigma, "Override the Gaussian noise level");
    res->add_option("--eta", ra.eta, "Override the Poisson scaling");
    res->add_option("--eps", ra.eps, "Data-fidelity radius (default alpha*sigma*sqrt(K))");
    res->add_option("--alpha", ra.alpha, "Multiplier on sigma*sqrt(K)");
    res->add_option("--lambda", ra.lambda, "Data weight (Poisson, FBS)");
    res->add_option("--gamma1", ra.gamma1, "Primal step");
    res->add_option("--gamma2", ra.gamma2, "Dual step");
    res->add_option("--rho", ra.rho, "Relaxation");
    res->add_option("--fbs-step", ra.fbs_step, "Step size of pnp-fbs");
    res->add_option("--max-iters", ra.max_iters, "Iteration cap (default from the task)");
    res->add_option("--tol", ra.tol, "Stopping tolerance");
    res->add_option("--record-every", ra.record_every, "Trace interval");
    res->add_flag("--strict,!--no-strict", ra.strict, "Refuse to run when conditions fail");
    res->add_option("--seed", ra.seed, "Unused by deterministic solvers; recorded");
    res->add_option("--out", ra.out, "Restored image (clipped unless .pnpf)");
    res->add_option("--report", ra.report, "Run report JSON (CSV trace next to it)");

    CheckArgs ca;
    auto* chk = app.add_subcommand("check-denoiser", "Sample the firm nonexpansiveness of a denoiser");
    chk->add_option("--denoiser", ca.denoiser, "identity, dct:<t>, scaled:<s> or external");
    chk->add_option("--endpoint", ca.endpoint, "Endpoint for an external denoiser");
    chk->add_option("--pairs", ca.pairs, "Number of sampled pairs");
    chk->add_option("--seed", ca.seed, "Sampling seed");
    chk->add_option("--width", ca.width, "Sample width");
    chk->add_option("--height", ca.height, "Sample height");
    chk->add_option("--channels", ca.channels, "Sample channels");
    chk->add_option("--lo", ca.lo, "Lower sampling bound");
    chk->add_option("--hi", ca.hi, "Upper sampling bound");
    chk->add_option("--threshold", ca.threshold, "Pass when max ratio <= 1 + threshold");
    chk->add_option("--report,--out", ca.report, "FneReport JSON");

    OpnormArgs oa;
    auto* opn = app.add_subcommand("opnorm", "Exact and power-iteration norm of a convolution");
    opn->add_option("--kernel", oa.kernel, "Kernel file")->required();
    opn->add_option("--width", oa.width, "Grid width");
    opn->add_option("--height", oa.height, "Grid height");
    opn->add_option("--iters", oa.iters, "Power-iteration cap");
    opn->add_flag("--normalize", oa.normalize, "Normalize the kernel first");
    opn->add_option("--seed", oa.seed, "Start-vector seed");

    BenchArgs ba;
    auto* ben = app.add_subcommand("bench", "Time serial against OpenMP kernels");
    ben->add_option("--size", ba.size, "Image side");
    ben->add_option("--repeat", ba.repeat, "Repetitions");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? exit_ok : exit_rejected;
    }

    try {
        if (*deg) return cmd_degrade(da);
        if (*res) return cmd_restore(ra);
        if (*chk) return cmd_check_denoiser(ca);
        if (*opn) return cmd_opnorm(oa);
        if (*ben) return cmd_bench(ba);
    } catch (const ShapeError& e) {
        // mismatched inputs or a misbehaving peer, not a configuration problem
        std::fprintf(stderr, "error: %s\n", e.what());
        return exit_error;
    } catch (const std::invalid_argument& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return exit_rejected;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return exit_error;
    }
    return exit_error;
}
