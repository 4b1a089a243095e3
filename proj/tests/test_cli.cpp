#include <doctest.h>

#include <sys/wait.h>
#include <unistd.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include <json.hpp>

#include "pnp/io.hpp"
#include "pnp/metrics.hpp"

using namespace pnp;
namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

const fs::path source_dir = PNP_SOURCE_DIR;
const fs::path golden_dir = source_dir / "tests" / "data" / "golden";
const fs::path kernel_dir = source_dir / "data" / "kernels";

struct Run {
    int code = -1;
    std::string out;
};

Run run(const std::string& args)
{
    const std::string cmd = std::string(PNP_CLI) + " " + args + " 2>/dev/null";
    Run r;
    FILE* p = ::popen(cmd.c_str(), "r");
    REQUIRE(p);
    char buf[4096];
    std::size_t n;
    while ((n = std::fread(buf, 1, sizeof buf, p)) > 0) r.out.append(buf, n);
    const int status = ::pclose(p);
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return r;
}

struct TempDir {
    fs::path path;
    TempDir() : path(fs::temp_directory_path() / ("pnp_cli_" + std::to_string(::getpid())))
    {
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    std::string operator/(const std::string& name) const { return (path / name).string(); }
};

json load_json(const std::string& p)
{
    std::ifstream f(p);
    return json::parse(f);
}

double rmse(const ImageBuffer& a, const ImageBuffer& b)
{
    return distance(a, b) / std::sqrt(static_cast<double>(a.size()));
}

}  // namespace

TEST_CASE("noiseless identity restore reproduces the input")
{
    TempDir d;
    const std::string clean = (golden_dir / "clean.pgm").string();
    REQUIRE(run("degrade --in " + clean + " --out " + d / "obs.png --task inpaint --mask-frac 0 --seed 1").code == 0);
    const ImageBuffer obs = io::read_image(d / "obs.png");
    CHECK(distance(obs, io::read_image(clean)) == 0.0);

    const Run r = run("restore --obs " + d / "obs.png" + " --denoiser identity --sigma 0 --eps 1e-6 --out " + d / "x.png" +
                      " --ref " + clean + " --report " + d / "rep.json");
    CHECK(r.code == 0);
    CHECK(psnr(io::read_image(d / "x.png"), io::read_image(clean)) >= 100.0);
    // the ball needs a positive radius
    CHECK(run("restore --obs " + d / "obs.png" + " --sigma 0 --out " + d / "y.png").code == 4);
}

TEST_CASE("restore matches the golden oracle output")
{
    TempDir d;
    const std::string obs = (golden_dir / "obs.pnpf").string();
    const Run r = run("restore --obs " + obs + " --denoiser dct:0.05 --alpha 1 --tol 1e-12 --max-iters 200000"
                      " --record-every 1000 --out " + d / "x.pnpf" + " --report " + d / "rep.json");
    CHECK(r.code == 0);
    const ImageBuffer x = io::read_image(d / "x.pnpf");
    const ImageBuffer g = io::read_image(golden_dir / "golden.pnpf");
    CHECK(rmse(x, g) <= 1e-6);
    const json rep = load_json(d / "rep.json");
    CHECK(rep["status"] == "converged");
    CHECK(rep["final_ball_violation"].get<double>() <= 1e-6);
}

TEST_CASE("degrade writes a sidecar that restore consumes")
{
    TempDir d;
    const std::string clean = (golden_dir / "clean.pgm").string();
    REQUIRE(run("degrade --in " + clean + " --out " + d / "o.pnpf" + " --task deblur --kernel " +
                (kernel_dir / "a.txt").string() + " --normalize-kernel --sigma 0.02 --seed 3").code == 0);
    const json side = load_json(d / "o.pnpf.json");
    CHECK(side["task"] == "deblur");
    CHECK(side["noise"]["sigma"].get<double>() == 0.02);
    CHECK(side["kernel"]["taps"].size() == 15 * 15);

    const Run r = run("restore --obs " + d / "o.pnpf" + " --denoiser dct:0.02 --max-iters 40 --out " + d / "x.png" +
                      " --report " + d / "rep.json");
    CHECK(r.code == 2);
    const json rep = load_json(d / "rep.json");
    CHECK(rep["iterations"] == 40);
    CHECK(rep["extra"]["alpha"].get<double>() == 0.96);
    CHECK(fs::exists(d / "rep.csv"));

    // same seed, same observation
    REQUIRE(run("degrade --in " + clean + " --out " + d / "o2.pnpf" + " --task deblur --kernel " +
                (kernel_dir / "a.txt").string() + " --normalize-kernel --sigma 0.02 --seed 3").code == 0);
    CHECK(distance(io::read_image(d / "o.pnpf"), io::read_image(d / "o2.pnpf")) == 0.0);
}

TEST_CASE("inpainting masks floor(0.2 K) pixels")
{
    TempDir d;
    const std::string clean = (golden_dir / "clean.pgm").string();
    REQUIRE(run("degrade --in " + clean + " --out " + d / "m.pnpf" + " --task inpaint --sigma 0 --seed 4").code == 0);
    const ImageBuffer m = io::read_image(d / "m.pnpf");
    std::size_t zeros = 0;
    for (double v : m.data()) zeros += v == 0.0;
    CHECK(zeros == 51);
}

TEST_CASE("Poisson observation mean")
{
    TempDir d;
    {
        std::ofstream f(d / "gray.pgm", std::ios::binary);
        f << "P5\n64 64\n255\n" << std::string(64 * 64, static_cast<char>(128));
    }
    REQUIRE(run("degrade --in " + d / "gray.pgm" + " --out " + d / "p.pnpf" + " --task inpaint --mask-frac 0"
                " --eta 100 --seed 2").code == 0);
    const ImageBuffer v = io::read_image(d / "p.pnpf");
    double mean = 0.0;
    for (double e : v.data()) mean += e;
    mean /= 100.0 * static_cast<double>(v.size());
    CHECK(std::abs(mean - 128.0 / 255.0) <= 0.02 * 0.5);
    CHECK(run("degrade --in " + d / "gray.pgm" + " --out " + d / "p.png" + " --task inpaint --eta 100").code == 4);

    // with Phi = Id, x0 = v / eta is already the minimizer
    const Run r = run("restore --obs " + d / "p.pnpf" + " --denoiser identity --max-iters 20 --out " + d / "x.png" +
                      " --report " + d / "rep.json");
    CHECK(r.code == 0);
    CHECK(load_json(d / "rep.json")["extra"]["lambda"].get<double>() == 5e-4);  // inpainting table at eta = 100
}

TEST_CASE("exit codes")
{
    TempDir d;
    const std::string obs = (golden_dir / "obs.pnpf").string();
    CHECK(run("restore --obs " + obs + " --denoiser scaled:3 --max-iters 100000 --out " + d / "x.png" +
              " --report " + d / "rep.json").code == 3);
    const json rep = load_json(d / "rep.json");
    CHECK(rep["status"] == "diverged");
    CHECK(io::read_image(d / "x.png").all_finite());

    CHECK(run("restore --obs " + obs + " --gamma2 2 --out " + d / "x.png").code == 4);
    CHECK(run("restore --obs " + obs + " --no-strict --gamma2 2 --max-iters 5 --out " + d / "x.png").code != 4);
    CHECK(run("restore --obs " + obs + " --solver pnp-fbs --lambda 2.587 --out " + d / "x.png").code == 4);
    CHECK(run("restore --obs " + obs + " --denoiser bogus --out " + d / "x.png").code == 4);
    CHECK(run("restore --obs " + d / "missing.pnpf" + " --out " + d / "x.png").code == 1);
    CHECK(run("restore --obs " + obs + " --denoiser external --endpoint 'exec:" + PNP_ECHO +
              " --mode die' --out " + d / "x.png").code == 1);
    CHECK(run("frobnicate").code == 4);
    CHECK(run("--help").code == 0);
}

TEST_CASE("config files")
{
    TempDir d;
    const std::string obs = (golden_dir / "obs.pnpf").string();
    {
        std::ofstream f(d / "c.json");
        f << R"({"denoiser": "dct:0.05", "max_iters": 12, "record_every": 5})";
    }
    CHECK(run("restore --config " + d / "c.json" + " --obs " + obs + " --out " + d / "x.png" + " --report " +
              d / "rep.json").code == 2);
    CHECK(load_json(d / "rep.json")["iterations"] == 12);
    // flags override the file
    CHECK(run("restore --config " + d / "c.json" + " --obs " + obs + " --max-iters 3 --out " + d / "x.png" +
              " --report " + d / "rep.json").code == 2);
    CHECK(load_json(d / "rep.json")["iterations"] == 3);
    {
        std::ofstream f(d / "bad.json");
        f << R"({"no_such_flag": 1})";
    }
    CHECK(run("restore --config " + d / "bad.json" + " --obs " + obs + " --out " + d / "x.png").code == 4);
}

TEST_CASE("check-denoiser")
{
    TempDir d;
    const Run id = run("check-denoiser --denoiser identity --pairs 200 --report " + d / "id.json");
    CHECK(id.code == 0);
    const json rep = load_json(d / "id.json");
    CHECK(std::abs(rep["max_ratio"].get<double>() - 1.0) < 1e-12);

    CHECK(run("check-denoiser --denoiser scaled:1.5 --pairs 50").code != 0);
    CHECK(run("check-denoiser --denoiser dct:0.1 --pairs 200").code == 0);
    CHECK(run("check-denoiser --denoiser external --endpoint 'exec:" + std::string(PNP_ECHO) +
              " --mode dct:0.05' --pairs 50 --report " + d / "ext.json").code == 0);
    CHECK(fs::exists(d / "ext.json"));
    CHECK(run("check-denoiser --denoiser external --endpoint 'exec:" + std::string(PNP_ECHO) +
              " --mode scale:1.02' --pairs 50 --threshold 1.05").code == 0);
    CHECK(run("check-denoiser --denoiser external --endpoint 'exec:" + std::string(PNP_ECHO) +
              " --mode scale:1.02' --pairs 50").code == 2);
}

TEST_CASE("opnorm")
{
    auto values = [](const std::string& out) {
        std::map<std::string, double> m;
        std::istringstream in(out);
        std::string k;
        double v;
        while (in >> k >> v) m[k] = v;
        return m;
    };
    const std::string box = (kernel_dir / "j.txt").string();
    const auto b = values(run("opnorm --kernel " + box).out);
    CHECK(b.at("exact") == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(b.at("power") == doctest::Approx(1.0).epsilon(1e-6));

    const auto a = values(run("opnorm --kernel " + (kernel_dir / "a.txt").string()).out);
    CHECK(std::abs(a.at("power") - a.at("exact")) <= 1e-6 * a.at("exact"));
    CHECK(a.at("frobenius") == doctest::Approx(0.2246).epsilon(1e-3));
}
