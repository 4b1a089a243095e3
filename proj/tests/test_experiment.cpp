#include <doctest.h>

#include "pnp/experiment.hpp"
#include "pnp/rng.hpp"

using namespace pnp;

TEST_CASE("alpha table")
{
    const double sig[] = {0.0025, 0.005, 0.01, 0.02, 0.04};
    const double deblur[] = {0.82, 0.86, 0.92, 0.96, 1.00};
    const double inpaint[] = {0.90, 0.82, 0.82, 1.0, 1.0};
    for (int i = 0; i < 5; ++i) {
        CHECK(default_alpha(Task::deblur, sig[i]) == deblur[i]);
        CHECK(default_alpha(Task::inpaint, sig[i]) == inpaint[i]);
    }
    CHECK(default_alpha(Task::deblur, 0.03) == 1.0);
}

TEST_CASE("lambda table")
{
    const double eta[] = {1, 2, 10, 50, 100, 200};
    const double deblur[] = {2e-3, 2e-3, 1.5e-3, 1.25e-3, 1.25e-3, 1e-3};
    const double inpaint[] = {1.25e-3, 1.25e-3, 1e-3, 7.5e-4, 5e-4, 5e-4};
    for (int i = 0; i < 6; ++i) {
        CHECK(default_lambda(Task::deblur, eta[i]) == deblur[i]);
        CHECK(default_lambda(Task::inpaint, eta[i]) == inpaint[i]);
    }
    CHECK(default_lambda(Task::deblur, 400.0) == 1e-3);
    CHECK(default_lambda(Task::deblur, 20.0) == 1.5e-3);  // nearer to 10 than 50 on a log scale
    CHECK(default_lambda(Task::deblur, 25.0) == 1.25e-3);
}

TEST_CASE("iteration defaults")
{
    CHECK(default_iterations(Task::deblur, NoiseModel::gaussian(0.01)) == 1200);
    CHECK(default_iterations(Task::inpaint, NoiseModel::gaussian(0.01)) == 3000);
    CHECK(default_iterations(Task::deblur, NoiseModel::poisson(10.0)) == 4800);
    CHECK(default_iterations(Task::inpaint, NoiseModel::poisson(1.0)) == 12000);
    CHECK(default_iterations(Task::deblur, NoiseModel::poisson(50.0)) == 1200);
    CHECK(default_iterations(Task::inpaint, NoiseModel::poisson(200.0)) == 3000);
}

TEST_CASE("task names")
{
    CHECK(task_from_string("deblur") == Task::deblur);
    CHECK(to_string(Task::inpaint) == "inpaint");
    CHECK_THROWS(task_from_string("denoise"));
}

TEST_CASE("forward model JSON round trip")
{
    ForwardModel m;
    m.task = Task::deblur;
    m.shape = Shape{16, 12, 3};
    m.kernel = ConvolutionKernel::gaussian(3, 0.9);
    m.kernel_source = "gauss";
    m.noise = NoiseModel::gaussian(0.02);
    m.noise_seed = 99;
    const ForwardModel back = ForwardModel::from_json(m.to_json());
    CHECK(back.shape == m.shape);
    REQUIRE(back.kernel.has_value());
    CHECK(back.kernel->taps == m.kernel->taps);
    CHECK(back.noise.sigma == 0.02);
    CHECK(back.noise_seed == 99);

    Rng rng(1);
    const ImageBuffer x = rng.uniform_image(m.shape);
    CHECK(distance(m.build()->forward(x), back.build()->forward(x)) == 0.0);
}

TEST_CASE("inpainting model masks floor(fraction * K) pixels reproducibly")
{
    ForwardModel m;
    m.task = Task::inpaint;
    m.shape = Shape{13, 11, 1};
    m.mask_fraction = 0.2;
    m.mask_seed = 5;
    const auto op = std::dynamic_pointer_cast<const MaskOperator>(m.build());
    REQUIRE(op);
    CHECK(op->mask().masked() == static_cast<std::size_t>(0.2 * 13 * 11));
    const auto again = std::dynamic_pointer_cast<const MaskOperator>(ForwardModel::from_json(m.to_json()).build());
    CHECK(again->mask().keep == op->mask().keep);
}

TEST_CASE("incomplete models are rejected")
{
    ForwardModel m;
    m.task = Task::deblur;
    m.shape = Shape{8, 8, 1};
    CHECK_THROWS(m.build());
    CHECK_THROWS(ForwardModel::from_json(nlohmann::json{{"task", "deblur"}}));
}
