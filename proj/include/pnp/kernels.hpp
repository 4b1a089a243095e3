#pragma once

// Data-parallel inner loops used by every module.
//
// Each primitive exists twice: `serial::` is the plain reference loop kept for
// testing and benchmarking, `parallel::` is the OpenMP version. The unqualified
// functions in `pnp::kernels` dispatch on problem size. Element-wise kernels
// give bit-identical results in both versions. Reductions in `parallel::` sum
// fixed-size blocks and then combine the block partials in order, so their
// result depends only on the input length, never on the thread count.

#include <cstddef>
#include <span>

namespace pnp::kernels {

/// Number of elements below which dispatch stays serial.
inline constexpr std::size_t parallel_threshold = 1u << 14;

/// Block length used by the deterministic parallel reductions.
inline constexpr std::size_t reduction_block = 4096;

namespace serial {

void axpy(double a, std::span<const double> x, std::span<const double> y, std::span<double> out);
void axpby(double a, std::span<const double> x, double b, std::span<const double> y,
           std::span<double> out);
void scale(double a, std::span<const double> x, std::span<double> out);
void clamp(double lo, double hi, std::span<const double> x, std::span<double> out);
void soft_threshold(double t, std::span<const double> x, std::span<double> out);
void gkl_prox(double gamma_eta, double gamma, std::span<const double> v,
              std::span<const double> x, std::span<double> out);
double dot(std::span<const double> x, std::span<const double> y);
double sum_sq(std::span<const double> x);
double dist_sq(std::span<const double> x, std::span<const double> y);

/// Circular 2-D convolution of one plane (height x width) with a kernel
/// (kh x kw) anchored at (ay, ax). `adjoint` selects correlation with the
/// flipped kernel.
void conv_plane(std::span<const double> plane, std::size_t height, std::size_t width,
                std::span<const double> taps, std::size_t kh, std::size_t kw, std::size_t ay,
                std::size_t ax, bool adjoint, std::span<double> out);

}  // namespace serial

namespace parallel {

void axpy(double a, std::span<const double> x, std::span<const double> y, std::span<double> out);
void axpby(double a, std::span<const double> x, double b, std::span<const double> y,
           std::span<double> out);
void scale(double a, std::span<const double> x, std::span<double> out);
void clamp(double lo, double hi, std::span<const double> x, std::span<double> out);
void soft_threshold(double t, std::span<const double> x, std::span<double> out);
void gkl_prox(double gamma_eta, double gamma, std::span<const double> v,
              std::span<const double> x, std::span<double> out);
double dot(std::span<const double> x, std::span<const double> y);
double sum_sq(std::span<const double> x);
double dist_sq(std::span<const double> x, std::span<const double> y);
void conv_plane(std::span<const double> plane, std::size_t height, std::size_t width,
                std::span<const double> taps, std::size_t kh, std::size_t kw, std::size_t ay,
                std::size_t ax, bool adjoint, std::span<double> out);

}  // namespace parallel

/// Number of OpenMP threads available (1 when built without OpenMP).
int max_threads();

// Size-dispatched entry points.
void axpy(double a, std::span<const double> x, std::span<const double> y, std::span<double> out);
void axpby(double a, std::span<const double> x, double b, std::span<const double> y,
           std::span<double> out);
void scale(double a, std::span<const double> x, std::span<double> out);
void clamp(double lo, double hi, std::span<const double> x, std::span<double> out);
void soft_threshold(double t, std::span<const double> x, std::span<double> out);
void gkl_prox(double gamma_eta, double gamma, std::span<const double> v,
              std::span<const double> x, std::span<double> out);
double dot(std::span<const double> x, std::span<const double> y);
double sum_sq(std::span<const double> x);
double dist_sq(std::span<const double> x, std::span<const double> y);
void conv_plane(std::span<const double> plane, std::size_t height, std::size_t width,
                std::span<const double> taps, std::size_t kh, std::size_t kw, std::size_t ay,
                std::size_t ax, bool adjoint, std::span<double> out);

}  // namespace pnp::kernels
