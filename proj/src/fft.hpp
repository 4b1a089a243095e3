#pragma once

// Thin RAII wrapper over FFTW for real 2-D transforms of one image plane.

#include <fftw3.h>

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

namespace pnp::detail {

class Fft2d {
public:
    Fft2d(std::size_t height, std::size_t width);
    ~Fft2d();
    Fft2d(const Fft2d&) = delete;
    Fft2d& operator=(const Fft2d&) = delete;

    std::size_t height() const { return height_; }
    std::size_t width() const { return width_; }
    /// Number of complex coefficients in the half spectrum.
    std::size_t spectrum_size() const { return height_ * (width_ / 2 + 1); }

    void forward(std::span<const double> plane, std::span<std::complex<double>> spectrum) const;
    /// Unnormalized inverse; caller divides by height*width.
    void inverse(std::span<const std::complex<double>> spectrum, std::span<double> plane) const;

private:
    std::size_t height_;
    std::size_t width_;
    fftw_plan r2c_ = nullptr;
    fftw_plan c2r_ = nullptr;
};

/// Kernel taps placed on a height x width periodic grid so that tap (ay, ax)
/// lands at the origin.
std::vector<double> embed_kernel(std::span<const double> taps, std::size_t kh, std::size_t kw,
                                 std::size_t ay, std::size_t ax, std::size_t height,
                                 std::size_t width);

}  // namespace pnp::detail
