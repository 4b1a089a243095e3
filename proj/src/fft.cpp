#include "fft.hpp"

#include <algorithm>
#include <cstring>
#include <mutex>
#include <stdexcept>

namespace pnp::detail {

namespace {
// FFTW planning is not thread-safe; execution with the new-array interface is.
std::mutex& planner_mutex()
{
    static std::mutex m;
    return m;
}

struct FftwBuffer {
    explicit FftwBuffer(std::size_t bytes) : ptr(fftw_malloc(bytes))
    {
        if (!ptr) throw std::bad_alloc();
    }
    ~FftwBuffer() { fftw_free(ptr); }
    FftwBuffer(const FftwBuffer&) = delete;
    FftwBuffer& operator=(const FftwBuffer&) = delete;
    void* ptr;
};
}  // namespace

Fft2d::Fft2d(std::size_t height, std::size_t width) : height_(height), width_(width)
{
    FftwBuffer real(sizeof(double) * height * width);
    FftwBuffer cplx(sizeof(fftw_complex) * spectrum_size());
    std::lock_guard lock(planner_mutex());
    const int h = static_cast<int>(height);
    const int w = static_cast<int>(width);
    r2c_ = fftw_plan_dft_r2c_2d(h, w, static_cast<double*>(real.ptr),
                                static_cast<fftw_complex*>(cplx.ptr), FFTW_ESTIMATE);
    c2r_ = fftw_plan_dft_c2r_2d(h, w, static_cast<fftw_complex*>(cplx.ptr),
                                static_cast<double*>(real.ptr), FFTW_ESTIMATE);
    if (!r2c_ || !c2r_) throw std::runtime_error("FFTW plan creation failed");
}

Fft2d::~Fft2d()
{
    std::lock_guard lock(planner_mutex());
    if (r2c_) fftw_destroy_plan(r2c_);
    if (c2r_) fftw_destroy_plan(c2r_);
}

void Fft2d::forward(std::span<const double> plane, std::span<std::complex<double>> spectrum) const
{
    FftwBuffer in(sizeof(double) * plane.size());
    FftwBuffer out(sizeof(fftw_complex) * spectrum_size());
    std::memcpy(in.ptr, plane.data(), sizeof(double) * plane.size());
    fftw_execute_dft_r2c(r2c_, static_cast<double*>(in.ptr), static_cast<fftw_complex*>(out.ptr));
    std::memcpy(spectrum.data(), out.ptr, sizeof(fftw_complex) * spectrum_size());
}

void Fft2d::inverse(std::span<const std::complex<double>> spectrum, std::span<double> plane) const
{
    // c2r destroys its input, so always work on a copy.
    FftwBuffer in(sizeof(fftw_complex) * spectrum_size());
    FftwBuffer out(sizeof(double) * plane.size());
    std::memcpy(in.ptr, spectrum.data(), sizeof(fftw_complex) * spectrum_size());
    fftw_execute_dft_c2r(c2r_, static_cast<fftw_complex*>(in.ptr), static_cast<double*>(out.ptr));
    std::memcpy(plane.data(), out.ptr, sizeof(double) * plane.size());
}

std::vector<double> embed_kernel(std::span<const double> taps, std::size_t kh, std::size_t kw,
                                 std::size_t ay, std::size_t ax, std::size_t height,
                                 std::size_t width)
{
    std::vector<double> grid(height * width, 0.0);
    for (std::size_t i = 0; i < kh; ++i) {
        const std::size_t r = (i + height - ay % height) % height;
        for (std::size_t j = 0; j < kw; ++j) {
            const std::size_t c = (j + width - ax % width) % width;
            grid[r * width + c] += taps[i * kw + j];
        }
    }
    return grid;
}

}  // namespace pnp::detail
