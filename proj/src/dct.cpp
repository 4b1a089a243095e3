#include "pnp/dct.hpp"

#include <cmath>
#include <cstdint>
#include <numbers>

#include "pnp/kernels.hpp"

namespace pnp {

std::vector<double> Dct2d::basis(std::size_t n)
{
    std::vector<double> c(n * n);
    const double dn = static_cast<double>(n);
    for (std::size_t k = 0; k < n; ++k) {
        const double s = k == 0 ? std::sqrt(1.0 / dn) : std::sqrt(2.0 / dn);
        for (std::size_t i = 0; i < n; ++i)
            c[k * n + i] = s * std::cos(std::numbers::pi * (2.0 * static_cast<double>(i) + 1.0) *
                                        static_cast<double>(k) / (2.0 * dn));
    }
    return c;
}

Dct2d::Dct2d(std::size_t height, std::size_t width)
    : height_(height), width_(width), ch_(basis(height)), cw_(basis(width))
{
}

ImageBuffer Dct2d::forward(const ImageBuffer& x) const { return apply(x, false); }
ImageBuffer Dct2d::inverse(const ImageBuffer& y) const { return apply(y, true); }

ImageBuffer Dct2d::apply(const ImageBuffer& x, bool transpose) const
{
    if (x.height() != height_ || x.width() != width_)
        throw ShapeError("dct: image " + to_string(x.shape()) + " does not match transform " +
                         std::to_string(width_) + "x" + std::to_string(height_));
    const std::size_t h = height_, w = width_;
    ImageBuffer out(x.shape());
    std::vector<double> tmp(h * w);
    const bool par = x.size() * (h + w) >= kernels::parallel_threshold * 64 &&
                     kernels::max_threads() > 1;
    // Coefficient of the 1-D transform: forward uses C[k][i], inverse C[i][k].
    auto coef = [transpose](const std::vector<double>& c, std::size_t n, std::size_t k,
                            std::size_t i) { return transpose ? c[i * n + k] : c[k * n + i]; };
    for (std::size_t ch = 0; ch < x.channels(); ++ch) {
        auto in = x.plane(ch);
        auto o = out.plane(ch);
        // Rows: tmp[r][k] = sum_j coef_w(k, j) * in[r][j]
#pragma omp parallel for schedule(static) if (par)
        for (std::int64_t r = 0; r < static_cast<std::int64_t>(h); ++r)
            for (std::size_t k = 0; k < w; ++k) {
                double acc = 0.0;
                for (std::size_t j = 0; j < w; ++j)
                    acc += coef(cw_, w, k, j) * in[static_cast<std::size_t>(r) * w + j];
                tmp[static_cast<std::size_t>(r) * w + k] = acc;
            }
        // Columns: o[k][c] = sum_r coef_h(k, r) * tmp[r][c]
#pragma omp parallel for schedule(static) if (par)
        for (std::int64_t k = 0; k < static_cast<std::int64_t>(h); ++k)
            for (std::size_t c = 0; c < w; ++c) {
                double acc = 0.0;
                for (std::size_t r = 0; r < h; ++r)
                    acc += coef(ch_, h, static_cast<std::size_t>(k), r) * tmp[r * w + c];
                o[static_cast<std::size_t>(k) * w + c] = acc;
            }
    }
    return out;
}

}  // namespace pnp
