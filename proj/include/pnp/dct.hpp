#pragma once

#include <cstddef>
#include <vector>

#include "pnp/image.hpp"

namespace pnp {

/// Orthonormal 2-D DCT-II applied independently to every channel plane.
///
/// Separable: Y = C_h X C_w^T with C_n[k][i] = s_k cos(pi (2i+1) k / 2n),
/// s_0 = sqrt(1/n), s_k = sqrt(2/n). The inverse is the transpose.
class Dct2d {
public:
    Dct2d(std::size_t height, std::size_t width);

    std::size_t height() const { return height_; }
    std::size_t width() const { return width_; }

    ImageBuffer forward(const ImageBuffer& x) const;
    ImageBuffer inverse(const ImageBuffer& y) const;

    /// 1-D basis matrix for length n (row k = frequency k).
    static std::vector<double> basis(std::size_t n);

private:
    ImageBuffer apply(const ImageBuffer& x, bool transpose) const;

    std::size_t height_;
    std::size_t width_;
    std::vector<double> ch_;
    std::vector<double> cw_;
};

}  // namespace pnp
