#pragma once

#include <complex>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "pnp/image.hpp"
#include "pnp/rng.hpp"

namespace pnp {

namespace detail {
class Fft2d;
}

/// A bounded linear map with its adjoint.
///
/// `norm_bound()` is an upper bound on the operator norm; for circular
/// convolutions, masks and the identity it is exact.
class LinearOperator {
public:
    virtual ~LinearOperator() = default;

    virtual Shape input_shape() const = 0;
    virtual Shape output_shape() const = 0;
    virtual ImageBuffer forward(const ImageBuffer& x) const = 0;
    virtual ImageBuffer adjoint(const ImageBuffer& y) const = 0;
    virtual double norm_bound() const = 0;
    virtual std::string describe() const = 0;
};

using OperatorPtr = std::shared_ptr<const LinearOperator>;

/// 2-D blur taps. The anchor is the tap that maps a pixel onto itself.
struct ConvolutionKernel {
    std::size_t height = 0;
    std::size_t width = 0;
    std::vector<double> taps;  // row-major, height*width
    std::size_t anchor_row = 0;
    std::size_t anchor_col = 0;

    /// Kernel with the anchor at the center tap (floor(h/2), floor(w/2)).
    static ConvolutionKernel centered(std::size_t height, std::size_t width,
                                      std::vector<double> taps);
    static ConvolutionKernel delta();
    /// Normalized isotropic Gaussian on a size x size support.
    static ConvolutionKernel gaussian(std::size_t size, double sigma);
    /// size x size box with taps 1/size^2.
    static ConvolutionKernel box(std::size_t size);

    double at(std::size_t r, std::size_t c) const { return taps[r * width + c]; }
    double sum() const;
    double frobenius_norm() const;
    /// Throws std::invalid_argument if empty or non-finite.
    void validate() const;
};

struct SamplingMask {
    std::size_t width = 0;
    std::size_t height = 0;
    std::vector<std::uint8_t> keep;  // one flag per pixel, shared by all channels

    static SamplingMask all_keep(std::size_t width, std::size_t height);
    /// Masks exactly floor(fraction * width * height) pixels chosen uniformly.
    static SamplingMask random(std::size_t width, std::size_t height, double fraction, Rng& rng);

    std::size_t kept() const;
    std::size_t masked() const { return keep.size() - kept(); }
    void validate() const;
};

enum class ConvPath { automatic, spatial, frequency };

/// Per-channel circular convolution. Kernels with more than 9 taps use the
/// frequency domain under `ConvPath::automatic`.
ImageBuffer conv_circular(const ConvolutionKernel& kernel, const ImageBuffer& x,
                          ConvPath path = ConvPath::automatic);
/// Adjoint of conv_circular: correlation with the same taps.
ImageBuffer conv_circular_adjoint(const ConvolutionKernel& kernel, const ImageBuffer& y,
                                  ConvPath path = ConvPath::automatic);

/// Exact operator norm of circular convolution on a height x width grid: the
/// largest modulus of the kernel's DFT on that grid.
double opnorm_conv(const ConvolutionKernel& kernel, const Shape& shape);

/// Kernel rescaled so its circular-convolution norm on `shape` is 1.
ConvolutionKernel normalize_kernel(const ConvolutionKernel& kernel, const Shape& shape);

ImageBuffer apply_mask(const SamplingMask& mask, const ImageBuffer& x);

struct PowerIterationOptions {
    int max_iters = 100;
    double rel_tol = 1e-9;
};

/// Estimate of the largest singular value of `op`.
double power_iteration(const LinearOperator& op, Rng& rng, PowerIterationOptions opts = {});
inline double power_iteration(const LinearOperator& op, int iters, Rng& rng)
{
    return power_iteration(op, rng, PowerIterationOptions{iters, 1e-9});
}

// Concrete operators.

class IdentityOperator final : public LinearOperator {
public:
    explicit IdentityOperator(Shape shape) : shape_(shape) {}
    Shape input_shape() const override { return shape_; }
    Shape output_shape() const override { return shape_; }
    ImageBuffer forward(const ImageBuffer& x) const override;
    ImageBuffer adjoint(const ImageBuffer& y) const override;
    double norm_bound() const override { return 1.0; }
    std::string describe() const override { return "identity"; }

private:
    Shape shape_;
};

class ZeroOperator final : public LinearOperator {
public:
    ZeroOperator(Shape in, Shape out) : in_(in), out_(out) {}
    Shape input_shape() const override { return in_; }
    Shape output_shape() const override { return out_; }
    ImageBuffer forward(const ImageBuffer& x) const override;
    ImageBuffer adjoint(const ImageBuffer& y) const override;
    double norm_bound() const override { return 0.0; }
    std::string describe() const override { return "zero"; }

private:
    Shape in_, out_;
};

class ConvolutionOperator final : public LinearOperator {
public:
    ConvolutionOperator(ConvolutionKernel kernel, Shape shape,
                        ConvPath path = ConvPath::automatic);
    Shape input_shape() const override { return shape_; }
    Shape output_shape() const override { return shape_; }
    ImageBuffer forward(const ImageBuffer& x) const override;
    ImageBuffer adjoint(const ImageBuffer& y) const override;
    double norm_bound() const override { return norm_; }
    std::string describe() const override;
    const ConvolutionKernel& kernel() const { return kernel_; }

private:
    ConvolutionKernel kernel_;
    Shape shape_;
    ConvPath path_;
    double norm_;
    std::shared_ptr<const detail::Fft2d> fft_;
    std::vector<std::complex<double>> spectrum_;
};

class MaskOperator final : public LinearOperator {
public:
    MaskOperator(SamplingMask mask, std::size_t channels);
    Shape input_shape() const override { return shape_; }
    Shape output_shape() const override { return shape_; }
    ImageBuffer forward(const ImageBuffer& x) const override;
    ImageBuffer adjoint(const ImageBuffer& y) const override { return forward(y); }
    double norm_bound() const override { return 1.0; }
    std::string describe() const override;
    const SamplingMask& mask() const { return mask_; }

private:
    SamplingMask mask_;
    Shape shape_;
};

/// Dense matrix acting on flat vectors (rows x cols, row-major).
class MatrixOperator final : public LinearOperator {
public:
    MatrixOperator(std::size_t rows, std::size_t cols, std::vector<double> entries);
    Shape input_shape() const override { return {cols_, 1, 1}; }
    Shape output_shape() const override { return {rows_, 1, 1}; }
    ImageBuffer forward(const ImageBuffer& x) const override;
    ImageBuffer adjoint(const ImageBuffer& y) const override;
    /// Frobenius norm, an upper bound on the spectral norm.
    double norm_bound() const override { return frobenius_; }
    std::string describe() const override;
    double at(std::size_t r, std::size_t c) const { return entries_[r * cols_ + c]; }

private:
    std::size_t rows_, cols_;
    std::vector<double> entries_;
    double frobenius_;
};

/// x -> (A x, B x), with norm bound sqrt(|A|^2 + |B|^2).
class StackedOperator final : public LinearOperator {
public:
    StackedOperator(OperatorPtr a, OperatorPtr b);
    Shape input_shape() const override { return a_->input_shape(); }
    Shape output_shape() const override { return out_; }
    ImageBuffer forward(const ImageBuffer& x) const override;
    ImageBuffer adjoint(const ImageBuffer& y) const override;
    double norm_bound() const override;
    std::string describe() const override;

    const LinearOperator& first() const { return *a_; }
    const LinearOperator& second() const { return *b_; }

private:
    OperatorPtr a_, b_;
    Shape out_;
};

OperatorPtr stack(OperatorPtr a, OperatorPtr b);

/// Kernel text format: first line "H W", then H rows of W decimal taps.
ConvolutionKernel parse_kernel(const std::string& text);
ConvolutionKernel load_kernel(const std::filesystem::path& path);
std::string format_kernel(const ConvolutionKernel& kernel);

}  // namespace pnp
