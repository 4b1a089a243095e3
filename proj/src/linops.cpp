#include "pnp/linops.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <sstream>

#include "fft.hpp"
#include "pnp/kernels.hpp"

namespace pnp {

// ---------------------------------------------------------------- kernels

ConvolutionKernel ConvolutionKernel::centered(std::size_t height, std::size_t width,
                                              std::vector<double> taps)
{
    ConvolutionKernel k{height, width, std::move(taps), height / 2, width / 2};
    k.validate();
    return k;
}

ConvolutionKernel ConvolutionKernel::delta() { return centered(1, 1, {1.0}); }

ConvolutionKernel ConvolutionKernel::gaussian(std::size_t size, double sigma)
{
    if (size == 0 || !(sigma > 0.0)) throw std::invalid_argument("gaussian kernel: bad size/sigma");
    std::vector<double> taps(size * size);
    const double c = 0.5 * static_cast<double>(size - 1);
    for (std::size_t i = 0; i < size; ++i)
        for (std::size_t j = 0; j < size; ++j) {
            const double dy = static_cast<double>(i) - c;
            const double dx = static_cast<double>(j) - c;
            taps[i * size + j] = std::exp(-(dx * dx + dy * dy) / (2.0 * sigma * sigma));
        }
    const double s = std::accumulate(taps.begin(), taps.end(), 0.0);
    for (double& t : taps) t /= s;
    return centered(size, size, std::move(taps));
}

ConvolutionKernel ConvolutionKernel::box(std::size_t size)
{
    if (size == 0) throw std::invalid_argument("box kernel: zero size");
    const double v = 1.0 / static_cast<double>(size * size);
    return centered(size, size, std::vector<double>(size * size, v));
}

double ConvolutionKernel::sum() const { return std::accumulate(taps.begin(), taps.end(), 0.0); }

double ConvolutionKernel::frobenius_norm() const
{
    return std::sqrt(kernels::serial::sum_sq(taps));
}

void ConvolutionKernel::validate() const
{
    if (height == 0 || width == 0 || taps.empty())
        throw std::invalid_argument("convolution kernel is empty");
    if (taps.size() != height * width)
        throw std::invalid_argument("convolution kernel tap count does not match its size");
    if (anchor_row >= height || anchor_col >= width)
        throw std::invalid_argument("convolution kernel anchor outside the support");
    for (double t : taps)
        if (!std::isfinite(t)) throw std::invalid_argument("convolution kernel has non-finite taps");
}

// ---------------------------------------------------------------- masks

SamplingMask SamplingMask::all_keep(std::size_t width, std::size_t height)
{
    return SamplingMask{width, height, std::vector<std::uint8_t>(width * height, 1)};
}

SamplingMask SamplingMask::random(std::size_t width, std::size_t height, double fraction, Rng& rng)
{
    if (!(fraction >= 0.0 && fraction < 1.0))
        throw std::invalid_argument("mask fraction must lie in [0, 1)");
    const std::size_t n = width * height;
    const auto n_masked = static_cast<std::size_t>(std::floor(fraction * static_cast<double>(n)));
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    // Partial Fisher-Yates: the first n_masked entries are a uniform sample.
    for (std::size_t i = 0; i < n_masked; ++i) {
        const std::size_t j = i + static_cast<std::size_t>(rng.below(n - i));
        std::swap(idx[i], idx[j]);
    }
    SamplingMask m = all_keep(width, height);
    for (std::size_t i = 0; i < n_masked; ++i) m.keep[idx[i]] = 0;
    m.validate();
    return m;
}

std::size_t SamplingMask::kept() const
{
    return static_cast<std::size_t>(std::count(keep.begin(), keep.end(), std::uint8_t{1}));
}

void SamplingMask::validate() const
{
    if (keep.size() != width * height) throw std::invalid_argument("mask size mismatch");
    if (kept() == 0) throw std::invalid_argument("mask keeps no pixel");
}

ImageBuffer apply_mask(const SamplingMask& mask, const ImageBuffer& x)
{
    if (mask.width != x.width() || mask.height != x.height())
        throw ShapeError("apply_mask: mask " + std::to_string(mask.width) + "x" +
                         std::to_string(mask.height) + " vs image " + to_string(x.shape()));
    ImageBuffer out(x.shape());
    const std::size_t k = mask.keep.size();
    for (std::size_t c = 0; c < x.channels(); ++c) {
        auto in = x.plane(c);
        auto o = out.plane(c);
        for (std::size_t i = 0; i < k; ++i) o[i] = mask.keep[i] ? in[i] : 0.0;
    }
    return out;
}

// ---------------------------------------------------------------- convolution

namespace {

void check_fits(const ConvolutionKernel& k, const Shape& s)
{
    k.validate();
    if (k.height > s.height || k.width > s.width)
        throw std::invalid_argument("kernel " + std::to_string(k.height) + "x" +
                                    std::to_string(k.width) + " larger than image " +
                                    to_string(s));
}

std::vector<std::complex<double>> kernel_spectrum(const ConvolutionKernel& k,
                                                  const detail::Fft2d& fft)
{
    const auto grid = detail::embed_kernel(k.taps, k.height, k.width, k.anchor_row, k.anchor_col,
                                           fft.height(), fft.width());
    std::vector<std::complex<double>> spec(fft.spectrum_size());
    fft.forward(grid, spec);
    return spec;
}

ImageBuffer conv_frequency(const detail::Fft2d& fft, std::span<const std::complex<double>> kspec,
                           const ImageBuffer& x, bool adjoint)
{
    ImageBuffer out(x.shape());
    const double inv_n = 1.0 / static_cast<double>(x.shape().pixels());
    std::vector<std::complex<double>> spec(fft.spectrum_size());
    for (std::size_t c = 0; c < x.channels(); ++c) {
        fft.forward(x.plane(c), spec);
        for (std::size_t i = 0; i < spec.size(); ++i)
            spec[i] *= adjoint ? std::conj(kspec[i]) : kspec[i];
        fft.inverse(spec, out.plane(c));
        for (double& v : out.plane(c)) v *= inv_n;
    }
    return out;
}

ImageBuffer conv_spatial(const ConvolutionKernel& k, const ImageBuffer& x, bool adjoint)
{
    ImageBuffer out(x.shape());
    for (std::size_t c = 0; c < x.channels(); ++c)
        kernels::conv_plane(x.plane(c), x.height(), x.width(), k.taps, k.height, k.width,
                            k.anchor_row, k.anchor_col, adjoint, out.plane(c));
    return out;
}

bool use_frequency(const ConvolutionKernel& k, ConvPath path)
{
    if (path == ConvPath::automatic) return k.taps.size() > 9;
    return path == ConvPath::frequency;
}

ImageBuffer conv_any(const ConvolutionKernel& k, const ImageBuffer& x, ConvPath path, bool adjoint)
{
    check_fits(k, x.shape());
    if (!use_frequency(k, path)) return conv_spatial(k, x, adjoint);
    detail::Fft2d fft(x.height(), x.width());
    const auto kspec = kernel_spectrum(k, fft);
    return conv_frequency(fft, kspec, x, adjoint);
}

}  // namespace

ImageBuffer conv_circular(const ConvolutionKernel& kernel, const ImageBuffer& x, ConvPath path)
{
    return conv_any(kernel, x, path, false);
}

ImageBuffer conv_circular_adjoint(const ConvolutionKernel& kernel, const ImageBuffer& y,
                                  ConvPath path)
{
    return conv_any(kernel, y, path, true);
}

double opnorm_conv(const ConvolutionKernel& kernel, const Shape& shape)
{
    check_fits(kernel, shape);
    detail::Fft2d fft(shape.height, shape.width);
    const auto spec = kernel_spectrum(kernel, fft);
    double m = 0.0;
    for (const auto& z : spec) m = std::max(m, std::abs(z));
    return m;
}

ConvolutionKernel normalize_kernel(const ConvolutionKernel& kernel, const Shape& shape)
{
    const double n = opnorm_conv(kernel, shape);
    if (!(n > 0.0)) throw std::invalid_argument("normalize_kernel: all-zero kernel");
    ConvolutionKernel out = kernel;
    for (double& t : out.taps) t /= n;
    return out;
}

// ---------------------------------------------------------------- power iteration

double power_iteration(const LinearOperator& op, Rng& rng, PowerIterationOptions opts)
{
    if (opts.max_iters < 1) throw std::invalid_argument("power_iteration: iters must be >= 1");
    const Shape in = op.input_shape();
    ImageBuffer x;
    double nx = 0.0;
    do {
        x = rng.normal_image(in);
        nx = l2_norm(x);
    } while (!(nx > 0.0));
    x = scaled(1.0 / nx, x);

    double estimate = 0.0;
    for (int it = 0; it < opts.max_iters; ++it) {
        const ImageBuffer ax = op.forward(x);
        const double next = l2_norm(ax);
        const ImageBuffer z = op.adjoint(ax);
        const double nz = l2_norm(z);
        if (!(nz > 0.0)) return next;  // x landed in the null space: operator is zero on it
        x = scaled(1.0 / nz, z);
        const double change = std::abs(next - estimate);
        estimate = next;
        if (it > 0 && change <= opts.rel_tol * estimate) break;
    }
    return estimate;
}

// ---------------------------------------------------------------- operators

ImageBuffer IdentityOperator::forward(const ImageBuffer& x) const
{
    if (x.shape() != shape_) throw ShapeError("identity: input shape mismatch");
    return x;
}

ImageBuffer IdentityOperator::adjoint(const ImageBuffer& y) const { return forward(y); }

ImageBuffer ZeroOperator::forward(const ImageBuffer& x) const
{
    if (x.shape() != in_) throw ShapeError("zero operator: input shape mismatch");
    return ImageBuffer(out_);
}

ImageBuffer ZeroOperator::adjoint(const ImageBuffer& y) const
{
    if (y.shape() != out_) throw ShapeError("zero operator: adjoint input shape mismatch");
    return ImageBuffer(in_);
}

ConvolutionOperator::ConvolutionOperator(ConvolutionKernel kernel, Shape shape, ConvPath path)
    : kernel_(std::move(kernel)), shape_(shape), path_(path), norm_(0.0)
{
    check_fits(kernel_, shape_);
    auto fft = std::make_shared<detail::Fft2d>(shape_.height, shape_.width);
    spectrum_ = kernel_spectrum(kernel_, *fft);
    for (const auto& z : spectrum_) norm_ = std::max(norm_, std::abs(z));
    if (use_frequency(kernel_, path_)) fft_ = std::move(fft);
}

ImageBuffer ConvolutionOperator::forward(const ImageBuffer& x) const
{
    if (x.shape() != shape_) throw ShapeError("convolution: input shape mismatch");
    if (fft_) return conv_frequency(*fft_, spectrum_, x, false);
    return conv_spatial(kernel_, x, false);
}

ImageBuffer ConvolutionOperator::adjoint(const ImageBuffer& y) const
{
    if (y.shape() != shape_) throw ShapeError("convolution: adjoint input shape mismatch");
    if (fft_) return conv_frequency(*fft_, spectrum_, y, true);
    return conv_spatial(kernel_, y, true);
}

std::string ConvolutionOperator::describe() const
{
    return "conv" + std::to_string(kernel_.height) + "x" + std::to_string(kernel_.width);
}

MaskOperator::MaskOperator(SamplingMask mask, std::size_t channels)
    : mask_(std::move(mask)), shape_{mask_.width, mask_.height, channels}
{
    mask_.validate();
}

ImageBuffer MaskOperator::forward(const ImageBuffer& x) const
{
    if (x.shape() != shape_) throw ShapeError("mask: input shape mismatch");
    return apply_mask(mask_, x);
}

std::string MaskOperator::describe() const
{
    return "mask(kept " + std::to_string(mask_.kept()) + "/" + std::to_string(mask_.keep.size()) +
           ")";
}

MatrixOperator::MatrixOperator(std::size_t rows, std::size_t cols, std::vector<double> entries)
    : rows_(rows), cols_(cols), entries_(std::move(entries))
{
    if (entries_.size() != rows * cols) throw ShapeError("matrix entry count mismatch");
    frobenius_ = std::sqrt(kernels::serial::sum_sq(entries_));
}

ImageBuffer MatrixOperator::forward(const ImageBuffer& x) const
{
    if (x.size() != cols_) throw ShapeError("matrix: input length mismatch");
    ImageBuffer out(output_shape());
    for (std::size_t r = 0; r < rows_; ++r) {
        double acc = 0.0;
        for (std::size_t c = 0; c < cols_; ++c) acc += entries_[r * cols_ + c] * x[c];
        out[r] = acc;
    }
    return out;
}

ImageBuffer MatrixOperator::adjoint(const ImageBuffer& y) const
{
    if (y.size() != rows_) throw ShapeError("matrix: adjoint input length mismatch");
    ImageBuffer out(input_shape());
    for (std::size_t r = 0; r < rows_; ++r)
        for (std::size_t c = 0; c < cols_; ++c) out[c] += entries_[r * cols_ + c] * y[r];
    return out;
}

std::string MatrixOperator::describe() const
{
    return "matrix" + std::to_string(rows_) + "x" + std::to_string(cols_);
}

StackedOperator::StackedOperator(OperatorPtr a, OperatorPtr b) : a_(std::move(a)), b_(std::move(b))
{
    if (!a_ || !b_) throw std::invalid_argument("stack: null operator");
    if (a_->input_shape() != b_->input_shape())
        throw ShapeError("stack: input shapes differ (" + to_string(a_->input_shape()) + " vs " +
                         to_string(b_->input_shape()) + ")");
    out_ = concat(ImageBuffer(a_->output_shape()), ImageBuffer(b_->output_shape())).shape();
}

ImageBuffer StackedOperator::forward(const ImageBuffer& x) const
{
    return concat(a_->forward(x), b_->forward(x));
}

ImageBuffer StackedOperator::adjoint(const ImageBuffer& y) const
{
    auto [y1, y2] = split(y, a_->output_shape(), b_->output_shape());
    return a_->adjoint(y1) + b_->adjoint(y2);
}

double StackedOperator::norm_bound() const
{
    return std::hypot(a_->norm_bound(), b_->norm_bound());
}

std::string StackedOperator::describe() const
{
    return "stack(" + a_->describe() + ", " + b_->describe() + ")";
}

OperatorPtr stack(OperatorPtr a, OperatorPtr b)
{
    return std::make_shared<StackedOperator>(std::move(a), std::move(b));
}

// ---------------------------------------------------------------- kernel files

ConvolutionKernel parse_kernel(const std::string& text)
{
    std::istringstream in(text);
    long long h = 0, w = 0;
    if (!(in >> h >> w) || h <= 0 || w <= 0)
        throw std::invalid_argument("kernel file: expected positive 'H W' header");
    std::vector<double> taps(static_cast<std::size_t>(h * w));
    for (auto& t : taps)
        if (!(in >> t)) throw std::invalid_argument("kernel file: expected H*W taps");
    std::string extra;
    if (in >> extra) throw std::invalid_argument("kernel file: trailing content '" + extra + "'");
    return ConvolutionKernel::centered(static_cast<std::size_t>(h), static_cast<std::size_t>(w),
                                       std::move(taps));
}

ConvolutionKernel load_kernel(const std::filesystem::path& path)
{
    std::ifstream f(path);
    if (!f) throw std::runtime_error("cannot open kernel file " + path.string());
    std::stringstream ss;
    ss << f.rdbuf();
    return parse_kernel(ss.str());
}

std::string format_kernel(const ConvolutionKernel& kernel)
{
    std::ostringstream out;
    out << kernel.height << ' ' << kernel.width << '\n' << std::setprecision(17);
    for (std::size_t r = 0; r < kernel.height; ++r) {
        for (std::size_t c = 0; c < kernel.width; ++c)
            out << (c ? " " : "") << kernel.at(r, c);
        out << '\n';
    }
    return out.str();
}

}  // namespace pnp
