#include "pnp/image.hpp"

#include <algorithm>
#include <cmath>

#include "pnp/kernels.hpp"

namespace pnp {

std::string to_string(const Shape& s)
{
    return std::to_string(s.width) + "x" + std::to_string(s.height) + "x" +
           std::to_string(s.channels);
}

ImageBuffer::ImageBuffer(Shape shape, double fill) : shape_(shape), data_(shape.size(), fill) {}

ImageBuffer::ImageBuffer(Shape shape, std::vector<double> data)
    : shape_(shape), data_(std::move(data))
{
    if (data_.size() != shape_.size())
        throw ShapeError("image data length " + std::to_string(data_.size()) +
                         " does not match shape " + to_string(shape_));
}

ImageBuffer ImageBuffer::vector(std::vector<double> values)
{
    const Shape s{values.size(), 1, 1};
    return ImageBuffer(s, std::move(values));
}

std::span<const double> ImageBuffer::plane(std::size_t c) const
{
    return std::span<const double>(data_).subspan(c * shape_.pixels(), shape_.pixels());
}

std::span<double> ImageBuffer::plane(std::size_t c)
{
    return std::span<double>(data_).subspan(c * shape_.pixels(), shape_.pixels());
}

bool ImageBuffer::all_finite() const
{
    return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

ImageBuffer ImageBuffer::reshaped(Shape shape) const
{
    return ImageBuffer(shape, data_);
}

void require_same_shape(const ImageBuffer& a, const ImageBuffer& b, const char* what)
{
    if (a.shape() != b.shape())
        throw ShapeError(std::string(what) + ": shape mismatch " + to_string(a.shape()) +
                         " vs " + to_string(b.shape()));
}

ImageBuffer axpy(double a, const ImageBuffer& x, const ImageBuffer& y)
{
    require_same_shape(x, y, "axpy");
    ImageBuffer out(x.shape());
    kernels::axpy(a, x.data(), y.data(), out.data());
    return out;
}

ImageBuffer axpby(double a, const ImageBuffer& x, double b, const ImageBuffer& y)
{
    require_same_shape(x, y, "axpby");
    ImageBuffer out(x.shape());
    kernels::axpby(a, x.data(), b, y.data(), out.data());
    return out;
}

ImageBuffer scaled(double a, const ImageBuffer& x)
{
    ImageBuffer out(x.shape());
    kernels::scale(a, x.data(), out.data());
    return out;
}

ImageBuffer operator+(const ImageBuffer& x, const ImageBuffer& y) { return axpy(1.0, x, y); }
ImageBuffer operator-(const ImageBuffer& x, const ImageBuffer& y) { return axpy(-1.0, y, x); }

double dot(const ImageBuffer& x, const ImageBuffer& y)
{
    require_same_shape(x, y, "dot");
    return kernels::dot(x.data(), y.data());
}

double l2_norm(const ImageBuffer& x) { return std::sqrt(kernels::sum_sq(x.data())); }

double distance(const ImageBuffer& x, const ImageBuffer& y)
{
    require_same_shape(x, y, "distance");
    return std::sqrt(kernels::dist_sq(x.data(), y.data()));
}

double max_abs(const ImageBuffer& x)
{
    double m = 0.0;
    for (double v : x.data()) m = std::max(m, std::abs(v));
    return m;
}

ImageBuffer concat(const ImageBuffer& a, const ImageBuffer& b)
{
    Shape s;
    if (a.width() == b.width() && a.height() == b.height())
        s = {a.width(), a.height(), a.channels() + b.channels()};
    else
        s = {a.size() + b.size(), 1, 1};
    std::vector<double> d;
    d.reserve(a.size() + b.size());
    d.insert(d.end(), a.data().begin(), a.data().end());
    d.insert(d.end(), b.data().begin(), b.data().end());
    return ImageBuffer(s, std::move(d));
}

std::pair<ImageBuffer, ImageBuffer> split(const ImageBuffer& ab, const Shape& a, const Shape& b)
{
    if (ab.size() != a.size() + b.size())
        throw ShapeError("split: " + to_string(ab.shape()) + " cannot hold " + to_string(a) +
                         " + " + to_string(b));
    auto d = ab.data();
    std::vector<double> da(d.begin(), d.begin() + static_cast<std::ptrdiff_t>(a.size()));
    std::vector<double> db(d.begin() + static_cast<std::ptrdiff_t>(a.size()), d.end());
    return {ImageBuffer(a, std::move(da)), ImageBuffer(b, std::move(db))};
}

}  // namespace pnp
