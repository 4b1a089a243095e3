#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace pnp {

class ShapeError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

struct Shape {
    std::size_t width = 0;
    std::size_t height = 0;
    std::size_t channels = 1;

    std::size_t pixels() const { return width * height; }
    std::size_t size() const { return width * height * channels; }

    friend bool operator==(const Shape&, const Shape&) = default;
};

std::string to_string(const Shape& s);

/// A dense real image stored channel-planar, each plane row-major.
///
/// Element (c, r, x) lives at index c*width*height + r*width + x. Values are
/// nominally in [0,1] for natural images but nothing here enforces a range.
class ImageBuffer {
public:
    ImageBuffer() = default;
    explicit ImageBuffer(Shape shape, double fill = 0.0);
    ImageBuffer(Shape shape, std::vector<double> data);

    /// A width x 1 x 1 buffer holding `values`.
    static ImageBuffer vector(std::vector<double> values);

    const Shape& shape() const { return shape_; }
    std::size_t width() const { return shape_.width; }
    std::size_t height() const { return shape_.height; }
    std::size_t channels() const { return shape_.channels; }
    std::size_t size() const { return data_.size(); }
    bool empty() const { return data_.empty(); }

    std::span<const double> data() const { return data_; }
    std::span<double> data() { return data_; }
    std::span<const double> plane(std::size_t c) const;
    std::span<double> plane(std::size_t c);

    double operator[](std::size_t i) const { return data_[i]; }
    double& operator[](std::size_t i) { return data_[i]; }
    double at(std::size_t c, std::size_t r, std::size_t x) const
    {
        return data_[(c * shape_.height + r) * shape_.width + x];
    }
    double& at(std::size_t c, std::size_t r, std::size_t x)
    {
        return data_[(c * shape_.height + r) * shape_.width + x];
    }

    bool all_finite() const;

    /// Same values, different shape of equal total size.
    ImageBuffer reshaped(Shape shape) const;

private:
    Shape shape_{};
    std::vector<double> data_;
};

void require_same_shape(const ImageBuffer& a, const ImageBuffer& b, const char* what);

/// a*x + y
ImageBuffer axpy(double a, const ImageBuffer& x, const ImageBuffer& y);
/// a*x + b*y
ImageBuffer axpby(double a, const ImageBuffer& x, double b, const ImageBuffer& y);
ImageBuffer scaled(double a, const ImageBuffer& x);
ImageBuffer operator+(const ImageBuffer& x, const ImageBuffer& y);
ImageBuffer operator-(const ImageBuffer& x, const ImageBuffer& y);

double dot(const ImageBuffer& x, const ImageBuffer& y);
double l2_norm(const ImageBuffer& x);
double distance(const ImageBuffer& x, const ImageBuffer& y);
double max_abs(const ImageBuffer& x);

/// Concatenates along the channel axis when width/height agree, otherwise as
/// flat vectors.
ImageBuffer concat(const ImageBuffer& a, const ImageBuffer& b);
/// Inverse of `concat` given the two part shapes.
std::pair<ImageBuffer, ImageBuffer> split(const ImageBuffer& ab, const Shape& a, const Shape& b);

}  // namespace pnp
