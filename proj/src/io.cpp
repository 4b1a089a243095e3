#include "pnp/io.hpp"

#include <png.h>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <iterator>
#include <limits>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "pnp/protocol.hpp"

namespace pnp::io {

namespace fs = std::filesystem;

Format format_for(const fs::path& path)
{
    std::string ext = path.extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
    if (ext == ".png") return Format::png;
    if (ext == ".pgm" || ext == ".ppm" || ext == ".pnm") return Format::pnm;
    if (ext == ".pnpf") return Format::raw;
    throw IoError("unsupported image extension '" + ext + "' (png, pgm, ppm, pnpf)");
}

namespace {

std::vector<std::uint8_t> slurp(const fs::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

double quantize(double v, double maxval)
{
    return std::round(std::clamp(v, 0.0, 1.0) * maxval);
}

struct FileCloser {
    void operator()(std::FILE* f) const { std::fclose(f); }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

// ---- PNG

ImageBuffer read_png(const fs::path& path)
{
    png_image img{};
    img.version = PNG_IMAGE_VERSION;
    if (!png_image_begin_read_from_file(&img, path.c_str()))
        throw IoError("cannot read PNG " + path.string() + ": " + img.message);
    const bool color = img.format & PNG_FORMAT_FLAG_COLOR;
    const bool deep = (img.format & PNG_FORMAT_FLAG_LINEAR) != 0;
    img.format = color ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
    // 16-bit files are linear to libpng, so reading them linear keeps the samples.
    if (deep) img.format |= PNG_FORMAT_FLAG_LINEAR;
    const std::size_t w = img.width, h = img.height, ch = color ? 3 : 1;
    ImageBuffer out(Shape{w, h, ch});
    std::vector<std::uint8_t> buf(PNG_IMAGE_SIZE(img));
    if (!png_image_finish_read(&img, nullptr, buf.data(), 0, nullptr)) {
        const std::string msg = img.message;
        png_image_free(&img);
        throw IoError("cannot decode PNG " + path.string() + ": " + msg);
    }
    const bool linear16 = img.format & PNG_FORMAT_FLAG_LINEAR;
    for (std::size_t r = 0; r < h; ++r)
        for (std::size_t x = 0; x < w; ++x)
            for (std::size_t c = 0; c < ch; ++c) {
                const std::size_t idx = (r * w + x) * ch + c;
                double v;
                if (linear16) {
                    std::uint16_t s;
                    std::memcpy(&s, buf.data() + 2 * idx, 2);
                    v = s / 65535.0;
                } else {
                    v = buf[idx] / 255.0;
                }
                out.at(c, r, x) = v;
            }
    return out;
}

void write_png(const fs::path& path, const ImageBuffer& x, int bit_depth)
{
    if (x.channels() != 1 && x.channels() != 3)
        throw IoError("PNG output needs 1 or 3 channels, got " + std::to_string(x.channels()));
    if (bit_depth != 8 && bit_depth != 16) throw IoError("PNG bit depth must be 8 or 16");
    FilePtr f(std::fopen(path.c_str(), "wb"));
    if (!f) throw IoError("cannot open " + path.string() + " for writing");

    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (!png || !info) {
        png_destroy_write_struct(&png, &info);
        throw IoError("libpng initialization failed");
    }
    const std::size_t w = x.width(), h = x.height(), ch = x.channels();
    const std::size_t bytes = static_cast<std::size_t>(bit_depth / 8);
    std::vector<std::uint8_t> row(w * ch * bytes);
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        throw IoError("failed writing PNG " + path.string());
    }
    png_init_io(png, f.get());
    png_set_IHDR(png, info, static_cast<png_uint_32>(w), static_cast<png_uint_32>(h), bit_depth,
                 ch == 3 ? PNG_COLOR_TYPE_RGB : PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE,
                 PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    const double maxval = bit_depth == 8 ? 255.0 : 65535.0;
    for (std::size_t r = 0; r < h; ++r) {
        for (std::size_t c0 = 0; c0 < w; ++c0)
            for (std::size_t c = 0; c < ch; ++c) {
                const auto q = static_cast<unsigned>(quantize(x.at(c, r, c0), maxval));
                std::uint8_t* p = row.data() + (c0 * ch + c) * bytes;
                if (bytes == 1) {
                    p[0] = static_cast<std::uint8_t>(q);
                } else {  // PNG stores 16-bit samples big-endian
                    p[0] = static_cast<std::uint8_t>(q >> 8);
                    p[1] = static_cast<std::uint8_t>(q & 0xFF);
                }
            }
        png_write_row(png, row.data());
    }
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
}

// ---- PNM

class PnmReader {
public:
    explicit PnmReader(std::vector<std::uint8_t> bytes) : b_(std::move(bytes)) {}

    std::string magic()
    {
        if (b_.size() < 2 || b_[0] != 'P') throw IoError("not a PNM file");
        pos_ = 2;
        return {static_cast<char>(b_[0]), static_cast<char>(b_[1])};
    }

    unsigned long number()
    {
        skip_space();
        if (pos_ >= b_.size() || !std::isdigit(b_[pos_])) throw IoError("PNM: expected a number");
        unsigned long v = 0;
        while (pos_ < b_.size() && std::isdigit(b_[pos_])) {
            v = v * 10 + (b_[pos_++] - '0');
            if (v > 0xFFFFFFFFul) throw IoError("PNM: number too large");
        }
        return v;
    }

    // Binary data starts after exactly one whitespace byte.
    std::size_t binary_start()
    {
        if (pos_ >= b_.size()) throw IoError("PNM: truncated header");
        return pos_ + 1;
    }
    const std::vector<std::uint8_t>& bytes() const { return b_; }

private:
    void skip_space()
    {
        while (pos_ < b_.size()) {
            if (b_[pos_] == '#') {
                while (pos_ < b_.size() && b_[pos_] != '\n') ++pos_;
            } else if (std::isspace(b_[pos_])) {
                ++pos_;
            } else {
                break;
            }
        }
    }

    std::vector<std::uint8_t> b_;
    std::size_t pos_ = 0;
};

ImageBuffer read_pnm(const fs::path& path)
{
    PnmReader rd(slurp(path));
    const std::string m = rd.magic();
    if (m != "P2" && m != "P3" && m != "P5" && m != "P6")
        throw IoError("unsupported PNM type " + m + " in " + path.string());
    const bool color = m == "P3" || m == "P6";
    const bool ascii = m == "P2" || m == "P3";
    const std::size_t w = rd.number(), h = rd.number();
    const unsigned long maxval = rd.number();
    if (w == 0 || h == 0) throw IoError("PNM: empty image");
    if (maxval == 0 || maxval > 65535) throw IoError("PNM: bad maxval");
    const std::size_t ch = color ? 3 : 1;
    ImageBuffer out(Shape{w, h, ch});
    const std::size_t n = w * h * ch;
    const double maxv = static_cast<double>(maxval);
    std::vector<double> interleaved(n);
    if (ascii) {
        for (std::size_t i = 0; i < n; ++i) {
            const unsigned long v = rd.number();
            if (v > maxval) throw IoError("PNM: sample exceeds maxval");
            interleaved[i] = v / maxv;
        }
    } else {
        const std::size_t start = rd.binary_start();
        const std::size_t bps = maxval < 256 ? 1 : 2;
        const auto& b = rd.bytes();
        if (b.size() < start + n * bps) throw IoError("PNM: truncated data in " + path.string());
        for (std::size_t i = 0; i < n; ++i) {
            const std::size_t o = start + i * bps;
            const unsigned v = bps == 1 ? b[o] : (unsigned{b[o]} << 8) | b[o + 1];
            interleaved[i] = v / maxv;
        }
    }
    for (std::size_t r = 0; r < h; ++r)
        for (std::size_t x = 0; x < w; ++x)
            for (std::size_t c = 0; c < ch; ++c) out.at(c, r, x) = interleaved[(r * w + x) * ch + c];
    return out;
}

void write_pnm(const fs::path& path, const ImageBuffer& x, int bit_depth)
{
    if (x.channels() != 1 && x.channels() != 3)
        throw IoError("PNM output needs 1 or 3 channels, got " + std::to_string(x.channels()));
    const unsigned maxval = bit_depth == 16 ? 65535 : 255;
    std::ofstream out(path);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    out << (x.channels() == 3 ? "P3" : "P2") << '\n' << x.width() << ' ' << x.height() << '\n' << maxval << '\n';
    for (std::size_t r = 0; r < x.height(); ++r) {
        for (std::size_t c0 = 0; c0 < x.width(); ++c0)
            for (std::size_t c = 0; c < x.channels(); ++c)
                out << static_cast<unsigned>(quantize(x.at(c, r, c0), maxval))
                    << (c0 + 1 == x.width() && c + 1 == x.channels() ? '\n' : ' ');
    }
    if (!out) throw IoError("failed writing " + path.string());
}

}  // namespace

ImageBuffer read_raw(const fs::path& path)
{
    const auto bytes = slurp(path);
    try {
        const protocol::Frame f = protocol::decode(bytes);
        if (f.header.opcode != protocol::Opcode::denoise)
            throw IoError("raw file " + path.string() + " does not hold a data frame");
        return protocol::from_f32({f.header.width, f.header.height, f.header.channels}, f.payload);
    } catch (const protocol::ProtocolError& e) {
        throw IoError("malformed raw file " + path.string() + ": " + e.what());
    }
}

void write_raw(const fs::path& path, const ImageBuffer& x)
{
    constexpr double f32_max = std::numeric_limits<float>::max();
    for (double v : x.data())
        if (!(std::abs(v) <= f32_max))
            throw IoError("cannot store " + std::to_string(v) + " as a 32-bit float in " + path.string());
    const auto bytes = protocol::encode_request(x);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("failed writing " + path.string());
}

ImageBuffer read_image(const fs::path& path)
{
    switch (format_for(path)) {
    case Format::png: return read_png(path);
    case Format::pnm: return read_pnm(path);
    case Format::raw: return read_raw(path);
    }
    throw IoError("unreachable");
}

void write_image(const fs::path& path, const ImageBuffer& x, int bit_depth)
{
    switch (format_for(path)) {
    case Format::png: return write_png(path, x, bit_depth);
    case Format::pnm: return write_pnm(path, x, bit_depth);
    case Format::raw: return write_raw(path, x);
    }
}

}  // namespace pnp::io
