#pragma once

#include <filesystem>
#include <stdexcept>

#include "pnp/image.hpp"

namespace pnp::io {

class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class Format { png, pnm, raw };

/// Chosen by extension: .png, .pgm/.ppm/.pnm, .pnpf (raw float frame).
Format format_for(const std::filesystem::path& path);

/// PNG (8/16-bit gray or RGB; alpha dropped) and PNM (P2/P3/P5/P6) are scaled
/// to [0,1]. Raw files keep their values.
ImageBuffer read_image(const std::filesystem::path& path);

/// PNG and PNM values are clamped to [0,1] and quantized; `bit_depth` is 8 or
/// 16. PNM output is ASCII (P2/P3). Raw output is lossless up to 32-bit float.
void write_image(const std::filesystem::path& path, const ImageBuffer& x, int bit_depth = 8);

/// Raw float file: a protocol request frame (header + f32 planar payload).
ImageBuffer read_raw(const std::filesystem::path& path);
void write_raw(const std::filesystem::path& path, const ImageBuffer& x);

}  // namespace pnp::io
