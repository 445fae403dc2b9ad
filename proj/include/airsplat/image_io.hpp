#pragma once

#include <filesystem>

#include "airsplat/image.hpp"

namespace airsplat {

/// Binary PPM (P6, maxval 255). Values are clamped to [0, 1] and rounded.
void write_ppm(const std::filesystem::path& path, const Image& rgb);
Image read_ppm(const std::filesystem::path& path);

/// Raw little-endian float32, row-major, no header.
void write_f32(const std::filesystem::path& path, const Image& depth);
Image read_f32(const std::filesystem::path& path, int width, int height);

/// Linear grayscale over the finite range of `depth`; non-finite pixels
/// are black.
Image colorize_depth(const Image& depth);

}  // namespace airsplat
