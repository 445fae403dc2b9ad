#include "airsplat/image_io.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <limits>
#include <string>
#include <vector>

#include "airsplat/error.hpp"

namespace airsplat {

static_assert(std::endian::native == std::endian::little,
              "float32 rasters are written in native order");

void write_ppm(const std::filesystem::path& path, const Image& rgb) {
  if (rgb.channels != 3) throw ShapeError("PPM needs a 3-channel image");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << "P6\n" << rgb.width << ' ' << rgb.height << "\n255\n";
  std::vector<unsigned char> bytes(rgb.data.size());
  for (std::size_t i = 0; i < bytes.size(); ++i) {
    bytes[i] = static_cast<unsigned char>(
        std::lround(std::clamp(rgb.data[i], 0.0, 1.0) * 255.0));
  }
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("failed writing " + path.string());
}

Image read_ppm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::string magic;
  int w = 0, h = 0, maxval = 0;
  in >> magic >> w >> h >> maxval;
  if (magic != "P6" || w <= 0 || h <= 0 || maxval != 255) {
    throw IoError(path.string() + ": not an 8-bit binary PPM");
  }
  in.get();  // single whitespace after the header
  Image img(w, h, 3);
  std::vector<unsigned char> bytes(img.data.size());
  in.read(reinterpret_cast<char*>(bytes.data()),
          static_cast<std::streamsize>(bytes.size()));
  if (in.gcount() != static_cast<std::streamsize>(bytes.size())) {
    throw IoError(path.string() + ": truncated pixel data");
  }
  for (std::size_t i = 0; i < bytes.size(); ++i) img.data[i] = bytes[i] / 255.0;
  return img;
}

void write_f32(const std::filesystem::path& path, const Image& depth) {
  if (depth.channels != 1) throw ShapeError("depth raster must be 1-channel");
  std::vector<float> buf(depth.data.begin(), depth.data.end());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(buf.data()),
            static_cast<std::streamsize>(buf.size() * sizeof(float)));
  if (!out) throw IoError("failed writing " + path.string());
}

Image read_f32(const std::filesystem::path& path, int width, int height) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  Image img(width, height, 1);
  std::vector<float> buf(img.data.size());
  in.read(reinterpret_cast<char*>(buf.data()),
          static_cast<std::streamsize>(buf.size() * sizeof(float)));
  if (in.gcount() != static_cast<std::streamsize>(buf.size() * sizeof(float))) {
    throw IoError(path.string() + ": truncated depth raster");
  }
  std::copy(buf.begin(), buf.end(), img.data.begin());
  return img;
}

Image colorize_depth(const Image& depth) {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (double d : depth.data) {
    if (std::isfinite(d)) {
      lo = std::min(lo, d);
      hi = std::max(hi, d);
    }
  }
  Image out(depth.width, depth.height, 3);
  const double span = hi > lo ? hi - lo : 1.0;
  for (int y = 0; y < depth.height; ++y) {
    for (int x = 0; x < depth.width; ++x) {
      const double d = depth.at(x, y);
      const double v = std::isfinite(d) ? (d - lo) / span : 0.0;
      for (int c = 0; c < 3; ++c) out.at(x, y, c) = v;
    }
  }
  return out;
}

}  // namespace airsplat
