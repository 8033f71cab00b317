#pragma once

#include <string>
#include <vector>

#include "textile/tensor.hpp"

namespace textile {

// Interleaved RGB raster, values in [0, 1], row-major.
struct Image {
  int height = 0;
  int width = 0;
  std::vector<Real> pixels;

  static Image zeros(int height, int width);

  Real& at(int y, int x, int c) {
    return pixels[(static_cast<size_t>(y) * width + x) * 3 + c];
  }
  Real at(int y, int x, int c) const {
    return pixels[(static_cast<size_t>(y) * width + x) * 3 + c];
  }
};

// Binary P6, 8 bits per channel. Writing quantizes with round-to-nearest.
Image read_ppm(const std::string& path);
void write_ppm(const Image& img, const std::string& path);

// Lossless float raster: magic "TXIF", then height/width/channels as
// little-endian int32, then 32-bit little-endian floats.
Image read_raster(const std::string& path);
void write_raster(const Image& img, const std::string& path);

} // namespace textile
