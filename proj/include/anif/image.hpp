// anif: animatable neural implicit fields
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "anif/common.hpp"

namespace anif {

// RGB image with values in [0, 1], row-major.
struct Image {
  int width = 0;
  int height = 0;
  std::vector<double> data;  // height * width * 3

  Image() = default;
  Image(int w, int h) : width(w), height(h), data(static_cast<size_t>(w) * h * 3, 0.0) {}

  double& at(int row, int col, int c) {
    return data[(static_cast<size_t>(row) * width + col) * 3 + c];
  }
  double at(int row, int col, int c) const {
    return data[(static_cast<size_t>(row) * width + col) * 3 + c];
  }
};

// Binary foreground mask, one byte per pixel, values 0 or 1.
struct MaskImage {
  int width = 0;
  int height = 0;
  std::vector<uint8_t> data;

  MaskImage() = default;
  MaskImage(int w, int h) : width(w), height(h), data(static_cast<size_t>(w) * h, 0) {}

  uint8_t& at(int row, int col) { return data[static_cast<size_t>(row) * width + col]; }
  uint8_t at(int row, int col) const { return data[static_cast<size_t>(row) * width + col]; }
  int count() const;
};

// 8-bit PNG, RGB for images and grayscale for masks (mask pixels 0 or 255).
void save_png(const Image& image, const std::string& path);
Image load_png(const std::string& path);
void save_mask_png(const MaskImage& mask, const std::string& path);
MaskImage load_mask_png(const std::string& path);

inline uint8_t quantize8(double v) {
  const double c = v < 0.0 ? 0.0 : (v > 1.0 ? 1.0 : v);
  return static_cast<uint8_t>(std::lround(c * 255.0));
}

}  // namespace anif
