// anif: animatable neural implicit fields
// SPDX-License-Identifier: Apache-2.0
#include "anif/image.hpp"

#include <png.h>

#include <cstdio>
#include <memory>

namespace anif {

int MaskImage::count() const {
  int n = 0;
  for (uint8_t v : data) n += v != 0;
  return n;
}

namespace {

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f != nullptr) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

void write_png_impl(const std::string& path, int width, int height, int channels,
                    const std::vector<uint8_t>& bytes) {
  FilePtr fp(std::fopen(path.c_str(), "wb"));
  if (!fp) throw IoError("cannot write " + path);
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (png == nullptr || info == nullptr) {
    png_destroy_write_struct(&png, &info);
    throw IoError("libpng init failed for " + path);
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw IoError("libpng failed while writing " + path);
  }
  png_init_io(png, fp.get());
  png_set_IHDR(png, info, width, height, 8,
               channels == 3 ? PNG_COLOR_TYPE_RGB : PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  std::vector<png_bytep> rows(height);
  for (int r = 0; r < height; ++r)
    rows[r] = const_cast<png_bytep>(bytes.data() + static_cast<size_t>(r) * width * channels);
  png_write_image(png, rows.data());
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

void read_png_impl(const std::string& path, int& width, int& height, std::vector<uint8_t>& rgb) {
  FilePtr fp(std::fopen(path.c_str(), "rb"));
  if (!fp) throw IoError("cannot open " + path);
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (png == nullptr || info == nullptr) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw IoError("libpng init failed for " + path);
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw IoError("libpng failed while reading " + path);
  }
  png_init_io(png, fp.get());
  png_read_info(png, info);
  width = static_cast<int>(png_get_image_width(png, info));
  height = static_cast<int>(png_get_image_height(png, info));
  // normalize whatever we get to 8-bit RGB
  png_set_expand(png);
  if (png_get_bit_depth(png, info) == 16) png_set_strip_16(png);
  png_set_strip_alpha(png);
  const auto color = png_get_color_type(png, info);
  if (color == PNG_COLOR_TYPE_GRAY || color == PNG_COLOR_TYPE_GRAY_ALPHA)
    png_set_gray_to_rgb(png);
  png_read_update_info(png, info);
  rgb.resize(static_cast<size_t>(width) * height * 3);
  std::vector<png_bytep> rows(height);
  for (int r = 0; r < height; ++r)
    rows[r] = rgb.data() + static_cast<size_t>(r) * width * 3;
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
}

}  // namespace

void save_png(const Image& image, const std::string& path) {
  std::vector<uint8_t> bytes(static_cast<size_t>(image.width) * image.height * 3);
  for (size_t i = 0; i < bytes.size(); ++i) bytes[i] = quantize8(image.data[i]);
  write_png_impl(path, image.width, image.height, 3, bytes);
}

Image load_png(const std::string& path) {
  int w = 0, h = 0;
  std::vector<uint8_t> bytes;
  read_png_impl(path, w, h, bytes);
  Image img(w, h);
  for (size_t i = 0; i < bytes.size(); ++i) img.data[i] = bytes[i] / 255.0;
  return img;
}

void save_mask_png(const MaskImage& mask, const std::string& path) {
  std::vector<uint8_t> bytes(mask.data.size());
  for (size_t i = 0; i < bytes.size(); ++i) bytes[i] = mask.data[i] ? 255 : 0;
  write_png_impl(path, mask.width, mask.height, 1, bytes);
}

MaskImage load_mask_png(const std::string& path) {
  int w = 0, h = 0;
  std::vector<uint8_t> bytes;
  read_png_impl(path, w, h, bytes);
  MaskImage mask(w, h);
  for (int r = 0; r < h; ++r)
    for (int c = 0; c < w; ++c)
      mask.at(r, c) = bytes[(static_cast<size_t>(r) * w + c) * 3] >= 128 ? 1 : 0;
  return mask;
}

}  // namespace anif
