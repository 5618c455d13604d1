#pragma once

#include <png.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include "prefgen/common.hpp"

namespace prefgen {

// Interleaved HWC image, values in [0,1]. Disk format is 8-bit PNG, so
// anything written out lives on the k/255 grid; synthetic renders are
// quantized to that grid at creation to make round-trips exact.
struct Image {
  int h = 0, w = 0, c = 0;
  std::vector<float> px;

  Image() = default;
  Image(int h_, int w_, int c_)
      : h(h_), w(w_), c(c_), px(std::size_t(h_) * w_ * c_, 0.0f) {}

  float& at(int y, int x, int ch) { return px[(std::size_t(y) * w + x) * c + ch]; }
  const float& at(int y, int x, int ch) const {
    return px[(std::size_t(y) * w + x) * c + ch];
  }

  bool operator==(const Image&) const = default;
};

inline float quantize_u8(float v) {
  float q = std::nearbyint(std::min(std::max(v, 0.0f), 1.0f) * 255.0f);
  return q / 255.0f;
}

inline void quantize_u8(Image& img) {
  for (float& v : img.px) v = quantize_u8(v);
}

namespace detail {
struct PngCloser {
  std::FILE* f = nullptr;
  ~PngCloser() {
    if (f) std::fclose(f);
  }
};
}  // namespace detail

inline Image read_png(const std::string& path) {
  detail::PngCloser fc;
  fc.f = std::fopen(path.c_str(), "rb");
  if (!fc.f) throw DataError("read_png: cannot open " + path);

  png_byte header[8];
  if (std::fread(header, 1, 8, fc.f) != 8 || png_sig_cmp(header, 0, 8))
    throw DataError("read_png: not a PNG file: " + path);

  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) throw Error("read_png: png_create_read_struct failed");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_read_struct(&png, nullptr, nullptr);
    throw Error("read_png: png_create_info_struct failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw DataError("read_png: libpng failure on " + path);
  }
  png_init_io(png, fc.f);
  png_set_sig_bytes(png, 8);
  png_read_info(png, info);

  png_uint_32 w = png_get_image_width(png, info);
  png_uint_32 h = png_get_image_height(png, info);
  png_byte color = png_get_color_type(png, info);
  png_byte depth = png_get_bit_depth(png, info);

  // normalize every input to 8-bit RGB or gray
  if (depth == 16) png_set_strip_16(png);
  if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color == PNG_COLOR_TYPE_GRAY && depth < 8) png_set_expand_gray_1_2_4_to_8(png);
  if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
  if (color & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(png);
  png_read_update_info(png, info);

  int channels = png_get_channels(png, info);
  if (channels != 1 && channels != 3) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw DataError("read_png: unsupported channel count in " + path);
  }

  std::vector<png_byte> row(std::size_t(w) * channels);
  Image img(int(h), int(w), channels);
  for (png_uint_32 y = 0; y < h; ++y) {
    png_read_row(png, row.data(), nullptr);
    for (png_uint_32 x = 0; x < w; ++x)
      for (int ch = 0; ch < channels; ++ch)
        img.at(int(y), int(x), ch) = float(row[std::size_t(x) * channels + ch]) / 255.0f;
  }
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  return img;
}

inline void write_png(const std::string& path, const Image& img) {
  if (img.c != 1 && img.c != 3) throw Error("write_png: need 1 or 3 channels");
  detail::PngCloser fc;
  fc.f = std::fopen(path.c_str(), "wb");
  if (!fc.f) throw Error("write_png: cannot open " + path);

  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) throw Error("write_png: png_create_write_struct failed");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_write_struct(&png, nullptr);
    throw Error("write_png: png_create_info_struct failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw Error("write_png: libpng failure on " + path);
  }
  png_init_io(png, fc.f);
  png_set_IHDR(png, info, png_uint_32(img.w), png_uint_32(img.h), 8,
               img.c == 3 ? PNG_COLOR_TYPE_RGB : PNG_COLOR_TYPE_GRAY,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);

  std::vector<png_byte> row(std::size_t(img.w) * img.c);
  for (int y = 0; y < img.h; ++y) {
    for (int x = 0; x < img.w; ++x)
      for (int ch = 0; ch < img.c; ++ch) {
        float v = std::min(std::max(img.at(y, x, ch), 0.0f), 1.0f);
        row[std::size_t(x) * img.c + ch] = png_byte(std::lround(v * 255.0f));
      }
    png_write_row(png, row.data());
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

}  // namespace prefgen
