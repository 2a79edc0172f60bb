#include "fundusda/image_io.hpp"

#include <png.h>

#include <cmath>
#include <cstdio>
#include <memory>
#include <stdexcept>
#include <vector>

namespace fundusda {

namespace {

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

uint8_t to_byte(double v) {
  const double s = std::clamp(v, 0.0, 1.0) * 255.0;
  return static_cast<uint8_t>(std::lround(s));
}

std::vector<std::vector<uint8_t>> read_png_rows(const std::string& path,
                                                int& width, int& height,
                                                int& channels) {
  FilePtr fp(std::fopen(path.c_str(), "rb"));
  if (!fp) throw std::runtime_error("cannot open PNG: " + path);

  png_structp png =
      png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) throw std::runtime_error("png_create_read_struct failed");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_read_struct(&png, nullptr, nullptr);
    throw std::runtime_error("png_create_info_struct failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw std::runtime_error("failed to decode PNG: " + path);
  }
  png_init_io(png, fp.get());
  png_read_info(png, info);

  width = static_cast<int>(png_get_image_width(png, info));
  height = static_cast<int>(png_get_image_height(png, info));
  const png_byte color_type = png_get_color_type(png, info);
  const png_byte bit_depth = png_get_bit_depth(png, info);

  if (bit_depth == 16) png_set_strip_16(png);
  if (color_type == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color_type == PNG_COLOR_TYPE_GRAY && bit_depth < 8)
    png_set_expand_gray_1_2_4_to_8(png);
  if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
  if (color_type & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(png);
  png_read_update_info(png, info);

  channels = static_cast<int>(png_get_channels(png, info));
  std::vector<std::vector<uint8_t>> rows(height);
  std::vector<png_bytep> row_ptrs(height);
  const size_t rowbytes = png_get_rowbytes(png, info);
  for (int y = 0; y < height; ++y) {
    rows[y].resize(rowbytes);
    row_ptrs[y] = rows[y].data();
  }
  png_read_image(png, row_ptrs.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  return rows;
}

void write_png_rows(const std::string& path, int width, int height,
                    int channels, const std::vector<uint8_t>& data) {
  FilePtr fp(std::fopen(path.c_str(), "wb"));
  if (!fp) throw std::runtime_error("cannot write PNG: " + path);

  png_structp png =
      png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) throw std::runtime_error("png_create_write_struct failed");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_write_struct(&png, nullptr);
    throw std::runtime_error("png_create_info_struct failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw std::runtime_error("failed to encode PNG: " + path);
  }
  png_init_io(png, fp.get());
  const int color_type =
      channels == 1 ? PNG_COLOR_TYPE_GRAY : PNG_COLOR_TYPE_RGB;
  png_set_IHDR(png, info, width, height, 8, color_type, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  std::vector<png_bytep> row_ptrs(height);
  for (int y = 0; y < height; ++y)
    row_ptrs[y] =
        const_cast<png_bytep>(data.data() + static_cast<size_t>(y) * width * channels);
  png_write_image(png, row_ptrs.data());
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

}  // namespace

ImageGrid read_png(const std::string& path) {
  int w = 0, h = 0, ch = 0;
  auto rows = read_png_rows(path, w, h, ch);
  ImageGrid img(h, w, 3);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      for (int c = 0; c < 3; ++c) {
        const uint8_t v = ch == 1 ? rows[y][x] : rows[y][x * ch + c];
        img.at(y, x, c) = v / 255.0;
      }
  return img;
}

void write_png(const std::string& path, const ImageGrid& img) {
  if (img.channels != 3)
    throw std::invalid_argument("write_png: expected 3 channels");
  std::vector<uint8_t> data(static_cast<size_t>(img.height) * img.width * 3);
  size_t i = 0;
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x)
      for (int c = 0; c < 3; ++c) data[i++] = to_byte(img.at(y, x, c));
  write_png_rows(path, img.width, img.height, 3, data);
}

BinaryMask read_mask_png(const std::string& path) {
  int w = 0, h = 0, ch = 0;
  auto rows = read_png_rows(path, w, h, ch);
  BinaryMask mask(h, w);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) mask.at(y, x) = rows[y][x * ch] >= 128 ? 1 : 0;
  return mask;
}

void write_mask_png(const std::string& path, const BinaryMask& mask) {
  std::vector<uint8_t> data(static_cast<size_t>(mask.height) * mask.width);
  for (size_t i = 0; i < data.size(); ++i)
    data[i] = mask.values[i] ? 255 : 0;
  write_png_rows(path, mask.width, mask.height, 1, data);
}

void write_gray_png(const std::string& path, const ImageGrid& gray) {
  if (gray.channels != 1)
    throw std::invalid_argument("write_gray_png: expected 1 channel");
  std::vector<uint8_t> data(static_cast<size_t>(gray.height) * gray.width);
  size_t i = 0;
  for (int y = 0; y < gray.height; ++y)
    for (int x = 0; x < gray.width; ++x) data[i++] = to_byte(gray.at(y, x, 0));
  write_png_rows(path, gray.width, gray.height, 1, data);
}

}  // namespace fundusda
