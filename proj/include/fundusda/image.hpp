#pragma once

#include <array>
#include <cstdint>
#include <vector>

namespace fundusda {

// H x W x C image with values in [0, 1], interleaved channels, row-major.
struct ImageGrid {
  int height = 0;
  int width = 0;
  int channels = 0;
  std::vector<double> pixels;

  ImageGrid() = default;
  ImageGrid(int h, int w, int c, double fill = 0.0)
      : height(h), width(w), channels(c),
        pixels(static_cast<size_t>(h) * w * c, fill) {}

  double& at(int y, int x, int c) {
    return pixels[(static_cast<size_t>(y) * width + x) * channels + c];
  }
  double at(int y, int x, int c) const {
    return pixels[(static_cast<size_t>(y) * width + x) * channels + c];
  }
  bool same_shape(const ImageGrid& o) const {
    return height == o.height && width == o.width && channels == o.channels;
  }
  size_t size() const { return pixels.size(); }
};

using Color = std::array<double, 3>;

// Binary H x W mask, 1 = keep.
struct BinaryMask {
  int height = 0;
  int width = 0;
  std::vector<uint8_t> values;

  BinaryMask() = default;
  BinaryMask(int h, int w, uint8_t fill = 0)
      : height(h), width(w), values(static_cast<size_t>(h) * w, fill) {}

  uint8_t& at(int y, int x) {
    return values[static_cast<size_t>(y) * width + x];
  }
  uint8_t at(int y, int x) const {
    return values[static_cast<size_t>(y) * width + x];
  }
  size_t count() const;  // number of 1s
};

ImageGrid rgb_to_gray(const ImageGrid& img);  // luma weights 0.299/0.587/0.114
ImageGrid resize_bilinear(const ImageGrid& img, int out_h, int out_w);
ImageGrid flip_horizontal(const ImageGrid& img);
ImageGrid crop(const ImageGrid& img, int y0, int x0, int h, int w);
void clamp01(ImageGrid& img);
void scale_brightness(ImageGrid& img, double factor);  // clamps to [0,1]

// Drawing helpers for the synthetic fixture and heatmap overlays. All blend
// by replacement unless an alpha falloff is stated.
void fill_circle(ImageGrid& img, double cy, double cx, double r,
                 const Color& color);
void fill_ellipse(ImageGrid& img, double cy, double cx, double ry, double rx,
                  const Color& color);
void fill_ring(ImageGrid& img, double cy, double cx, double r_outer,
               double r_inner, const Color& color);
// Gaussian-feathered blob: alpha = exp(-d^2 / (2 sigma^2)) capped at 1 inside
// r_core.
void fill_soft_blob(ImageGrid& img, double cy, double cx, double r_core,
                    double sigma, const Color& color);
void draw_stroke(ImageGrid& img, double y0, double x0, double y1, double x1,
                 double thickness, const Color& color);

// Occluder-aware variants used by the fixture generator: also set `touched`
// for every painted pixel.
void fill_circle_tracked(ImageGrid& img, BinaryMask& touched, double cy,
                         double cx, double r, const Color& color);
void draw_stroke_tracked(ImageGrid& img, BinaryMask& touched, double y0,
                         double x0, double y1, double x1, double thickness,
                         const Color& color);

}  // namespace fundusda
