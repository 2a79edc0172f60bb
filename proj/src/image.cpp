#include "fundusda/image.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace fundusda {

size_t BinaryMask::count() const {
  size_t n = 0;
  for (uint8_t v : values) n += (v != 0);
  return n;
}

ImageGrid rgb_to_gray(const ImageGrid& img) {
  if (img.channels == 1) return img;
  if (img.channels != 3)
    throw std::invalid_argument("rgb_to_gray: expected 1 or 3 channels");
  ImageGrid out(img.height, img.width, 1);
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x)
      out.at(y, x, 0) = 0.299 * img.at(y, x, 0) + 0.587 * img.at(y, x, 1) +
                        0.114 * img.at(y, x, 2);
  return out;
}

ImageGrid resize_bilinear(const ImageGrid& img, int out_h, int out_w) {
  if (out_h <= 0 || out_w <= 0)
    throw std::invalid_argument("resize_bilinear: bad output size");
  if (out_h == img.height && out_w == img.width) return img;
  ImageGrid out(out_h, out_w, img.channels);
  const double sy =
      out_h > 1 ? static_cast<double>(img.height - 1) / (out_h - 1) : 0.0;
  const double sx =
      out_w > 1 ? static_cast<double>(img.width - 1) / (out_w - 1) : 0.0;
  for (int y = 0; y < out_h; ++y) {
    const double fy = y * sy;
    const int y0 = static_cast<int>(fy);
    const int y1 = std::min(y0 + 1, img.height - 1);
    const double wy = fy - y0;
    for (int x = 0; x < out_w; ++x) {
      const double fx = x * sx;
      const int x0 = static_cast<int>(fx);
      const int x1 = std::min(x0 + 1, img.width - 1);
      const double wx = fx - x0;
      for (int c = 0; c < img.channels; ++c) {
        const double top =
            img.at(y0, x0, c) * (1 - wx) + img.at(y0, x1, c) * wx;
        const double bot =
            img.at(y1, x0, c) * (1 - wx) + img.at(y1, x1, c) * wx;
        out.at(y, x, c) = top * (1 - wy) + bot * wy;
      }
    }
  }
  return out;
}

ImageGrid flip_horizontal(const ImageGrid& img) {
  ImageGrid out(img.height, img.width, img.channels);
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x)
      for (int c = 0; c < img.channels; ++c)
        out.at(y, x, c) = img.at(y, img.width - 1 - x, c);
  return out;
}

ImageGrid crop(const ImageGrid& img, int y0, int x0, int h, int w) {
  if (y0 < 0 || x0 < 0 || y0 + h > img.height || x0 + w > img.width)
    throw std::invalid_argument("crop: window out of bounds");
  ImageGrid out(h, w, img.channels);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      for (int c = 0; c < img.channels; ++c)
        out.at(y, x, c) = img.at(y0 + y, x0 + x, c);
  return out;
}

void clamp01(ImageGrid& img) {
  for (double& v : img.pixels) v = std::clamp(v, 0.0, 1.0);
}

void scale_brightness(ImageGrid& img, double factor) {
  for (double& v : img.pixels) v = std::clamp(v * factor, 0.0, 1.0);
}

namespace {

void paint(ImageGrid& img, int y, int x, const Color& color) {
  for (int c = 0; c < img.channels && c < 3; ++c) img.at(y, x, c) = color[c];
}

void blend(ImageGrid& img, int y, int x, const Color& color, double alpha) {
  for (int c = 0; c < img.channels && c < 3; ++c)
    img.at(y, x, c) = (1 - alpha) * img.at(y, x, c) + alpha * color[c];
}

}  // namespace

void fill_circle(ImageGrid& img, double cy, double cx, double r,
                 const Color& color) {
  fill_ellipse(img, cy, cx, r, r, color);
}

void fill_ellipse(ImageGrid& img, double cy, double cx, double ry, double rx,
                  const Color& color) {
  const int ylo = std::max(0, static_cast<int>(std::floor(cy - ry)));
  const int yhi = std::min(img.height - 1, static_cast<int>(std::ceil(cy + ry)));
  const int xlo = std::max(0, static_cast<int>(std::floor(cx - rx)));
  const int xhi = std::min(img.width - 1, static_cast<int>(std::ceil(cx + rx)));
  for (int y = ylo; y <= yhi; ++y)
    for (int x = xlo; x <= xhi; ++x) {
      const double dy = (y - cy) / ry;
      const double dx = (x - cx) / rx;
      if (dy * dy + dx * dx <= 1.0) paint(img, y, x, color);
    }
}

void fill_ring(ImageGrid& img, double cy, double cx, double r_outer,
               double r_inner, const Color& color) {
  const int ylo = std::max(0, static_cast<int>(std::floor(cy - r_outer)));
  const int yhi =
      std::min(img.height - 1, static_cast<int>(std::ceil(cy + r_outer)));
  const int xlo = std::max(0, static_cast<int>(std::floor(cx - r_outer)));
  const int xhi =
      std::min(img.width - 1, static_cast<int>(std::ceil(cx + r_outer)));
  for (int y = ylo; y <= yhi; ++y)
    for (int x = xlo; x <= xhi; ++x) {
      const double d = std::hypot(y - cy, x - cx);
      if (d <= r_outer && d >= r_inner) paint(img, y, x, color);
    }
}

void fill_soft_blob(ImageGrid& img, double cy, double cx, double r_core,
                    double sigma, const Color& color) {
  const double reach = r_core + 3 * sigma;
  const int ylo = std::max(0, static_cast<int>(std::floor(cy - reach)));
  const int yhi =
      std::min(img.height - 1, static_cast<int>(std::ceil(cy + reach)));
  const int xlo = std::max(0, static_cast<int>(std::floor(cx - reach)));
  const int xhi =
      std::min(img.width - 1, static_cast<int>(std::ceil(cx + reach)));
  for (int y = ylo; y <= yhi; ++y)
    for (int x = xlo; x <= xhi; ++x) {
      const double d = std::hypot(y - cy, x - cx);
      double alpha = 1.0;
      if (d > r_core) {
        const double t = d - r_core;
        alpha = std::exp(-t * t / (2 * sigma * sigma));
      }
      if (alpha > 0.02) blend(img, y, x, color, alpha);
    }
}

namespace {

template <typename Paint>
void stroke_impl(int height, int width, double y0, double x0, double y1,
                 double x1, double thickness, Paint&& p) {
  const double len = std::hypot(y1 - y0, x1 - x0);
  const int steps = std::max(2, static_cast<int>(std::ceil(len * 2)));
  const double half = thickness / 2.0;
  for (int i = 0; i <= steps; ++i) {
    const double t = static_cast<double>(i) / steps;
    const double cy = y0 + t * (y1 - y0);
    const double cx = x0 + t * (x1 - x0);
    const int ylo = std::max(0, static_cast<int>(std::floor(cy - half)));
    const int yhi = std::min(height - 1, static_cast<int>(std::ceil(cy + half)));
    const int xlo = std::max(0, static_cast<int>(std::floor(cx - half)));
    const int xhi = std::min(width - 1, static_cast<int>(std::ceil(cx + half)));
    for (int y = ylo; y <= yhi; ++y)
      for (int x = xlo; x <= xhi; ++x)
        if (std::hypot(y - cy, x - cx) <= half) p(y, x);
  }
}

}  // namespace

void draw_stroke(ImageGrid& img, double y0, double x0, double y1, double x1,
                 double thickness, const Color& color) {
  stroke_impl(img.height, img.width, y0, x0, y1, x1, thickness,
              [&](int y, int x) { paint(img, y, x, color); });
}

void fill_circle_tracked(ImageGrid& img, BinaryMask& touched, double cy,
                         double cx, double r, const Color& color) {
  const int ylo = std::max(0, static_cast<int>(std::floor(cy - r)));
  const int yhi = std::min(img.height - 1, static_cast<int>(std::ceil(cy + r)));
  const int xlo = std::max(0, static_cast<int>(std::floor(cx - r)));
  const int xhi = std::min(img.width - 1, static_cast<int>(std::ceil(cx + r)));
  for (int y = ylo; y <= yhi; ++y)
    for (int x = xlo; x <= xhi; ++x)
      if (std::hypot(y - cy, x - cx) <= r) {
        paint(img, y, x, color);
        touched.at(y, x) = 1;
      }
}

void draw_stroke_tracked(ImageGrid& img, BinaryMask& touched, double y0,
                         double x0, double y1, double x1, double thickness,
                         const Color& color) {
  stroke_impl(img.height, img.width, y0, x0, y1, x1, thickness,
              [&](int y, int x) {
                paint(img, y, x, color);
                touched.at(y, x) = 1;
              });
}

}  // namespace fundusda
