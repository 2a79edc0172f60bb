#pragma once

#include <cstddef>
#include <stdexcept>
#include <vector>

#include "fundusda/image.hpp"

namespace fundusda::nn {

// NCHW double tensor. Double keeps finite-difference gradient checks well
// inside their tolerances; desk-scale sizes make the extra bytes cheap.
struct Tensor {
  int n = 0, c = 0, h = 0, w = 0;
  std::vector<double> v;

  Tensor() = default;
  Tensor(int n_, int c_, int h_, int w_, double fill = 0.0)
      : n(n_), c(c_), h(h_), w(w_),
        v(static_cast<size_t>(n_) * c_ * h_ * w_, fill) {}

  double& at(int i, int j, int y, int x) {
    return v[((static_cast<size_t>(i) * c + j) * h + y) * w + x];
  }
  double at(int i, int j, int y, int x) const {
    return v[((static_cast<size_t>(i) * c + j) * h + y) * w + x];
  }
  size_t size() const { return v.size(); }
  size_t sample_size() const { return static_cast<size_t>(c) * h * w; }
  bool same_shape(const Tensor& o) const {
    return n == o.n && c == o.c && h == o.h && w == o.w;
  }
};

inline Tensor tensor_from_image(const ImageGrid& img) {
  Tensor t(1, img.channels, img.height, img.width);
  for (int c = 0; c < img.channels; ++c)
    for (int y = 0; y < img.height; ++y)
      for (int x = 0; x < img.width; ++x) t.at(0, c, y, x) = img.at(y, x, c);
  return t;
}

inline Tensor tensor_from_images(const std::vector<const ImageGrid*>& imgs) {
  if (imgs.empty()) throw std::invalid_argument("empty image batch");
  const ImageGrid& first = *imgs[0];
  Tensor t(static_cast<int>(imgs.size()), first.channels, first.height,
           first.width);
  for (size_t i = 0; i < imgs.size(); ++i) {
    if (!imgs[i]->same_shape(first))
      throw std::invalid_argument("image batch shape mismatch");
    for (int c = 0; c < first.channels; ++c)
      for (int y = 0; y < first.height; ++y)
        for (int x = 0; x < first.width; ++x)
          t.at(static_cast<int>(i), c, y, x) = imgs[i]->at(y, x, c);
  }
  return t;
}

inline ImageGrid image_from_tensor(const Tensor& t, int index = 0) {
  ImageGrid img(t.h, t.w, t.c);
  for (int c = 0; c < t.c; ++c)
    for (int y = 0; y < t.h; ++y)
      for (int x = 0; x < t.w; ++x) img.at(y, x, c) = t.at(index, c, y, x);
  return img;
}

}  // namespace fundusda::nn
