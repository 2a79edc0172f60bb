#include "fundusda/nn/net.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <stdexcept>

namespace fundusda::nn {

namespace {

using MatRM =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapRM = Eigen::Map<MatRM>;
using CMapRM = Eigen::Map<const MatRM>;

void check_cache(bool has_cache, const char* who) {
  if (!has_cache)
    throw std::logic_error(std::string(who) +
                           ": backward without a cached forward pass");
}

}  // namespace

// ---------------------------------------------------------------------------
// Sequential

Sequential& Sequential::add(std::unique_ptr<Layer> layer) {
  layers_.push_back(std::move(layer));
  return *this;
}

Tensor Sequential::forward(const Tensor& x, bool keep) {
  Tensor a = x;
  for (auto& l : layers_) a = l->forward(a, keep);
  return a;
}

Tensor Sequential::backward(const Tensor& gy) {
  Tensor g = gy;
  for (auto it = layers_.rbegin(); it != layers_.rend(); ++it)
    g = (*it)->backward(g);
  return g;
}

void Sequential::collect(std::vector<ParamRef>& out,
                         const std::string& prefix) {
  for (size_t i = 0; i < layers_.size(); ++i)
    layers_[i]->collect(out, prefix + "." + std::to_string(i));
}

void Sequential::init(Rng& rng) {
  for (auto& l : layers_) l->init(rng);
}

// ---------------------------------------------------------------------------
// Conv2d

Conv2d::Conv2d(int cin, int cout, int ksize, int stride, int pad)
    : cin_(cin), cout_(cout), k_(ksize), stride_(stride), pad_(pad) {
  w.assign(static_cast<size_t>(cout) * cin * ksize * ksize, 0.0);
  gw.assign(w.size(), 0.0);
  b.assign(cout, 0.0);
  gb.assign(cout, 0.0);
}

void Conv2d::init(Rng& rng) {
  const double fan_in = static_cast<double>(cin_) * k_ * k_;
  const double std = std::sqrt(2.0 / fan_in);
  for (auto& x : w) x = rng.gauss() * std;
  std::fill(b.begin(), b.end(), 0.0);
}

void Conv2d::collect(std::vector<ParamRef>& out, const std::string& prefix) {
  out.push_back({&w, &gw, prefix + ".conv.w"});
  out.push_back({&b, &gb, prefix + ".conv.b"});
}

namespace {

// col is (cin*k*k) x (oh*ow), row-major.
void im2col(const Tensor& x, int sample, int k, int stride, int pad, int oh,
            int ow, double* col) {
  const int cin = x.c, h = x.h, w = x.w;
  for (int c = 0; c < cin; ++c)
    for (int ky = 0; ky < k; ++ky)
      for (int kx = 0; kx < k; ++kx) {
        double* row = col + (static_cast<size_t>(c) * k * k + ky * k + kx) *
                                (static_cast<size_t>(oh) * ow);
        for (int oy = 0; oy < oh; ++oy) {
          const int iy = oy * stride - pad + ky;
          if (iy < 0 || iy >= h) {
            for (int ox = 0; ox < ow; ++ox) row[oy * ow + ox] = 0.0;
            continue;
          }
          for (int ox = 0; ox < ow; ++ox) {
            const int ix = ox * stride - pad + kx;
            row[oy * ow + ox] =
                (ix >= 0 && ix < w) ? x.at(sample, c, iy, ix) : 0.0;
          }
        }
      }
}

void col2im_accum(const double* col, int cin, int h, int w, int k, int stride,
                  int pad, int oh, int ow, Tensor& gx, int sample) {
  for (int c = 0; c < cin; ++c)
    for (int ky = 0; ky < k; ++ky)
      for (int kx = 0; kx < k; ++kx) {
        const double* row = col + (static_cast<size_t>(c) * k * k + ky * k +
                                   kx) *
                                      (static_cast<size_t>(oh) * ow);
        for (int oy = 0; oy < oh; ++oy) {
          const int iy = oy * stride - pad + ky;
          if (iy < 0 || iy >= h) continue;
          for (int ox = 0; ox < ow; ++ox) {
            const int ix = ox * stride - pad + kx;
            if (ix >= 0 && ix < w) gx.at(sample, c, iy, ix) += row[oy * ow + ox];
          }
        }
      }
}

}  // namespace

Tensor Conv2d::forward(const Tensor& x, bool keep) {
  if (x.c != cin_) throw std::invalid_argument("conv2d: channel mismatch");
  oh_ = (x.h + 2 * pad_ - k_) / stride_ + 1;
  ow_ = (x.w + 2 * pad_ - k_) / stride_ + 1;
  if (oh_ <= 0 || ow_ <= 0)
    throw std::invalid_argument("conv2d: input too small for kernel");
  const int ckk = cin_ * k_ * k_;
  const size_t plane = static_cast<size_t>(oh_) * ow_;
  Tensor y(x.n, cout_, oh_, ow_);

  std::vector<double> colbuf(static_cast<size_t>(ckk) * plane);
  if (keep) {
    col_.resize(static_cast<size_t>(x.n) * ckk * plane);
    x_ = x;
    has_cache_ = true;
  }
  CMapRM W(w.data(), cout_, ckk);
  for (int i = 0; i < x.n; ++i) {
    double* col = keep ? col_.data() + static_cast<size_t>(i) * ckk * plane
                       : colbuf.data();
    im2col(x, i, k_, stride_, pad_, oh_, ow_, col);
    CMapRM C(col, ckk, static_cast<Eigen::Index>(plane));
    MapRM Y(y.v.data() + static_cast<size_t>(i) * cout_ * plane, cout_,
            static_cast<Eigen::Index>(plane));
    Y.noalias() = W * C;
    for (int oc = 0; oc < cout_; ++oc) Y.row(oc).array() += b[oc];
  }
  return y;
}

Tensor Conv2d::backward(const Tensor& gy) {
  check_cache(has_cache_, "conv2d");
  has_cache_ = false;
  const int ckk = cin_ * k_ * k_;
  const size_t plane = static_cast<size_t>(oh_) * ow_;
  Tensor gx(x_.n, cin_, x_.h, x_.w);

  MapRM GW(gw.data(), cout_, ckk);
  CMapRM W(w.data(), cout_, ckk);
  std::vector<double> gcol(static_cast<size_t>(ckk) * plane);
  for (int i = 0; i < gy.n; ++i) {
    CMapRM GY(gy.v.data() + static_cast<size_t>(i) * cout_ * plane, cout_,
              static_cast<Eigen::Index>(plane));
    CMapRM C(col_.data() + static_cast<size_t>(i) * ckk * plane, ckk,
             static_cast<Eigen::Index>(plane));
    GW.noalias() += GY * C.transpose();
    for (int oc = 0; oc < cout_; ++oc) gb[oc] += GY.row(oc).sum();
    MapRM GC(gcol.data(), ckk, static_cast<Eigen::Index>(plane));
    GC.noalias() = W.transpose() * GY;
    col2im_accum(gcol.data(), cin_, x_.h, x_.w, k_, stride_, pad_, oh_, ow_,
                 gx, i);
  }
  col_.clear();
  col_.shrink_to_fit();
  x_ = Tensor();
  return gx;
}

// ---------------------------------------------------------------------------
// Linear

Linear::Linear(int in_features, int out_features)
    : in_(in_features), out_(out_features) {
  w.assign(static_cast<size_t>(out_) * in_, 0.0);
  gw.assign(w.size(), 0.0);
  b.assign(out_, 0.0);
  gb.assign(out_, 0.0);
}

void Linear::init(Rng& rng) {
  const double std = std::sqrt(2.0 / in_);
  for (auto& x : w) x = rng.gauss() * std;
  std::fill(b.begin(), b.end(), 0.0);
}

void Linear::collect(std::vector<ParamRef>& out, const std::string& prefix) {
  out.push_back({&w, &gw, prefix + ".linear.w"});
  out.push_back({&b, &gb, prefix + ".linear.b"});
}

Tensor Linear::forward(const Tensor& x, bool keep) {
  if (static_cast<int>(x.sample_size()) != in_)
    throw std::invalid_argument("linear: feature size mismatch");
  if (keep) {
    x_ = x;
    has_cache_ = true;
  }
  Tensor y(x.n, out_, 1, 1);
  CMapRM X(x.v.data(), x.n, in_);
  CMapRM W(w.data(), out_, in_);
  MapRM Y(y.v.data(), x.n, out_);
  Y.noalias() = X * W.transpose();
  for (int i = 0; i < x.n; ++i)
    for (int o = 0; o < out_; ++o) Y(i, o) += b[o];
  return y;
}

Tensor Linear::backward(const Tensor& gy) {
  check_cache(has_cache_, "linear");
  has_cache_ = false;
  Tensor gx(x_.n, x_.c, x_.h, x_.w);
  CMapRM GY(gy.v.data(), gy.n, out_);
  CMapRM X(x_.v.data(), x_.n, in_);
  CMapRM W(w.data(), out_, in_);
  MapRM GW(gw.data(), out_, in_);
  MapRM GX(gx.v.data(), gx.n, in_);
  GW.noalias() += GY.transpose() * X;
  for (int o = 0; o < out_; ++o) gb[o] += GY.col(o).sum();
  GX.noalias() = GY * W;
  x_ = Tensor();
  return gx;
}

// ---------------------------------------------------------------------------
// InstanceNorm2d

InstanceNorm2d::InstanceNorm2d(int channels, double eps)
    : c_(channels), eps_(eps) {
  gamma.assign(c_, 1.0);
  ggamma.assign(c_, 0.0);
  beta.assign(c_, 0.0);
  gbeta.assign(c_, 0.0);
}

void InstanceNorm2d::init(Rng&) {
  std::fill(gamma.begin(), gamma.end(), 1.0);
  std::fill(beta.begin(), beta.end(), 0.0);
}

void InstanceNorm2d::collect(std::vector<ParamRef>& out,
                             const std::string& prefix) {
  out.push_back({&gamma, &ggamma, prefix + ".in.gamma"});
  out.push_back({&beta, &gbeta, prefix + ".in.beta"});
}

Tensor InstanceNorm2d::forward(const Tensor& x, bool keep) {
  if (x.c != c_) throw std::invalid_argument("instance_norm: channel mismatch");
  const int hw = x.h * x.w;
  Tensor y(x.n, x.c, x.h, x.w);
  Tensor xhat(x.n, x.c, x.h, x.w);
  std::vector<double> inv_std(static_cast<size_t>(x.n) * x.c);
  for (int i = 0; i < x.n; ++i)
    for (int j = 0; j < x.c; ++j) {
      const double* p = &x.v[((static_cast<size_t>(i) * x.c + j) * hw)];
      double mean = 0.0;
      for (int t = 0; t < hw; ++t) mean += p[t];
      mean /= hw;
      double var = 0.0;
      for (int t = 0; t < hw; ++t) var += (p[t] - mean) * (p[t] - mean);
      var /= hw;
      const double is = 1.0 / std::sqrt(var + eps_);
      inv_std[static_cast<size_t>(i) * x.c + j] = is;
      double* ph = &xhat.v[((static_cast<size_t>(i) * x.c + j) * hw)];
      double* py = &y.v[((static_cast<size_t>(i) * x.c + j) * hw)];
      for (int t = 0; t < hw; ++t) {
        ph[t] = (p[t] - mean) * is;
        py[t] = gamma[j] * ph[t] + beta[j];
      }
    }
  if (keep) {
    xhat_ = std::move(xhat);
    inv_std_ = std::move(inv_std);
    has_cache_ = true;
  }
  return y;
}

Tensor InstanceNorm2d::backward(const Tensor& gy) {
  check_cache(has_cache_, "instance_norm");
  has_cache_ = false;
  const int hw = gy.h * gy.w;
  Tensor gx(gy.n, gy.c, gy.h, gy.w);
  for (int i = 0; i < gy.n; ++i)
    for (int j = 0; j < gy.c; ++j) {
      const size_t off = (static_cast<size_t>(i) * gy.c + j) * hw;
      const double* g = &gy.v[off];
      const double* xh = &xhat_.v[off];
      double sum_g = 0.0, sum_gx = 0.0;
      for (int t = 0; t < hw; ++t) {
        sum_g += g[t];
        sum_gx += g[t] * xh[t];
      }
      ggamma[j] += sum_gx;
      gbeta[j] += sum_g;
      const double is = inv_std_[static_cast<size_t>(i) * gy.c + j];
      const double mg = sum_g / hw;
      const double mgx = sum_gx / hw;
      double* out = &gx.v[off];
      for (int t = 0; t < hw; ++t)
        out[t] = gamma[j] * is * (g[t] - mg - xh[t] * mgx);
    }
  xhat_ = Tensor();
  inv_std_.clear();
  return gx;
}

// ---------------------------------------------------------------------------
// Activations

Tensor ReLU::forward(const Tensor& x, bool keep) {
  Tensor y = x;
  for (auto& v : y.v) v = v > 0 ? v : 0.0;
  if (keep) {
    x_ = x;
    has_cache_ = true;
  }
  return y;
}

Tensor ReLU::backward(const Tensor& gy) {
  check_cache(has_cache_, "relu");
  has_cache_ = false;
  Tensor gx = gy;
  for (size_t i = 0; i < gx.v.size(); ++i)
    if (x_.v[i] <= 0) gx.v[i] = 0.0;
  x_ = Tensor();
  return gx;
}

Tensor LeakyReLU::forward(const Tensor& x, bool keep) {
  Tensor y = x;
  for (auto& v : y.v) v = v > 0 ? v : slope_ * v;
  if (keep) {
    x_ = x;
    has_cache_ = true;
  }
  return y;
}

Tensor LeakyReLU::backward(const Tensor& gy) {
  check_cache(has_cache_, "leaky_relu");
  has_cache_ = false;
  Tensor gx = gy;
  for (size_t i = 0; i < gx.v.size(); ++i)
    if (x_.v[i] <= 0) gx.v[i] *= slope_;
  x_ = Tensor();
  return gx;
}

Tensor Tanh::forward(const Tensor& x, bool keep) {
  Tensor y = x;
  for (auto& v : y.v) v = std::tanh(v);
  if (keep) {
    y_ = y;
    has_cache_ = true;
  }
  return y;
}

Tensor Tanh::backward(const Tensor& gy) {
  check_cache(has_cache_, "tanh");
  has_cache_ = false;
  Tensor gx = gy;
  for (size_t i = 0; i < gx.v.size(); ++i) gx.v[i] *= 1.0 - y_.v[i] * y_.v[i];
  y_ = Tensor();
  return gx;
}

Tensor Sigmoid::forward(const Tensor& x, bool keep) {
  Tensor y = x;
  for (auto& v : y.v) v = sigmoid(v);
  if (keep) {
    y_ = y;
    has_cache_ = true;
  }
  return y;
}

Tensor Sigmoid::backward(const Tensor& gy) {
  check_cache(has_cache_, "sigmoid");
  has_cache_ = false;
  Tensor gx = gy;
  for (size_t i = 0; i < gx.v.size(); ++i)
    gx.v[i] *= y_.v[i] * (1.0 - y_.v[i]);
  y_ = Tensor();
  return gx;
}

Tensor FixedAffine::forward(const Tensor& x, bool) {
  Tensor y = x;
  for (auto& v : y.v) v = a_ * v + b_;
  return y;
}

Tensor FixedAffine::backward(const Tensor& gy) {
  Tensor gx = gy;
  for (auto& v : gx.v) v *= a_;
  return gx;
}

// ---------------------------------------------------------------------------
// Pooling / resampling

Tensor MaxPool2d::forward(const Tensor& x, bool keep) {
  const int oh = x.h / 2, ow = x.w / 2;
  if (oh == 0 || ow == 0)
    throw std::invalid_argument("max_pool2: input smaller than window");
  Tensor y(x.n, x.c, oh, ow);
  if (keep) {
    argmax_.resize(y.size());
    in_h_ = x.h;
    in_w_ = x.w;
    n_ = x.n;
    c_ = x.c;
    has_cache_ = true;
  }
  size_t oi = 0;
  for (int i = 0; i < x.n; ++i)
    for (int j = 0; j < x.c; ++j)
      for (int oy = 0; oy < oh; ++oy)
        for (int ox = 0; ox < ow; ++ox) {
          double best = -1e300;
          uint32_t best_off = 0;
          for (int dy = 0; dy < 2; ++dy)
            for (int dx = 0; dx < 2; ++dx) {
              const int yy = oy * 2 + dy, xx = ox * 2 + dx;
              const double v = x.at(i, j, yy, xx);
              if (v > best) {
                best = v;
                best_off = static_cast<uint32_t>(yy * x.w + xx);
              }
            }
          y.at(i, j, oy, ox) = best;
          if (keep) argmax_[oi] = best_off;
          ++oi;
        }
  return y;
}

Tensor MaxPool2d::backward(const Tensor& gy) {
  check_cache(has_cache_, "max_pool2");
  has_cache_ = false;
  Tensor gx(n_, c_, in_h_, in_w_);
  size_t oi = 0;
  const size_t plane = static_cast<size_t>(in_h_) * in_w_;
  for (int i = 0; i < gy.n; ++i)
    for (int j = 0; j < gy.c; ++j) {
      double* gplane = &gx.v[(static_cast<size_t>(i) * c_ + j) * plane];
      for (int t = 0; t < gy.h * gy.w; ++t) {
        gplane[argmax_[oi]] += gy.v[oi];
        ++oi;
      }
    }
  argmax_.clear();
  return gx;
}

Tensor GlobalAvgPool::forward(const Tensor& x, bool keep) {
  Tensor y(x.n, x.c, 1, 1);
  const int hw = x.h * x.w;
  for (int i = 0; i < x.n; ++i)
    for (int j = 0; j < x.c; ++j) {
      double s = 0.0;
      for (int yy = 0; yy < x.h; ++yy)
        for (int xx = 0; xx < x.w; ++xx) s += x.at(i, j, yy, xx);
      y.at(i, j, 0, 0) = s / hw;
    }
  if (keep) {
    h_ = x.h;
    w_ = x.w;
    has_cache_ = true;
  }
  return y;
}

Tensor GlobalAvgPool::backward(const Tensor& gy) {
  check_cache(has_cache_, "global_avg_pool");
  has_cache_ = false;
  Tensor gx(gy.n, gy.c, h_, w_);
  const double scale = 1.0 / (h_ * w_);
  for (int i = 0; i < gy.n; ++i)
    for (int j = 0; j < gy.c; ++j) {
      const double g = gy.at(i, j, 0, 0) * scale;
      for (int yy = 0; yy < h_; ++yy)
        for (int xx = 0; xx < w_; ++xx) gx.at(i, j, yy, xx) = g;
    }
  return gx;
}

Tensor UpsampleNearest2x::forward(const Tensor& x, bool) {
  Tensor y(x.n, x.c, x.h * 2, x.w * 2);
  for (int i = 0; i < x.n; ++i)
    for (int j = 0; j < x.c; ++j)
      for (int yy = 0; yy < y.h; ++yy)
        for (int xx = 0; xx < y.w; ++xx)
          y.at(i, j, yy, xx) = x.at(i, j, yy / 2, xx / 2);
  return y;
}

Tensor UpsampleNearest2x::backward(const Tensor& gy) {
  Tensor gx(gy.n, gy.c, gy.h / 2, gy.w / 2);
  for (int i = 0; i < gy.n; ++i)
    for (int j = 0; j < gy.c; ++j)
      for (int yy = 0; yy < gy.h; ++yy)
        for (int xx = 0; xx < gy.w; ++xx)
          gx.at(i, j, yy / 2, xx / 2) += gy.at(i, j, yy, xx);
  return gx;
}

Tensor FeatureTap::forward(const Tensor& x, bool keep) {
  if (keep) act_ = x;
  return x;
}

Tensor FeatureTap::backward(const Tensor& gy) {
  grad_ = gy;
  return gy;
}

// ---------------------------------------------------------------------------
// ResidualBlock

ResidualBlock::ResidualBlock(int channels) {
  inner_.add(std::make_unique<Conv2d>(channels, channels, 3, 1, 1));
  inner_.add(std::make_unique<InstanceNorm2d>(channels));
  inner_.add(std::make_unique<ReLU>());
  inner_.add(std::make_unique<Conv2d>(channels, channels, 3, 1, 1));
  inner_.add(std::make_unique<InstanceNorm2d>(channels));
}

Tensor ResidualBlock::forward(const Tensor& x, bool keep) {
  Tensor f = inner_.forward(x, keep);
  for (size_t i = 0; i < f.v.size(); ++i) f.v[i] += x.v[i];
  return f;
}

Tensor ResidualBlock::backward(const Tensor& gy) {
  Tensor gx = inner_.backward(gy);
  for (size_t i = 0; i < gx.v.size(); ++i) gx.v[i] += gy.v[i];
  return gx;
}

void ResidualBlock::collect(std::vector<ParamRef>& out,
                            const std::string& prefix) {
  inner_.collect(out, prefix + ".res");
}

void ResidualBlock::init(Rng& rng) { inner_.init(rng); }

// ---------------------------------------------------------------------------
// Net

Net::Net(std::unique_ptr<Layer> root) : root_(std::move(root)) {}

Tensor Net::forward(const Tensor& x, bool keep) {
  return root_->forward(x, keep);
}

Tensor Net::backward(const Tensor& gy) { return root_->backward(gy); }

std::vector<ParamRef>& Net::params() {
  if (!collected_) {
    params_.clear();
    root_->collect(params_, "net");
    collected_ = true;
  }
  return params_;
}

void Net::zero_grads() {
  for (auto& p : params())
    std::fill(p.grad->begin(), p.grad->end(), 0.0);
}

void Net::init(Rng& rng) { root_->init(rng); }

size_t Net::param_count() {
  size_t n = 0;
  for (auto& p : params()) n += p.value->size();
  return n;
}

void Net::save_params(std::ostream& os) {
  auto& ps = params();
  const uint64_t count = ps.size();
  os.write(reinterpret_cast<const char*>(&count), sizeof(count));
  for (auto& p : ps) {
    const uint32_t name_len = static_cast<uint32_t>(p.name.size());
    os.write(reinterpret_cast<const char*>(&name_len), sizeof(name_len));
    os.write(p.name.data(), name_len);
    const uint64_t n = p.value->size();
    os.write(reinterpret_cast<const char*>(&n), sizeof(n));
    os.write(reinterpret_cast<const char*>(p.value->data()),
             static_cast<std::streamsize>(n * sizeof(double)));
  }
}

void Net::load_params(std::istream& is) {
  auto& ps = params();
  uint64_t count = 0;
  is.read(reinterpret_cast<char*>(&count), sizeof(count));
  if (count != ps.size())
    throw std::runtime_error("checkpoint parameter count mismatch");
  for (auto& p : ps) {
    uint32_t name_len = 0;
    is.read(reinterpret_cast<char*>(&name_len), sizeof(name_len));
    std::string name(name_len, '\0');
    is.read(name.data(), name_len);
    uint64_t n = 0;
    is.read(reinterpret_cast<char*>(&n), sizeof(n));
    if (name != p.name || n != p.value->size())
      throw std::runtime_error("checkpoint parameter layout mismatch at " +
                               p.name);
    is.read(reinterpret_cast<char*>(p.value->data()),
            static_cast<std::streamsize>(n * sizeof(double)));
  }
  if (!is) throw std::runtime_error("truncated checkpoint");
}

int Net::copy_params_from(Net& donor) {
  int copied = 0;
  auto& mine = params();
  auto& theirs = donor.params();
  for (auto& p : mine)
    for (auto& q : theirs)
      if (p.name == q.name && p.value->size() == q.value->size()) {
        *p.value = *q.value;
        ++copied;
        break;
      }
  return copied;
}

void Net::clone_params_into(Net& dst) {
  auto& src = params();
  auto& d = dst.params();
  if (src.size() != d.size())
    throw std::logic_error("clone_params_into: architecture mismatch");
  for (size_t i = 0; i < src.size(); ++i) {
    if (src[i].value->size() != d[i].value->size())
      throw std::logic_error("clone_params_into: parameter size mismatch");
    *d[i].value = *src[i].value;
  }
}

// ---------------------------------------------------------------------------
// Adam

Adam::Adam(double lr, double beta1, double beta2, double eps)
    : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {}

void Adam::step(std::vector<ParamRef>& params) {
  if (m_.empty()) {
    m_.resize(params.size());
    v_.resize(params.size());
    for (size_t i = 0; i < params.size(); ++i) {
      m_[i].assign(params[i].value->size(), 0.0);
      v_[i].assign(params[i].value->size(), 0.0);
    }
  }
  ++t_;
  const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  for (size_t i = 0; i < params.size(); ++i) {
    auto& val = *params[i].value;
    auto& grad = *params[i].grad;
    auto& m = m_[i];
    auto& v = v_[i];
    for (size_t j = 0; j < val.size(); ++j) {
      m[j] = beta1_ * m[j] + (1.0 - beta1_) * grad[j];
      v[j] = beta2_ * v[j] + (1.0 - beta2_) * grad[j] * grad[j];
      const double mhat = m[j] / bc1;
      const double vhat = v[j] / bc2;
      val[j] -= lr_ * mhat / (std::sqrt(vhat) + eps_);
    }
  }
}

// ---------------------------------------------------------------------------
// Losses

LossGrad bce_with_logits(const Tensor& logits, const Tensor& targets) {
  if (!logits.same_shape(targets))
    throw std::invalid_argument("bce_with_logits: shape mismatch");
  LossGrad out;
  out.grad = Tensor(logits.n, logits.c, logits.h, logits.w);
  const double inv_n = 1.0 / static_cast<double>(logits.size());
  double loss = 0.0;
  for (size_t i = 0; i < logits.v.size(); ++i) {
    const double z = logits.v[i];
    const double t = targets.v[i];
    loss += std::max(z, 0.0) - z * t + std::log1p(std::exp(-std::abs(z)));
    out.grad.v[i] = (sigmoid(z) - t) * inv_n;
  }
  out.loss = loss * inv_n;
  return out;
}

LossGrad mse_loss(const Tensor& pred, const Tensor& target) {
  if (!pred.same_shape(target))
    throw std::invalid_argument("mse_loss: shape mismatch");
  LossGrad out;
  out.grad = Tensor(pred.n, pred.c, pred.h, pred.w);
  const double inv_n = 1.0 / static_cast<double>(pred.size());
  double loss = 0.0;
  for (size_t i = 0; i < pred.v.size(); ++i) {
    const double d = pred.v[i] - target.v[i];
    loss += d * d;
    out.grad.v[i] = 2.0 * d * inv_n;
  }
  out.loss = loss * inv_n;
  return out;
}

LossGrad mse_loss_const(const Tensor& pred, double target) {
  LossGrad out;
  out.grad = Tensor(pred.n, pred.c, pred.h, pred.w);
  const double inv_n = 1.0 / static_cast<double>(pred.size());
  double loss = 0.0;
  for (size_t i = 0; i < pred.v.size(); ++i) {
    const double d = pred.v[i] - target;
    loss += d * d;
    out.grad.v[i] = 2.0 * d * inv_n;
  }
  out.loss = loss * inv_n;
  return out;
}

LossGrad l1_loss(const Tensor& pred, const Tensor& target) {
  if (!pred.same_shape(target))
    throw std::invalid_argument("l1_loss: shape mismatch");
  LossGrad out;
  out.grad = Tensor(pred.n, pred.c, pred.h, pred.w);
  const double inv_n = 1.0 / static_cast<double>(pred.size());
  double loss = 0.0;
  for (size_t i = 0; i < pred.v.size(); ++i) {
    const double d = pred.v[i] - target.v[i];
    loss += std::abs(d);
    out.grad.v[i] = (d > 0 ? 1.0 : (d < 0 ? -1.0 : 0.0)) * inv_n;
  }
  out.loss = loss * inv_n;
  return out;
}

}  // namespace fundusda::nn
