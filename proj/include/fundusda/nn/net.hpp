#pragma once

#include <cmath>
#include <cstdint>
#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

#include "fundusda/nn/tensor.hpp"
#include "fundusda/rng.hpp"

namespace fundusda::nn {

struct ParamRef {
  std::vector<double>* value = nullptr;
  std::vector<double>* grad = nullptr;
  std::string name;
};

// A layer owns its parameters and the activations cached by the last
// grad-enabled forward pass. backward() consumes that cache.
class Layer {
 public:
  virtual ~Layer() = default;
  virtual Tensor forward(const Tensor& x, bool keep_for_backward) = 0;
  virtual Tensor backward(const Tensor& gy) = 0;
  virtual void collect(std::vector<ParamRef>& out, const std::string& prefix) {}
  virtual void init(Rng& rng) {}
  virtual const char* kind() const = 0;
};

class Sequential : public Layer {
 public:
  Sequential() = default;
  Sequential& add(std::unique_ptr<Layer> layer);
  Tensor forward(const Tensor& x, bool keep_for_backward) override;
  Tensor backward(const Tensor& gy) override;
  void collect(std::vector<ParamRef>& out, const std::string& prefix) override;
  void init(Rng& rng) override;
  const char* kind() const override { return "sequential"; }
  size_t layer_count() const { return layers_.size(); }
  Layer* layer(size_t i) { return layers_[i].get(); }

 private:
  std::vector<std::unique_ptr<Layer>> layers_;
};

class Conv2d : public Layer {
 public:
  Conv2d(int cin, int cout, int ksize, int stride = 1, int pad = 0);
  Tensor forward(const Tensor& x, bool keep_for_backward) override;
  Tensor backward(const Tensor& gy) override;
  void collect(std::vector<ParamRef>& out, const std::string& prefix) override;
  void init(Rng& rng) override;
  const char* kind() const override { return "conv2d"; }

  std::vector<double> w, gw;  // cout x (cin*k*k), row-major
  std::vector<double> b, gb;  // cout

 private:
  int cin_, cout_, k_, stride_, pad_;
  Tensor x_;               // cached input
  std::vector<double> col_;  // cached im2col buffer, n x (cin*k*k) x (oh*ow)
  int oh_ = 0, ow_ = 0;
  bool has_cache_ = false;
};

class Linear : public Layer {
 public:
  Linear(int in_features, int out_features);
  Tensor forward(const Tensor& x, bool keep_for_backward) override;
  Tensor backward(const Tensor& gy) override;
  void collect(std::vector<ParamRef>& out, const std::string& prefix) override;
  void init(Rng& rng) override;
  const char* kind() const override { return "linear"; }

  std::vector<double> w, gw;  // out x in
  std::vector<double> b, gb;

 private:
  int in_, out_;
  Tensor x_;
  bool has_cache_ = false;
};

class InstanceNorm2d : public Layer {
 public:
  explicit InstanceNorm2d(int channels, double eps = 1e-5);
  Tensor forward(const Tensor& x, bool keep_for_backward) override;
  Tensor backward(const Tensor& gy) override;
  void collect(std::vector<ParamRef>& out, const std::string& prefix) override;
  void init(Rng& rng) override;
  const char* kind() const override { return "instance_norm"; }

  std::vector<double> gamma, ggamma, beta, gbeta;

 private:
  int c_;
  double eps_;
  Tensor xhat_;
  std::vector<double> inv_std_;  // n*c
  bool has_cache_ = false;
};

class ReLU : public Layer {
 public:
  Tensor forward(const Tensor& x, bool keep_for_backward) override;
  Tensor backward(const Tensor& gy) override;
  const char* kind() const override { return "relu"; }

 private:
  Tensor x_;
  bool has_cache_ = false;
};

class LeakyReLU : public Layer {
 public:
  explicit LeakyReLU(double slope = 0.2) : slope_(slope) {}
  Tensor forward(const Tensor& x, bool keep_for_backward) override;
  Tensor backward(const Tensor& gy) override;
  const char* kind() const override { return "leaky_relu"; }

 private:
  double slope_;
  Tensor x_;
  bool has_cache_ = false;
};

class Tanh : public Layer {
 public:
  Tensor forward(const Tensor& x, bool keep_for_backward) override;
  Tensor backward(const Tensor& gy) override;
  const char* kind() const override { return "tanh"; }

 private:
  Tensor y_;
  bool has_cache_ = false;
};

class Sigmoid : public Layer {
 public:
  Tensor forward(const Tensor& x, bool keep_for_backward) override;
  Tensor backward(const Tensor& gy) override;
  const char* kind() const override { return "sigmoid"; }

 private:
  Tensor y_;
  bool has_cache_ = false;
};

// y = a*x + b with fixed constants (range shifts such as [0,1] <-> [-1,1]).
class FixedAffine : public Layer {
 public:
  FixedAffine(double a, double b) : a_(a), b_(b) {}
  Tensor forward(const Tensor& x, bool keep_for_backward) override;
  Tensor backward(const Tensor& gy) override;
  const char* kind() const override { return "fixed_affine"; }

 private:
  double a_, b_;
};

class MaxPool2d : public Layer {
 public:
  Tensor forward(const Tensor& x, bool keep_for_backward) override;
  Tensor backward(const Tensor& gy) override;
  const char* kind() const override { return "max_pool2"; }

 private:
  std::vector<uint32_t> argmax_;
  int in_h_ = 0, in_w_ = 0, n_ = 0, c_ = 0;
  bool has_cache_ = false;
};

class GlobalAvgPool : public Layer {
 public:
  Tensor forward(const Tensor& x, bool keep_for_backward) override;
  Tensor backward(const Tensor& gy) override;
  const char* kind() const override { return "global_avg_pool"; }

 private:
  int h_ = 0, w_ = 0;
  bool has_cache_ = false;
};

class UpsampleNearest2x : public Layer {
 public:
  Tensor forward(const Tensor& x, bool keep_for_backward) override;
  Tensor backward(const Tensor& gy) override;
  const char* kind() const override { return "upsample2x"; }
};

// Identity layer that records the activation flowing forward and the
// gradient flowing backward. Used by Grad-CAM.
class FeatureTap : public Layer {
 public:
  Tensor forward(const Tensor& x, bool keep_for_backward) override;
  Tensor backward(const Tensor& gy) override;
  const char* kind() const override { return "feature_tap"; }

  const Tensor& activation() const { return act_; }
  const Tensor& gradient() const { return grad_; }

 private:
  Tensor act_, grad_;
};

// x + f(x) where f = conv-IN-relu-conv-IN.
class ResidualBlock : public Layer {
 public:
  explicit ResidualBlock(int channels);
  Tensor forward(const Tensor& x, bool keep_for_backward) override;
  Tensor backward(const Tensor& gy) override;
  void collect(std::vector<ParamRef>& out, const std::string& prefix) override;
  void init(Rng& rng) override;
  const char* kind() const override { return "residual_block"; }

 private:
  Sequential inner_;
};

// Parameter container with save/load and exact warm-start copy.
class Net {
 public:
  Net() = default;
  explicit Net(std::unique_ptr<Layer> root);
  Net(Net&&) = default;
  Net& operator=(Net&&) = default;

  bool empty() const { return root_ == nullptr; }
  Tensor forward(const Tensor& x, bool keep_for_backward = false);
  Tensor backward(const Tensor& gy);
  std::vector<ParamRef>& params();
  void zero_grads();
  void init(Rng& rng);
  size_t param_count();
  Layer* root() { return root_.get(); }

  void save_params(std::ostream& os);
  void load_params(std::istream& is);
  // Copies donor values into parameters with matching name and size.
  // Returns the number of parameter blocks copied.
  int copy_params_from(Net& donor);
  // Deep copy of parameter values into an architecturally identical net.
  void clone_params_into(Net& dst);

 private:
  std::unique_ptr<Layer> root_;
  std::vector<ParamRef> params_;
  bool collected_ = false;
};

class Adam {
 public:
  Adam(double lr, double beta1 = 0.9, double beta2 = 0.999,
       double eps = 1e-8);
  void set_lr(double lr) { lr_ = lr; }
  double lr() const { return lr_; }
  void step(std::vector<ParamRef>& params);

 private:
  double lr_, beta1_, beta2_, eps_;
  int64_t t_ = 0;
  std::vector<std::vector<double>> m_, v_;
};

struct LossGrad {
  double loss = 0.0;
  Tensor grad;
};

// Mean over all elements; numerically stable log-sum form. Targets may be
// soft values in [0,1].
LossGrad bce_with_logits(const Tensor& logits, const Tensor& targets);
LossGrad mse_loss(const Tensor& pred, const Tensor& target);
LossGrad mse_loss_const(const Tensor& pred, double target);
LossGrad l1_loss(const Tensor& pred, const Tensor& target);

inline double sigmoid(double z) {
  return z >= 0 ? 1.0 / (1.0 + std::exp(-z))
                : std::exp(z) / (1.0 + std::exp(z));
}

}  // namespace fundusda::nn
