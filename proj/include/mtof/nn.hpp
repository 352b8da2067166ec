#pragma once

#include <memory>
#include <string>
#include <vector>

#include "mtof/rng.hpp"
#include "mtof/tensor.hpp"

namespace mtof::nn {

struct Param {
  std::string name;
  Tensor value;
  Tensor grad;
};

class Layer {
 public:
  virtual ~Layer() = default;
  virtual Tensor forward(const Tensor& x) = 0;
  virtual Tensor backward(const Tensor& grad_out) = 0;
  virtual std::vector<Param*> params() { return {}; }
  virtual void set_train(bool train) { train_ = train; }
  bool training() const { return train_; }

 protected:
  bool train_ = true;
};

// Conv2d with square kernel; output size floor((H + 2p - k)/s) + 1.
class Conv2d : public Layer {
 public:
  Conv2d(int in_c, int out_c, int kernel, int stride, int pad, Rng& rng,
         const std::string& name);
  Tensor forward(const Tensor& x) override;
  Tensor backward(const Tensor& grad_out) override;
  std::vector<Param*> params() override { return {&weight_, &bias_}; }

 private:
  int in_c_, out_c_, k_, stride_, pad_;
  Param weight_;  // [out_c, in_c, k, k]
  Param bias_;    // [out_c]
  Tensor input_;
};

// Transposed convolution; output size (H-1)*s + k (no padding).
class ConvTranspose2d : public Layer {
 public:
  ConvTranspose2d(int in_c, int out_c, int kernel, int stride, Rng& rng,
                  const std::string& name);
  Tensor forward(const Tensor& x) override;
  Tensor backward(const Tensor& grad_out) override;
  std::vector<Param*> params() override { return {&weight_, &bias_}; }

 private:
  int in_c_, out_c_, k_, stride_;
  Param weight_;  // [in_c, out_c, k, k]
  Param bias_;    // [out_c]
  Tensor input_;
};

class ReLU : public Layer {
 public:
  Tensor forward(const Tensor& x) override;
  Tensor backward(const Tensor& grad_out) override;

 private:
  Tensor input_;
};

// Batch normalization over (N,H,W) per channel; momentum 0.1, epsilon 1e-5.
class BatchNorm2d : public Layer {
 public:
  explicit BatchNorm2d(int channels, const std::string& name);
  Tensor forward(const Tensor& x) override;
  Tensor backward(const Tensor& grad_out) override;
  std::vector<Param*> params() override { return {&gamma_, &beta_}; }

  Tensor& running_mean() { return running_mean_; }
  Tensor& running_var() { return running_var_; }

 private:
  int channels_;
  Param gamma_, beta_;
  Tensor running_mean_, running_var_;
  // caches for backward
  Tensor xhat_, inv_std_;
  bool forward_was_train_ = true;
  static constexpr double kMomentum = 0.1;
  static constexpr double kEps = 1e-5;
};

class Linear : public Layer {
 public:
  Linear(int in_dim, int out_dim, Rng& rng, const std::string& name);
  Tensor forward(const Tensor& x) override;
  Tensor backward(const Tensor& grad_out) override;
  std::vector<Param*> params() override { return {&weight_, &bias_}; }

 private:
  int in_dim_, out_dim_;
  Param weight_;  // [out, in]
  Param bias_;    // [out]
  Tensor input_;
};

// 2x2 average pooling, stride 2.
class AvgPool2d : public Layer {
 public:
  Tensor forward(const Tensor& x) override;
  Tensor backward(const Tensor& grad_out) override;

 private:
  std::vector<int> in_shape_;
};

// [N,C,H,W] -> [N,C] spatial mean.
class GlobalAvgPool : public Layer {
 public:
  Tensor forward(const Tensor& x) override;
  Tensor backward(const Tensor& grad_out) override;

 private:
  std::vector<int> in_shape_;
};

class Sequential : public Layer {
 public:
  Sequential() = default;
  void add(std::unique_ptr<Layer> layer) { layers_.push_back(std::move(layer)); }
  Tensor forward(const Tensor& x) override;
  Tensor backward(const Tensor& grad_out) override;
  std::vector<Param*> params() override;
  void set_train(bool train) override;
  std::size_t size() const { return layers_.size(); }
  Layer& layer(std::size_t i) { return *layers_[i]; }

 private:
  std::vector<std::unique_ptr<Layer>> layers_;
};

// ---------------------------------------------------------------------------
// Losses (value plus gradient w.r.t. the prediction)
// ---------------------------------------------------------------------------

struct LossResult {
  double value = 0.0;
  Tensor grad;  // d value / d pred
};

// Per-element mean squared error.
LossResult mse_loss(const Tensor& pred, const Tensor& target);

// Per-element mean absolute error; grads returned for both arguments.
struct L1Result {
  double value = 0.0;
  Tensor grad_a;
  Tensor grad_b;
};
L1Result l1_loss(const Tensor& a, const Tensor& b);

// Softmax cross entropy over logits [N, n_classes].
struct CeResult {
  double value = 0.0;
  Tensor probs;  // [N, n_classes]
  Tensor grad;   // d value / d logits
};
CeResult softmax_cross_entropy(const Tensor& logits, const std::vector<int>& labels);

Tensor softmax_rows(const Tensor& logits);

// ---------------------------------------------------------------------------
// Optimizer
// ---------------------------------------------------------------------------

class Adam {
 public:
  Adam(std::vector<Param*> params, double lr, double beta1 = 0.9,
       double beta2 = 0.999, double eps = 1e-8);
  void step();
  void zero_grad();
  const std::vector<Param*>& params() const { return params_; }

 private:
  std::vector<Param*> params_;
  std::vector<Tensor> m_, v_;
  double lr_, beta1_, beta2_, eps_;
  long t_ = 0;
};

// Collects params from several layers/containers.
std::vector<Param*> collect_params(std::initializer_list<Layer*> layers);

}  // namespace mtof::nn
