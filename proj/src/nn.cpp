#include "mtof/nn.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace mtof::nn {

namespace {

void init_uniform(Tensor& t, double bound, Rng& rng) {
  for (auto& v : t.vec()) v = rng.uniform(-bound, bound);
}

void check_4d(const Tensor& x, const char* who) {
  if (x.ndim() != 4) throw std::invalid_argument(std::string(who) + ": expected NCHW input");
}

}  // namespace

// ---------------------------------------------------------------------------
// Conv2d
// ---------------------------------------------------------------------------

Conv2d::Conv2d(int in_c, int out_c, int kernel, int stride, int pad, Rng& rng,
               const std::string& name)
    : in_c_(in_c), out_c_(out_c), k_(kernel), stride_(stride), pad_(pad) {
  weight_.name = name + ".weight";
  weight_.value = Tensor({out_c, in_c, kernel, kernel});
  weight_.grad = Tensor({out_c, in_c, kernel, kernel});
  bias_.name = name + ".bias";
  bias_.value = Tensor({out_c});
  bias_.grad = Tensor({out_c});
  double bound = 1.0 / std::sqrt(static_cast<double>(in_c) * kernel * kernel);
  init_uniform(weight_.value, bound, rng);
  init_uniform(bias_.value, bound, rng);
}

Tensor Conv2d::forward(const Tensor& x) {
  check_4d(x, "Conv2d");
  if (x.dim(1) != in_c_) throw std::invalid_argument("Conv2d: channel mismatch");
  input_ = x;
  int n = x.dim(0), h = x.dim(2), w = x.dim(3);
  int ho = (h + 2 * pad_ - k_) / stride_ + 1;
  int wo = (w + 2 * pad_ - k_) / stride_ + 1;
  if (ho < 1 || wo < 1) throw std::invalid_argument("Conv2d: input too small");
  Tensor y({n, out_c_, ho, wo});
  for (int b = 0; b < n; ++b)
    for (int oc = 0; oc < out_c_; ++oc) {
      for (int oy = 0; oy < ho; ++oy)
        for (int ox = 0; ox < wo; ++ox) {
          double acc = bias_.value[oc];
          int iy0 = oy * stride_ - pad_;
          int ix0 = ox * stride_ - pad_;
          for (int ic = 0; ic < in_c_; ++ic)
            for (int ky = 0; ky < k_; ++ky) {
              int iy = iy0 + ky;
              if (iy < 0 || iy >= h) continue;
              for (int kx = 0; kx < k_; ++kx) {
                int ix = ix0 + kx;
                if (ix < 0 || ix >= w) continue;
                acc += x.at(b, ic, iy, ix) * weight_.value.at(oc, ic, ky, kx);
              }
            }
          y.at(b, oc, oy, ox) = acc;
        }
    }
  return y;
}

Tensor Conv2d::backward(const Tensor& grad_out) {
  const Tensor& x = input_;
  int n = x.dim(0), h = x.dim(2), w = x.dim(3);
  int ho = grad_out.dim(2), wo = grad_out.dim(3);
  Tensor gx(x.shape());
  for (int b = 0; b < n; ++b)
    for (int oc = 0; oc < out_c_; ++oc)
      for (int oy = 0; oy < ho; ++oy)
        for (int ox = 0; ox < wo; ++ox) {
          double g = grad_out.at(b, oc, oy, ox);
          bias_.grad[oc] += g;
          int iy0 = oy * stride_ - pad_;
          int ix0 = ox * stride_ - pad_;
          for (int ic = 0; ic < in_c_; ++ic)
            for (int ky = 0; ky < k_; ++ky) {
              int iy = iy0 + ky;
              if (iy < 0 || iy >= h) continue;
              for (int kx = 0; kx < k_; ++kx) {
                int ix = ix0 + kx;
                if (ix < 0 || ix >= w) continue;
                weight_.grad.at(oc, ic, ky, kx) += g * x.at(b, ic, iy, ix);
                gx.at(b, ic, iy, ix) += g * weight_.value.at(oc, ic, ky, kx);
              }
            }
        }
  return gx;
}

// ---------------------------------------------------------------------------
// ConvTranspose2d
// ---------------------------------------------------------------------------

ConvTranspose2d::ConvTranspose2d(int in_c, int out_c, int kernel, int stride,
                                 Rng& rng, const std::string& name)
    : in_c_(in_c), out_c_(out_c), k_(kernel), stride_(stride) {
  weight_.name = name + ".weight";
  weight_.value = Tensor({in_c, out_c, kernel, kernel});
  weight_.grad = Tensor({in_c, out_c, kernel, kernel});
  bias_.name = name + ".bias";
  bias_.value = Tensor({out_c});
  bias_.grad = Tensor({out_c});
  double bound = 1.0 / std::sqrt(static_cast<double>(in_c) * kernel * kernel);
  init_uniform(weight_.value, bound, rng);
  init_uniform(bias_.value, bound, rng);
}

Tensor ConvTranspose2d::forward(const Tensor& x) {
  check_4d(x, "ConvTranspose2d");
  if (x.dim(1) != in_c_) throw std::invalid_argument("ConvTranspose2d: channel mismatch");
  input_ = x;
  int n = x.dim(0), h = x.dim(2), w = x.dim(3);
  int ho = (h - 1) * stride_ + k_;
  int wo = (w - 1) * stride_ + k_;
  Tensor y({n, out_c_, ho, wo});
  for (int b = 0; b < n; ++b) {
    for (int oc = 0; oc < out_c_; ++oc)
      for (int oy = 0; oy < ho; ++oy)
        for (int ox = 0; ox < wo; ++ox) y.at(b, oc, oy, ox) = bias_.value[oc];
    for (int ic = 0; ic < in_c_; ++ic)
      for (int iy = 0; iy < h; ++iy)
        for (int ix = 0; ix < w; ++ix) {
          double v = x.at(b, ic, iy, ix);
          for (int oc = 0; oc < out_c_; ++oc)
            for (int ky = 0; ky < k_; ++ky)
              for (int kx = 0; kx < k_; ++kx)
                y.at(b, oc, iy * stride_ + ky, ix * stride_ + kx) +=
                    v * weight_.value.at(ic, oc, ky, kx);
        }
  }
  return y;
}

Tensor ConvTranspose2d::backward(const Tensor& grad_out) {
  const Tensor& x = input_;
  int n = x.dim(0), h = x.dim(2), w = x.dim(3);
  int ho = grad_out.dim(2), wo = grad_out.dim(3);
  Tensor gx(x.shape());
  for (int b = 0; b < n; ++b) {
    for (int oc = 0; oc < out_c_; ++oc)
      for (int oy = 0; oy < ho; ++oy)
        for (int ox = 0; ox < wo; ++ox) bias_.grad[oc] += grad_out.at(b, oc, oy, ox);
    for (int ic = 0; ic < in_c_; ++ic)
      for (int iy = 0; iy < h; ++iy)
        for (int ix = 0; ix < w; ++ix) {
          double acc = 0.0;
          double v = x.at(b, ic, iy, ix);
          for (int oc = 0; oc < out_c_; ++oc)
            for (int ky = 0; ky < k_; ++ky)
              for (int kx = 0; kx < k_; ++kx) {
                double g = grad_out.at(b, oc, iy * stride_ + ky, ix * stride_ + kx);
                acc += g * weight_.value.at(ic, oc, ky, kx);
                weight_.grad.at(ic, oc, ky, kx) += g * v;
              }
          gx.at(b, ic, iy, ix) = acc;
        }
  }
  return gx;
}

// ---------------------------------------------------------------------------
// ReLU
// ---------------------------------------------------------------------------

Tensor ReLU::forward(const Tensor& x) {
  input_ = x;
  Tensor y(x.shape());
  for (std::size_t i = 0; i < x.numel(); ++i) y[i] = x[i] > 0.0 ? x[i] : 0.0;
  return y;
}

Tensor ReLU::backward(const Tensor& grad_out) {
  Tensor gx(input_.shape());
  for (std::size_t i = 0; i < input_.numel(); ++i)
    gx[i] = input_[i] > 0.0 ? grad_out[i] : 0.0;
  return gx;
}

// ---------------------------------------------------------------------------
// BatchNorm2d
// ---------------------------------------------------------------------------

BatchNorm2d::BatchNorm2d(int channels, const std::string& name) : channels_(channels) {
  gamma_.name = name + ".gamma";
  gamma_.value = Tensor::full({channels}, 1.0);
  gamma_.grad = Tensor({channels});
  beta_.name = name + ".beta";
  beta_.value = Tensor({channels});
  beta_.grad = Tensor({channels});
  running_mean_ = Tensor({channels});
  running_var_ = Tensor::full({channels}, 1.0);
}

Tensor BatchNorm2d::forward(const Tensor& x) {
  check_4d(x, "BatchNorm2d");
  int n = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3);
  if (c != channels_) throw std::invalid_argument("BatchNorm2d: channel mismatch");
  double m_count = static_cast<double>(n) * h * w;
  Tensor y(x.shape());
  xhat_ = Tensor(x.shape());
  inv_std_ = Tensor({c});
  forward_was_train_ = train_;
  for (int ch = 0; ch < c; ++ch) {
    double mean, var;
    if (train_) {
      double sum = 0.0, sq = 0.0;
      for (int b = 0; b < n; ++b)
        for (int yy = 0; yy < h; ++yy)
          for (int xx = 0; xx < w; ++xx) {
            double v = x.at(b, ch, yy, xx);
            sum += v;
            sq += v * v;
          }
      mean = sum / m_count;
      var = sq / m_count - mean * mean;
      if (var < 0.0) var = 0.0;
      running_mean_[ch] = (1.0 - kMomentum) * running_mean_[ch] + kMomentum * mean;
      running_var_[ch] = (1.0 - kMomentum) * running_var_[ch] + kMomentum * var;
    } else {
      mean = running_mean_[ch];
      var = running_var_[ch];
    }
    double inv = 1.0 / std::sqrt(var + kEps);
    inv_std_[ch] = inv;
    for (int b = 0; b < n; ++b)
      for (int yy = 0; yy < h; ++yy)
        for (int xx = 0; xx < w; ++xx) {
          double xh = (x.at(b, ch, yy, xx) - mean) * inv;
          xhat_.at(b, ch, yy, xx) = xh;
          y.at(b, ch, yy, xx) = gamma_.value[ch] * xh + beta_.value[ch];
        }
  }
  return y;
}

Tensor BatchNorm2d::backward(const Tensor& grad_out) {
  int n = grad_out.dim(0), c = grad_out.dim(1), h = grad_out.dim(2), w = grad_out.dim(3);
  double m_count = static_cast<double>(n) * h * w;
  Tensor gx(grad_out.shape());
  for (int ch = 0; ch < c; ++ch) {
    double sum_g = 0.0, sum_gx = 0.0;
    for (int b = 0; b < n; ++b)
      for (int yy = 0; yy < h; ++yy)
        for (int xx = 0; xx < w; ++xx) {
          double g = grad_out.at(b, ch, yy, xx);
          sum_g += g;
          sum_gx += g * xhat_.at(b, ch, yy, xx);
        }
    gamma_.grad[ch] += sum_gx;
    beta_.grad[ch] += sum_g;
    double gamma = gamma_.value[ch];
    double inv = inv_std_[ch];
    if (forward_was_train_) {
      for (int b = 0; b < n; ++b)
        for (int yy = 0; yy < h; ++yy)
          for (int xx = 0; xx < w; ++xx) {
            double g = grad_out.at(b, ch, yy, xx);
            double xh = xhat_.at(b, ch, yy, xx);
            gx.at(b, ch, yy, xx) =
                gamma * inv / m_count * (m_count * g - sum_g - xh * sum_gx);
          }
    } else {
      for (int b = 0; b < n; ++b)
        for (int yy = 0; yy < h; ++yy)
          for (int xx = 0; xx < w; ++xx)
            gx.at(b, ch, yy, xx) = grad_out.at(b, ch, yy, xx) * gamma * inv;
    }
  }
  return gx;
}

// ---------------------------------------------------------------------------
// Linear
// ---------------------------------------------------------------------------

Linear::Linear(int in_dim, int out_dim, Rng& rng, const std::string& name)
    : in_dim_(in_dim), out_dim_(out_dim) {
  weight_.name = name + ".weight";
  weight_.value = Tensor({out_dim, in_dim});
  weight_.grad = Tensor({out_dim, in_dim});
  bias_.name = name + ".bias";
  bias_.value = Tensor({out_dim});
  bias_.grad = Tensor({out_dim});
  double bound = 1.0 / std::sqrt(static_cast<double>(in_dim));
  init_uniform(weight_.value, bound, rng);
  init_uniform(bias_.value, bound, rng);
}

Tensor Linear::forward(const Tensor& x) {
  if (x.ndim() != 2 || x.dim(1) != in_dim_)
    throw std::invalid_argument("Linear: expected [N," + std::to_string(in_dim_) + "]");
  input_ = x;
  int n = x.dim(0);
  Tensor y({n, out_dim_});
  for (int b = 0; b < n; ++b)
    for (int o = 0; o < out_dim_; ++o) {
      double acc = bias_.value[o];
      for (int i = 0; i < in_dim_; ++i)
        acc += x.at(b, i) * weight_.value[static_cast<std::size_t>(o) * in_dim_ + i];
      y.at(b, o) = acc;
    }
  return y;
}

Tensor Linear::backward(const Tensor& grad_out) {
  int n = input_.dim(0);
  Tensor gx(input_.shape());
  for (int b = 0; b < n; ++b)
    for (int o = 0; o < out_dim_; ++o) {
      double g = grad_out.at(b, o);
      bias_.grad[o] += g;
      for (int i = 0; i < in_dim_; ++i) {
        weight_.grad[static_cast<std::size_t>(o) * in_dim_ + i] += g * input_.at(b, i);
        gx.at(b, i) += g * weight_.value[static_cast<std::size_t>(o) * in_dim_ + i];
      }
    }
  return gx;
}

// ---------------------------------------------------------------------------
// Pooling
// ---------------------------------------------------------------------------

Tensor AvgPool2d::forward(const Tensor& x) {
  check_4d(x, "AvgPool2d");
  in_shape_ = x.shape();
  int n = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3);
  int ho = h / 2, wo = w / 2;
  Tensor y({n, c, ho, wo});
  for (int b = 0; b < n; ++b)
    for (int ch = 0; ch < c; ++ch)
      for (int oy = 0; oy < ho; ++oy)
        for (int ox = 0; ox < wo; ++ox)
          y.at(b, ch, oy, ox) =
              0.25 * (x.at(b, ch, 2 * oy, 2 * ox) + x.at(b, ch, 2 * oy, 2 * ox + 1) +
                      x.at(b, ch, 2 * oy + 1, 2 * ox) + x.at(b, ch, 2 * oy + 1, 2 * ox + 1));
  return y;
}

Tensor AvgPool2d::backward(const Tensor& grad_out) {
  Tensor gx(in_shape_);
  int n = grad_out.dim(0), c = grad_out.dim(1), ho = grad_out.dim(2), wo = grad_out.dim(3);
  for (int b = 0; b < n; ++b)
    for (int ch = 0; ch < c; ++ch)
      for (int oy = 0; oy < ho; ++oy)
        for (int ox = 0; ox < wo; ++ox) {
          double g = 0.25 * grad_out.at(b, ch, oy, ox);
          gx.at(b, ch, 2 * oy, 2 * ox) = g;
          gx.at(b, ch, 2 * oy, 2 * ox + 1) = g;
          gx.at(b, ch, 2 * oy + 1, 2 * ox) = g;
          gx.at(b, ch, 2 * oy + 1, 2 * ox + 1) = g;
        }
  return gx;
}

Tensor GlobalAvgPool::forward(const Tensor& x) {
  check_4d(x, "GlobalAvgPool");
  in_shape_ = x.shape();
  int n = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3);
  double inv = 1.0 / (static_cast<double>(h) * w);
  Tensor y({n, c});
  for (int b = 0; b < n; ++b)
    for (int ch = 0; ch < c; ++ch) {
      double acc = 0.0;
      for (int yy = 0; yy < h; ++yy)
        for (int xx = 0; xx < w; ++xx) acc += x.at(b, ch, yy, xx);
      y.at(b, ch) = acc * inv;
    }
  return y;
}

Tensor GlobalAvgPool::backward(const Tensor& grad_out) {
  Tensor gx(in_shape_);
  int n = in_shape_[0], c = in_shape_[1], h = in_shape_[2], w = in_shape_[3];
  double inv = 1.0 / (static_cast<double>(h) * w);
  for (int b = 0; b < n; ++b)
    for (int ch = 0; ch < c; ++ch) {
      double g = grad_out.at(b, ch) * inv;
      for (int yy = 0; yy < h; ++yy)
        for (int xx = 0; xx < w; ++xx) gx.at(b, ch, yy, xx) = g;
    }
  return gx;
}

// ---------------------------------------------------------------------------
// Sequential
// ---------------------------------------------------------------------------

Tensor Sequential::forward(const Tensor& x) {
  Tensor cur = x;
  for (auto& l : layers_) cur = l->forward(cur);
  return cur;
}

Tensor Sequential::backward(const Tensor& grad_out) {
  Tensor cur = grad_out;
  for (auto it = layers_.rbegin(); it != layers_.rend(); ++it) cur = (*it)->backward(cur);
  return cur;
}

std::vector<Param*> Sequential::params() {
  std::vector<Param*> out;
  for (auto& l : layers_)
    for (Param* p : l->params()) out.push_back(p);
  return out;
}

void Sequential::set_train(bool train) {
  train_ = train;
  for (auto& l : layers_) l->set_train(train);
}

// ---------------------------------------------------------------------------
// Losses
// ---------------------------------------------------------------------------

LossResult mse_loss(const Tensor& pred, const Tensor& target) {
  if (!pred.same_shape(target)) throw std::invalid_argument("mse_loss: shape mismatch");
  LossResult r;
  r.grad = Tensor(pred.shape());
  double inv = 1.0 / static_cast<double>(pred.numel());
  for (std::size_t i = 0; i < pred.numel(); ++i) {
    double d = pred[i] - target[i];
    r.value += d * d * inv;
    r.grad[i] = 2.0 * d * inv;
  }
  return r;
}

L1Result l1_loss(const Tensor& a, const Tensor& b) {
  if (!a.same_shape(b)) throw std::invalid_argument("l1_loss: shape mismatch");
  L1Result r;
  r.grad_a = Tensor(a.shape());
  r.grad_b = Tensor(b.shape());
  double inv = 1.0 / static_cast<double>(a.numel());
  for (std::size_t i = 0; i < a.numel(); ++i) {
    double d = a[i] - b[i];
    r.value += std::abs(d) * inv;
    double s = d > 0.0 ? 1.0 : (d < 0.0 ? -1.0 : 0.0);
    r.grad_a[i] = s * inv;
    r.grad_b[i] = -s * inv;
  }
  return r;
}

Tensor softmax_rows(const Tensor& logits) {
  int n = logits.dim(0), c = logits.dim(1);
  Tensor probs(logits.shape());
  for (int b = 0; b < n; ++b) {
    double mx = logits.at(b, 0);
    for (int j = 1; j < c; ++j) mx = std::max(mx, logits.at(b, j));
    double z = 0.0;
    for (int j = 0; j < c; ++j) z += std::exp(logits.at(b, j) - mx);
    for (int j = 0; j < c; ++j) probs.at(b, j) = std::exp(logits.at(b, j) - mx) / z;
  }
  return probs;
}

CeResult softmax_cross_entropy(const Tensor& logits, const std::vector<int>& labels) {
  int n = logits.dim(0), c = logits.dim(1);
  if (static_cast<int>(labels.size()) != n)
    throw std::invalid_argument("softmax_cross_entropy: label count mismatch");
  CeResult r;
  r.probs = softmax_rows(logits);
  r.grad = Tensor(logits.shape());
  double inv = 1.0 / n;
  for (int b = 0; b < n; ++b) {
    double p = std::max(r.probs.at(b, labels[b]), 1e-300);
    r.value -= std::log(p) * inv;
    for (int j = 0; j < c; ++j)
      r.grad.at(b, j) = (r.probs.at(b, j) - (j == labels[b] ? 1.0 : 0.0)) * inv;
  }
  return r;
}

// ---------------------------------------------------------------------------
// Adam
// ---------------------------------------------------------------------------

Adam::Adam(std::vector<Param*> params, double lr, double beta1, double beta2, double eps)
    : params_(std::move(params)), lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {
  for (Param* p : params_) {
    m_.emplace_back(p->value.shape());
    v_.emplace_back(p->value.shape());
  }
}

void Adam::step() {
  ++t_;
  double bc1 = 1.0 - std::pow(beta1_, t_);
  double bc2 = 1.0 - std::pow(beta2_, t_);
  for (std::size_t k = 0; k < params_.size(); ++k) {
    Param* p = params_[k];
    for (std::size_t i = 0; i < p->value.numel(); ++i) {
      double g = p->grad[i];
      m_[k][i] = beta1_ * m_[k][i] + (1.0 - beta1_) * g;
      v_[k][i] = beta2_ * v_[k][i] + (1.0 - beta2_) * g * g;
      double mhat = m_[k][i] / bc1;
      double vhat = v_[k][i] / bc2;
      p->value[i] -= lr_ * mhat / (std::sqrt(vhat) + eps_);
    }
  }
}

void Adam::zero_grad() {
  for (Param* p : params_) p->grad.zero();
}

std::vector<Param*> collect_params(std::initializer_list<Layer*> layers) {
  std::vector<Param*> out;
  for (Layer* l : layers)
    for (Param* p : l->params()) out.push_back(p);
  return out;
}

}  // namespace mtof::nn
