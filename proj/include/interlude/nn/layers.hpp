// Copyright 2026 The InterLUDE Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "interlude/error.hpp"
#include "interlude/random.hpp"
#include "interlude/tensor.hpp"

namespace interlude::nn {

using Shape = std::vector<std::size_t>;

/// Collects parameter and buffer shapes while a network is assembled; each
/// layer remembers the offsets it was given.
struct Registry {
  std::vector<Shape> params;
  std::vector<Shape> buffers;
  std::vector<std::string> param_names;

  std::size_t add_param(std::string name, Shape s) {
    params.push_back(std::move(s));
    param_names.push_back(std::move(name));
    return params.size() - 1;
  }
  std::size_t add_buffer(Shape s) {
    buffers.push_back(std::move(s));
    return buffers.size() - 1;
  }
};

/// Inputs to one forward pass. Training passes may write running statistics
/// to buffers_out; evaluation passes read buffers_in only.
struct Pass {
  std::span<const Tensor> params;
  std::span<const Tensor> buffers_in;
  std::vector<Tensor>* buffers_out = nullptr;
  bool train = false;
};

using Cache = std::vector<Tensor>;

class Layer {
 public:
  virtual ~Layer() = default;

  virtual std::string name() const = 0;
  /// Per-sample output shape for a per-sample input shape.
  virtual Shape output_shape(const Shape& in) const = 0;
  virtual void declare(Registry&) {}
  virtual void init(std::span<Tensor>, std::span<Tensor>, Rng&) const {}
  virtual Tensor forward(const Tensor& x, const Pass& pass, Cache& cache) const = 0;
  /// Returns dL/dx and accumulates parameter gradients into grads.
  virtual Tensor backward(const Tensor& dy, std::span<const Tensor> params,
                          std::span<Tensor> grads, const Cache& cache) const = 0;
};

using LayerPtr = std::shared_ptr<Layer>;

inline Shape batch_shape(std::size_t n, const Shape& per_sample) {
  Shape s{n};
  s.insert(s.end(), per_sample.begin(), per_sample.end());
  return s;
}

// ---------------------------------------------------------------------------

class Linear final : public Layer {
 public:
  Linear(std::size_t in, std::size_t out) : in_(in), out_(out) {}

  std::string name() const override { return "linear"; }
  Shape output_shape(const Shape& in) const override {
    if (in.size() != 1 || in[0] != in_) throw ConfigError("linear: input feature mismatch");
    return {out_};
  }
  void declare(Registry& r) override {
    w_ = r.add_param("linear.weight", {out_, in_});
    b_ = r.add_param("linear.bias", {out_});
  }
  void init(std::span<Tensor> params, std::span<Tensor>, Rng& rng) const override {
    const double bound = 1.0 / std::sqrt(static_cast<double>(in_));
    for (auto& v : params[w_].data) v = rng.uniform(-bound, bound);
    for (auto& v : params[b_].data) v = rng.uniform(-bound, bound);
  }
  Tensor forward(const Tensor& x, const Pass& pass, Cache& cache) const override {
    const auto& w = pass.params[w_];
    const auto& b = pass.params[b_];
    const std::size_t n = x.dim(0);
    if (x.row_size() != in_) throw NumericError("linear: got " + x.shape_string());
    Tensor y({n, out_});
    for (std::size_t r = 0; r < n; ++r) {
      auto xr = x.row(r);
      for (std::size_t o = 0; o < out_; ++o) {
        const double* wr = w.data.data() + o * in_;
        double s = b.data[o];
        for (std::size_t k = 0; k < in_; ++k) s += wr[k] * xr[k];
        y.at(r, o) = s;
      }
    }
    cache = {x};
    return y;
  }
  Tensor backward(const Tensor& dy, std::span<const Tensor> params, std::span<Tensor> grads,
                  const Cache& cache) const override {
    const auto& x = cache[0];
    const auto& w = params[w_];
    auto& dw = grads[w_];
    auto& db = grads[b_];
    const std::size_t n = x.dim(0);
    Tensor dx(x.shape);
    for (std::size_t r = 0; r < n; ++r) {
      auto xr = x.row(r);
      auto dxr = dx.row(r);
      for (std::size_t o = 0; o < out_; ++o) {
        const double g = dy.at(r, o);
        if (g == 0.0) continue;
        db.data[o] += g;
        double* dwr = dw.data.data() + o * in_;
        const double* wr = w.data.data() + o * in_;
        for (std::size_t k = 0; k < in_; ++k) {
          dwr[k] += g * xr[k];
          dxr[k] += g * wr[k];
        }
      }
    }
    return dx;
  }

 private:
  std::size_t in_, out_;
  std::size_t w_ = 0, b_ = 0;
};

// ---------------------------------------------------------------------------

enum class ActivationKind { ReLU, LeakyReLU, Tanh };

inline ActivationKind parse_activation(const std::string& s) {
  if (s == "relu") return ActivationKind::ReLU;
  if (s == "leaky_relu") return ActivationKind::LeakyReLU;
  if (s == "tanh") return ActivationKind::Tanh;
  throw ConfigError("unknown activation '" + s + "' (expected relu, leaky_relu or tanh)");
}

class Activation final : public Layer {
 public:
  explicit Activation(ActivationKind k, double slope = 0.1) : kind_(k), slope_(slope) {}

  std::string name() const override { return "activation"; }
  Shape output_shape(const Shape& in) const override { return in; }
  Tensor forward(const Tensor& x, const Pass&, Cache& cache) const override {
    Tensor y(x.shape);
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double v = x.data[i];
      switch (kind_) {
        case ActivationKind::ReLU: y.data[i] = v > 0.0 ? v : 0.0; break;
        case ActivationKind::LeakyReLU: y.data[i] = v > 0.0 ? v : slope_ * v; break;
        case ActivationKind::Tanh: y.data[i] = std::tanh(v); break;
      }
    }
    cache = {kind_ == ActivationKind::Tanh ? y : x};
    return y;
  }
  Tensor backward(const Tensor& dy, std::span<const Tensor>, std::span<Tensor>,
                  const Cache& cache) const override {
    const auto& c = cache[0];
    Tensor dx(dy.shape);
    for (std::size_t i = 0; i < dy.size(); ++i) {
      switch (kind_) {
        case ActivationKind::ReLU: dx.data[i] = c.data[i] > 0.0 ? dy.data[i] : 0.0; break;
        case ActivationKind::LeakyReLU:
          dx.data[i] = c.data[i] > 0.0 ? dy.data[i] : slope_ * dy.data[i];
          break;
        case ActivationKind::Tanh: dx.data[i] = dy.data[i] * (1.0 - c.data[i] * c.data[i]); break;
      }
    }
    return dx;
  }

 private:
  ActivationKind kind_;
  double slope_;
};

// ---------------------------------------------------------------------------

class Flatten final : public Layer {
 public:
  std::string name() const override { return "flatten"; }
  Shape output_shape(const Shape& in) const override { return {Tensor::count(in)}; }
  Tensor forward(const Tensor& x, const Pass&, Cache& cache) const override {
    cache = {Tensor(x.shape)};
    return Tensor({x.dim(0), x.row_size()}, x.data);
  }
  Tensor backward(const Tensor& dy, std::span<const Tensor>, std::span<Tensor>,
                  const Cache& cache) const override {
    return Tensor(cache[0].shape, dy.data);
  }
};

// ---------------------------------------------------------------------------

/// 2-D convolution over (N, C, H, W) with square kernel, zero padding.
class Conv2d final : public Layer {
 public:
  Conv2d(std::size_t cin, std::size_t cout, std::size_t k, std::size_t stride, std::size_t pad,
         bool bias = false)
      : cin_(cin), cout_(cout), k_(k), stride_(stride), pad_(pad), bias_(bias) {}

  std::string name() const override { return "conv2d"; }
  Shape output_shape(const Shape& in) const override {
    if (in.size() != 3 || in[0] != cin_) throw ConfigError("conv2d: input channel mismatch");
    return {cout_, out_dim(in[1]), out_dim(in[2])};
  }
  void declare(Registry& r) override {
    w_ = r.add_param("conv.weight", {cout_, cin_, k_, k_});
    if (bias_) b_ = r.add_param("conv.bias", {cout_});
  }
  void init(std::span<Tensor> params, std::span<Tensor>, Rng& rng) const override {
    const double std = std::sqrt(2.0 / static_cast<double>(cout_ * k_ * k_));
    for (auto& v : params[w_].data) v = std * rng.normal();
    if (bias_) params[b_].fill(0.0);
  }
  Tensor forward(const Tensor& x, const Pass& pass, Cache& cache) const override {
    const std::size_t n = x.dim(0), h = x.dim(2), w = x.dim(3);
    const std::size_t oh = out_dim(h), ow = out_dim(w);
    const auto& wt = pass.params[w_].data;
    Tensor y({n, cout_, oh, ow});
    for (std::size_t b = 0; b < n; ++b) {
      for (std::size_t co = 0; co < cout_; ++co) {
        const double bias = bias_ ? pass.params[b_].data[co] : 0.0;
        double* yo = y.data.data() + ((b * cout_ + co) * oh) * ow;
        for (std::size_t p = 0; p < oh * ow; ++p) yo[p] = bias;
        for (std::size_t ci = 0; ci < cin_; ++ci) {
          const double* xi = x.data.data() + ((b * cin_ + ci) * h) * w;
          for (std::size_t ky = 0; ky < k_; ++ky) {
            for (std::size_t kx = 0; kx < k_; ++kx) {
              const double wv = wt[((co * cin_ + ci) * k_ + ky) * k_ + kx];
              for (std::size_t oy = 0; oy < oh; ++oy) {
                const long iy = static_cast<long>(oy * stride_ + ky) - static_cast<long>(pad_);
                if (iy < 0 || iy >= static_cast<long>(h)) continue;
                for (std::size_t ox = 0; ox < ow; ++ox) {
                  const long ix = static_cast<long>(ox * stride_ + kx) - static_cast<long>(pad_);
                  if (ix < 0 || ix >= static_cast<long>(w)) continue;
                  yo[oy * ow + ox] += wv * xi[iy * static_cast<long>(w) + ix];
                }
              }
            }
          }
        }
      }
    }
    cache = {x};
    return y;
  }
  Tensor backward(const Tensor& dy, std::span<const Tensor> params, std::span<Tensor> grads,
                  const Cache& cache) const override {
    const auto& x = cache[0];
    const std::size_t n = x.dim(0), h = x.dim(2), w = x.dim(3);
    const std::size_t oh = dy.dim(2), ow = dy.dim(3);
    const auto& wt = params[w_].data;
    auto& dw = grads[w_].data;
    Tensor dx(x.shape);
    for (std::size_t b = 0; b < n; ++b) {
      for (std::size_t co = 0; co < cout_; ++co) {
        const double* go = dy.data.data() + ((b * cout_ + co) * oh) * ow;
        if (bias_) {
          double s = 0.0;
          for (std::size_t p = 0; p < oh * ow; ++p) s += go[p];
          grads[b_].data[co] += s;
        }
        for (std::size_t ci = 0; ci < cin_; ++ci) {
          const double* xi = x.data.data() + ((b * cin_ + ci) * h) * w;
          double* dxi = dx.data.data() + ((b * cin_ + ci) * h) * w;
          for (std::size_t ky = 0; ky < k_; ++ky) {
            for (std::size_t kx = 0; kx < k_; ++kx) {
              const std::size_t widx = ((co * cin_ + ci) * k_ + ky) * k_ + kx;
              const double wv = wt[widx];
              double acc = 0.0;
              for (std::size_t oy = 0; oy < oh; ++oy) {
                const long iy = static_cast<long>(oy * stride_ + ky) - static_cast<long>(pad_);
                if (iy < 0 || iy >= static_cast<long>(h)) continue;
                for (std::size_t ox = 0; ox < ow; ++ox) {
                  const long ix = static_cast<long>(ox * stride_ + kx) - static_cast<long>(pad_);
                  if (ix < 0 || ix >= static_cast<long>(w)) continue;
                  const double g = go[oy * ow + ox];
                  const long off = iy * static_cast<long>(w) + ix;
                  acc += g * xi[off];
                  dxi[off] += g * wv;
                }
              }
              dw[widx] += acc;
            }
          }
        }
      }
    }
    return dx;
  }

 private:
  std::size_t out_dim(std::size_t d) const { return (d + 2 * pad_ - k_) / stride_ + 1; }

  std::size_t cin_, cout_, k_, stride_, pad_;
  bool bias_;
  std::size_t w_ = 0, b_ = 0;
};

// ---------------------------------------------------------------------------

/// Batch normalization over axis 1 of (N, C) or (N, C, H, W). Training
/// passes normalize with the statistics of the whole batch.
class BatchNorm final : public Layer {
 public:
  explicit BatchNorm(std::size_t channels, double momentum = 0.1, double eps = 1e-5)
      : c_(channels), momentum_(momentum), eps_(eps) {}

  std::string name() const override { return "batchnorm"; }
  Shape output_shape(const Shape& in) const override {
    if (in.empty() || in[0] != c_) throw ConfigError("batchnorm: channel mismatch");
    return in;
  }
  void declare(Registry& r) override {
    gamma_ = r.add_param("bn.gamma", {c_});
    beta_ = r.add_param("bn.beta", {c_});
    mean_ = r.add_buffer({c_});
    var_ = r.add_buffer({c_});
  }
  void init(std::span<Tensor> params, std::span<Tensor> buffers, Rng&) const override {
    params[gamma_].fill(1.0);
    params[beta_].fill(0.0);
    buffers[mean_].fill(0.0);
    buffers[var_].fill(1.0);
  }
  Tensor forward(const Tensor& x, const Pass& pass, Cache& cache) const override {
    const std::size_t n = x.dim(0);
    const std::size_t spatial = x.row_size() / c_;
    const double m = static_cast<double>(n * spatial);
    const auto& gamma = pass.params[gamma_].data;
    const auto& beta = pass.params[beta_].data;
    Tensor mean({c_}), inv_std({c_}), xhat(x.shape), y(x.shape);
    for (std::size_t c = 0; c < c_; ++c) {
      double mu, var;
      if (pass.train) {
        double s = 0.0;
        for (std::size_t b = 0; b < n; ++b) {
          const double* p = x.data.data() + (b * c_ + c) * spatial;
          for (std::size_t k = 0; k < spatial; ++k) s += p[k];
        }
        mu = s / m;
        double v = 0.0;
        for (std::size_t b = 0; b < n; ++b) {
          const double* p = x.data.data() + (b * c_ + c) * spatial;
          for (std::size_t k = 0; k < spatial; ++k) v += (p[k] - mu) * (p[k] - mu);
        }
        var = v / m;
        if (pass.buffers_out != nullptr) {
          auto& rm = (*pass.buffers_out)[mean_].data[c];
          auto& rv = (*pass.buffers_out)[var_].data[c];
          const double unbiased = m > 1.0 ? v / (m - 1.0) : var;
          rm = (1.0 - momentum_) * rm + momentum_ * mu;
          rv = (1.0 - momentum_) * rv + momentum_ * unbiased;
        }
      } else {
        mu = pass.buffers_in[mean_].data[c];
        var = pass.buffers_in[var_].data[c];
      }
      const double is = 1.0 / std::sqrt(var + eps_);
      mean.data[c] = mu;
      inv_std.data[c] = is;
      for (std::size_t b = 0; b < n; ++b) {
        const std::size_t off = (b * c_ + c) * spatial;
        for (std::size_t k = 0; k < spatial; ++k) {
          const double xh = (x.data[off + k] - mu) * is;
          xhat.data[off + k] = xh;
          y.data[off + k] = gamma[c] * xh + beta[c];
        }
      }
    }
    cache = {xhat, inv_std, Tensor({1}, pass.train ? 1.0 : 0.0)};
    return y;
  }
  Tensor backward(const Tensor& dy, std::span<const Tensor> params, std::span<Tensor> grads,
                  const Cache& cache) const override {
    const auto& xhat = cache[0];
    const auto& inv_std = cache[1];
    const bool train = cache[2].data[0] != 0.0;
    const std::size_t n = dy.dim(0);
    const std::size_t spatial = dy.row_size() / c_;
    const double m = static_cast<double>(n * spatial);
    const auto& gamma = params[gamma_].data;
    Tensor dx(dy.shape);
    for (std::size_t c = 0; c < c_; ++c) {
      double sum_dy = 0.0, sum_dy_xh = 0.0;
      for (std::size_t b = 0; b < n; ++b) {
        const std::size_t off = (b * c_ + c) * spatial;
        for (std::size_t k = 0; k < spatial; ++k) {
          sum_dy += dy.data[off + k];
          sum_dy_xh += dy.data[off + k] * xhat.data[off + k];
        }
      }
      grads[gamma_].data[c] += sum_dy_xh;
      grads[beta_].data[c] += sum_dy;
      const double scale = gamma[c] * inv_std.data[c];
      for (std::size_t b = 0; b < n; ++b) {
        const std::size_t off = (b * c_ + c) * spatial;
        for (std::size_t k = 0; k < spatial; ++k) {
          const double g = dy.data[off + k];
          dx.data[off + k] =
              train ? scale * (g - sum_dy / m - xhat.data[off + k] * sum_dy_xh / m) : scale * g;
        }
      }
    }
    return dx;
  }

 private:
  std::size_t c_;
  double momentum_, eps_;
  std::size_t gamma_ = 0, beta_ = 0, mean_ = 0, var_ = 0;
};

// ---------------------------------------------------------------------------

class MaxPool2 final : public Layer {
 public:
  std::string name() const override { return "maxpool2"; }
  Shape output_shape(const Shape& in) const override { return {in[0], in[1] / 2, in[2] / 2}; }
  Tensor forward(const Tensor& x, const Pass&, Cache& cache) const override {
    const std::size_t n = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3);
    const std::size_t oh = h / 2, ow = w / 2;
    Tensor y({n, c, oh, ow});
    Tensor arg(y.shape);
    for (std::size_t p = 0; p < n * c; ++p) {
      const double* xi = x.data.data() + p * h * w;
      for (std::size_t oy = 0; oy < oh; ++oy) {
        for (std::size_t ox = 0; ox < ow; ++ox) {
          std::size_t best = (2 * oy) * w + 2 * ox;
          for (std::size_t dy = 0; dy < 2; ++dy) {
            for (std::size_t dx = 0; dx < 2; ++dx) {
              const std::size_t idx = (2 * oy + dy) * w + 2 * ox + dx;
              if (xi[idx] > xi[best]) best = idx;
            }
          }
          y.data[(p * oh + oy) * ow + ox] = xi[best];
          arg.data[(p * oh + oy) * ow + ox] = static_cast<double>(best);
        }
      }
    }
    cache = {Tensor(x.shape), arg};
    return y;
  }
  Tensor backward(const Tensor& dy, std::span<const Tensor>, std::span<Tensor>,
                  const Cache& cache) const override {
    const auto& in_shape = cache[0].shape;
    const auto& arg = cache[1];
    Tensor dx(in_shape);
    const std::size_t plane_in = in_shape[2] * in_shape[3];
    const std::size_t plane_out = dy.dim(2) * dy.dim(3);
    for (std::size_t p = 0; p < dy.dim(0) * dy.dim(1); ++p) {
      for (std::size_t k = 0; k < plane_out; ++k) {
        const auto src = static_cast<std::size_t>(arg.data[p * plane_out + k]);
        dx.data[p * plane_in + src] += dy.data[p * plane_out + k];
      }
    }
    return dx;
  }
};

class GlobalAvgPool final : public Layer {
 public:
  std::string name() const override { return "global_avg_pool"; }
  Shape output_shape(const Shape& in) const override { return {in[0]}; }
  Tensor forward(const Tensor& x, const Pass&, Cache& cache) const override {
    const std::size_t n = x.dim(0), c = x.dim(1);
    const std::size_t plane = x.row_size() / c;
    Tensor y({n, c});
    for (std::size_t p = 0; p < n * c; ++p) {
      double s = 0.0;
      for (std::size_t k = 0; k < plane; ++k) s += x.data[p * plane + k];
      y.data[p] = s / static_cast<double>(plane);
    }
    cache = {Tensor(x.shape)};
    return y;
  }
  Tensor backward(const Tensor& dy, std::span<const Tensor>, std::span<Tensor>,
                  const Cache& cache) const override {
    Tensor dx(cache[0].shape);
    const std::size_t plane = dx.row_size() / dy.dim(1);
    for (std::size_t p = 0; p < dy.size(); ++p) {
      const double g = dy.data[p] / static_cast<double>(plane);
      for (std::size_t k = 0; k < plane; ++k) dx.data[p * plane + k] = g;
    }
    return dx;
  }
};

// ---------------------------------------------------------------------------

/// Pre-activation wide residual block: BN-act-conv3x3-BN-act-conv3x3 with an
/// identity or 1x1 projection shortcut.
class WideBasicBlock final : public Layer {
 public:
  WideBasicBlock(std::size_t cin, std::size_t cout, std::size_t stride, double bn_momentum)
      : bn1_(cin, bn_momentum),
        act1_(ActivationKind::LeakyReLU),
        conv1_(cin, cout, 3, stride, 1),
        bn2_(cout, bn_momentum),
        act2_(ActivationKind::LeakyReLU),
        conv2_(cout, cout, 3, 1, 1),
        project_(cin != cout || stride != 1),
        shortcut_(cin, cout, 1, stride, 0) {}

  std::string name() const override { return "wide_basic"; }
  Shape output_shape(const Shape& in) const override {
    return conv2_.output_shape(conv1_.output_shape(in));
  }
  void declare(Registry& r) override {
    bn1_.declare(r);
    conv1_.declare(r);
    bn2_.declare(r);
    conv2_.declare(r);
    if (project_) shortcut_.declare(r);
  }
  void init(std::span<Tensor> p, std::span<Tensor> b, Rng& rng) const override {
    bn1_.init(p, b, rng);
    conv1_.init(p, b, rng);
    bn2_.init(p, b, rng);
    conv2_.init(p, b, rng);
    if (project_) shortcut_.init(p, b, rng);
  }
  Tensor forward(const Tensor& x, const Pass& pass, Cache& cache) const override {
    Cache c[6];
    auto a = act1_.forward(bn1_.forward(x, pass, c[0]), pass, c[1]);
    auto h = conv1_.forward(a, pass, c[2]);
    h = act2_.forward(bn2_.forward(h, pass, c[3]), pass, c[4]);
    h = conv2_.forward(h, pass, c[5]);
    Cache sc;
    Tensor skip = project_ ? shortcut_.forward(a, pass, sc) : x;
    for (std::size_t i = 0; i < h.size(); ++i) h.data[i] += skip.data[i];
    pack(cache, c, sc);
    return h;
  }
  Tensor backward(const Tensor& dy, std::span<const Tensor> params, std::span<Tensor> grads,
                  const Cache& cache) const override {
    Cache c[6];
    Cache sc;
    unpack(cache, c, sc);
    auto g = conv2_.backward(dy, params, grads, c[5]);
    g = bn2_.backward(act2_.backward(g, params, grads, c[4]), params, grads, c[3]);
    auto da = conv1_.backward(g, params, grads, c[2]);
    Tensor dx;
    if (project_) {
      const auto ds = shortcut_.backward(dy, params, grads, sc);
      for (std::size_t i = 0; i < da.size(); ++i) da.data[i] += ds.data[i];
      dx = bn1_.backward(act1_.backward(da, params, grads, c[1]), params, grads, c[0]);
    } else {
      dx = bn1_.backward(act1_.backward(da, params, grads, c[1]), params, grads, c[0]);
      for (std::size_t i = 0; i < dx.size(); ++i) dx.data[i] += dy.data[i];
    }
    return dx;
  }

 private:
  // Sub-layer caches are flattened into one Cache, each run prefixed by its length.
  static void pack(Cache& out, Cache (&c)[6], Cache& sc) {
    out.clear();
    for (auto* part : {&c[0], &c[1], &c[2], &c[3], &c[4], &c[5], &sc}) {
      out.push_back(Tensor({1}, static_cast<double>(part->size())));
      for (auto& t : *part) out.push_back(std::move(t));
    }
  }
  static void unpack(const Cache& in, Cache (&c)[6], Cache& sc) {
    std::size_t pos = 0;
    for (auto* part : {&c[0], &c[1], &c[2], &c[3], &c[4], &c[5], &sc}) {
      const auto count = static_cast<std::size_t>(in[pos++].data[0]);
      part->assign(in.begin() + static_cast<long>(pos), in.begin() + static_cast<long>(pos + count));
      pos += count;
    }
  }

  BatchNorm bn1_;
  Activation act1_;
  Conv2d conv1_;
  BatchNorm bn2_;
  Activation act2_;
  Conv2d conv2_;
  bool project_;
  Conv2d shortcut_;
};

}  // namespace interlude::nn
