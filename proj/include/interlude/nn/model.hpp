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

#include <cstddef>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "interlude/data.hpp"
#include "interlude/error.hpp"
#include "interlude/nn/layers.hpp"
#include "interlude/random.hpp"
#include "interlude/tensor.hpp"

namespace interlude::nn {

struct ModelSpec {
  /// "mlp", "cnn" (two conv blocks) or "wrn" (wide residual network).
  std::string arch = "mlp";
  std::vector<std::size_t> hidden = {64, 64};
  std::string activation = "relu";
  std::vector<std::size_t> cnn_channels = {32, 64};
  std::size_t wrn_depth = 28;
  std::size_t wrn_width = 2;
  double bn_momentum = 0.1;
};

/// Live parameters and running buffers of one classifier instance.
struct ModelState {
  std::vector<Tensor> params;
  std::vector<Tensor> buffers;

  friend bool operator==(const ModelState& a, const ModelState& b) {
    auto same = [](const std::vector<Tensor>& x, const std::vector<Tensor>& y) {
      if (x.size() != y.size()) return false;
      for (std::size_t i = 0; i < x.size(); ++i) {
        if (x[i].shape != y[i].shape || x[i].data != y[i].data) return false;
      }
      return true;
    };
    return same(a.params, b.params) && same(a.buffers, b.buffers);
  }
};

struct Tape {
  std::vector<Cache> caches;
};

/// f = h o g: an embedding network g (everything up to the penultimate
/// layer) and a linear head h. The architecture is immutable after build and
/// all passes are const, so one Classifier may serve any number of states.
class Classifier {
 public:
  static Classifier build(const ModelSpec& spec, const SampleShape& input, std::size_t classes) {
    if (classes < 2) throw ConfigError("model: need at least two classes");
    Classifier m;
    m.classes_ = classes;
    m.input_ = input.image ? Shape{input.channels, input.height, input.width} : Shape{input.size()};
    if (spec.arch == "mlp") {
      m.build_mlp(spec);
    } else if (spec.arch == "cnn") {
      if (!input.image) throw ConfigError("model: cnn needs image input");
      m.build_cnn(spec);
    } else if (spec.arch == "wrn") {
      if (!input.image) throw ConfigError("model: wrn needs image input");
      m.build_wrn(spec);
    } else {
      throw ConfigError("model: unknown architecture '" + spec.arch + "' (expected mlp, cnn or wrn)");
    }
    Shape s = m.input_;
    for (const auto& l : m.body_) s = l->output_shape(s);
    if (s.size() != 1) throw ConfigError("model: embedding must be a flat vector");
    m.embed_dim_ = s[0];
    m.head_ = std::make_shared<Linear>(m.embed_dim_, classes);
    for (auto& l : m.body_) l->declare(m.registry_);
    m.head_->declare(m.registry_);
    return m;
  }

  std::size_t classes() const { return classes_; }
  std::size_t embedding_dim() const { return embed_dim_; }
  const Shape& input_shape() const { return input_; }
  const Registry& registry() const { return registry_; }
  std::size_t body_layers() const { return body_.size(); }

  ModelState init(Rng& rng) const {
    ModelState st;
    for (const auto& s : registry_.params) st.params.emplace_back(s);
    for (const auto& s : registry_.buffers) st.buffers.emplace_back(s);
    for (const auto& l : body_) l->init(st.params, st.buffers, rng);
    head_->init(st.params, st.buffers, rng);
    return st;
  }

  std::vector<Tensor> zero_grads() const {
    std::vector<Tensor> g;
    for (const auto& s : registry_.params) g.emplace_back(s);
    return g;
  }

  /// Stacks per-sample feature vectors into a (N, ...) input tensor.
  Tensor stack(std::span<const Features> xs) const {
    const std::size_t per = Tensor::count(input_);
    Tensor t(batch_shape(xs.size(), input_));
    for (std::size_t r = 0; r < xs.size(); ++r) {
      if (xs[r].size() != per) throw BatchAssemblyError("model: sample size mismatch");
      std::copy(xs[r].begin(), xs[r].end(), t.data.begin() + static_cast<long>(r * per));
    }
    return t;
  }

  /// g(x). Training passes update running buffers in state.
  Tensor embed(const Tensor& x, ModelState& state, bool train, Tape& tape) const {
    Pass pass{state.params, state.buffers, train ? &state.buffers : nullptr, train};
    // Buffers are read from a snapshot so the in-place running update does
    // not feed back into the same pass.
    std::vector<Tensor> snapshot;
    if (train) {
      snapshot = state.buffers;
      pass.buffers_in = snapshot;
    }
    tape.caches.assign(body_.size() + 1, Cache{});
    Tensor h = x;
    for (std::size_t i = 0; i < body_.size(); ++i) h = body_[i]->forward(h, pass, tape.caches[i]);
    return h;
  }

  Tensor embed_eval(const Tensor& x, const ModelState& state) const {
    Pass pass{state.params, state.buffers, nullptr, false};
    Tensor h = x;
    Cache scratch;
    for (const auto& l : body_) h = l->forward(h, pass, scratch);
    return h;
  }

  /// h(z): logits.
  Tensor head(const Tensor& z, const ModelState& state, Tape& tape) const {
    Pass pass{state.params, state.buffers, nullptr, false};
    if (tape.caches.size() != body_.size() + 1) tape.caches.resize(body_.size() + 1);
    return head_->forward(z, pass, tape.caches.back());
  }

  /// Back through h; returns dL/dz and accumulates head gradients.
  Tensor backward_head(const Tensor& dlogits, const ModelState& state, std::vector<Tensor>& grads,
                       const Tape& tape) const {
    return head_->backward(dlogits, state.params, grads, tape.caches.back());
  }

  /// Back through g; accumulates body gradients.
  void backward_embed(const Tensor& dz, const ModelState& state, std::vector<Tensor>& grads,
                      const Tape& tape) const {
    Tensor g = dz;
    for (std::size_t i = body_.size(); i-- > 0;) {
      g = body_[i]->backward(g, state.params, grads, tape.caches[i]);
    }
  }

  /// Evaluation-mode logits, no fusion.
  Tensor logits_eval(const Tensor& x, const ModelState& state) const {
    Tape tape;
    return head(embed_eval(x, state), state, tape);
  }

  Tensor predict_proba(const Tensor& x, const ModelState& state) const {
    return softmax_rows(logits_eval(x, state));
  }

 private:
  Classifier() = default;

  void build_mlp(const ModelSpec& spec) {
    const auto act = parse_activation(spec.activation);
    std::size_t in = Tensor::count(input_);
    if (input_.size() > 1) body_.push_back(std::make_shared<Flatten>());
    for (std::size_t h : spec.hidden) {
      if (h == 0) throw ConfigError("model: hidden width must be positive");
      body_.push_back(std::make_shared<Linear>(in, h));
      body_.push_back(std::make_shared<Activation>(act));
      in = h;
    }
  }

  void build_cnn(const ModelSpec& spec) {
    const auto act = parse_activation(spec.activation);
    std::size_t in = input_[0];
    for (std::size_t ch : spec.cnn_channels) {
      body_.push_back(std::make_shared<Conv2d>(in, ch, 3, 1, 1));
      body_.push_back(std::make_shared<BatchNorm>(ch, spec.bn_momentum));
      body_.push_back(std::make_shared<Activation>(act));
      body_.push_back(std::make_shared<MaxPool2>());
      in = ch;
    }
    body_.push_back(std::make_shared<GlobalAvgPool>());
  }

  void build_wrn(const ModelSpec& spec) {
    if (spec.wrn_depth < 10 || (spec.wrn_depth - 4) % 6 != 0) {
      throw ConfigError("model: wrn depth must be 6n+4 with n >= 1");
    }
    const std::size_t n = (spec.wrn_depth - 4) / 6;
    const std::size_t k = spec.wrn_width;
    const std::size_t widths[4] = {16, 16 * k, 32 * k, 64 * k};
    body_.push_back(std::make_shared<Conv2d>(input_[0], widths[0], 3, 1, 1));
    std::size_t in = widths[0];
    for (std::size_t g = 0; g < 3; ++g) {
      for (std::size_t b = 0; b < n; ++b) {
        const std::size_t stride = (g > 0 && b == 0) ? 2 : 1;
        body_.push_back(std::make_shared<WideBasicBlock>(in, widths[g + 1], stride, spec.bn_momentum));
        in = widths[g + 1];
      }
    }
    body_.push_back(std::make_shared<BatchNorm>(in, spec.bn_momentum));
    body_.push_back(std::make_shared<Activation>(ActivationKind::LeakyReLU));
    body_.push_back(std::make_shared<GlobalAvgPool>());
  }

  std::size_t classes_ = 0;
  std::size_t embed_dim_ = 0;
  Shape input_;
  std::vector<LayerPtr> body_;
  std::shared_ptr<Linear> head_;
  Registry registry_;
};

}  // namespace interlude::nn
