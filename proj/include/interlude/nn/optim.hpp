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

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "interlude/error.hpp"
#include "interlude/tensor.hpp"

namespace interlude::nn {

enum class OptimizerKind { Sgd, AdamW };

inline OptimizerKind parse_optimizer(const std::string& s) {
  if (s == "sgd") return OptimizerKind::Sgd;
  if (s == "adamw") return OptimizerKind::AdamW;
  throw ConfigError("unknown optimizer '" + s + "' (expected sgd or adamw)");
}

struct OptimizerConfig {
  OptimizerKind kind = OptimizerKind::Sgd;
  double momentum = 0.9;
  bool nesterov = true;
  double weight_decay = 5e-4;
  /// SGD: shrink parameters by (1 - lr * wd) instead of adding wd * theta to
  /// the gradient. AdamW is always decoupled.
  bool decoupled_weight_decay = false;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// Per-parameter optimizer slots (SGD velocity, or Adam first/second moments).
struct OptimizerState {
  std::vector<Tensor> first;
  std::vector<Tensor> second;
  std::uint64_t steps = 0;

  static OptimizerState zeros_like(const std::vector<Tensor>& params) {
    OptimizerState s;
    for (const auto& p : params) {
      s.first.emplace_back(p.shape);
      s.second.emplace_back(p.shape);
    }
    return s;
  }
};

/// One update in place. SGD follows the common framework convention:
///   g <- grad + wd * theta          (coupled decay)
///   v <- momentum * v + g
///   theta <- theta - lr * (g + momentum * v)   (Nesterov) or lr * v
inline void optimizer_step(const OptimizerConfig& cfg, OptimizerState& state,
                           std::vector<Tensor>& params, const std::vector<Tensor>& grads,
                           double lr) {
  if (params.size() != grads.size() || params.size() != state.first.size()) {
    throw NumericError("optimizer: parameter/gradient count mismatch");
  }
  ++state.steps;
  for (std::size_t k = 0; k < params.size(); ++k) {
    auto& p = params[k].data;
    const auto& g = grads[k].data;
    auto& m1 = state.first[k].data;
    auto& m2 = state.second[k].data;
    if (cfg.kind == OptimizerKind::Sgd) {
      const bool coupled = !cfg.decoupled_weight_decay;
      for (std::size_t i = 0; i < p.size(); ++i) {
        double d = g[i];
        if (coupled) d += cfg.weight_decay * p[i];
        if (cfg.momentum != 0.0) {
          m1[i] = cfg.momentum * m1[i] + d;
          d = cfg.nesterov ? d + cfg.momentum * m1[i] : m1[i];
        }
        if (!coupled) p[i] *= 1.0 - lr * cfg.weight_decay;
        p[i] -= lr * d;
      }
    } else {
      const double t = static_cast<double>(state.steps);
      const double c1 = 1.0 - std::pow(cfg.beta1, t);
      const double c2 = 1.0 - std::pow(cfg.beta2, t);
      for (std::size_t i = 0; i < p.size(); ++i) {
        m1[i] = cfg.beta1 * m1[i] + (1.0 - cfg.beta1) * g[i];
        m2[i] = cfg.beta2 * m2[i] + (1.0 - cfg.beta2) * g[i] * g[i];
        p[i] *= 1.0 - lr * cfg.weight_decay;
        p[i] -= lr * (m1[i] / c1) / (std::sqrt(m2[i] / c2) + cfg.eps);
      }
    }
  }
}

}  // namespace interlude::nn
