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
#include <span>
#include <vector>

#include "interlude/adaptive.hpp"
#include "interlude/layout.hpp"
#include "interlude/losses.hpp"

namespace interlude {

struct ObjectiveConfig {
  LossWeights weights;
  double tau = 0.95;
  bool hard_pseudo = true;
  bool stop_grad_labeled_delta = true;
  bool plus_mode = false;
};

struct ObjectiveResult {
  LossBreakdown breakdown;
  /// dL/dp for every probability vector, in grouped form.
  Grouped<Prob> dprob;
};

namespace detail {

inline void add_into(Prob& acc, const Prob& g, double scale) {
  for (std::size_t c = 0; c < acc.size(); ++c) acc[c] += scale * g[c];
}

}  // namespace detail

/// Evaluates the full training objective and its gradient with respect to
/// every slot's class probabilities. In plus mode the caller passes the
/// adaptive state to threshold against (already advanced when SAT updates
/// run before the loss).
inline ObjectiveResult evaluate_objective(const GroupedPredictions& g, const ObjectiveConfig& cfg,
                                          const AdaptiveState* adaptive = nullptr) {
  if (cfg.plus_mode && adaptive == nullptr) {
    throw ConfigError("objective: plus mode needs an adaptive state");
  }
  const std::size_t b = g.groups();
  const std::size_t mu = g.mu();
  const std::size_t c_n = g.classes();

  ObjectiveResult out;
  out.dprob = Grouped<Prob>::sized(b, mu);
  for (std::size_t i = 0; i < b; ++i) {
    out.dprob.p_w[i].assign(c_n, 0.0);
    out.dprob.p_s[i].assign(c_n, 0.0);
    for (std::size_t m = 0; m < mu; ++m) {
      out.dprob.q_w[i][m].assign(c_n, 0.0);
      out.dprob.q_s[i][m].assign(c_n, 0.0);
    }
  }

  LossParts parts;
  parts.sup = supervised_loss(g.p_w, g.labels);
  {
    const auto gs = supervised_loss_grad(g.p_w, g.labels);
    for (std::size_t i = 0; i < b; ++i) detail::add_into(out.dprob.p_w[i], gs[i], 1.0);
  }

  const auto q_w = g.flat_q_w();
  const auto q_s = g.flat_q_s();
  const ThresholdRule rule = cfg.plus_mode ? ThresholdRule::adaptive(class_thresholds(*adaptive))
                                           : ThresholdRule::fixed(cfg.tau);
  const auto unsup = instance_consistency_loss(q_w, q_s, rule, cfg.hard_pseudo);
  parts.unsup = unsup.loss;
  parts.mask_rate = unsup.mask_rate;
  if (cfg.weights.lambda_u != 0.0) {
    const auto gu = instance_consistency_grad(q_w, q_s, unsup.mask, cfg.hard_pseudo);
    for (std::size_t j = 0; j < gu.size(); ++j) {
      detail::add_into(out.dprob.q_s[j / mu][j % mu], gu[j], cfg.weights.lambda_u);
    }
  }

  if (cfg.weights.lambda_dc != 0.0) {
    parts.dc = delta_consistency_loss(g);
    const auto gd = delta_consistency_grad(g, cfg.stop_grad_labeled_delta);
    const double w = cfg.weights.lambda_dc;
    for (std::size_t i = 0; i < b; ++i) {
      detail::add_into(out.dprob.p_w[i], gd.p_w[i], w);
      detail::add_into(out.dprob.p_s[i], gd.p_s[i], w);
      for (std::size_t m = 0; m < mu; ++m) {
        detail::add_into(out.dprob.q_w[i][m], gd.q_w[i][m], w);
        detail::add_into(out.dprob.q_s[i][m], gd.q_s[i][m], w);
      }
    }
  } else if (mu > 0) {
    parts.dc = delta_consistency_loss(g);
  }

  if (cfg.plus_mode) {
    const auto saf = saf_loss(*adaptive, q_w, q_s);
    parts.saf = saf.loss;
    if (cfg.weights.lambda_saf != 0.0) {
      const auto gf = saf_loss_grad(*adaptive, q_s, saf);
      for (std::size_t j = 0; j < gf.size(); ++j) {
        detail::add_into(out.dprob.q_s[j / mu][j % mu], gf[j], cfg.weights.lambda_saf);
      }
    }
  }

  out.breakdown = total_loss(parts, cfg.weights, cfg.plus_mode);
  return out;
}

}  // namespace interlude
