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
#include <cstdint>
#include <limits>
#include <numbers>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "interlude/adaptive.hpp"
#include "interlude/augment.hpp"
#include "interlude/data.hpp"
#include "interlude/error.hpp"
#include "interlude/fusion.hpp"
#include "interlude/layout.hpp"
#include "interlude/losses.hpp"
#include "interlude/nn/model.hpp"
#include "interlude/nn/optim.hpp"
#include "interlude/objective.hpp"
#include "interlude/random.hpp"
#include "interlude/train_config.hpp"

namespace interlude {

/// eta_0 cos(7 pi k / 16 K).
inline double cosine_lr(std::uint64_t k, std::uint64_t total, double eta0) {
  if (total == 0) throw ConfigError("cosine_lr: total steps must be positive");
  if (k > total) {
    throw ConfigError("cosine_lr: step " + std::to_string(k) + " exceeds total " + std::to_string(total));
  }
  return eta0 * std::cos(7.0 * std::numbers::pi * static_cast<double>(k) /
                         (16.0 * static_cast<double>(total)));
}

/// Shadow copy of the model for evaluation. Parameters follow an EMA;
/// running buffers (batch-norm statistics) are copied from the live model.
struct EmaModel {
  double decay = 0.999;
  nn::ModelState shadow;

  static EmaModel init(const nn::ModelState& live, double decay) {
    return {decay, live};
  }
};

namespace detail {

inline void check_same_layout(const std::vector<Tensor>& a, const std::vector<Tensor>& b,
                              const char* what) {
  if (a.size() != b.size()) throw NumericError(std::string("ema: ") + what + " count mismatch");
  for (std::size_t k = 0; k < a.size(); ++k) {
    if (a[k].shape != b[k].shape) throw NumericError(std::string("ema: ") + what + " shape mismatch");
  }
}

}  // namespace detail

inline void ema_update_in_place(EmaModel& ema, const nn::ModelState& live) {
  detail::check_same_layout(ema.shadow.params, live.params, "parameter");
  detail::check_same_layout(ema.shadow.buffers, live.buffers, "buffer");
  const double d = ema.decay;
  for (std::size_t k = 0; k < live.params.size(); ++k) {
    auto& s = ema.shadow.params[k].data;
    const auto& p = live.params[k].data;
    for (std::size_t i = 0; i < s.size(); ++i) s[i] = d * s[i] + (1.0 - d) * p[i];
  }
  ema.shadow.buffers = live.buffers;
}

/// shadow <- decay * shadow + (1 - decay) * theta.
inline EmaModel ema_update(const EmaModel& ema, const nn::ModelState& live) {
  EmaModel next = ema;
  ema_update_in_place(next, live);
  return next;
}

/// One line of the metrics log. eval_error is NaN when no evaluation ran.
struct MetricRecord {
  std::uint64_t step = 0;  // completed steps
  double lr = 0.0;
  LossBreakdown loss;
  double tau_global = std::numeric_limits<double>::quiet_NaN();
  double eval_error = std::numeric_limits<double>::quiet_NaN();
};

struct TrainState {
  std::uint64_t step = 0;
  nn::ModelState model;
  EmaModel ema;
  nn::OptimizerState optimizer;
  AdaptiveState adaptive;
  std::vector<MetricRecord> history;
};

/// Samples drawn for one step: B labeled examples and mu*B unlabeled
/// samples, the latter partitioned contiguously into B groups of mu.
struct StepBatch {
  std::vector<Example> labeled;
  std::vector<Features> unlabeled;
  std::vector<std::size_t> labeled_index;
  std::vector<std::size_t> unlabeled_index;
};

/// A step's batch after augmentation, in model input order.
struct PreparedBatch {
  std::uint64_t step = 0;
  OrderedBatch<Features> batch;
  std::vector<std::size_t> labels;
  std::vector<AugRealization> weak, strong;  // per group
  /// Labeled weak views only (nothing unlabeled contributes to the loss).
  bool supervised_only = false;
};

struct StepOutput {
  LossBreakdown loss;
  double lr = 0.0;
};

struct LossAndGradient {
  LossBreakdown loss;
  std::vector<Tensor> grads;  // one per model parameter
};

struct EvalResult {
  double error_rate = 0.0;
  std::vector<double> per_class_error;
  std::vector<std::size_t> per_class_count;
};

/// Runs training steps for one model architecture and configuration.
class Trainer {
 public:
  Trainer(TrainConfig cfg, const SampleShape& shape, std::size_t classes)
      : cfg_(std::move(cfg)),
        shape_(shape),
        model_(nn::Classifier::build(cfg_.model, shape, classes)) {
    cfg_.validate();
    if (!supervised_only()) {
      const std::size_t q = 2 * (1 + cfg_.mu) * cfg_.batch_size;
      plan_ = FusionPlan::circular_shift(q, cfg_.alpha);
    }
  }

  const TrainConfig& config() const { return cfg_; }
  const nn::Classifier& model() const { return model_; }
  const SampleShape& sample_shape() const { return shape_; }
  std::size_t classes() const { return model_.classes(); }

  /// No unlabeled term, fusion or adaptive state is active.
  bool supervised_only() const {
    return cfg_.lambda_u == 0.0 && cfg_.lambda_dc == 0.0 && !cfg_.plus_mode && !cfg_.fusion_enabled;
  }

  TrainState initial_state() const {
    Rng rng(derive_seed(cfg_.seed, "init"));
    TrainState s;
    s.model = model_.init(rng);
    s.ema = EmaModel::init(s.model, cfg_.ema_decay);
    s.optimizer = nn::OptimizerState::zeros_like(s.model.params);
    s.adaptive = AdaptiveState::initial(model_.classes(), cfg_.plus_ema_momentum);
    return s;
  }

  /// Throws if a state (e.g. from a checkpoint) does not fit this model.
  void check_state(const TrainState& s) const {
    Rng rng(0);
    const auto fresh = model_.init(rng);
    auto same = [](const std::vector<Tensor>& a, const std::vector<Tensor>& b) {
      if (a.size() != b.size()) return false;
      for (std::size_t k = 0; k < a.size(); ++k) {
        if (a[k].shape != b[k].shape) return false;
      }
      return true;
    };
    if (!same(s.model.params, fresh.params) || !same(s.model.buffers, fresh.buffers) ||
        !same(s.ema.shadow.params, fresh.params) || !same(s.ema.shadow.buffers, fresh.buffers) ||
        !same(s.optimizer.first, fresh.params) || !same(s.optimizer.second, fresh.params) ||
        s.adaptive.classes != model_.classes()) {
      throw ConfigError("trainer: state does not match the configured model");
    }
  }

  /// Batch draw for a step: indices sampled with replacement from a stream
  /// derived from (seed, step), so any step can be reproduced in isolation.
  StepBatch draw_batch(const DatasetSplit& data, std::uint64_t step) const {
    if (data.labeled.empty()) throw DataError("trainer: no labeled data");
    const bool need_unlabeled = !supervised_only();
    if (need_unlabeled && data.unlabeled.empty()) throw DataError("trainer: no unlabeled data");
    Rng rng(derive_seed(cfg_.seed, "batch", step));
    StepBatch b;
    for (std::size_t i = 0; i < cfg_.batch_size; ++i) {
      const auto k = static_cast<std::size_t>(rng.below(data.labeled.size()));
      b.labeled_index.push_back(k);
      b.labeled.push_back(data.labeled[k]);
    }
    if (need_unlabeled) {
      for (std::size_t j = 0; j < cfg_.mu * cfg_.batch_size; ++j) {
        const auto k = static_cast<std::size_t>(rng.below(data.unlabeled.size()));
        b.unlabeled_index.push_back(k);
        b.unlabeled.push_back(data.unlabeled[k]);
      }
    }
    return b;
  }

  /// DrawAugParams + GetAug per group, then InterDigitate.
  PreparedBatch prepare(const StepBatch& sb, std::uint64_t step) const {
    const std::size_t b = cfg_.batch_size;
    const std::size_t mu = cfg_.mu;
    if (sb.labeled.size() != b) {
      throw BatchAssemblyError("trainer: expected " + std::to_string(b) + " labeled samples, got " +
                               std::to_string(sb.labeled.size()));
    }
    PreparedBatch pb;
    pb.step = step;
    pb.supervised_only = supervised_only();
    for (const auto& e : sb.labeled) pb.labels.push_back(e.label);

    Rng rng(derive_seed(cfg_.seed, "augment", step));
    if (pb.supervised_only) {
      // Only the weak labeled views enter the loss; Q = B slots of (x_i^w).
      pb.batch.layout = cfg_.layout;
      pb.batch.b = b;
      pb.batch.mu = 0;
      for (std::size_t i = 0; i < b; ++i) {
        auto [omega, sigma] = draw_aug_params(rng, cfg_.augment);
        pb.batch.slots.push_back({apply_augmentation(sb.labeled[i].x, shape_, omega),
                                  labeled_tag(AugKind::Weak, i)});
        pb.weak.push_back(std::move(omega));
        pb.strong.push_back(std::move(sigma));
      }
      return pb;
    }
    if (sb.unlabeled.size() != mu * b) {
      throw BatchAssemblyError("trainer: expected " + std::to_string(mu * b) +
                               " unlabeled samples, got " + std::to_string(sb.unlabeled.size()));
    }
    std::vector<Features> lw, ls, uw, us;
    lw.reserve(b);
    ls.reserve(b);
    uw.reserve(mu * b);
    us.reserve(mu * b);
    for (std::size_t i = 0; i < b; ++i) {
      auto [omega, sigma] = draw_aug_params(rng, cfg_.augment);
      const std::span<const Features> group(sb.unlabeled.data() + i * mu, mu);
      auto views = get_aug(sb.labeled[i].x, group, mu, shape_, omega, sigma);
      lw.push_back(std::move(views.x_w));
      ls.push_back(std::move(views.x_s));
      for (auto& v : views.u_w) uw.push_back(std::move(v));
      for (auto& v : views.u_s) us.push_back(std::move(v));
      pb.weak.push_back(std::move(omega));
      pb.strong.push_back(std::move(sigma));
    }
    pb.batch = interdigitate<Features>(lw, ls, uw, us, mu, cfg_.layout);
    return pb;
  }

  /// Forward, loss and backward on a prepared batch without touching the
  /// parameters. Running buffers and, in plus mode, the adaptive state
  /// advance as they would in a training step.
  LossAndGradient loss_and_gradient(TrainState& state, const PreparedBatch& pb) const {
    std::vector<Features> xs;
    xs.reserve(pb.batch.size());
    for (const auto& s : pb.batch.slots) xs.push_back(s.sample);
    const Tensor x = model_.stack(xs);

    nn::Tape tape;
    const Tensor z = model_.embed(x, state.model, true, tape);
    const bool fuse = cfg_.fusion_enabled && !pb.supervised_only;
    const Tensor zf = fuse ? apply_fusion(z, *plan_) : z;
    const Tensor logits = model_.head(zf, state.model, tape);
    const Tensor prob = softmax_rows(logits);
    const std::size_t c_n = model_.classes();
    const std::size_t q = pb.batch.size();

    Tensor dlogits({q, c_n});
    LossAndGradient out;
    if (pb.supervised_only) {
      std::vector<Prob> p_w(q);
      for (std::size_t r = 0; r < q; ++r) p_w[r].assign(prob.row(r).begin(), prob.row(r).end());
      LossParts parts;
      parts.sup = supervised_loss(p_w, pb.labels);
      out.loss = total_loss(parts, {cfg_.lambda_u, cfg_.lambda_dc, cfg_.lambda_saf}, false);
      check_finite(out.loss, pb);
      const auto dp = supervised_loss_grad(p_w, pb.labels);
      for (std::size_t r = 0; r < q; ++r) softmax_backward_row(prob.row(r), dp[r], dlogits.row(r));
    } else {
      std::vector<Prob> rows(q);
      for (std::size_t r = 0; r < q; ++r) rows[r].assign(prob.row(r).begin(), prob.row(r).end());
      GroupedPredictions g;
      static_cast<Grouped<Prob>&>(g) =
          deinterleave<Features, Prob>(pb.batch, std::span<const Prob>(rows));
      g.labels = pb.labels;

      const auto q_w = g.flat_q_w();
      if (cfg_.plus_mode && cfg_.sat_update_before_loss) advance_adaptive(state.adaptive, q_w);
      auto obj = evaluate_objective(g, cfg_.objective(), cfg_.plus_mode ? &state.adaptive : nullptr);
      out.loss = obj.breakdown;
      check_finite(out.loss, pb);
      if (cfg_.plus_mode && !cfg_.sat_update_before_loss) advance_adaptive(state.adaptive, q_w);

      for (std::size_t r = 0; r < q; ++r) {
        const Prob& dp = obj.dprob.at(pb.batch.slots[r].tag);
        softmax_backward_row(prob.row(r), dp, dlogits.row(r));
      }
    }

    out.grads = model_.zero_grads();
    const Tensor dzf = model_.backward_head(dlogits, state.model, out.grads, tape);
    const Tensor dz = fuse ? apply_fusion_backward(dzf, *plan_) : dzf;
    model_.backward_embed(dz, state.model, out.grads, tape);
    return out;
  }

  /// One optimizer + EMA update on a prepared batch. Advances state.step.
  StepOutput train_on_batch(TrainState& state, const PreparedBatch& pb) const {
    if (pb.step != state.step) {
      throw BatchAssemblyError("trainer: batch prepared for step " + std::to_string(pb.step) +
                               " applied at step " + std::to_string(state.step));
    }
    const auto lg = loss_and_gradient(state, pb);
    const double lr = cosine_lr(state.step, cfg_.steps, cfg_.lr);
    nn::optimizer_step(cfg_.optimizer, state.optimizer, state.model.params, lg.grads, lr);
    ema_update_in_place(state.ema, state.model);
    ++state.step;
    return {lg.loss, lr};
  }

  /// One full step at state.step: draw, augment, update, and log a record.
  StepOutput train_step(TrainState& state, const DatasetSplit& data) const {
    if (state.step >= cfg_.steps) {
      throw ConfigError("trainer: all " + std::to_string(cfg_.steps) + " steps already done");
    }
    const auto pb = prepare(draw_batch(data, state.step), state.step);
    const auto out = train_on_batch(state, pb);
    MetricRecord rec;
    rec.step = state.step;
    rec.lr = out.lr;
    rec.loss = out.loss;
    if (cfg_.plus_mode) rec.tau_global = state.adaptive.tau_global;
    state.history.push_back(rec);
    return out;
  }

  /// Error rate of the EMA model (or the live model) on a labeled set: no
  /// augmentation, no fusion, evaluation-mode normalization.
  EvalResult evaluate(const TrainState& state, const LabeledCorpus& test, bool use_ema = true) const {
    return evaluate_model(use_ema ? state.ema.shadow : state.model, test);
  }

  EvalResult evaluate_model(const nn::ModelState& ms, const LabeledCorpus& test) const {
    if (test.size() == 0) throw DataError("evaluate: empty test set");
    const std::size_t c_n = model_.classes();
    EvalResult r;
    r.per_class_error.assign(c_n, 0.0);
    r.per_class_count.assign(c_n, 0);
    std::size_t wrong = 0;
    constexpr std::size_t kChunk = 256;
    for (std::size_t lo = 0; lo < test.size(); lo += kChunk) {
      const std::size_t hi = std::min(test.size(), lo + kChunk);
      const Tensor logits = model_.logits_eval(
          model_.stack(std::span<const Features>(test.x.data() + lo, hi - lo)), ms);
      for (std::size_t k = lo; k < hi; ++k) {
        const std::size_t y = test.y[k];
        if (y >= c_n) throw DataError("evaluate: label out of range");
        const bool miss = argmax(logits.row(k - lo)) != y;
        wrong += miss;
        r.per_class_error[y] += miss;
        ++r.per_class_count[y];
      }
    }
    for (std::size_t c = 0; c < c_n; ++c) {
      if (r.per_class_count[c]) r.per_class_error[c] /= static_cast<double>(r.per_class_count[c]);
    }
    r.error_rate = static_cast<double>(wrong) / static_cast<double>(test.size());
    return r;
  }

 private:
  void advance_adaptive(AdaptiveState& a, std::span<const Prob> q_w) const {
    a = update_fairness_hist(update_sat(a, q_w), q_w);
  }

  void check_finite(const LossBreakdown& l, const PreparedBatch& pb) const {
    if (l.finite()) return;
    std::ostringstream os;
    os.precision(17);
    os << "trainer: non-finite loss at step " << pb.step << " (l_sup=" << l.l_sup
       << ", l_unsup=" << l.l_unsup << ", l_dc=" << l.l_dc << ", l_saf=" << l.l_saf
       << ", total=" << l.total << ", mask_rate=" << l.mask_rate << "; B=" << pb.batch.b
       << ", mu=" << pb.batch.mu << ", Q=" << pb.batch.size() << ", layout=" << to_string(pb.batch.layout)
       << ", labels=[";
    for (std::size_t i = 0; i < pb.labels.size(); ++i) os << (i ? "," : "") << pb.labels[i];
    os << "])";
    throw NumericError(os.str());
  }

  TrainConfig cfg_;
  SampleShape shape_;
  nn::Classifier model_;
  std::optional<FusionPlan> plan_;
};

}  // namespace interlude
