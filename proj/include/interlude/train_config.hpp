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
#include <cstdint>
#include <string>

#include "interlude/augment.hpp"
#include "interlude/error.hpp"
#include "interlude/layout.hpp"
#include "interlude/nn/model.hpp"
#include "interlude/nn/optim.hpp"
#include "interlude/objective.hpp"

namespace interlude {

/// Every hyperparameter of one training run.
struct TrainConfig {
  std::size_t batch_size = 64;  // B, labeled samples per step
  std::size_t mu = 7;           // unlabeled samples per labeled sample
  std::uint64_t steps = 1ULL << 20;
  double lr = 0.03;
  nn::OptimizerConfig optimizer;
  double ema_decay = 0.999;

  bool fusion_enabled = true;
  double alpha = 0.1;
  LayoutKind layout = LayoutKind::HighI3;

  double lambda_u = 1.0;
  double lambda_dc = 1.0;
  double lambda_saf = 0.05;
  double tau = 0.95;
  bool hard_pseudo = true;
  bool stop_grad_labeled_delta = true;

  bool plus_mode = false;
  double plus_ema_momentum = 0.999;
  /// Advance SAT/SAF statistics before computing the step's loss.
  bool sat_update_before_loss = true;

  std::uint64_t seed = 0;
  nn::ModelSpec model;
  AugmentConfig augment;

  /// 0 disables periodic evaluation / checkpointing.
  std::uint64_t eval_every = 0;
  std::uint64_t checkpoint_every = 1024;

  ObjectiveConfig objective() const {
    ObjectiveConfig o;
    o.weights = {lambda_u, lambda_dc, lambda_saf};
    o.tau = tau;
    o.hard_pseudo = hard_pseudo;
    o.stop_grad_labeled_delta = stop_grad_labeled_delta;
    o.plus_mode = plus_mode;
    return o;
  }

  void validate() const {
    auto fail = [](const std::string& m) { throw ConfigError("config: " + m); };
    if (batch_size < 1) fail("train.batch_size must be >= 1");
    if (mu < 1) fail("train.mu must be >= 1");
    if (steps < 1) fail("train.steps must be > 0");
    if (!(lr > 0.0)) fail("train.lr must be > 0");
    if (!(ema_decay > 0.0 && ema_decay < 1.0)) fail("train.ema_decay must lie in (0, 1)");
    if (!(optimizer.momentum >= 0.0 && optimizer.momentum < 1.0)) fail("train.momentum must lie in [0, 1)");
    if (!(optimizer.weight_decay >= 0.0)) fail("train.weight_decay must be >= 0");
    if (!(alpha > 0.0 && alpha < 0.5)) fail("fusion.alpha must lie in (0, 0.5)");
    if (!(lambda_u >= 0.0)) fail("loss.lambda_u must be >= 0");
    if (!(lambda_dc >= 0.0)) fail("loss.lambda_dc must be >= 0");
    if (!(lambda_saf >= 0.0)) fail("loss.lambda_saf must be >= 0");
    if (!(tau > 0.0 && tau <= 1.0)) fail("loss.tau must lie in (0, 1]");
    if (!(plus_ema_momentum >= 0.0 && plus_ema_momentum < 1.0)) fail("plus.ema_momentum must lie in [0, 1)");
    if (layout == LayoutKind::HighI1 && batch_size % (2 * (mu + 1)) != 0) {
      fail("layout high_i1 needs train.batch_size divisible by 2(mu+1)");
    }
    if (augment.pad < 0) fail("augment.pad must be >= 0");
    if (!(augment.flip_prob >= 0.0 && augment.flip_prob <= 1.0)) fail("augment.flip_prob must lie in [0, 1]");
    if (!(augment.magnitude >= 0.0 && augment.magnitude <= 10.0)) fail("augment.magnitude must lie in [0, 10]");
    if (!(augment.cutout >= 0.0 && augment.cutout <= 1.0)) fail("augment.cutout must lie in [0, 1]");
    if (!(augment.jitter >= 0.0)) fail("augment.jitter must be >= 0");
    if (!(augment.strong_jitter_scale >= 0.0)) fail("augment.strong_jitter_scale must be >= 0");
  }
};

/// Where the training data comes from.
struct DataConfig {
  /// two-moons, two-gaussians, cifar10 (binary batches under path) or csv.
  std::string source = "two-moons";
  std::string path;
  std::size_t n_labels = 4;
  std::size_t n_unlabeled = 2000;
  std::size_t n_test = 1000;
  double noise = 0.1;
  std::uint64_t seed = 0;
  bool unlabeled_includes_labeled = false;
  /// Use every training item as labeled (fully-supervised reference).
  bool fully_labeled = false;
  /// Held out of the labeled pool for best-model selection; 0 disables.
  std::size_t n_validation = 0;
};

struct ResolvedConfig {
  std::string preset;
  TrainConfig train;
  DataConfig data;
};

}  // namespace interlude
