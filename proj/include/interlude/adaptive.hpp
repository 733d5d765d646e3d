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
#include <span>
#include <string>
#include <vector>

#include "interlude/error.hpp"
#include "interlude/losses.hpp"

namespace interlude {

inline constexpr double kHistogramFloor = 1e-6;

/// Running statistics for self-adaptive thresholding and fairness.
///
///   tau_global  EMA of the batch-mean weak confidence
///   p_tilde     EMA of the batch-mean weak class distribution
///   h_tilde     EMA of the histogram of hard weak predictions
///
/// All three start at 1/C.
struct AdaptiveState {
  std::size_t classes = 0;
  double momentum = 0.999;
  std::uint64_t step = 0;
  double tau_global = 0.0;
  Prob p_tilde;
  Prob h_tilde;

  static AdaptiveState initial(std::size_t classes, double momentum = 0.999) {
    if (classes == 0) throw ConfigError("adaptive state: class count must be positive");
    if (!(momentum >= 0.0 && momentum < 1.0)) {
      throw ConfigError("adaptive state: momentum must lie in [0, 1), got " +
                        std::to_string(momentum));
    }
    AdaptiveState s;
    s.classes = classes;
    s.momentum = momentum;
    const double u = 1.0 / static_cast<double>(classes);
    s.tau_global = u;
    s.p_tilde.assign(classes, u);
    s.h_tilde.assign(classes, u);
    return s;
  }

  friend bool operator==(const AdaptiveState&, const AdaptiveState&) = default;
};

namespace detail {

inline void check_adaptive_batch(const AdaptiveState& s, std::span<const Prob> q_w) {
  if (q_w.empty()) throw BatchAssemblyError("adaptive update: empty batch");
  for (const auto& q : q_w) {
    if (q.size() != s.classes) throw BatchAssemblyError("adaptive update: class count mismatch");
  }
}

inline Prob normalized_hard_histogram(std::span<const Prob> probs, std::size_t classes,
                                      std::span<const char> keep = {}) {
  Prob h(classes, 0.0);
  std::size_t n = 0;
  for (std::size_t j = 0; j < probs.size(); ++j) {
    if (!keep.empty() && !keep[j]) continue;
    h[argmax(probs[j])] += 1.0;
    ++n;
  }
  if (n > 0) {
    for (auto& v : h) v /= static_cast<double>(n);
  }
  return h;
}

inline Prob sum_norm(const Prob& v) {
  double s = 0.0;
  for (double x : v) s += x;
  Prob out(v.size());
  for (std::size_t c = 0; c < v.size(); ++c) out[c] = v[c] / s;
  return out;
}

}  // namespace detail

/// Advances the global threshold and the per-class estimates by one step.
inline AdaptiveState update_sat(const AdaptiveState& state, std::span<const Prob> q_w) {
  detail::check_adaptive_batch(state, q_w);
  const double lam = state.momentum;
  const double n = static_cast<double>(q_w.size());
  double mean_conf = 0.0;
  Prob mean_q(state.classes, 0.0);
  for (const auto& q : q_w) {
    mean_conf += *std::max_element(q.begin(), q.end());
    for (std::size_t c = 0; c < state.classes; ++c) mean_q[c] += q[c];
  }
  mean_conf /= n;
  for (auto& v : mean_q) v /= n;

  AdaptiveState next = state;
  next.tau_global = lam * state.tau_global + (1.0 - lam) * mean_conf;
  for (std::size_t c = 0; c < state.classes; ++c) {
    next.p_tilde[c] = lam * state.p_tilde[c] + (1.0 - lam) * mean_q[c];
  }
  ++next.step;
  return next;
}

/// tau_t(c) = p_tilde(c) / max_c' p_tilde(c') * tau_t.
inline std::vector<double> class_thresholds(const AdaptiveState& state) {
  const double mx = *std::max_element(state.p_tilde.begin(), state.p_tilde.end());
  if (!(mx > 0.0)) throw NumericError("class thresholds: class estimates are all zero");
  std::vector<double> t(state.classes);
  for (std::size_t c = 0; c < state.classes; ++c) {
    t[c] = state.p_tilde[c] / mx * state.tau_global;
  }
  return t;
}

/// Advances the EMA histogram of hard weak predictions.
inline AdaptiveState update_fairness_hist(const AdaptiveState& state, std::span<const Prob> q_w) {
  detail::check_adaptive_batch(state, q_w);
  const auto hist = detail::normalized_hard_histogram(q_w, state.classes);
  const double lam = state.momentum;
  AdaptiveState next = state;
  for (std::size_t c = 0; c < state.classes; ++c) {
    next.h_tilde[c] = lam * state.h_tilde[c] + (1.0 - lam) * hist[c];
  }
  return next;
}

struct SafResult {
  double loss = 0.0;
  std::size_t confident = 0;
  /// SumNorm(p_tilde / h_tilde) and SumNorm(p_bar / h_bar); empty when no
  /// sample was confident.
  Prob target;
  Prob batch;
  std::vector<char> mask;
};

/// Fairness term sum_c a(c) log b(c), i.e. the negated cross-entropy between
/// a = SumNorm(p_tilde/h_tilde) and b = SumNorm(p_bar/h_bar), where p_bar and
/// h_bar are taken over the strong predictions of confident samples.
/// Histogram entries are floored at 1e-6 before division. Returns 0 when no
/// sample clears its class threshold.
inline SafResult saf_loss(const AdaptiveState& state, std::span<const Prob> q_w,
                          std::span<const Prob> q_s) {
  check_unlabeled_pair(q_w, q_s);
  SafResult r;
  r.mask.assign(q_w.size(), 0);
  const auto rule = ThresholdRule::adaptive(class_thresholds(state));
  for (std::size_t j = 0; j < q_w.size(); ++j) {
    if (rule.passes(q_w[j])) {
      r.mask[j] = 1;
      ++r.confident;
    }
  }
  if (r.confident == 0) return r;

  const std::size_t c_n = state.classes;
  Prob p_bar(c_n, 0.0);
  for (std::size_t j = 0; j < q_s.size(); ++j) {
    if (!r.mask[j]) continue;
    for (std::size_t c = 0; c < c_n; ++c) p_bar[c] += q_s[j][c];
  }
  for (auto& v : p_bar) v /= static_cast<double>(r.confident);
  const auto h_bar = detail::normalized_hard_histogram(q_s, c_n, r.mask);

  Prob ratio_t(c_n), ratio_b(c_n);
  for (std::size_t c = 0; c < c_n; ++c) {
    ratio_t[c] = state.p_tilde[c] / std::max(state.h_tilde[c], kHistogramFloor);
    ratio_b[c] = p_bar[c] / std::max(h_bar[c], kHistogramFloor);
  }
  r.target = detail::sum_norm(ratio_t);
  r.batch = detail::sum_norm(ratio_b);
  for (std::size_t c = 0; c < c_n; ++c) r.loss += r.target[c] * safe_log(r.batch[c]);
  return r;
}

/// d(saf_loss)/d(q_s). Only the confident strong predictions carry gradient,
/// through p_bar; histograms and running state are constants.
inline std::vector<Prob> saf_loss_grad(const AdaptiveState& state, std::span<const Prob> q_s,
                                       const SafResult& saf) {
  std::vector<Prob> g(q_s.size(), Prob(state.classes, 0.0));
  if (saf.confident == 0) return g;
  const std::size_t c_n = state.classes;

  Prob p_bar(c_n, 0.0);
  for (std::size_t j = 0; j < q_s.size(); ++j) {
    if (!saf.mask[j]) continue;
    for (std::size_t c = 0; c < c_n; ++c) p_bar[c] += q_s[j][c];
  }
  for (auto& v : p_bar) v /= static_cast<double>(saf.confident);
  const auto h_bar = detail::normalized_hard_histogram(q_s, c_n, saf.mask);

  Prob hf(c_n), ratio(c_n);
  double total = 0.0;
  for (std::size_t c = 0; c < c_n; ++c) {
    hf[c] = std::max(h_bar[c], kHistogramFloor);
    ratio[c] = p_bar[c] / hf[c];
    total += ratio[c];
  }
  // L = sum_{c live} a_c (log r_c - log S) + const over clamped classes.
  double live_mass = 0.0;
  std::vector<char> live(c_n, 0);
  for (std::size_t c = 0; c < c_n; ++c) {
    live[c] = saf.batch[c] > kLogFloor;
    if (live[c]) live_mass += saf.target[c];
  }
  Prob d_pbar(c_n);
  for (std::size_t c = 0; c < c_n; ++c) {
    const double d_ratio = (live[c] ? saf.target[c] / ratio[c] : 0.0) - live_mass / total;
    d_pbar[c] = d_ratio / hf[c];
  }
  const double inv_n = 1.0 / static_cast<double>(saf.confident);
  for (std::size_t j = 0; j < q_s.size(); ++j) {
    if (!saf.mask[j]) continue;
    for (std::size_t c = 0; c < c_n; ++c) g[j][c] = d_pbar[c] * inv_n;
  }
  return g;
}

}  // namespace interlude
