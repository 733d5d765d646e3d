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
#include <span>
#include <string>
#include <vector>

#include "interlude/error.hpp"
#include "interlude/layout.hpp"

namespace interlude {

using Prob = std::vector<double>;

inline constexpr double kLogFloor = 1e-12;

inline double safe_log(double p) { return std::log(std::max(p, kLogFloor)); }

inline std::size_t argmax(std::span<const double> v) {
  return static_cast<std::size_t>(std::max_element(v.begin(), v.end()) - v.begin());
}

/// Model probabilities routed back to (group, member) plus the B labels.
struct GroupedPredictions : Grouped<Prob> {
  std::vector<std::size_t> labels;

  std::size_t classes() const { return p_w.empty() ? 0 : p_w.front().size(); }

  /// Throws if shapes disagree or a vector is off the simplex by more than tol.
  void validate(double tol = 1e-6) const {
    const std::size_t b = groups();
    const std::size_t c = classes();
    if (p_s.size() != b || q_w.size() != b || q_s.size() != b || labels.size() != b) {
      throw BatchAssemblyError("grouped predictions: inconsistent group counts");
    }
    auto check = [&](const Prob& p) {
      if (p.size() != c) throw BatchAssemblyError("grouped predictions: class count mismatch");
      double s = 0.0;
      for (double v : p) {
        if (!(v >= 0.0)) throw NumericError("grouped predictions: negative probability");
        s += v;
      }
      if (std::abs(s - 1.0) > tol) throw NumericError("grouped predictions: row does not sum to 1");
    };
    for (std::size_t i = 0; i < b; ++i) {
      check(p_w[i]);
      check(p_s[i]);
      if (q_w[i].size() != q_w.front().size() || q_s[i].size() != q_w[i].size()) {
        throw BatchAssemblyError("grouped predictions: ragged unlabeled groups");
      }
      for (const auto& q : q_w[i]) check(q);
      for (const auto& q : q_s[i]) check(q);
    }
  }
};

// ---------------------------------------------------------------------------
// Supervised cross-entropy on the weak labeled views.

inline void check_labels(std::span<const Prob> p, std::span<const std::size_t> y) {
  if (p.size() != y.size()) throw BatchAssemblyError("supervised loss: label count mismatch");
  for (std::size_t i = 0; i < y.size(); ++i) {
    if (y[i] >= p[i].size()) {
      throw DataError("supervised loss: label " + std::to_string(y[i]) + " out of range");
    }
  }
}

inline double supervised_loss(std::span<const Prob> p_w, std::span<const std::size_t> y) {
  check_labels(p_w, y);
  if (p_w.empty()) return 0.0;
  double sum = 0.0;
  for (std::size_t i = 0; i < p_w.size(); ++i) sum += -safe_log(p_w[i][y[i]]);
  return sum / static_cast<double>(p_w.size());
}

/// d(supervised_loss)/d(p_w).
inline std::vector<Prob> supervised_loss_grad(std::span<const Prob> p_w,
                                              std::span<const std::size_t> y) {
  check_labels(p_w, y);
  std::vector<Prob> g(p_w.size());
  const double inv_b = 1.0 / static_cast<double>(p_w.size());
  for (std::size_t i = 0; i < p_w.size(); ++i) {
    g[i].assign(p_w[i].size(), 0.0);
    const double p = p_w[i][y[i]];
    if (p > kLogFloor) g[i][y[i]] = -inv_b / p;
  }
  return g;
}

// ---------------------------------------------------------------------------
// Instance-wise (pseudo-label) consistency.

/// Confidence threshold: a scalar compared strictly, or per-class values
/// (indexed by the weak argmax) compared inclusively.
struct ThresholdRule {
  double scalar = 0.95;
  std::vector<double> per_class;

  static ThresholdRule fixed(double tau) { return {tau, {}}; }
  static ThresholdRule adaptive(std::vector<double> class_tau) { return {0.0, std::move(class_tau)}; }

  bool passes(std::span<const double> q_w) const {
    const std::size_t k = argmax(q_w);
    const double conf = q_w[k];
    if (per_class.empty()) return conf > scalar;
    return conf >= per_class.at(k);
  }
};

struct ConsistencyResult {
  double loss = 0.0;
  double mask_rate = 0.0;
  std::vector<char> mask;
};

inline void check_unlabeled_pair(std::span<const Prob> q_w, std::span<const Prob> q_s) {
  if (q_w.size() != q_s.size()) {
    throw BatchAssemblyError("consistency loss: weak/strong counts differ (" +
                             std::to_string(q_w.size()) + " vs " + std::to_string(q_s.size()) + ")");
  }
  for (std::size_t j = 0; j < q_w.size(); ++j) {
    if (q_w[j].size() != q_s[j].size()) {
      throw BatchAssemblyError("consistency loss: class count mismatch");
    }
  }
}

/// (1/N) sum_j 1(confident_j) H(target_j, q_s_j). The target is the hard
/// weak argmax when hard_pseudo, else the weak distribution itself.
inline ConsistencyResult instance_consistency_loss(std::span<const Prob> q_w,
                                                   std::span<const Prob> q_s,
                                                   const ThresholdRule& rule,
                                                   bool hard_pseudo = true) {
  check_unlabeled_pair(q_w, q_s);
  ConsistencyResult r;
  r.mask.assign(q_w.size(), 0);
  if (q_w.empty()) return r;
  double sum = 0.0;
  std::size_t kept = 0;
  for (std::size_t j = 0; j < q_w.size(); ++j) {
    if (!rule.passes(q_w[j])) continue;
    r.mask[j] = 1;
    ++kept;
    if (hard_pseudo) {
      sum += -safe_log(q_s[j][argmax(q_w[j])]);
    } else {
      for (std::size_t c = 0; c < q_w[j].size(); ++c) sum += -q_w[j][c] * safe_log(q_s[j][c]);
    }
  }
  const double n = static_cast<double>(q_w.size());
  r.loss = sum / n;
  r.mask_rate = static_cast<double>(kept) / n;
  return r;
}

inline ConsistencyResult instance_consistency_loss(std::span<const Prob> q_w,
                                                   std::span<const Prob> q_s, double tau,
                                                   bool hard_pseudo = true) {
  return instance_consistency_loss(q_w, q_s, ThresholdRule::fixed(tau), hard_pseudo);
}

/// d/d(q_s) of instance_consistency_loss; the weak side is a fixed target.
inline std::vector<Prob> instance_consistency_grad(std::span<const Prob> q_w,
                                                   std::span<const Prob> q_s,
                                                   std::span<const char> mask,
                                                   bool hard_pseudo = true) {
  check_unlabeled_pair(q_w, q_s);
  std::vector<Prob> g(q_s.size());
  const double inv_n = q_w.empty() ? 0.0 : 1.0 / static_cast<double>(q_w.size());
  for (std::size_t j = 0; j < q_s.size(); ++j) {
    g[j].assign(q_s[j].size(), 0.0);
    if (!mask[j]) continue;
    if (hard_pseudo) {
      const std::size_t k = argmax(q_w[j]);
      if (q_s[j][k] > kLogFloor) g[j][k] = -inv_n / q_s[j][k];
    } else {
      for (std::size_t c = 0; c < q_s[j].size(); ++c) {
        if (q_s[j][c] > kLogFloor) g[j][c] = -inv_n * q_w[j][c] / q_s[j][c];
      }
    }
  }
  return g;
}

// ---------------------------------------------------------------------------
// Cross-instance delta consistency.

struct GroupDeltas {
  std::vector<Prob> labeled;    // p_w - p_s per group
  std::vector<Prob> unlabeled;  // mean over members of q_w - q_s
};

inline GroupDeltas compute_deltas(const Grouped<Prob>& g) {
  const std::size_t b = g.groups();
  const std::size_t mu = g.mu();
  if (mu == 0) throw BatchAssemblyError("delta consistency: mu must be >= 1");
  GroupDeltas d;
  d.labeled.resize(b);
  d.unlabeled.resize(b);
  for (std::size_t i = 0; i < b; ++i) {
    const std::size_t c = g.p_w[i].size();
    d.labeled[i].resize(c);
    d.unlabeled[i].assign(c, 0.0);
    for (std::size_t k = 0; k < c; ++k) d.labeled[i][k] = g.p_w[i][k] - g.p_s[i][k];
    for (std::size_t m = 0; m < mu; ++m) {
      for (std::size_t k = 0; k < c; ++k) d.unlabeled[i][k] += g.q_w[i][m][k] - g.q_s[i][m][k];
    }
    for (auto& v : d.unlabeled[i]) v /= static_cast<double>(mu);
  }
  return d;
}

/// (1/B) sum_i || Delta^L_i - Delta^U_i ||^2.
inline double delta_consistency_loss(const Grouped<Prob>& g) {
  const auto d = compute_deltas(g);
  const std::size_t b = g.groups();
  if (b == 0) return 0.0;
  double sum = 0.0;
  for (std::size_t i = 0; i < b; ++i) {
    for (std::size_t k = 0; k < d.labeled[i].size(); ++k) {
      const double diff = d.labeled[i][k] - d.unlabeled[i][k];
      sum += diff * diff;
    }
  }
  return sum / static_cast<double>(b);
}

/// Gradient of delta_consistency_loss with respect to every probability
/// vector. With stop_grad_labeled the labeled delta is a constant target
/// and p_w/p_s receive zero gradient from this term.
inline Grouped<Prob> delta_consistency_grad(const Grouped<Prob>& g, bool stop_grad_labeled = true) {
  const auto d = compute_deltas(g);
  const std::size_t b = g.groups();
  const std::size_t mu = g.mu();
  auto out = Grouped<Prob>::sized(b, mu);
  const double inv_b = 1.0 / static_cast<double>(b);
  const double inv_mu = 1.0 / static_cast<double>(mu);
  for (std::size_t i = 0; i < b; ++i) {
    const std::size_t c = d.labeled[i].size();
    Prob r(c);
    for (std::size_t k = 0; k < c; ++k) r[k] = 2.0 * inv_b * (d.labeled[i][k] - d.unlabeled[i][k]);
    out.p_w[i].assign(c, 0.0);
    out.p_s[i].assign(c, 0.0);
    if (!stop_grad_labeled) {
      out.p_w[i] = r;
      for (std::size_t k = 0; k < c; ++k) out.p_s[i][k] = -r[k];
    }
    for (std::size_t m = 0; m < mu; ++m) {
      out.q_w[i][m].resize(c);
      out.q_s[i][m].resize(c);
      for (std::size_t k = 0; k < c; ++k) {
        out.q_w[i][m][k] = -r[k] * inv_mu;
        out.q_s[i][m][k] = r[k] * inv_mu;
      }
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Combined objective.

struct LossWeights {
  double lambda_u = 1.0;
  double lambda_dc = 1.0;
  double lambda_saf = 0.0;
};

struct LossParts {
  double sup = 0.0;
  double unsup = 0.0;
  double dc = 0.0;
  double saf = 0.0;
  double mask_rate = 0.0;
};

struct LossBreakdown {
  double l_sup = 0.0;
  double l_unsup = 0.0;
  double l_dc = 0.0;
  double l_saf = 0.0;
  double total = 0.0;
  double mask_rate = 0.0;
  bool plus_mode = false;

  bool finite() const {
    return std::isfinite(l_sup) && std::isfinite(l_unsup) && std::isfinite(l_dc) &&
           std::isfinite(l_saf) && std::isfinite(total);
  }
  friend bool operator==(const LossBreakdown&, const LossBreakdown&) = default;
};

/// L = L^L + lambda_u L^U + lambda_DC L^DC (+ lambda_SAF L^SAF in plus mode).
inline LossBreakdown total_loss(const LossParts& parts, const LossWeights& w, bool plus_mode) {
  if (w.lambda_u < 0.0 || w.lambda_dc < 0.0 || w.lambda_saf < 0.0) {
    throw ConfigError("loss weights must be non-negative");
  }
  LossBreakdown r;
  r.l_sup = parts.sup;
  r.l_unsup = parts.unsup;
  r.l_dc = parts.dc;
  r.l_saf = plus_mode ? parts.saf : 0.0;
  r.mask_rate = parts.mask_rate;
  r.plus_mode = plus_mode;
  r.total = parts.sup + w.lambda_u * parts.unsup + w.lambda_dc * parts.dc;
  if (plus_mode) r.total += w.lambda_saf * parts.saf;
  return r;
}

}  // namespace interlude
