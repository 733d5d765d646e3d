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
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "interlude/error.hpp"
#include "interlude/tensor.hpp"

namespace interlude {

enum class FusionKind { CircularShift, CustomMatrix };

/// The (I + A) embedding-fusion operator over a Q-row embedding batch.
///
/// Circular shift: row i becomes (1 - alpha) z_i + alpha z_{(i+1) mod Q}.
/// The operator is kept implicit for the circular kind; custom plans carry
/// a dense Q x Q matrix.
class FusionPlan {
 public:
  static FusionPlan circular_shift(std::size_t q, double alpha) {
    if (q < 2) throw ConfigError("fusion: Q must be >= 2, got " + std::to_string(q));
    if (!(alpha > 0.0 && alpha < 0.5)) {
      throw ConfigError("fusion: alpha must lie in (0, 0.5), got " + std::to_string(alpha));
    }
    return unchecked_circular_shift(q, alpha);
  }

  /// Skips the alpha domain check; alpha = 0 gives the identity.
  static FusionPlan unchecked_circular_shift(std::size_t q, double alpha) {
    FusionPlan p;
    p.size_ = q;
    p.alpha_ = alpha;
    p.kind_ = FusionKind::CircularShift;
    return p;
  }

  /// Row-major Q x Q matrix for I + A.
  static FusionPlan custom(std::size_t q, std::vector<double> matrix) {
    if (q == 0 || matrix.size() != q * q) {
      throw ConfigError("fusion: custom matrix must be Q x Q");
    }
    FusionPlan p;
    p.size_ = q;
    p.alpha_ = std::numeric_limits<double>::quiet_NaN();
    p.kind_ = FusionKind::CustomMatrix;
    p.matrix_ = std::move(matrix);
    return p;
  }

  std::size_t size() const { return size_; }
  double alpha() const { return alpha_; }
  FusionKind kind() const { return kind_; }

  /// Materialized I + A, row-major.
  std::vector<double> dense() const {
    if (kind_ == FusionKind::CustomMatrix) return *matrix_;
    std::vector<double> m(size_ * size_, 0.0);
    for (std::size_t i = 0; i < size_; ++i) {
      m[i * size_ + i] += 1.0 - alpha_;
      m[i * size_ + (i + 1) % size_] += alpha_;
    }
    return m;
  }

 private:
  FusionPlan() = default;

  std::size_t size_ = 0;
  double alpha_ = 0.0;
  FusionKind kind_ = FusionKind::CircularShift;
  std::optional<std::vector<double>> matrix_;
};

inline FusionPlan build_circular_shift(std::size_t q, double alpha) {
  return FusionPlan::circular_shift(q, alpha);
}

struct ValidationReport {
  bool full_rank = false;
  bool diagonally_dominant = false;
  bool rows_unit_l1 = false;
  double min_singular_value = 0.0;
  /// min over rows of (diagonal - largest off-diagonal entry).
  double dominance_margin = 0.0;
  /// max over rows of | ||row||_1 - 1 |.
  double max_l1_deviation = 0.0;

  bool ok() const { return full_rank && diagonally_dominant && rows_unit_l1; }
};

/// Checks the three structural requirements on I + A: full rank, strict
/// diagonal dominance over each row's other entries, and unit L1 rows.
inline ValidationReport validate_desiderata(const FusionPlan& plan,
                                            double rank_tol = 1e-9, double l1_tol = 1e-9) {
  const std::size_t q = plan.size();
  const auto m = plan.dense();
  Eigen::MatrixXd mat(q, q);
  for (std::size_t i = 0; i < q; ++i) {
    for (std::size_t j = 0; j < q; ++j) mat(i, j) = m[i * q + j];
  }

  ValidationReport r;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(mat);
  r.min_singular_value = svd.singularValues().minCoeff();
  r.full_rank = r.min_singular_value > rank_tol;

  r.dominance_margin = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < q; ++i) {
    double off = -std::numeric_limits<double>::infinity();
    double l1 = 0.0;
    for (std::size_t j = 0; j < q; ++j) {
      l1 += std::abs(mat(i, j));
      if (j != i) off = std::max(off, mat(i, j));
    }
    if (q > 1) r.dominance_margin = std::min(r.dominance_margin, mat(i, i) - off);
    r.max_l1_deviation = std::max(r.max_l1_deviation, std::abs(l1 - 1.0));
  }
  r.diagonally_dominant = r.dominance_margin > 0.0;
  r.rows_unit_l1 = r.max_l1_deviation <= l1_tol;
  return r;
}

namespace detail {

inline void check_fusion_shape(const Tensor& z, const FusionPlan& plan) {
  if (z.rank() < 1 || z.dim(0) != plan.size()) {
    throw BatchAssemblyError("fusion: plan size " + std::to_string(plan.size()) +
                             " does not match embedding rows " + z.shape_string());
  }
}

inline Tensor dense_apply(const std::vector<double>& m, std::size_t q, const Tensor& z,
                          bool transpose) {
  Tensor out(z.shape);
  const std::size_t d = z.row_size();
  for (std::size_t i = 0; i < q; ++i) {
    auto o = out.row(i);
    for (std::size_t k = 0; k < q; ++k) {
      const double w = transpose ? m[k * q + i] : m[i * q + k];
      if (w == 0.0) continue;
      auto zk = z.row(k);
      for (std::size_t c = 0; c < d; ++c) o[c] += w * zk[c];
    }
  }
  return out;
}

}  // namespace detail

/// Z' = (I + A) Z over the leading axis of Z.
inline Tensor apply_fusion(const Tensor& z, const FusionPlan& plan) {
  detail::check_fusion_shape(z, plan);
  if (plan.kind() == FusionKind::CustomMatrix) {
    return detail::dense_apply(plan.dense(), plan.size(), z, false);
  }
  const std::size_t q = plan.size();
  const std::size_t d = z.row_size();
  const double keep = 1.0 - plan.alpha();
  const double mix = plan.alpha();
  Tensor out(z.shape);
  for (std::size_t i = 0; i < q; ++i) {
    auto zi = z.row(i);
    auto zn = z.row((i + 1) % q);
    auto o = out.row(i);
    for (std::size_t c = 0; c < d; ++c) o[c] = keep * zi[c] + mix * zn[c];
  }
  return out;
}

/// Gradient of apply_fusion: dZ = (I + A)^T dZ'.
inline Tensor apply_fusion_backward(const Tensor& dz_fused, const FusionPlan& plan) {
  detail::check_fusion_shape(dz_fused, plan);
  if (plan.kind() == FusionKind::CustomMatrix) {
    return detail::dense_apply(plan.dense(), plan.size(), dz_fused, true);
  }
  const std::size_t q = plan.size();
  const std::size_t d = dz_fused.row_size();
  const double keep = 1.0 - plan.alpha();
  const double mix = plan.alpha();
  Tensor out(dz_fused.shape);
  for (std::size_t i = 0; i < q; ++i) {
    auto gi = dz_fused.row(i);
    auto gp = dz_fused.row((i + q - 1) % q);
    auto o = out.row(i);
    for (std::size_t c = 0; c < d; ++c) o[c] = keep * gi[c] + mix * gp[c];
  }
  return out;
}

}  // namespace interlude
