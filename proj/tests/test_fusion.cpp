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
#include <gtest/gtest.h>

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <vector>

#include "interlude/fusion.hpp"
#include "interlude/layout.hpp"
#include "interlude/random.hpp"

using namespace interlude;

namespace {

Tensor random_z(std::size_t q, std::size_t d, Rng& rng) {
  Tensor z({q, d});
  for (auto& v : z.data) v = rng.uniform(-2.0, 2.0);
  return z;
}

Eigen::MatrixXd as_eigen(const FusionPlan& p) {
  const auto m = p.dense();
  const auto q = static_cast<Eigen::Index>(p.size());
  Eigen::MatrixXd out(q, q);
  for (Eigen::Index i = 0; i < q; ++i) {
    for (Eigen::Index j = 0; j < q; ++j) out(i, j) = m[static_cast<std::size_t>(i * q + j)];
  }
  return out;
}

double laplace_det(const std::vector<std::vector<double>>& m) {
  const std::size_t n = m.size();
  if (n == 1) return m[0][0];
  double det = 0.0;
  for (std::size_t c = 0; c < n; ++c) {
    if (m[0][c] == 0.0) continue;
    std::vector<std::vector<double>> minor;
    for (std::size_t r = 1; r < n; ++r) {
      std::vector<double> row;
      for (std::size_t k = 0; k < n; ++k) {
        if (k != c) row.push_back(m[r][k]);
      }
      minor.push_back(row);
    }
    det += (c % 2 ? -1.0 : 1.0) * m[0][c] * laplace_det(minor);
  }
  return det;
}

}  // namespace

TEST(Fusion, CircularShiftEntriesQ4) {
  const auto m = build_circular_shift(4, 0.1).dense();
  const std::vector<double> want = {0.9, 0.1, 0, 0, 0, 0.9, 0.1, 0, 0, 0, 0.9, 0.1, 0.1, 0, 0, 0.9};
  ASSERT_EQ(m.size(), want.size());
  for (std::size_t k = 0; k < m.size(); ++k) EXPECT_NEAR(m[k], want[k], 1e-15);
}

TEST(Fusion, DeterminantQ4) {
  const auto m = build_circular_shift(4, 0.1).dense();
  std::vector<std::vector<double>> rows(4, std::vector<double>(4));
  for (std::size_t i = 0; i < 4; ++i) {
    for (std::size_t j = 0; j < 4; ++j) rows[i][j] = m[i * 4 + j];
  }
  EXPECT_NEAR(laplace_det(rows), 0.6560, 1e-12);
}

TEST(Fusion, ZeroAlphaIsIdentity) {
  const auto p = FusionPlan::unchecked_circular_shift(5, 0.0);
  Rng rng(1);
  const auto z = random_z(5, 3, rng);
  EXPECT_EQ(apply_fusion(z, p).data, z.data);
  const auto m = p.dense();
  for (std::size_t i = 0; i < 5; ++i) {
    for (std::size_t j = 0; j < 5; ++j) EXPECT_EQ(m[i * 5 + j], i == j ? 1.0 : 0.0);
  }
}

TEST(Fusion, DomainErrors) {
  EXPECT_THROW(build_circular_shift(1, 0.1), ConfigError);
  EXPECT_THROW(build_circular_shift(4, 0.0), ConfigError);
  EXPECT_THROW(build_circular_shift(4, 0.5), ConfigError);
  EXPECT_THROW(build_circular_shift(4, -0.1), ConfigError);
  EXPECT_NO_THROW(build_circular_shift(2, 0.49));
}

TEST(Fusion, ValidationPassesForCircularShift) {
  const auto r = validate_desiderata(build_circular_shift(8, 0.2));
  EXPECT_TRUE(r.full_rank);
  EXPECT_TRUE(r.diagonally_dominant);
  EXPECT_TRUE(r.rows_unit_l1);
  EXPECT_GE(r.min_singular_value, 1.0 - 2 * 0.2 - 1e-9);
  EXPECT_NEAR(r.dominance_margin, 0.6, 1e-15);
}

TEST(Fusion, ValidationZeroRow) {
  std::vector<double> m = {1, 0, 0, 0, 0, 0, 0, 0, 1};
  const auto r = validate_desiderata(FusionPlan::custom(3, m));
  EXPECT_FALSE(r.full_rank);
  EXPECT_FALSE(r.rows_unit_l1);
}

TEST(Fusion, ValidationUniformRowsNotDominant) {
  const std::size_t q = 4;
  const auto r = validate_desiderata(FusionPlan::custom(q, std::vector<double>(q * q, 0.25)));
  EXPECT_FALSE(r.diagonally_dominant);
  EXPECT_TRUE(r.rows_unit_l1);
  EXPECT_FALSE(r.full_rank);
}

TEST(Fusion, TwoByTwoHandMultiplied) {
  const Tensor z({2, 2}, std::vector<double>{1, 0, 0, 1});
  const auto out = apply_fusion(z, build_circular_shift(2, 0.1));
  EXPECT_NEAR(out.at(0, 0), 0.9, 1e-15);
  EXPECT_NEAR(out.at(0, 1), 0.1, 1e-15);
  EXPECT_NEAR(out.at(1, 0), 0.1, 1e-15);
  EXPECT_NEAR(out.at(1, 1), 0.9, 1e-15);
}

TEST(Fusion, IdenticalRowsUnchanged) {
  Tensor z({6, 3});
  for (std::size_t i = 0; i < 6; ++i) {
    z.at(i, 0) = 0.25;
    z.at(i, 1) = -1.5;
    z.at(i, 2) = 3.0;
  }
  const auto out = apply_fusion(z, build_circular_shift(6, 0.3));
  for (std::size_t k = 0; k < z.size(); ++k) EXPECT_NEAR(out.data[k], z.data[k], 1e-15);
}

TEST(Fusion, MatchesDenseMultiply) {
  Rng rng(7);
  for (std::size_t q : {2u, 3u, 8u, 33u}) {
    for (double a : {0.05, 0.25, 0.45}) {
      const auto plan = build_circular_shift(q, a);
      const auto z = random_z(q, 5, rng);
      const auto got = apply_fusion(z, plan);
      Eigen::MatrixXd ez(q, 5);
      for (std::size_t i = 0; i < q; ++i) {
        for (std::size_t c = 0; c < 5; ++c) ez(i, c) = z.at(i, c);
      }
      const Eigen::MatrixXd want = as_eigen(plan) * ez;
      for (std::size_t i = 0; i < q; ++i) {
        for (std::size_t c = 0; c < 5; ++c) EXPECT_NEAR(got.at(i, c), want(i, c), 1e-13);
      }
    }
  }
}

TEST(Fusion, ConvexCombinationBounds) {
  Rng rng(3);
  const auto z = random_z(16, 4, rng);
  const auto out = apply_fusion(z, build_circular_shift(16, 0.35));
  for (std::size_t i = 0; i < 16; ++i) {
    for (std::size_t c = 0; c < 4; ++c) {
      const double a = z.at(i, c), b = z.at((i + 1) % 16, c);
      EXPECT_GE(out.at(i, c), std::min(a, b) - 1e-15);
      EXPECT_LE(out.at(i, c), std::max(a, b) + 1e-15);
    }
  }
}

TEST(Fusion, Linearity) {
  Rng rng(11);
  const auto plan = build_circular_shift(12, 0.2);
  const auto z1 = random_z(12, 3, rng), z2 = random_z(12, 3, rng);
  Tensor mix(z1.shape);
  for (std::size_t k = 0; k < mix.size(); ++k) mix.data[k] = 1.7 * z1.data[k] - 0.4 * z2.data[k];
  const auto lhs = apply_fusion(mix, plan);
  const auto f1 = apply_fusion(z1, plan), f2 = apply_fusion(z2, plan);
  for (std::size_t k = 0; k < lhs.size(); ++k) {
    EXPECT_NEAR(lhs.data[k], 1.7 * f1.data[k] - 0.4 * f2.data[k], 1e-12);
  }
}

TEST(Fusion, Invertibility) {
  Rng rng(5);
  for (std::size_t q : {2u, 7u, 16u, 64u}) {
    for (double a : {0.1, 0.3, 0.4}) {
      const auto plan = build_circular_shift(q, a);
      const auto z = random_z(q, 3, rng);
      const auto zf = apply_fusion(z, plan);
      Eigen::MatrixXd rhs(q, 3);
      for (std::size_t i = 0; i < q; ++i) {
        for (std::size_t c = 0; c < 3; ++c) rhs(i, c) = zf.at(i, c);
      }
      const Eigen::MatrixXd x = as_eigen(plan).partialPivLu().solve(rhs);
      for (std::size_t i = 0; i < q; ++i) {
        for (std::size_t c = 0; c < 3; ++c) EXPECT_NEAR(x(i, c), z.at(i, c), 1e-8);
      }
    }
  }
}

TEST(Fusion, SpectrumMatchesRootsOfUnity) {
  for (std::size_t q : {2u, 5u, 16u}) {
    const double a = 0.3;
    Eigen::EigenSolver<Eigen::MatrixXd> es(as_eigen(build_circular_shift(q, a)));
    std::vector<std::complex<double>> got(es.eigenvalues().data(), es.eigenvalues().data() + q);
    for (std::size_t k = 0; k < q; ++k) {
      const auto want = (1.0 - a) + a * std::polar(1.0, 2.0 * std::numbers::pi * k / q);
      const auto best = std::min_element(got.begin(), got.end(), [&](auto x, auto y) {
        return std::abs(x - want) < std::abs(y - want);
      });
      EXPECT_LT(std::abs(*best - want), 1e-8);
      got.erase(best);
    }
  }
}

TEST(Fusion, BackwardIsTransposeForBothKinds) {
  Rng rng(9);
  const std::size_t q = 9;
  const auto circ = build_circular_shift(q, 0.15);
  const auto dense = FusionPlan::custom(q, circ.dense());
  const auto z = random_z(q, 4, rng), g = random_z(q, 4, rng);
  auto dot = [](const Tensor& a, const Tensor& b) {
    double s = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) s += a.data[k] * b.data[k];
    return s;
  };
  for (const auto* p : {&circ, &dense}) {
    EXPECT_NEAR(dot(apply_fusion(z, *p), g), dot(z, apply_fusion_backward(g, *p)), 1e-12);
  }
  const auto a = apply_fusion_backward(g, circ), b = apply_fusion_backward(g, dense);
  for (std::size_t k = 0; k < a.size(); ++k) EXPECT_NEAR(a.data[k], b.data[k], 1e-14);
}

TEST(Fusion, ShapeMismatchThrows) {
  EXPECT_THROW(apply_fusion(Tensor({3, 2}), build_circular_shift(4, 0.1)), BatchAssemblyError);
}

TEST(Fusion, HighI3LabeledSlotsMixUnlabeled) {
  for (std::size_t b = 1; b <= 4; ++b) {
    for (std::size_t mu = 1; mu <= 4; ++mu) {
      const auto tags = layout_tags(b, mu, LayoutKind::HighI3);
      const std::size_t q = tags.size();
      // Unit embedding per unlabeled slot, zero for labeled: any labeled row
      // picking up mass after fusion has mixed in an unlabeled neighbour.
      Tensor z({q, 1});
      for (std::size_t p = 0; p < q; ++p) z.at(p, 0) = tags[p].role == Role::Unlabeled ? 1.0 : 0.0;
      const auto out = apply_fusion(z, build_circular_shift(q, 0.1));
      for (std::size_t p = 0; p < q; ++p) {
        if (tags[p].role == Role::Labeled) {
          EXPECT_NEAR(out.at(p, 0), 0.1, 1e-15);
        }
      }
    }
  }
}
