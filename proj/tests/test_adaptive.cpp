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

#include <algorithm>
#include <cmath>
#include <vector>

#include "interlude/adaptive.hpp"
#include "oracles.hpp"

using namespace interlude;

TEST(Sat, SingleStepExample) {
  auto s = AdaptiveState::initial(2, 0.9);
  std::vector<Prob> q = {{0.8, 0.2}};
  auto n = update_sat(s, q);
  EXPECT_NEAR(n.tau_global, 0.9 * 0.5 + 0.1 * 0.8, 1e-15);
  EXPECT_NEAR(n.tau_global, 0.53, 1e-12);
  EXPECT_NEAR(n.p_tilde[0], 0.9 * 0.5 + 0.1 * 0.8, 1e-15);
  EXPECT_EQ(n.step, 1u);
  EXPECT_EQ(s.step, 0u);
}

TEST(Sat, ClassThresholdsExample) {
  auto s = AdaptiveState::initial(2);
  s.p_tilde = {0.6, 0.3};
  s.tau_global = 0.8;
  auto t = class_thresholds(s);
  EXPECT_DOUBLE_EQ(t[0], 0.8);
  EXPECT_DOUBLE_EQ(t[1], 0.4);
}

TEST(Sat, InitialStateIsUniform) {
  auto s = AdaptiveState::initial(4);
  EXPECT_DOUBLE_EQ(s.tau_global, 0.25);
  for (double v : s.p_tilde) EXPECT_DOUBLE_EQ(v, 0.25);
  for (double v : s.h_tilde) EXPECT_DOUBLE_EQ(v, 0.25);
  EXPECT_THROW(AdaptiveState::initial(0), ConfigError);
  EXPECT_THROW(AdaptiveState::initial(2, 1.0), ConfigError);
}

TEST(Sat, RejectsBadBatches) {
  auto s = AdaptiveState::initial(3);
  EXPECT_THROW(update_sat(s, std::vector<Prob>{}), BatchAssemblyError);
  EXPECT_THROW(update_sat(s, std::vector<Prob>{{0.5, 0.5}}), BatchAssemblyError);
  EXPECT_THROW(update_fairness_hist(s, std::vector<Prob>{}), BatchAssemblyError);
}

TEST(Fairness, HistogramExamples) {
  auto s = AdaptiveState::initial(2, 0.5);
  std::vector<Prob> q = {{0.9, 0.1}, {0.6, 0.4}, {0.3, 0.7}, {0.1, 0.9}};
  auto n = update_fairness_hist(s, q);
  EXPECT_DOUBLE_EQ(n.h_tilde[0], 0.5);
  EXPECT_DOUBLE_EQ(n.h_tilde[1], 0.5);
  std::vector<Prob> all0 = {{0.9, 0.1}, {0.6, 0.4}};
  n = update_fairness_hist(s, all0);
  EXPECT_DOUBLE_EQ(n.h_tilde[0], 0.75);
  EXPECT_DOUBLE_EQ(n.h_tilde[1], 0.25);
}

TEST(Sat, PermutationInvariantWithinBatch) {
  interlude::Rng rng(3);
  std::vector<Prob> q;
  for (int j = 0; j < 9; ++j) q.push_back(oracle::random_simplex(4, rng, 2.0));
  auto a = update_fairness_hist(update_sat(AdaptiveState::initial(4), q), q);
  std::reverse(q.begin(), q.end());
  auto b = update_fairness_hist(update_sat(AdaptiveState::initial(4), q), q);
  EXPECT_NEAR(a.tau_global, b.tau_global, 1e-15);
  for (int c = 0; c < 4; ++c) {
    EXPECT_NEAR(a.p_tilde[c], b.p_tilde[c], 1e-15);
    EXPECT_EQ(a.h_tilde[c], b.h_tilde[c]);
  }
}

TEST(Sat, EmaReplayMatchesClosedForm) {
  const std::size_t C = 3, T = 500;
  const double lam = 0.97;
  interlude::Rng rng(11);
  std::vector<std::vector<Prob>> stream;
  for (std::size_t t = 0; t < T; ++t) {
    std::vector<Prob> b;
    for (int j = 0; j < 6; ++j) b.push_back(oracle::random_simplex(C, rng, 1.0 + 0.01 * t));
    stream.push_back(b);
  }
  std::vector<double> conf(T);
  std::vector<oracle::Vec> mean(T, oracle::Vec(C, 0.0)), hist(T, oracle::Vec(C, 0.0));
  for (std::size_t t = 0; t < T; ++t) {
    for (const auto& q : stream[t]) {
      conf[t] += q[oracle::amax(q)];
      for (std::size_t c = 0; c < C; ++c) mean[t][c] += q[c] / 6.0;
      hist[t][oracle::amax(q)] += 1.0 / 6.0;
    }
    conf[t] /= 6.0;
  }
  auto s = AdaptiveState::initial(C, lam);
  for (std::size_t t = 0; t < T; ++t) {
    s = update_fairness_hist(update_sat(s, stream[t]), stream[t]);
    const std::size_t n = t + 1;
    double tau = std::pow(lam, n) / C;
    oracle::Vec p(C, std::pow(lam, n) / C), h(C, std::pow(lam, n) / C);
    for (std::size_t k = 0; k < n; ++k) {
      const double w = (1 - lam) * std::pow(lam, n - 1 - k);
      tau += w * conf[k];
      for (std::size_t c = 0; c < C; ++c) {
        p[c] += w * mean[k][c];
        h[c] += w * hist[k][c];
      }
    }
    ASSERT_NEAR(s.tau_global, tau, 1e-10) << "step " << n;
    for (std::size_t c = 0; c < C; ++c) {
      ASSERT_NEAR(s.p_tilde[c], p[c], 1e-10);
      ASSERT_NEAR(s.h_tilde[c], h[c], 1e-10);
    }
    auto th = class_thresholds(s);
    EXPECT_EQ(*std::max_element(th.begin(), th.end()), s.tau_global);
    for (double v : th) {
      EXPECT_GT(v, 0.0);
      EXPECT_LE(v, s.tau_global);
    }
  }
}

TEST(Saf, NoConfidentSamplesGivesZero) {
  auto s = AdaptiveState::initial(2);
  s.tau_global = 0.99;
  std::vector<Prob> qw = {{0.6, 0.4}}, qs = {{0.5, 0.5}};
  auto r = saf_loss(s, qw, qs);
  EXPECT_EQ(r.loss, 0.0);
  EXPECT_EQ(r.confident, 0u);
  for (const auto& g : saf_loss_grad(s, qs, r)) EXPECT_EQ(g, Prob(2, 0.0));
}

TEST(Saf, UniformExample) {
  auto s = AdaptiveState::initial(2);
  std::vector<Prob> qw = {{0.9, 0.1}, {0.2, 0.8}};
  std::vector<Prob> qs = {{0.8, 0.2}, {0.2, 0.8}};
  auto r = saf_loss(s, qw, qs);
  EXPECT_EQ(r.confident, 2u);
  EXPECT_NEAR(r.loss, std::log(0.5), 1e-12);
  EXPECT_NEAR(r.loss, -0.693147, 1e-6);
}

TEST(Saf, SingleConfidentOneHot) {
  auto s = AdaptiveState::initial(2);
  std::vector<Prob> qw = {{0.9, 0.1}}, qs = {{1.0, 0.0}};
  auto r = saf_loss(s, qw, qs);
  // b = SumNorm((1, 0) / (1, 1e-6)) = (1, 0); a = (1/2, 1/2); log floored at 1e-12.
  const double expect = 0.5 * std::log(1.0) + 0.5 * std::log(1e-12);
  EXPECT_NEAR(r.loss, expect, 1e-12);
  EXPECT_NEAR(r.loss, -13.815510557964274, 1e-12);
}

TEST(Saf, InclusiveThreshold) {
  auto s = AdaptiveState::initial(2);
  s.tau_global = 0.7;
  std::vector<Prob> qw = {{0.7, 0.3}}, qs = {{0.6, 0.4}};
  EXPECT_EQ(saf_loss(s, qw, qs).confident, 1u);
}

TEST(Saf, MatchesBruteForce) {
  interlude::Rng rng(5);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t C = 2 + trial % 4;
    auto s = AdaptiveState::initial(C);
    s.tau_global = 0.3 + 0.6 * rng.uniform();
    for (std::size_t c = 0; c < C; ++c) {
      s.p_tilde[c] = 0.05 + rng.uniform();
      s.h_tilde[c] = trial % 7 == 0 && c == 0 ? 0.0 : rng.uniform();
    }
    std::vector<Prob> qw, qs;
    for (int j = 0; j < 8; ++j) {
      qw.push_back(oracle::random_simplex(C, rng, 3.0));
      qs.push_back(oracle::random_simplex(C, rng, 2.0));
    }
    const double mx = *std::max_element(s.p_tilde.begin(), s.p_tilde.end());
    oracle::Vec pbar(C, 0.0), hbar(C, 0.0);
    int n = 0;
    for (int j = 0; j < 8; ++j) {
      const auto k = oracle::amax(qw[j]);
      if (qw[j][k] >= s.p_tilde[k] / mx * s.tau_global) {
        ++n;
        for (std::size_t c = 0; c < C; ++c) pbar[c] += qs[j][c];
        hbar[oracle::amax(qs[j])] += 1.0;
      }
    }
    double expect = 0.0;
    if (n > 0) {
      oracle::Vec a(C), b(C);
      double sa = 0, sb = 0;
      for (std::size_t c = 0; c < C; ++c) {
        a[c] = s.p_tilde[c] / std::max(s.h_tilde[c], 1e-6);
        b[c] = (pbar[c] / n) / std::max(hbar[c] / n, 1e-6);
        sa += a[c];
        sb += b[c];
      }
      for (std::size_t c = 0; c < C; ++c) expect += a[c] / sa * oracle::clog(b[c] / sb);
    }
    EXPECT_NEAR(saf_loss(s, qw, qs).loss, expect, 1e-10) << "trial " << trial;
  }
}

TEST(Saf, GradientMatchesFiniteDifferences) {
  interlude::Rng rng(9);
  for (int trial = 0; trial < 30; ++trial) {
    const std::size_t C = 3;
    auto s = AdaptiveState::initial(C);
    s.tau_global = 0.4;
    for (std::size_t c = 0; c < C; ++c) {
      s.p_tilde[c] = 0.2 + rng.uniform();
      s.h_tilde[c] = 0.2 + rng.uniform();
    }
    std::vector<Prob> qw, qs;
    for (int j = 0; j < 10; ++j) {
      qw.push_back(oracle::random_simplex(C, rng, 3.0));
      qs.push_back(oracle::random_simplex(C, rng, 1.0));
    }
    auto r = saf_loss(s, qw, qs);
    auto g = saf_loss_grad(s, qs, r);
    const double h = 1e-7;
    for (std::size_t j = 0; j < qs.size(); ++j) {
      for (std::size_t c = 0; c < C; ++c) {
        // Perturbations small enough to keep every argmax fixed.
        auto up = qs, dn = qs;
        up[j][c] += h;
        dn[j][c] -= h;
        if (oracle::amax(up[j]) != oracle::amax(qs[j]) || oracle::amax(dn[j]) != oracle::amax(qs[j])) continue;
        const double fd = (saf_loss(s, qw, up).loss - saf_loss(s, qw, dn).loss) / (2 * h);
        EXPECT_NEAR(g[j][c], fd, 1e-6 * std::max(1.0, std::abs(fd)));
      }
    }
  }
}
