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

// Reference implementations written directly from the formulas, sharing no
// code with the library beyond plain containers.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "interlude/random.hpp"

namespace oracle {

using Vec = std::vector<double>;

/// Slot names for layouts, e.g. "Lw1", "Us3" (1-based indices; unlabeled
/// indices are flat over the mu*B unlabeled samples).
inline std::vector<std::string> layout_names(const std::string& kind, std::size_t B, std::size_t mu) {
  std::vector<std::string> out;
  auto L = [&](char a, std::size_t i) { out.push_back(std::string("L") + a + std::to_string(i)); };
  auto U = [&](char a, std::size_t j) { out.push_back(std::string("U") + a + std::to_string(j)); };
  if (kind == "low_i") {
    for (std::size_t i = 1; i <= B; ++i) L('w', i);
    for (std::size_t i = 1; i <= B; ++i) L('s', i);
    for (std::size_t j = 1; j <= mu * B; ++j) U('w', j);
    for (std::size_t j = 1; j <= mu * B; ++j) U('s', j);
  } else if (kind == "high_i1") {
    const std::size_t reps = 2 * (mu + 1);
    const std::size_t nl = B / reps, nu = mu * B / reps;
    for (std::size_t r = 0; r < reps; ++r) {
      for (std::size_t i = 1; i <= nl; ++i) L('w', r * nl + i);
      for (std::size_t i = 1; i <= nl; ++i) L('s', r * nl + i);
      for (std::size_t j = 1; j <= nu; ++j) U('w', r * nu + j);
      for (std::size_t j = 1; j <= nu; ++j) U('s', r * nu + j);
    }
  } else if (kind == "high_i2") {
    for (std::size_t i = 1; i <= B; ++i) {
      L('w', i);
      L('s', i);
      for (std::size_t m = 1; m <= mu; ++m) U('w', (i - 1) * mu + m);
      for (std::size_t m = 1; m <= mu; ++m) U('s', (i - 1) * mu + m);
    }
  } else {
    for (std::size_t i = 1; i <= B; ++i) {
      L('w', i);
      for (std::size_t m = 1; m <= mu; ++m) U('w', (i - 1) * mu + m);
      L('s', i);
      for (std::size_t m = 1; m <= mu; ++m) U('s', (i - 1) * mu + m);
    }
  }
  return out;
}

inline Vec random_simplex(std::size_t c, interlude::Rng& rng, double sharpen = 1.0) {
  Vec p(c);
  double s = 0.0;
  for (auto& v : p) {
    v = std::pow(-std::log(1.0 - rng.uniform()), sharpen);
    s += v;
  }
  for (auto& v : p) v /= s;
  return p;
}

inline double clog(double x) { return std::log(std::max(x, 1e-12)); }

inline std::size_t amax(const Vec& v) {
  return static_cast<std::size_t>(std::max_element(v.begin(), v.end()) - v.begin());
}

/// Mean labeled cross-entropy.
inline double sup(const std::vector<Vec>& pw, const std::vector<std::size_t>& y) {
  double s = 0.0;
  for (std::size_t i = 0; i < pw.size(); ++i) s += clog(pw[i][y[i]]);
  return -s / static_cast<double>(pw.size());
}

/// Unlabeled consistency with hard pseudo-labels and a strict fixed threshold.
inline double unsup(const std::vector<Vec>& qw, const std::vector<Vec>& qs, double tau,
                    double* mask_rate = nullptr) {
  double s = 0.0;
  std::size_t n = 0;
  for (std::size_t j = 0; j < qw.size(); ++j) {
    const double conf = *std::max_element(qw[j].begin(), qw[j].end());
    if (conf > tau) {
      s -= clog(qs[j][amax(qw[j])]);
      ++n;
    }
  }
  if (mask_rate) *mask_rate = static_cast<double>(n) / static_cast<double>(qw.size());
  return s / static_cast<double>(qw.size());
}

/// Delta consistency. q_w / q_s are flat with group i owning [i*mu, (i+1)*mu).
inline double dc(const std::vector<Vec>& pw, const std::vector<Vec>& ps, const std::vector<Vec>& qw,
                 const std::vector<Vec>& qs, std::size_t mu) {
  const std::size_t B = pw.size(), C = pw[0].size();
  double total = 0.0;
  for (std::size_t i = 0; i < B; ++i) {
    for (std::size_t c = 0; c < C; ++c) {
      const double dl = pw[i][c] - ps[i][c];
      double du = 0.0;
      for (std::size_t m = 0; m < mu; ++m) du += qw[i * mu + m][c] - qs[i * mu + m][c];
      du /= static_cast<double>(mu);
      total += (dl - du) * (dl - du);
    }
  }
  return total / static_cast<double>(B);
}

}  // namespace oracle
