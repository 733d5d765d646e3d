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
#include <cassert>
#include <cstddef>
#include <functional>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "interlude/error.hpp"

namespace interlude {

/// Dense row-major array of doubles. The first axis is the batch axis
/// wherever a tensor carries samples.
struct Tensor {
  std::vector<std::size_t> shape;
  std::vector<double> data;

  Tensor() = default;
  explicit Tensor(std::vector<std::size_t> s, double fill = 0.0)
      : shape(std::move(s)), data(count(shape), fill) {}
  Tensor(std::vector<std::size_t> s, std::vector<double> values)
      : shape(std::move(s)), data(std::move(values)) {
    if (data.size() != count(shape)) {
      throw NumericError("tensor: value count does not match shape");
    }
  }

  static std::size_t count(const std::vector<std::size_t>& s) {
    return std::accumulate(s.begin(), s.end(), std::size_t{1}, std::multiplies<>());
  }

  std::size_t size() const { return data.size(); }
  std::size_t rank() const { return shape.size(); }
  std::size_t dim(std::size_t axis) const { return shape.at(axis); }
  /// Elements per leading-axis entry.
  std::size_t row_size() const { return shape.empty() ? 0 : size() / shape[0]; }

  double& operator[](std::size_t i) { return data[i]; }
  double operator[](std::size_t i) const { return data[i]; }

  double& at(std::size_t r, std::size_t c) { return data[r * shape[1] + c]; }
  double at(std::size_t r, std::size_t c) const { return data[r * shape[1] + c]; }

  std::span<double> row(std::size_t r) {
    const auto n = row_size();
    return {data.data() + r * n, n};
  }
  std::span<const double> row(std::size_t r) const {
    const auto n = row_size();
    return {data.data() + r * n, n};
  }

  bool same_shape(const Tensor& o) const { return shape == o.shape; }

  void fill(double v) { std::fill(data.begin(), data.end(), v); }

  std::string shape_string() const {
    std::string s = "[";
    for (std::size_t i = 0; i < shape.size(); ++i) {
      if (i) s += ",";
      s += std::to_string(shape[i]);
    }
    return s + "]";
  }
};

inline void require_same_shape(const Tensor& a, const Tensor& b, const char* what) {
  if (!a.same_shape(b)) {
    throw NumericError(std::string(what) + ": shape mismatch " + a.shape_string() +
                       " vs " + b.shape_string());
  }
}

/// Numerically stable softmax over the last axis of a (N, C) tensor.
inline Tensor softmax_rows(const Tensor& logits) {
  Tensor out(logits.shape);
  const std::size_t n = logits.dim(0);
  for (std::size_t r = 0; r < n; ++r) {
    auto in = logits.row(r);
    auto o = out.row(r);
    const double mx = *std::max_element(in.begin(), in.end());
    double z = 0.0;
    for (std::size_t c = 0; c < in.size(); ++c) {
      o[c] = std::exp(in[c] - mx);
      z += o[c];
    }
    for (auto& v : o) v /= z;
  }
  return out;
}

/// Pulls a gradient with respect to softmax outputs back to the logits.
inline void softmax_backward_row(std::span<const double> prob, std::span<const double> dprob,
                                 std::span<double> dlogit) {
  double inner = 0.0;
  for (std::size_t c = 0; c < prob.size(); ++c) inner += prob[c] * dprob[c];
  for (std::size_t c = 0; c < prob.size(); ++c) dlogit[c] = prob[c] * (dprob[c] - inner);
}

}  // namespace interlude
