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
#include <filesystem>
#include <fstream>
#include <numbers>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "interlude/error.hpp"
#include "interlude/random.hpp"

namespace interlude {

using Features = std::vector<double>;

/// Layout of one sample's feature vector. Images are CHW with values in
/// [0, 1]; plain vectors use width only.
struct SampleShape {
  std::size_t channels = 1;
  std::size_t height = 1;
  std::size_t width = 1;
  bool image = false;

  static SampleShape vector(std::size_t dim) { return {1, 1, dim, false}; }
  static SampleShape image_chw(std::size_t c, std::size_t h, std::size_t w) {
    return {c, h, w, true};
  }
  std::size_t size() const { return channels * height * width; }
  friend bool operator==(const SampleShape&, const SampleShape&) = default;
};

struct Example {
  Features x;
  std::size_t label = 0;
};

/// A fully labeled source of samples, in source order.
struct LabeledCorpus {
  SampleShape shape;
  std::size_t num_classes = 0;
  std::vector<Features> x;
  std::vector<std::size_t> y;

  std::size_t size() const { return x.size(); }
};

struct DatasetSplit {
  SampleShape shape;
  std::size_t num_classes = 0;
  std::vector<Example> labeled;
  std::vector<Features> unlabeled;
  /// Labeled items per class.
  std::vector<std::size_t> class_counts;
  /// Source positions of the labeled and unlabeled items (audit trail).
  std::vector<std::size_t> labeled_source;
  std::vector<std::size_t> unlabeled_source;
};

struct SplitOptions {
  /// Keep labeled items in the unlabeled pool as well (label dropped).
  bool unlabeled_includes_labeled = false;
};

/// Draws a class-balanced labeled subset (per-class counts differ by at
/// most one); everything else becomes unlabeled. Pure in (corpus, n, seed).
inline DatasetSplit split_dataset(const LabeledCorpus& corpus, std::size_t n_labels,
                                  std::uint64_t seed, SplitOptions opts = {}) {
  const std::size_t c_n = corpus.num_classes;
  if (c_n == 0) throw ConfigError("split: corpus has no classes");
  if (n_labels < c_n) {
    throw ConfigError("split: n_labels (" + std::to_string(n_labels) +
                      ") must be at least the class count (" + std::to_string(c_n) + ")");
  }
  if (n_labels > corpus.size()) {
    throw ConfigError("split: n_labels (" + std::to_string(n_labels) +
                      ") exceeds corpus size (" + std::to_string(corpus.size()) + ")");
  }

  std::vector<std::vector<std::size_t>> by_class(c_n);
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    if (corpus.y[i] >= c_n) throw DataError("split: label out of range at item " + std::to_string(i));
    by_class[corpus.y[i]].push_back(i);
  }

  Rng rng(derive_seed(seed, "split"));
  std::vector<std::size_t> quota(c_n, n_labels / c_n);
  std::vector<std::size_t> class_order(c_n);
  for (std::size_t c = 0; c < c_n; ++c) class_order[c] = c;
  rng.shuffle(class_order.begin(), class_order.end());
  for (std::size_t k = 0; k < n_labels % c_n; ++k) ++quota[class_order[k]];

  std::vector<char> chosen(corpus.size(), 0);
  for (std::size_t c = 0; c < c_n; ++c) {
    auto& pool = by_class[c];
    if (pool.size() < quota[c]) {
      throw DataError("split: class " + std::to_string(c) + " has " + std::to_string(pool.size()) +
                      " items, needs " + std::to_string(quota[c]));
    }
    rng.shuffle(pool.begin(), pool.end());
    for (std::size_t k = 0; k < quota[c]; ++k) chosen[pool[k]] = 1;
  }

  DatasetSplit s;
  s.shape = corpus.shape;
  s.num_classes = c_n;
  s.class_counts = quota;
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    if (chosen[i]) {
      s.labeled.push_back({corpus.x[i], corpus.y[i]});
      s.labeled_source.push_back(i);
    }
    if (!chosen[i] || opts.unlabeled_includes_labeled) {
      s.unlabeled.push_back(corpus.x[i]);
      s.unlabeled_source.push_back(i);
    }
  }
  return s;
}

/// One line per source item: {"index": i, "role": "labeled", "label": y}
/// or {"index": i, "role": "unlabeled", "label": null}.
inline void write_split_manifest(std::ostream& out, const DatasetSplit& s) {
  for (std::size_t k = 0; k < s.labeled.size(); ++k) {
    out << "{\"index\": " << s.labeled_source[k] << ", \"role\": \"labeled\", \"label\": "
        << s.labeled[k].label << "}\n";
  }
  for (std::size_t idx : s.unlabeled_source) {
    out << "{\"index\": " << idx << ", \"role\": \"unlabeled\", \"label\": null}\n";
  }
}

// ---------------------------------------------------------------------------
// Synthetic 2-D data.

struct SyntheticSpec {
  std::string generator = "two-moons";
  std::size_t n_labeled = 4;
  std::size_t n_unlabeled = 2000;
  std::size_t n_test = 1000;
  double noise = 0.1;
  std::uint64_t seed = 0;
};

struct SyntheticData {
  DatasetSplit split;
  LabeledCorpus test;
  /// Ground truth of the unlabeled points, for fully supervised references.
  std::vector<std::size_t> unlabeled_labels;
};

namespace detail {

inline Features synthetic_point(std::string_view gen, std::size_t label, double noise, Rng& rng) {
  Features p(2);
  if (gen == "two-moons") {
    const double t = rng.uniform(0.0, std::numbers::pi);
    if (label == 0) {
      p = {std::cos(t), std::sin(t)};
    } else {
      p = {1.0 - std::cos(t), 0.5 - std::sin(t)};
    }
  } else {
    p = {label == 0 ? -1.0 : 1.0, 0.0};
  }
  for (auto& v : p) v += noise * rng.normal();
  return p;
}

}  // namespace detail

/// Two-class 2-D data. Labels alternate so every set is balanced; the
/// labeled, unlabeled and test sets are drawn in that order from one stream.
inline SyntheticData generate_synthetic(const SyntheticSpec& spec) {
  if (spec.generator != "two-moons" && spec.generator != "two-gaussians") {
    throw ConfigError("synthetic: unknown generator '" + spec.generator +
                      "' (expected two-moons or two-gaussians)");
  }
  if (spec.n_labeled < 2 || spec.n_unlabeled == 0 || spec.n_test == 0) {
    throw ConfigError("synthetic: counts must be positive with at least 2 labeled points");
  }
  if (!(spec.noise >= 0.0)) throw ConfigError("synthetic: noise must be non-negative");

  Rng rng(derive_seed(spec.seed, "synthetic"));
  SyntheticData d;
  auto& s = d.split;
  s.shape = SampleShape::vector(2);
  s.num_classes = 2;
  s.class_counts.assign(2, 0);
  for (std::size_t k = 0; k < spec.n_labeled; ++k) {
    const std::size_t y = k % 2;
    s.labeled.push_back({detail::synthetic_point(spec.generator, y, spec.noise, rng), y});
    s.labeled_source.push_back(k);
    ++s.class_counts[y];
  }
  for (std::size_t k = 0; k < spec.n_unlabeled; ++k) {
    s.unlabeled.push_back(detail::synthetic_point(spec.generator, k % 2, spec.noise, rng));
    d.unlabeled_labels.push_back(k % 2);
    s.unlabeled_source.push_back(spec.n_labeled + k);
  }
  d.test.shape = s.shape;
  d.test.num_classes = 2;
  for (std::size_t k = 0; k < spec.n_test; ++k) {
    d.test.x.push_back(detail::synthetic_point(spec.generator, k % 2, spec.noise, rng));
    d.test.y.push_back(k % 2);
  }
  return d;
}

// ---------------------------------------------------------------------------
// Corpus readers.

/// CIFAR-10 binary layout: records of 1 label byte + 3072 CHW pixel bytes.
/// Reads data_batch_{1..5}.bin (train) or test_batch.bin from dir.
inline LabeledCorpus load_cifar10_binary(const std::filesystem::path& dir, bool train) {
  std::vector<std::filesystem::path> files;
  if (train) {
    for (int k = 1; k <= 5; ++k) files.push_back(dir / ("data_batch_" + std::to_string(k) + ".bin"));
  } else {
    files.push_back(dir / "test_batch.bin");
  }
  LabeledCorpus c;
  c.shape = SampleShape::image_chw(3, 32, 32);
  c.num_classes = 10;
  constexpr std::size_t kPixels = 3 * 32 * 32;
  constexpr std::size_t kRecord = 1 + kPixels;
  bool any = false;
  for (const auto& f : files) {
    std::ifstream in(f, std::ios::binary);
    if (!in) continue;
    any = true;
    std::vector<unsigned char> buf((std::istreambuf_iterator<char>(in)), {});
    if (buf.size() % kRecord != 0) {
      throw DataError("cifar10: " + f.string() + " is not a whole number of records");
    }
    for (std::size_t off = 0; off < buf.size(); off += kRecord) {
      const std::size_t label = buf[off];
      if (label >= 10) throw DataError("cifar10: bad label byte in " + f.string());
      Features x(kPixels);
      for (std::size_t p = 0; p < kPixels; ++p) x[p] = buf[off + 1 + p] / 255.0;
      c.x.push_back(std::move(x));
      c.y.push_back(label);
    }
  }
  if (!any) throw DataError("cifar10: no batch files found under " + dir.string());
  return c;
}

/// Delimited text corpus: one sample per line, "label,f1,f2,...". Lines
/// starting with '#' are skipped. Class count is max label + 1.
inline LabeledCorpus load_csv_corpus(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("csv corpus: cannot open " + path.string());
  LabeledCorpus c;
  std::string line;
  std::size_t lineno = 0;
  std::size_t dim = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    std::stringstream ss(line);
    std::string cell;
    std::vector<double> values;
    while (std::getline(ss, cell, ',')) {
      try {
        values.push_back(std::stod(cell));
      } catch (const std::exception&) {
        throw DataError("csv corpus: bad number '" + cell + "' on line " + std::to_string(lineno));
      }
    }
    if (values.size() < 2) throw DataError("csv corpus: line " + std::to_string(lineno) + " too short");
    const double lab = values.front();
    if (lab < 0 || lab != std::floor(lab)) {
      throw DataError("csv corpus: label must be a non-negative integer on line " + std::to_string(lineno));
    }
    if (dim == 0) dim = values.size() - 1;
    if (values.size() - 1 != dim) {
      throw DataError("csv corpus: inconsistent feature count on line " + std::to_string(lineno));
    }
    c.y.push_back(static_cast<std::size_t>(lab));
    c.x.emplace_back(values.begin() + 1, values.end());
    c.num_classes = std::max(c.num_classes, c.y.back() + 1);
  }
  if (c.x.empty()) throw DataError("csv corpus: no samples in " + path.string());
  c.shape = SampleShape::vector(dim);
  return c;
}

}  // namespace interlude
