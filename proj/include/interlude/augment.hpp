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
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "interlude/data.hpp"
#include "interlude/error.hpp"
#include "interlude/layout.hpp"
#include "interlude/random.hpp"

namespace interlude {

struct AugmentConfig {
  /// Reflection padding before the random crop.
  int pad = 4;
  double flip_prob = 0.5;
  /// RandAugment-style policy: ops per strong realization and maximum
  /// magnitude on a 0..10 scale.
  std::size_t n_ops = 2;
  double magnitude = 10.0;
  /// Upper bound of the cutout square side as a fraction of the image side.
  double cutout = 0.5;
  /// Vector samples: standard deviation of the weak Gaussian jitter, and the
  /// multiplier applied for strong realizations.
  double jitter = 0.05;
  double strong_jitter_scale = 3.0;
};

enum class StrongOpId : std::uint8_t {
  Identity,
  AutoContrast,
  Brightness,
  Color,
  Contrast,
  Equalize,
  Posterize,
  Rotate,
  Sharpness,
  ShearX,
  ShearY,
  Solarize,
  TranslateX,
  TranslateY,
};

inline constexpr std::size_t kStrongOpCount = 14;

inline std::string_view to_string(StrongOpId id) {
  constexpr std::array<std::string_view, kStrongOpCount> names = {
      "identity", "autocontrast", "brightness", "color",      "contrast",
      "equalize", "posterize",    "rotate",     "sharpness",  "shear_x",
      "shear_y",  "solarize",     "translate_x", "translate_y"};
  return names[static_cast<std::size_t>(id)];
}

/// One resolved strong op. level is signed in [-1, 1] (magnitude / 10 with
/// a random direction for symmetric ops).
struct StrongOp {
  StrongOpId id = StrongOpId::Identity;
  double level = 0.0;
  friend bool operator==(const StrongOp&, const StrongOp&) = default;
};

/// Fully resolved transform parameters. Applying the same realization to
/// any number of samples uses identical parameters; resolve() regenerates
/// the same realization from (kind, seed, config).
struct AugRealization {
  AugKind kind = AugKind::Weak;
  std::uint64_t seed = 0;

  // Image geometry: reflection pad, crop offset into the padded image, flip.
  int pad = 0;
  int crop_x = 0;
  int crop_y = 0;
  bool flip = false;

  // Strong-only image ops followed by an optional cutout square.
  std::vector<StrongOp> ops;
  double cutout_size = 0.0;  // fraction of min(H, W); 0 disables
  double cutout_cx = 0.0;    // centre, fractions of W and H
  double cutout_cy = 0.0;

  // Vector samples: additive Gaussian noise of this scale, drawn from seed.
  double jitter_scale = 0.0;

  static AugRealization identity(AugKind kind) {
    AugRealization r;
    r.kind = kind;
    return r;
  }

  static AugRealization resolve(AugKind kind, std::uint64_t seed, const AugmentConfig& cfg);

  friend bool operator==(const AugRealization&, const AugRealization&) = default;
};

inline AugRealization AugRealization::resolve(AugKind kind, std::uint64_t seed,
                                              const AugmentConfig& cfg) {
  Rng rng(derive_seed(seed, kind == AugKind::Weak ? "weak" : "strong"));
  AugRealization r;
  r.kind = kind;
  r.seed = seed;
  r.pad = std::max(cfg.pad, 0);
  r.flip = rng.bernoulli(cfg.flip_prob);
  r.crop_x = static_cast<int>(rng.below(static_cast<std::uint64_t>(2 * r.pad + 1)));
  r.crop_y = static_cast<int>(rng.below(static_cast<std::uint64_t>(2 * r.pad + 1)));
  r.jitter_scale = kind == AugKind::Weak ? cfg.jitter : cfg.jitter * cfg.strong_jitter_scale;
  if (kind == AugKind::Strong) {
    const double max_level = std::clamp(cfg.magnitude, 0.0, 10.0);
    for (std::size_t k = 0; k < cfg.n_ops; ++k) {
      const auto id = static_cast<StrongOpId>(rng.below(kStrongOpCount));
      // Each sampled op fires with probability 1/2 at a level in [1, M].
      const bool fire = rng.bernoulli(0.5);
      const double mag = rng.uniform(std::min(1.0, max_level), max_level) / 10.0;
      const double sign = rng.bernoulli(0.5) ? 1.0 : -1.0;
      if (fire) r.ops.push_back({id, mag * sign});
    }
    if (cfg.cutout > 0.0) {
      r.cutout_size = rng.uniform(0.0, cfg.cutout);
      r.cutout_cx = rng.uniform();
      r.cutout_cy = rng.uniform();
    }
  }
  return r;
}

/// DrawAugParams: one weak and one strong realization from the stream.
inline std::pair<AugRealization, AugRealization> draw_aug_params(Rng& rng,
                                                                  const AugmentConfig& cfg) {
  const std::uint64_t ws = rng();
  const std::uint64_t ss = rng();
  return {AugRealization::resolve(AugKind::Weak, ws, cfg),
          AugRealization::resolve(AugKind::Strong, ss, cfg)};
}

namespace detail {

/// CHW image view over a feature vector.
struct Image {
  std::size_t c, h, w;
  std::vector<double> v;

  double& at(std::size_t ch, std::size_t y, std::size_t x) { return v[(ch * h + y) * w + x]; }
  double at(std::size_t ch, std::size_t y, std::size_t x) const { return v[(ch * h + y) * w + x]; }
};

inline std::size_t reflect_index(long i, long n) {
  if (n == 1) return 0;
  const long period = 2 * (n - 1);
  i %= period;
  if (i < 0) i += period;
  return static_cast<std::size_t>(i < n ? i : period - i);
}

inline Image pad_crop_flip(const Image& src, int pad, int crop_x, int crop_y, bool flip) {
  Image out{src.c, src.h, src.w, std::vector<double>(src.v.size())};
  for (std::size_t ch = 0; ch < src.c; ++ch) {
    for (std::size_t y = 0; y < src.h; ++y) {
      for (std::size_t x = 0; x < src.w; ++x) {
        const std::size_t ox = flip ? src.w - 1 - x : x;
        const long sy = static_cast<long>(y) + crop_y - pad;
        const long sx = static_cast<long>(ox) + crop_x - pad;
        out.at(ch, y, x) = src.at(ch, reflect_index(sy, static_cast<long>(src.h)),
                                  reflect_index(sx, static_cast<long>(src.w)));
      }
    }
  }
  return out;
}

inline double bilinear(const Image& im, std::size_t ch, double y, double x, double fill) {
  if (y < -0.5 || x < -0.5 || y > im.h - 0.5 || x > im.w - 0.5) return fill;
  const double yc = std::clamp(y, 0.0, static_cast<double>(im.h - 1));
  const double xc = std::clamp(x, 0.0, static_cast<double>(im.w - 1));
  const auto y0 = static_cast<std::size_t>(std::floor(yc));
  const auto x0 = static_cast<std::size_t>(std::floor(xc));
  const std::size_t y1 = std::min(y0 + 1, im.h - 1);
  const std::size_t x1 = std::min(x0 + 1, im.w - 1);
  const double fy = yc - y0, fx = xc - x0;
  return (1 - fy) * ((1 - fx) * im.at(ch, y0, x0) + fx * im.at(ch, y0, x1)) +
         fy * ((1 - fx) * im.at(ch, y1, x0) + fx * im.at(ch, y1, x1));
}

/// Output pixel (x, y) samples the source at M * (x - cx, y - cy) + (cx, cy).
inline Image affine(const Image& src, double m00, double m01, double m10, double m11, double tx,
                    double ty) {
  constexpr double kFill = 0.5;
  Image out{src.c, src.h, src.w, std::vector<double>(src.v.size())};
  const double cx = (src.w - 1) / 2.0, cy = (src.h - 1) / 2.0;
  for (std::size_t y = 0; y < src.h; ++y) {
    for (std::size_t x = 0; x < src.w; ++x) {
      const double dx = x - cx, dy = y - cy;
      const double sx = m00 * dx + m01 * dy + cx + tx;
      const double sy = m10 * dx + m11 * dy + cy + ty;
      for (std::size_t ch = 0; ch < src.c; ++ch) out.at(ch, y, x) = bilinear(src, ch, sy, sx, kFill);
    }
  }
  return out;
}

inline std::vector<double> grayscale(const Image& im) {
  std::vector<double> g(im.h * im.w);
  for (std::size_t p = 0; p < g.size(); ++p) {
    if (im.c == 3) {
      g[p] = 0.299 * im.v[p] + 0.587 * im.v[im.h * im.w + p] + 0.114 * im.v[2 * im.h * im.w + p];
    } else {
      double s = 0.0;
      for (std::size_t ch = 0; ch < im.c; ++ch) s += im.v[ch * im.h * im.w + p];
      g[p] = s / static_cast<double>(im.c);
    }
  }
  return g;
}

inline void clamp01(Image& im) {
  for (auto& x : im.v) x = std::clamp(x, 0.0, 1.0);
}

inline void apply_strong_op(Image& im, const StrongOp& op) {
  const double f = 1.0 + 0.9 * op.level;
  const std::size_t plane = im.h * im.w;
  switch (op.id) {
    case StrongOpId::Identity:
      break;
    case StrongOpId::AutoContrast:
      for (std::size_t ch = 0; ch < im.c; ++ch) {
        auto first = im.v.begin() + static_cast<long>(ch * plane);
        auto [lo, hi] = std::minmax_element(first, first + static_cast<long>(plane));
        const double l = *lo, h = *hi;
        if (h > l) {
          for (auto it = first; it != first + static_cast<long>(plane); ++it) *it = (*it - l) / (h - l);
        }
      }
      break;
    case StrongOpId::Brightness:
      for (auto& x : im.v) x *= f;
      clamp01(im);
      break;
    case StrongOpId::Color: {
      const auto g = grayscale(im);
      for (std::size_t ch = 0; ch < im.c; ++ch) {
        for (std::size_t p = 0; p < plane; ++p) {
          double& x = im.v[ch * plane + p];
          x = g[p] + f * (x - g[p]);
        }
      }
      clamp01(im);
      break;
    }
    case StrongOpId::Contrast: {
      const auto g = grayscale(im);
      double mean = 0.0;
      for (double x : g) mean += x;
      mean /= static_cast<double>(g.size());
      for (auto& x : im.v) x = mean + f * (x - mean);
      clamp01(im);
      break;
    }
    case StrongOpId::Equalize:
      for (std::size_t ch = 0; ch < im.c; ++ch) {
        std::array<std::size_t, 256> hist{};
        for (std::size_t p = 0; p < plane; ++p) {
          ++hist[static_cast<std::size_t>(std::clamp(im.v[ch * plane + p], 0.0, 1.0) * 255.0 + 0.5)];
        }
        std::array<double, 256> cdf{};
        std::size_t run = 0;
        for (std::size_t k = 0; k < 256; ++k) {
          run += hist[k];
          cdf[k] = static_cast<double>(run) / static_cast<double>(plane);
        }
        for (std::size_t p = 0; p < plane; ++p) {
          double& x = im.v[ch * plane + p];
          x = cdf[static_cast<std::size_t>(std::clamp(x, 0.0, 1.0) * 255.0 + 0.5)];
        }
      }
      break;
    case StrongOpId::Posterize: {
      const int bits = 8 - static_cast<int>(std::lround(4.0 * std::abs(op.level)));
      const int shift = 8 - bits;
      for (auto& x : im.v) {
        const int q = static_cast<int>(std::clamp(x, 0.0, 1.0) * 255.0 + 0.5);
        x = static_cast<double>((q >> shift) << shift) / 255.0;
      }
      break;
    }
    case StrongOpId::Rotate: {
      const double a = op.level * 30.0 * std::numbers::pi / 180.0;
      im = affine(im, std::cos(a), -std::sin(a), std::sin(a), std::cos(a), 0.0, 0.0);
      break;
    }
    case StrongOpId::Sharpness: {
      Image blur = im;
      for (std::size_t ch = 0; ch < im.c; ++ch) {
        for (std::size_t y = 1; y + 1 < im.h; ++y) {
          for (std::size_t x = 1; x + 1 < im.w; ++x) {
            double s = 4.0 * im.at(ch, y, x);
            for (int dy = -1; dy <= 1; ++dy) {
              for (int dx = -1; dx <= 1; ++dx) s += im.at(ch, y + dy, x + dx);
            }
            blur.at(ch, y, x) = s / 13.0;
          }
        }
      }
      for (std::size_t k = 0; k < im.v.size(); ++k) im.v[k] = blur.v[k] + f * (im.v[k] - blur.v[k]);
      clamp01(im);
      break;
    }
    case StrongOpId::ShearX:
      im = affine(im, 1.0, 0.3 * op.level, 0.0, 1.0, 0.0, 0.0);
      break;
    case StrongOpId::ShearY:
      im = affine(im, 1.0, 0.0, 0.3 * op.level, 1.0, 0.0, 0.0);
      break;
    case StrongOpId::Solarize: {
      const double thr = 1.0 - std::abs(op.level);
      for (auto& x : im.v) {
        if (x >= thr) x = 1.0 - x;
      }
      break;
    }
    case StrongOpId::TranslateX:
      im = affine(im, 1.0, 0.0, 0.0, 1.0, 0.3 * op.level * im.w, 0.0);
      break;
    case StrongOpId::TranslateY:
      im = affine(im, 1.0, 0.0, 0.0, 1.0, 0.0, 0.3 * op.level * im.h);
      break;
  }
}

inline void apply_cutout(Image& im, double size, double cx, double cy) {
  const double side = size * static_cast<double>(std::min(im.h, im.w));
  if (side < 1.0) return;
  const double x0 = cx * im.w - side / 2.0, y0 = cy * im.h - side / 2.0;
  const auto xs = static_cast<std::size_t>(std::max(0.0, std::round(x0)));
  const auto ys = static_cast<std::size_t>(std::max(0.0, std::round(y0)));
  const auto xe = static_cast<std::size_t>(std::clamp(std::round(x0 + side), 0.0, double(im.w)));
  const auto ye = static_cast<std::size_t>(std::clamp(std::round(y0 + side), 0.0, double(im.h)));
  for (std::size_t ch = 0; ch < im.c; ++ch) {
    for (std::size_t y = ys; y < ye; ++y) {
      for (std::size_t x = xs; x < xe; ++x) im.at(ch, y, x) = 0.5;
    }
  }
}

}  // namespace detail

/// Applies a realization to one sample. Pure in (x, shape, realization).
inline Features apply_augmentation(const Features& x, const SampleShape& shape,
                                   const AugRealization& r) {
  if (x.size() != shape.size()) {
    throw BatchAssemblyError("augment: sample has " + std::to_string(x.size()) +
                             " values, shape expects " + std::to_string(shape.size()));
  }
  if (!shape.image) {
    if (r.jitter_scale == 0.0) return x;
    Rng rng(derive_seed(r.seed, "jitter"));
    Features out = x;
    for (auto& v : out) v += r.jitter_scale * rng.normal();
    return out;
  }
  detail::Image im{shape.channels, shape.height, shape.width, x};
  im = detail::pad_crop_flip(im, r.pad, r.crop_x, r.crop_y, r.flip);
  if (r.kind == AugKind::Strong) {
    for (const auto& op : r.ops) detail::apply_strong_op(im, op);
    if (r.cutout_size > 0.0) detail::apply_cutout(im, r.cutout_size, r.cutout_cx, r.cutout_cy);
  }
  return std::move(im.v);
}

/// Weak and strong views of one labeled sample and its mu unlabeled partners.
struct GroupViews {
  Features x_w, x_s;
  std::vector<Features> u_w, u_s;
};

/// GetAug: every weak view in the group shares omega, every strong view
/// shares sigma.
inline GroupViews get_aug(const Features& x, std::span<const Features> group, std::size_t mu,
                          const SampleShape& shape, const AugRealization& omega,
                          const AugRealization& sigma) {
  if (group.size() != mu) {
    throw BatchAssemblyError("get_aug: expected " + std::to_string(mu) +
                             " unlabeled samples in the group, got " + std::to_string(group.size()));
  }
  GroupViews v;
  v.x_w = apply_augmentation(x, shape, omega);
  v.x_s = apply_augmentation(x, shape, sigma);
  v.u_w.reserve(mu);
  v.u_s.reserve(mu);
  for (const auto& u : group) {
    v.u_w.push_back(apply_augmentation(u, shape, omega));
    v.u_s.push_back(apply_augmentation(u, shape, sigma));
  }
  return v;
}

}  // namespace interlude
