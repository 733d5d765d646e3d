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
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "interlude/error.hpp"

namespace interlude {

/// Batch orderings. HighI3 is the interdigitated default; the others exist
/// for the labeled/unlabeled interaction ablation.
enum class LayoutKind { LowI, HighI1, HighI2, HighI3 };

inline std::string_view to_string(LayoutKind k) {
  switch (k) {
    case LayoutKind::LowI: return "low_i";
    case LayoutKind::HighI1: return "high_i1";
    case LayoutKind::HighI2: return "high_i2";
    case LayoutKind::HighI3: return "high_i3";
  }
  return "?";
}

inline LayoutKind parse_layout(std::string_view s) {
  if (s == "low_i") return LayoutKind::LowI;
  if (s == "high_i1") return LayoutKind::HighI1;
  if (s == "high_i2") return LayoutKind::HighI2;
  if (s == "high_i3") return LayoutKind::HighI3;
  throw ConfigError("unknown layout '" + std::string(s) +
                    "' (expected low_i, high_i1, high_i2 or high_i3)");
}

enum class Role { Labeled, Unlabeled };
enum class AugKind { Weak, Strong };

/// Identity of one slot: labeled slots use member 0, unlabeled members are
/// numbered 1..mu within their group. Group and member are zero/one based
/// respectively, so unlabeled flat index is group * mu + member - 1.
struct SlotTag {
  Role role = Role::Labeled;
  AugKind aug = AugKind::Weak;
  std::size_t group = 0;
  std::size_t member = 0;

  std::size_t unlabeled_index(std::size_t mu) const { return group * mu + member - 1; }

  friend bool operator==(const SlotTag&, const SlotTag&) = default;
  friend auto operator<=>(const SlotTag&, const SlotTag&) = default;
};

inline SlotTag labeled_tag(AugKind aug, std::size_t i) { return {Role::Labeled, aug, i, 0}; }

inline SlotTag unlabeled_tag(AugKind aug, std::size_t flat, std::size_t mu) {
  return {Role::Unlabeled, aug, flat / mu, flat % mu + 1};
}

/// Per-group view of anything indexed by slot: labeled weak/strong entries
/// per group and mu unlabeled weak/strong entries per group.
template <typename T>
struct Grouped {
  std::vector<T> p_w, p_s;
  std::vector<std::vector<T>> q_w, q_s;

  std::size_t groups() const { return p_w.size(); }
  std::size_t mu() const { return q_w.empty() ? 0 : q_w.front().size(); }

  static Grouped sized(std::size_t b, std::size_t mu) {
    Grouped g;
    g.p_w.resize(b);
    g.p_s.resize(b);
    g.q_w.assign(b, std::vector<T>(mu));
    g.q_s.assign(b, std::vector<T>(mu));
    return g;
  }

  T& at(const SlotTag& t) {
    if (t.role == Role::Labeled) return t.aug == AugKind::Weak ? p_w[t.group] : p_s[t.group];
    auto& q = t.aug == AugKind::Weak ? q_w : q_s;
    return q[t.group][t.member - 1];
  }
  const T& at(const SlotTag& t) const { return const_cast<Grouped*>(this)->at(t); }

  /// Unlabeled entries in flat index order (group-major).
  std::vector<T> flat_q_w() const { return flatten(q_w); }
  std::vector<T> flat_q_s() const { return flatten(q_s); }

 private:
  static std::vector<T> flatten(const std::vector<std::vector<T>>& q) {
    std::vector<T> out;
    for (const auto& g : q) out.insert(out.end(), g.begin(), g.end());
    return out;
  }
};

/// The slot tag sequence of a Q = 2(1+mu)B batch under a layout.
inline std::vector<SlotTag> layout_tags(std::size_t b, std::size_t mu, LayoutKind kind) {
  if (b == 0 || mu == 0) throw BatchAssemblyError("layout requires B >= 1 and mu >= 1");
  std::vector<SlotTag> tags;
  tags.reserve(2 * (1 + mu) * b);
  auto push_labeled = [&](AugKind a, std::size_t lo, std::size_t hi) {
    for (std::size_t i = lo; i < hi; ++i) tags.push_back(labeled_tag(a, i));
  };
  auto push_unlabeled = [&](AugKind a, std::size_t lo, std::size_t hi) {
    for (std::size_t j = lo; j < hi; ++j) tags.push_back(unlabeled_tag(a, j, mu));
  };
  switch (kind) {
    case LayoutKind::LowI:
      push_labeled(AugKind::Weak, 0, b);
      push_labeled(AugKind::Strong, 0, b);
      push_unlabeled(AugKind::Weak, 0, mu * b);
      push_unlabeled(AugKind::Strong, 0, mu * b);
      break;
    case LayoutKind::HighI1: {
      const std::size_t blocks = 2 * (mu + 1);
      if (b % blocks != 0) {
        throw BatchAssemblyError("high_i1 layout needs B divisible by 2(mu+1) = " +
                                 std::to_string(blocks) + ", got B=" + std::to_string(b));
      }
      const std::size_t nl = b / blocks;
      const std::size_t nu = mu * b / blocks;
      for (std::size_t k = 0; k < blocks; ++k) {
        push_labeled(AugKind::Weak, k * nl, (k + 1) * nl);
        push_labeled(AugKind::Strong, k * nl, (k + 1) * nl);
        push_unlabeled(AugKind::Weak, k * nu, (k + 1) * nu);
        push_unlabeled(AugKind::Strong, k * nu, (k + 1) * nu);
      }
      break;
    }
    case LayoutKind::HighI2:
      for (std::size_t i = 0; i < b; ++i) {
        push_labeled(AugKind::Weak, i, i + 1);
        push_labeled(AugKind::Strong, i, i + 1);
        push_unlabeled(AugKind::Weak, i * mu, (i + 1) * mu);
        push_unlabeled(AugKind::Strong, i * mu, (i + 1) * mu);
      }
      break;
    case LayoutKind::HighI3:
      for (std::size_t i = 0; i < b; ++i) {
        push_labeled(AugKind::Weak, i, i + 1);
        push_unlabeled(AugKind::Weak, i * mu, (i + 1) * mu);
        push_labeled(AugKind::Strong, i, i + 1);
        push_unlabeled(AugKind::Strong, i * mu, (i + 1) * mu);
      }
      break;
  }
  return tags;
}

template <typename T>
struct Slot {
  T sample;
  SlotTag tag;
};

/// Q-slot batch in model input order.
template <typename T>
struct OrderedBatch {
  LayoutKind layout = LayoutKind::HighI3;
  std::size_t b = 0;
  std::size_t mu = 0;
  std::vector<Slot<T>> slots;

  std::size_t size() const { return slots.size(); }

  std::vector<SlotTag> tags() const {
    std::vector<SlotTag> t;
    t.reserve(slots.size());
    for (const auto& s : slots) t.push_back(s.tag);
    return t;
  }
};

/// Arranges the four augmented streams into the chosen layout. The m-th
/// unlabeled member of group i must sit at flat index i*mu + m - 1.
template <typename T>
OrderedBatch<T> interdigitate(std::span<const T> labeled_w, std::span<const T> labeled_s,
                              std::span<const T> unlabeled_w, std::span<const T> unlabeled_s,
                              std::size_t mu, LayoutKind kind = LayoutKind::HighI3) {
  const std::size_t b = labeled_w.size();
  if (labeled_s.size() != b || unlabeled_w.size() != mu * b || unlabeled_s.size() != mu * b) {
    throw BatchAssemblyError("interdigitate: expected stream lengths (B, B, muB, muB) = (" +
                             std::to_string(b) + ", " + std::to_string(b) + ", " +
                             std::to_string(mu * b) + ", " + std::to_string(mu * b) +
                             "), got (" + std::to_string(labeled_w.size()) + ", " +
                             std::to_string(labeled_s.size()) + ", " +
                             std::to_string(unlabeled_w.size()) + ", " +
                             std::to_string(unlabeled_s.size()) + ")");
  }
  OrderedBatch<T> batch;
  batch.layout = kind;
  batch.b = b;
  batch.mu = mu;
  for (const auto& tag : layout_tags(b, mu, kind)) {
    const bool weak = tag.aug == AugKind::Weak;
    if (tag.role == Role::Labeled) {
      batch.slots.push_back({weak ? labeled_w[tag.group] : labeled_s[tag.group], tag});
    } else {
      const auto j = tag.unlabeled_index(mu);
      batch.slots.push_back({weak ? unlabeled_w[j] : unlabeled_s[j], tag});
    }
  }
  return batch;
}

struct AdjacencyCounts {
  std::size_t lu = 0;
  std::size_t ll = 0;
  std::size_t uu = 0;
};

/// Role pairings over the Q circular neighbour pairs (p, p+1 mod Q).
inline AdjacencyCounts count_lu_adjacencies(std::span<const SlotTag> tags) {
  AdjacencyCounts c;
  const std::size_t q = tags.size();
  for (std::size_t p = 0; p < q; ++p) {
    const Role a = tags[p].role;
    const Role b = tags[(p + 1) % q].role;
    if (a != b) {
      ++c.lu;
    } else if (a == Role::Labeled) {
      ++c.ll;
    } else {
      ++c.uu;
    }
  }
  return c;
}

template <typename T>
AdjacencyCounts count_lu_adjacencies(const OrderedBatch<T>& batch) {
  const auto tags = batch.tags();
  return count_lu_adjacencies(std::span<const SlotTag>(tags));
}

/// Routes per-slot model outputs back to their (role, aug, group, member).
template <typename T>
Grouped<T> deinterleave(std::span<const SlotTag> tags, std::size_t b, std::size_t mu,
                        std::span<const T> outputs) {
  if (outputs.size() != tags.size() || tags.size() != 2 * (1 + mu) * b) {
    throw BatchAssemblyError("deinterleave: expected " + std::to_string(2 * (1 + mu) * b) +
                             " outputs, got " + std::to_string(outputs.size()));
  }
  auto g = Grouped<T>::sized(b, mu);
  for (std::size_t p = 0; p < tags.size(); ++p) g.at(tags[p]) = outputs[p];
  return g;
}

template <typename T, typename U>
Grouped<U> deinterleave(const OrderedBatch<T>& batch, std::span<const U> outputs) {
  const auto tags = batch.tags();
  return deinterleave<U>(std::span<const SlotTag>(tags), batch.b, batch.mu, outputs);
}

/// Slot position of every (role, aug, group, member) entry.
inline Grouped<std::size_t> slot_positions(std::span<const SlotTag> tags, std::size_t b,
                                           std::size_t mu) {
  std::vector<std::size_t> idx(tags.size());
  for (std::size_t p = 0; p < idx.size(); ++p) idx[p] = p;
  return deinterleave<std::size_t>(tags, b, mu, std::span<const std::size_t>(idx));
}

}  // namespace interlude
