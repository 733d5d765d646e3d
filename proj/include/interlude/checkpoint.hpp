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

#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <limits>
#include <string>
#include <vector>

#include <json.hpp>

#include "interlude/error.hpp"
#include "interlude/trainer.hpp"

namespace interlude {

inline constexpr std::string_view kCheckpointMagic = "INTERLUDE-CKPT-v1";

/// Checkpoint layout:
///   magic line "INTERLUDE-CKPT-v1\n"
///   u64 header length, JSON header (step, shapes, adaptive scalars,
///   optimizer step count, metric history, resolved config)
///   raw little-endian doubles for every tensor listed in the header.
namespace detail {

inline nlohmann::json shapes_of(const std::vector<Tensor>& ts) {
  auto arr = nlohmann::json::array();
  for (const auto& t : ts) arr.push_back(t.shape);
  return arr;
}

inline nlohmann::json nan_to_null(double v) {
  return std::isnan(v) ? nlohmann::json(nullptr) : nlohmann::json(v);
}

inline double null_to_nan(const nlohmann::json& j) {
  return j.is_null() ? std::numeric_limits<double>::quiet_NaN() : j.get<double>();
}

}  // namespace detail

inline nlohmann::json to_json(const MetricRecord& r) {
  return {{"step", r.step},
          {"lr", r.lr},
          {"l_sup", r.loss.l_sup},
          {"l_unsup", r.loss.l_unsup},
          {"l_dc", r.loss.l_dc},
          {"l_saf", r.loss.l_saf},
          {"total", r.loss.total},
          {"mask_rate", r.loss.mask_rate},
          {"tau_global", detail::nan_to_null(r.tau_global)},
          {"eval_error", detail::nan_to_null(r.eval_error)}};
}

inline MetricRecord metric_from_json(const nlohmann::json& j, bool plus_mode) {
  MetricRecord r;
  r.step = j.at("step").get<std::uint64_t>();
  r.lr = j.at("lr").get<double>();
  r.loss.l_sup = j.at("l_sup").get<double>();
  r.loss.l_unsup = j.at("l_unsup").get<double>();
  r.loss.l_dc = j.at("l_dc").get<double>();
  r.loss.l_saf = j.at("l_saf").get<double>();
  r.loss.total = j.at("total").get<double>();
  r.loss.mask_rate = j.at("mask_rate").get<double>();
  r.loss.plus_mode = plus_mode;
  r.tau_global = detail::null_to_nan(j.at("tau_global"));
  r.eval_error = detail::null_to_nan(j.at("eval_error"));
  return r;
}

inline void save_checkpoint(const std::filesystem::path& path, const TrainState& s,
                            const nlohmann::json& config, bool plus_mode) {
  nlohmann::json h;
  h["step"] = s.step;
  h["plus_mode"] = plus_mode;
  h["config"] = config;
  h["shapes"] = {{"params", detail::shapes_of(s.model.params)},
                 {"buffers", detail::shapes_of(s.model.buffers)}};
  h["ema_decay"] = s.ema.decay;
  h["optimizer_steps"] = s.optimizer.steps;
  h["adaptive"] = {{"classes", s.adaptive.classes},
                   {"momentum", s.adaptive.momentum},
                   {"step", s.adaptive.step}};
  auto hist = nlohmann::json::array();
  for (const auto& r : s.history) hist.push_back(to_json(r));
  h["history"] = std::move(hist);
  const std::string header = h.dump();

  std::vector<double> raw;
  auto put = [&](const std::vector<Tensor>& ts) {
    for (const auto& t : ts) raw.insert(raw.end(), t.data.begin(), t.data.end());
  };
  put(s.model.params);
  put(s.model.buffers);
  put(s.ema.shadow.params);
  put(s.ema.shadow.buffers);
  put(s.optimizer.first);
  put(s.optimizer.second);
  raw.push_back(s.adaptive.tau_global);
  raw.insert(raw.end(), s.adaptive.p_tilde.begin(), s.adaptive.p_tilde.end());
  raw.insert(raw.end(), s.adaptive.h_tilde.begin(), s.adaptive.h_tilde.end());

  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("checkpoint: cannot write " + tmp.string());
    out << kCheckpointMagic << '\n';
    const std::uint64_t len = header.size();
    out.write(reinterpret_cast<const char*>(&len), sizeof len);
    out.write(header.data(), static_cast<std::streamsize>(header.size()));
    out.write(reinterpret_cast<const char*>(raw.data()),
              static_cast<std::streamsize>(raw.size() * sizeof(double)));
    if (!out) throw DataError("checkpoint: write failed for " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw DataError("checkpoint: cannot move into place " + path.string() + ": " + ec.message());
}

struct Checkpoint {
  TrainState state;
  nlohmann::json config;
};

inline Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("checkpoint: cannot open " + path.string());
  std::string magic;
  std::getline(in, magic);
  if (magic != kCheckpointMagic) {
    throw DataError("checkpoint: " + path.string() + " is not an " + std::string(kCheckpointMagic) + " file");
  }
  std::uint64_t len = 0;
  in.read(reinterpret_cast<char*>(&len), sizeof len);
  if (!in || len > (1ULL << 32)) throw DataError("checkpoint: corrupt header length");
  std::string header(len, '\0');
  in.read(header.data(), static_cast<std::streamsize>(len));
  if (!in) throw DataError("checkpoint: truncated header");

  Checkpoint ck;
  auto& s = ck.state;
  try {
    const auto h = nlohmann::json::parse(header);
    ck.config = h.at("config");
    s.step = h.at("step").get<std::uint64_t>();
    const bool plus = h.at("plus_mode").get<bool>();
    auto make = [](const nlohmann::json& shapes) {
      std::vector<Tensor> ts;
      for (const auto& sh : shapes) ts.emplace_back(sh.get<std::vector<std::size_t>>());
      return ts;
    };
    s.model.params = make(h.at("shapes").at("params"));
    s.model.buffers = make(h.at("shapes").at("buffers"));
    s.ema.decay = h.at("ema_decay").get<double>();
    s.ema.shadow = s.model;
    s.optimizer = nn::OptimizerState::zeros_like(s.model.params);
    s.optimizer.steps = h.at("optimizer_steps").get<std::uint64_t>();
    const auto& a = h.at("adaptive");
    s.adaptive.classes = a.at("classes").get<std::size_t>();
    s.adaptive.momentum = a.at("momentum").get<double>();
    s.adaptive.step = a.at("step").get<std::uint64_t>();
    s.adaptive.p_tilde.assign(s.adaptive.classes, 0.0);
    s.adaptive.h_tilde.assign(s.adaptive.classes, 0.0);
    for (const auto& r : h.at("history")) s.history.push_back(metric_from_json(r, plus));
  } catch (const nlohmann::json::exception& e) {
    throw DataError("checkpoint: bad header in " + path.string() + ": " + e.what());
  }

  auto get = [&](std::vector<Tensor>& ts) {
    for (auto& t : ts) {
      in.read(reinterpret_cast<char*>(t.data.data()),
              static_cast<std::streamsize>(t.data.size() * sizeof(double)));
    }
  };
  get(s.model.params);
  get(s.model.buffers);
  get(s.ema.shadow.params);
  get(s.ema.shadow.buffers);
  get(s.optimizer.first);
  get(s.optimizer.second);
  in.read(reinterpret_cast<char*>(&s.adaptive.tau_global), sizeof(double));
  in.read(reinterpret_cast<char*>(s.adaptive.p_tilde.data()),
          static_cast<std::streamsize>(s.adaptive.classes * sizeof(double)));
  in.read(reinterpret_cast<char*>(s.adaptive.h_tilde.data()),
          static_cast<std::streamsize>(s.adaptive.classes * sizeof(double)));
  if (!in) throw DataError("checkpoint: truncated tensor data in " + path.string());
  if (in.peek() != std::char_traits<char>::eof()) {
    throw DataError("checkpoint: trailing bytes in " + path.string());
  }
  return ck;
}

}  // namespace interlude
