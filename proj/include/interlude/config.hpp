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

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

#include "interlude/error.hpp"
#include "interlude/random.hpp"
#include "interlude/train_config.hpp"

namespace interlude {

using json = nlohmann::json;

// ---------------------------------------------------------------------------
// Presets. Applied in order before the document's own keys.

inline json preset_document(std::string_view name) {
  if (name == "cnn-cifar10") {
    return json::parse(R"({
      "model": {"arch": "wrn", "wrn_depth": 28, "wrn_width": 2, "bn_momentum": 0.001},
      "train": {"batch_size": 64, "mu": 7, "steps": 1048576, "lr": 0.03, "optimizer": "sgd",
                "momentum": 0.9, "nesterov": true, "weight_decay": 0.0005, "ema_decay": 0.999},
      "fusion": {"enabled": true, "alpha": 0.1},
      "loss": {"lambda_u": 1.0, "lambda_dc": 1.0, "tau": 0.95},
      "augment": {"pad": 4, "n_ops": 2, "magnitude": 10},
      "data": {"source": "cifar10", "n_labels": 40}
    })");
  }
  if (name == "cnn-small") {
    return json::parse(R"({
      "model": {"arch": "cnn", "cnn_channels": [32, 64], "activation": "relu", "bn_momentum": 0.01}
    })");
  }
  if (name == "vit") {
    return json::parse(R"({
      "train": {"batch_size": 8, "mu": 7, "lr": 0.0005, "optimizer": "adamw",
                "weight_decay": 0.0005, "ema_decay": 0.999},
      "fusion": {"enabled": true, "alpha": 0.1},
      "loss": {"lambda_dc": 0.1}
    })");
  }
  if (name == "mlp-moons") {
    return json::parse(R"({
      "model": {"arch": "mlp", "hidden": [64, 64], "activation": "relu"},
      "train": {"batch_size": 4, "mu": 7, "steps": 3000, "lr": 0.03, "optimizer": "sgd",
                "momentum": 0.9, "nesterov": true, "weight_decay": 0.0005, "ema_decay": 0.99,
                "eval_every": 500, "checkpoint_every": 0},
      "fusion": {"enabled": true, "alpha": 0.1},
      "loss": {"lambda_u": 1.0, "lambda_dc": 1.0, "tau": 0.95},
      "augment": {"jitter": 0.05, "strong_jitter_scale": 3.0},
      "data": {"source": "two-moons", "n_labels": 4, "n_unlabeled": 2000, "n_test": 1000,
               "noise": 0.1}
    })");
  }
  if (name == "interlude-plus") {
    return json::parse(R"({"plus": {"enabled": true, "lambda_saf": 0.05, "ema_momentum": 0.999}})");
  }
  if (name == "supervised") {
    return json::parse(R"({
      "fusion": {"enabled": false},
      "loss": {"lambda_u": 0.0, "lambda_dc": 0.0},
      "plus": {"enabled": false}
    })");
  }
  if (name == "fully-supervised") {
    return json::parse(R"({
      "fusion": {"enabled": false},
      "loss": {"lambda_u": 0.0, "lambda_dc": 0.0},
      "plus": {"enabled": false},
      "data": {"fully_labeled": true}
    })");
  }
  throw ConfigError("unknown preset '" + std::string(name) +
                    "' (expected cnn-cifar10, cnn-small, vit, mlp-moons, interlude-plus, "
                    "supervised or fully-supervised)");
}

// ---------------------------------------------------------------------------

namespace detail {

inline const std::set<std::string>& known_config_keys() {
  static const std::set<std::string> keys = {
      "preset", "seed", "layout",
      "model.arch", "model.hidden", "model.activation", "model.cnn_channels", "model.wrn_depth",
      "model.wrn_width", "model.bn_momentum",
      "train.batch_size", "train.mu", "train.steps", "train.lr", "train.optimizer",
      "train.momentum", "train.nesterov", "train.weight_decay", "train.decoupled_weight_decay",
      "train.ema_decay", "train.eval_every", "train.checkpoint_every",
      "fusion.enabled", "fusion.alpha",
      "loss.lambda_u", "loss.lambda_dc", "loss.lambda_saf", "loss.tau", "loss.hard_pseudo",
      "loss.stop_grad_labeled_delta",
      "plus.enabled", "plus.lambda_saf", "plus.ema_momentum", "plus.update_before_loss",
      "augment.pad", "augment.flip_prob", "augment.n_ops", "augment.magnitude", "augment.cutout",
      "augment.jitter", "augment.strong_jitter_scale",
      "data.source", "data.path", "data.n_labels", "data.n_unlabeled", "data.n_test",
      "data.noise", "data.seed", "data.unlabeled_includes_labeled", "data.fully_labeled",
      "data.n_validation"};
  return keys;
}

/// Flattens nested objects into dotted keys; arrays stay leaves.
inline void flatten_into(const json& j, const std::string& prefix, json& out) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    const std::string key = prefix.empty() ? it.key() : prefix + "." + it.key();
    if (it->is_object()) {
      flatten_into(*it, key, out);
    } else {
      out[key] = *it;
    }
  }
}

inline json flatten(const json& j) {
  if (!j.is_object()) throw ConfigError("config: top level must be an object");
  json out = json::object();
  flatten_into(j, "", out);
  return out;
}

template <typename T>
T get_as(const json& flat, const std::string& key) {
  const auto& v = flat.at(key);
  try {
    if constexpr (std::is_same_v<T, bool>) {
      if (!v.is_boolean()) throw ConfigError("");
      return v.get<bool>();
    } else if constexpr (std::is_same_v<T, std::string>) {
      if (!v.is_string()) throw ConfigError("");
      return v.get<std::string>();
    } else if constexpr (std::is_floating_point_v<T>) {
      if (!v.is_number()) throw ConfigError("");
      return v.get<T>();
    } else if constexpr (std::is_integral_v<T>) {
      if (!v.is_number_integer() || (v.is_number_integer() && v.get<long long>() < 0)) {
        throw ConfigError("");
      }
      return static_cast<T>(v.get<unsigned long long>());
    } else {
      if (!v.is_array()) throw ConfigError("");
      T out;
      for (const auto& e : v) {
        if (!e.is_number_integer() || e.get<long long>() < 0) throw ConfigError("");
        out.push_back(static_cast<typename T::value_type>(e.get<unsigned long long>()));
      }
      return out;
    }
  } catch (const ConfigError&) {
    throw ConfigError("config: key '" + key + "' has the wrong type (" + std::string(v.type_name()) + ")");
  }
}

template <typename T>
void read(const json& flat, const std::string& key, T& dst) {
  if (flat.contains(key)) dst = get_as<T>(flat, key);
}

inline std::vector<std::string> preset_list(const json& flat) {
  std::vector<std::string> names;
  if (!flat.contains("preset")) return names;
  const auto& p = flat.at("preset");
  if (p.is_string()) {
    names.push_back(p.get<std::string>());
  } else if (p.is_array()) {
    for (const auto& e : p) {
      if (!e.is_string()) throw ConfigError("config: preset list must contain strings");
      names.push_back(e.get<std::string>());
    }
  } else {
    throw ConfigError("config: preset must be a string or list of strings");
  }
  return names;
}

inline std::string join(const std::vector<std::string>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + v[i];
  return s;
}

}  // namespace detail

/// Applies a flat {dotted.key: value} document onto a resolved config.
inline void apply_flat(const json& flat, ResolvedConfig& rc) {
  for (auto it = flat.begin(); it != flat.end(); ++it) {
    if (!detail::known_config_keys().count(it.key())) {
      throw ConfigError("config: unknown key '" + it.key() + "'");
    }
  }
  using detail::read;
  auto& t = rc.train;
  auto& d = rc.data;
  read(flat, "seed", t.seed);
  if (flat.contains("layout")) t.layout = parse_layout(detail::get_as<std::string>(flat, "layout"));

  read(flat, "model.arch", t.model.arch);
  read(flat, "model.hidden", t.model.hidden);
  read(flat, "model.activation", t.model.activation);
  read(flat, "model.cnn_channels", t.model.cnn_channels);
  read(flat, "model.wrn_depth", t.model.wrn_depth);
  read(flat, "model.wrn_width", t.model.wrn_width);
  read(flat, "model.bn_momentum", t.model.bn_momentum);

  read(flat, "train.batch_size", t.batch_size);
  read(flat, "train.mu", t.mu);
  read(flat, "train.steps", t.steps);
  read(flat, "train.lr", t.lr);
  if (flat.contains("train.optimizer")) {
    t.optimizer.kind = nn::parse_optimizer(detail::get_as<std::string>(flat, "train.optimizer"));
  }
  read(flat, "train.momentum", t.optimizer.momentum);
  read(flat, "train.nesterov", t.optimizer.nesterov);
  read(flat, "train.weight_decay", t.optimizer.weight_decay);
  read(flat, "train.decoupled_weight_decay", t.optimizer.decoupled_weight_decay);
  read(flat, "train.ema_decay", t.ema_decay);
  read(flat, "train.eval_every", t.eval_every);
  read(flat, "train.checkpoint_every", t.checkpoint_every);

  read(flat, "fusion.enabled", t.fusion_enabled);
  read(flat, "fusion.alpha", t.alpha);

  read(flat, "loss.lambda_u", t.lambda_u);
  read(flat, "loss.lambda_dc", t.lambda_dc);
  if (flat.contains("loss.lambda_saf") && flat.contains("plus.lambda_saf") &&
      flat.at("loss.lambda_saf") != flat.at("plus.lambda_saf")) {
    throw ConfigError("config: loss.lambda_saf and plus.lambda_saf disagree");
  }
  read(flat, "loss.lambda_saf", t.lambda_saf);
  read(flat, "plus.lambda_saf", t.lambda_saf);
  read(flat, "loss.tau", t.tau);
  read(flat, "loss.hard_pseudo", t.hard_pseudo);
  read(flat, "loss.stop_grad_labeled_delta", t.stop_grad_labeled_delta);

  read(flat, "plus.enabled", t.plus_mode);
  read(flat, "plus.ema_momentum", t.plus_ema_momentum);
  read(flat, "plus.update_before_loss", t.sat_update_before_loss);

  read(flat, "augment.pad", t.augment.pad);
  read(flat, "augment.flip_prob", t.augment.flip_prob);
  read(flat, "augment.n_ops", t.augment.n_ops);
  read(flat, "augment.magnitude", t.augment.magnitude);
  read(flat, "augment.cutout", t.augment.cutout);
  read(flat, "augment.jitter", t.augment.jitter);
  read(flat, "augment.strong_jitter_scale", t.augment.strong_jitter_scale);

  read(flat, "data.source", d.source);
  read(flat, "data.path", d.path);
  read(flat, "data.n_labels", d.n_labels);
  read(flat, "data.n_unlabeled", d.n_unlabeled);
  read(flat, "data.n_test", d.n_test);
  read(flat, "data.noise", d.noise);
  read(flat, "data.seed", d.seed);
  read(flat, "data.unlabeled_includes_labeled", d.unlabeled_includes_labeled);
  read(flat, "data.fully_labeled", d.fully_labeled);
  read(flat, "data.n_validation", d.n_validation);
}

/// Resolves a config document: defaults, then presets in order (the
/// document's "preset" key, or default_preset when absent), then the
/// document itself, then dotted overrides. Validates ranges.
inline ResolvedConfig resolve_config(const json& doc, const json& overrides = json::object(),
                                     const std::string& default_preset = "") {
  const json flat = detail::flatten(doc.is_null() ? json::object() : doc);
  const json flat_over = detail::flatten(overrides.is_null() ? json::object() : overrides);
  auto presets = detail::preset_list(flat);
  if (flat_over.contains("preset")) presets = detail::preset_list(flat_over);
  if (presets.empty() && !default_preset.empty()) presets.push_back(default_preset);

  ResolvedConfig rc;
  rc.preset = detail::join(presets);
  for (const auto& p : presets) {
    const json pf = detail::flatten(preset_document(p));
    apply_flat(pf, rc);
  }
  json body = flat;
  body.erase("preset");
  apply_flat(body, rc);
  json over = flat_over;
  over.erase("preset");
  apply_flat(over, rc);
  rc.train.validate();

  const auto& d = rc.data;
  if (d.source != "two-moons" && d.source != "two-gaussians" && d.source != "cifar10" &&
      d.source != "csv") {
    throw ConfigError("config: data.source must be two-moons, two-gaussians, cifar10 or csv");
  }
  if ((d.source == "cifar10" || d.source == "csv") && d.path.empty()) {
    throw ConfigError("config: data.path is required for source '" + d.source + "'");
  }
  return rc;
}

/// Canonical nested document for a resolved config.
inline json to_json(const ResolvedConfig& rc) {
  const auto& t = rc.train;
  const auto& d = rc.data;
  json j;
  j["preset"] = rc.preset;
  j["seed"] = t.seed;
  j["layout"] = std::string(to_string(t.layout));
  j["model"] = {{"arch", t.model.arch},
                {"hidden", t.model.hidden},
                {"activation", t.model.activation},
                {"cnn_channels", t.model.cnn_channels},
                {"wrn_depth", t.model.wrn_depth},
                {"wrn_width", t.model.wrn_width},
                {"bn_momentum", t.model.bn_momentum}};
  j["train"] = {{"batch_size", t.batch_size},
                {"mu", t.mu},
                {"steps", t.steps},
                {"lr", t.lr},
                {"optimizer", t.optimizer.kind == nn::OptimizerKind::Sgd ? "sgd" : "adamw"},
                {"momentum", t.optimizer.momentum},
                {"nesterov", t.optimizer.nesterov},
                {"weight_decay", t.optimizer.weight_decay},
                {"decoupled_weight_decay", t.optimizer.decoupled_weight_decay},
                {"ema_decay", t.ema_decay},
                {"eval_every", t.eval_every},
                {"checkpoint_every", t.checkpoint_every}};
  j["fusion"] = {{"enabled", t.fusion_enabled}, {"alpha", t.alpha}};
  j["loss"] = {{"lambda_u", t.lambda_u},
               {"lambda_dc", t.lambda_dc},
               {"lambda_saf", t.lambda_saf},
               {"tau", t.tau},
               {"hard_pseudo", t.hard_pseudo},
               {"stop_grad_labeled_delta", t.stop_grad_labeled_delta}};
  j["plus"] = {{"enabled", t.plus_mode},
               {"ema_momentum", t.plus_ema_momentum},
               {"update_before_loss", t.sat_update_before_loss}};
  j["augment"] = {{"pad", t.augment.pad},
                  {"flip_prob", t.augment.flip_prob},
                  {"n_ops", t.augment.n_ops},
                  {"magnitude", t.augment.magnitude},
                  {"cutout", t.augment.cutout},
                  {"jitter", t.augment.jitter},
                  {"strong_jitter_scale", t.augment.strong_jitter_scale}};
  j["data"] = {{"source", d.source},
               {"path", d.path},
               {"n_labels", d.n_labels},
               {"n_unlabeled", d.n_unlabeled},
               {"n_test", d.n_test},
               {"noise", d.noise},
               {"seed", d.seed},
               {"unlabeled_includes_labeled", d.unlabeled_includes_labeled},
               {"fully_labeled", d.fully_labeled},
               {"n_validation", d.n_validation}};
  return j;
}

/// Rebuilds a config from its canonical document (presets already applied).
inline ResolvedConfig from_json(const json& j) {
  json body = j;
  const std::string preset = body.value("preset", "");
  body.erase("preset");
  auto rc = resolve_config(body);
  rc.preset = preset;
  return rc;
}

inline std::string config_hash(const ResolvedConfig& rc) {
  // Preset names are provenance only; the hash covers resolved values.
  json j = to_json(rc);
  j.erase("preset");
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(fnv1a(j.dump())));
  return buf;
}

/// Parses a config file (JSON). An empty file is an empty document.
inline json read_config_document(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  const std::string text = ss.str();
  if (text.find_first_not_of(" \t\r\n") == std::string::npos) return json::object();
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError("config: " + path.string() + " is not valid JSON: " + e.what());
  }
}

/// Turns "loss.lambda_dc=0.5" style assignments into a flat document. Values
/// parse as JSON when possible, else as strings.
inline json parse_overrides(const std::vector<std::string>& assignments) {
  json flat = json::object();
  for (std::string a : assignments) {
    if (a.rfind("--", 0) == 0) a = a.substr(2);
    const auto eq = a.find('=');
    if (eq == std::string::npos || eq == 0) {
      throw ConfigError("config: override '" + a + "' must look like key=value");
    }
    const std::string key = a.substr(0, eq);
    const std::string value = a.substr(eq + 1);
    json v = json::parse(value, nullptr, false);
    flat[key] = v.is_discarded() ? json(value) : v;
  }
  return flat;
}

}  // namespace interlude
