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

#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "interlude/config.hpp"
#include "interlude/error.hpp"
#include "interlude/random.hpp"
#include "interlude/run.hpp"

namespace interlude {

inline constexpr const char* kRunRootEnv = "INTERLUDE_RUN_ROOT";

/// Run directory root: $INTERLUDE_RUN_ROOT when set, else ./runs.
inline std::filesystem::path default_run_root() {
  const char* v = std::getenv(kRunRootEnv);
  return (v && *v) ? std::filesystem::path(v) : std::filesystem::path("runs");
}

struct SweepAxis {
  std::string key;  // dotted config key
  std::vector<json> values;
};

struct ExperimentSpec {
  std::string name = "experiment";
  json config = json::object();  // config document, may name presets
  std::vector<std::uint64_t> seeds = {0};
  std::vector<SweepAxis> sweep;
};

inline json to_json(const ExperimentSpec& s) {
  json sweep = json::array();
  for (const auto& a : s.sweep) sweep.push_back({{"key", a.key}, {"values", a.values}});
  return {{"name", s.name}, {"config", s.config}, {"seeds", s.seeds}, {"sweep", sweep}};
}

/// {"name", "config", "seeds", "sweep": {"loss.lambda_dc": [0.1, 1.0]}} or
/// the sweep as a list of {"key", "values"} objects (order is kept).
inline ExperimentSpec parse_experiment(const json& j) {
  if (!j.is_object()) throw ConfigError("experiment: document must be an object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (it.key() != "name" && it.key() != "config" && it.key() != "seeds" && it.key() != "sweep") {
      throw ConfigError("experiment: unknown key '" + it.key() + "'");
    }
  }
  ExperimentSpec s;
  try {
    if (j.contains("name")) s.name = j.at("name").get<std::string>();
    if (j.contains("config")) s.config = j.at("config");
    if (j.contains("seeds")) s.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
    if (j.contains("sweep")) {
      const auto& sw = j.at("sweep");
      if (sw.is_object()) {
        for (auto it = sw.begin(); it != sw.end(); ++it) {
          s.sweep.push_back({it.key(), it->get<std::vector<json>>()});
        }
      } else {
        for (const auto& a : sw) {
          s.sweep.push_back({a.at("key").get<std::string>(), a.at("values").get<std::vector<json>>()});
        }
      }
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("experiment: ") + e.what());
  }
  if (!s.config.is_object()) throw ConfigError("experiment: config must be an object");
  if (s.seeds.empty()) throw ConfigError("experiment: need at least one seed");
  if (std::set<std::uint64_t>(s.seeds.begin(), s.seeds.end()).size() != s.seeds.size()) {
    throw ConfigError("experiment: seeds must be distinct");
  }
  for (const auto& a : s.sweep) {
    if (a.values.empty()) throw ConfigError("experiment: sweep axis '" + a.key + "' has no values");
    if (!detail::known_config_keys().count(a.key)) {
      throw ConfigError("experiment: unknown sweep key '" + a.key + "'");
    }
  }
  return s;
}

/// Cartesian product of the sweep axes as flat override documents; the
/// first axis varies slowest. No sweep gives one empty point.
inline std::vector<json> sweep_points(const ExperimentSpec& s) {
  std::vector<json> pts{json::object()};
  for (const auto& a : s.sweep) {
    std::vector<json> next;
    for (const auto& p : pts) {
      for (const auto& v : a.values) {
        json q = p;
        q[a.key] = v;
        next.push_back(std::move(q));
      }
    }
    pts = std::move(next);
  }
  return pts;
}

inline std::string hex_hash(const std::string& s) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a(s)));
  return buf;
}

inline std::string spec_hash(const ExperimentSpec& s) { return hex_hash(to_json(s).dump()); }

struct ConfidenceInterval {
  double mean = 0.0;
  double half_width = std::numeric_limits<double>::quiet_NaN();  // NaN for n < 2
};

/// mean +- 1.96 s / sqrt(n), s the sample standard deviation.
inline ConfidenceInterval confidence_interval(const std::vector<double>& v) {
  if (v.empty()) throw NumericError("confidence interval: no values");
  ConfidenceInterval ci;
  for (double x : v) ci.mean += x;
  ci.mean /= static_cast<double>(v.size());
  if (v.size() >= 2) {
    double ss = 0.0;
    for (double x : v) ss += (x - ci.mean) * (x - ci.mean);
    const double sd = std::sqrt(ss / static_cast<double>(v.size() - 1));
    ci.half_width = 1.96 * sd / std::sqrt(static_cast<double>(v.size()));
  }
  return ci;
}

/// Outcome of one sweep point over all seeds. Error rates are fractions.
struct RunRecord {
  std::string spec_hash;
  std::string point_hash;
  json point = json::object();
  std::vector<std::uint64_t> seeds;
  std::vector<double> final_errors;
  std::vector<double> best_errors;
  double mean_error = 0.0;
  double ci_half_width = std::numeric_limits<double>::quiet_NaN();
  double wall_time_s = 0.0;
  bool cached = false;  // not persisted
};

inline json to_json(const RunRecord& r) {
  json j = {{"spec_hash", r.spec_hash}, {"point_hash", r.point_hash}, {"point", r.point},
            {"seeds", r.seeds},         {"final_errors", r.final_errors},
            {"best_errors", r.best_errors}, {"mean_error", r.mean_error},
            {"wall_time_s", r.wall_time_s}};
  j["ci_half_width"] = std::isnan(r.ci_half_width) ? json(nullptr) : json(r.ci_half_width);
  return j;
}

inline RunRecord record_from_json(const json& j) {
  RunRecord r;
  r.spec_hash = j.at("spec_hash").get<std::string>();
  r.point_hash = j.at("point_hash").get<std::string>();
  r.point = j.at("point");
  r.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
  r.final_errors = j.at("final_errors").get<std::vector<double>>();
  r.best_errors = j.at("best_errors").get<std::vector<double>>();
  r.mean_error = j.at("mean_error").get<double>();
  r.wall_time_s = j.at("wall_time_s").get<double>();
  const auto& ci = j.at("ci_half_width");
  r.ci_half_width = ci.is_null() ? std::numeric_limits<double>::quiet_NaN() : ci.get<double>();
  return r;
}

inline std::vector<RunRecord> read_records(const std::filesystem::path& path) {
  std::vector<RunRecord> out;
  std::ifstream in(path);
  if (!in) return out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(record_from_json(json::parse(line)));
    } catch (const json::exception& e) {
      throw DataError("records: bad line in " + path.string() + ": " + e.what());
    }
  }
  return out;
}

/// Resolved configuration of one (sweep point, seed) run.
inline ResolvedConfig resolve_run(const ExperimentSpec& s, const json& point, std::uint64_t seed) {
  json over = point;
  over["seed"] = seed;
  over["data.seed"] = seed;
  return resolve_config(s.config, over);
}

struct ExperimentOptions {
  std::filesystem::path root = default_run_root();
  std::function<void(const std::string&)> log;
};

inline std::filesystem::path experiment_dir(const ExperimentSpec& s, const std::filesystem::path& root) {
  return root / (s.name + "-" + spec_hash(s));
}

/// One run per (sweep point, seed). Each run lives in its own directory and
/// resumes from its checkpoint; finished points are appended to
/// records.jsonl and returned from there on later calls.
inline std::vector<RunRecord> run_experiment(const ExperimentSpec& s, const ExperimentOptions& opt = {}) {
  const auto points = sweep_points(s);
  // Resolve everything first so bad keys or values fail before any work.
  for (const auto& p : points) {
    for (auto seed : s.seeds) resolve_run(s, p, seed);
  }
  const std::string shash = spec_hash(s);
  const auto dir = experiment_dir(s, opt.root);
  std::filesystem::create_directories(dir);
  std::ofstream(dir / "spec.json") << to_json(s).dump(2) << '\n';
  const auto records_path = dir / "records.jsonl";
  const auto existing = read_records(records_path);

  std::vector<RunRecord> out;
  for (const auto& p : points) {
    const std::string phash = hex_hash(shash + p.dump());
    bool found = false;
    for (const auto& r : existing) {
      if (r.point_hash == phash) {
        out.push_back(r);
        out.back().cached = true;
        found = true;
        break;
      }
    }
    if (found) {
      if (opt.log) opt.log("cached " + p.dump());
      continue;
    }

    RunRecord rec;
    rec.spec_hash = shash;
    rec.point_hash = phash;
    rec.point = p;
    rec.seeds = s.seeds;
    const auto t0 = std::chrono::steady_clock::now();
    for (auto seed : s.seeds) {
      const auto rc = resolve_run(s, p, seed);
      if (opt.log) opt.log("run " + p.dump() + " seed " + std::to_string(seed));
      const auto data = load_data(rc.data);
      RunOptions ro;
      ro.run_dir = dir / phash / ("seed-" + std::to_string(seed));
      const auto res = run_training(rc, data, ro);
      rec.final_errors.push_back(res.final_eval.error_rate);
      rec.best_errors.push_back(res.best_eval.error_rate);
    }
    rec.wall_time_s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const auto ci = confidence_interval(rec.best_errors);
    rec.mean_error = ci.mean;
    rec.ci_half_width = ci.half_width;
    std::ofstream(records_path, std::ios::app) << to_json(rec).dump() << '\n';
    out.push_back(std::move(rec));
  }
  return out;
}

}  // namespace interlude
