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
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "interlude/checkpoint.hpp"
#include "interlude/config.hpp"
#include "interlude/data.hpp"
#include "interlude/error.hpp"
#include "interlude/trainer.hpp"

namespace interlude {

struct TrainData {
  DatasetSplit split;
  LabeledCorpus test;
  LabeledCorpus validation;  // empty when not configured
};

namespace detail {

inline LabeledCorpus subset(const LabeledCorpus& c, std::span<const std::size_t> idx) {
  LabeledCorpus out;
  out.shape = c.shape;
  out.num_classes = c.num_classes;
  for (std::size_t i : idx) {
    out.x.push_back(c.x[i]);
    out.y.push_back(c.y[i]);
  }
  return out;
}

}  // namespace detail

/// Materializes the configured data source. Synthetic sources honour every
/// count; corpus sources use the whole training pool as unlabeled data.
inline TrainData load_data(const DataConfig& d) {
  TrainData td;
  if (d.source == "two-moons" || d.source == "two-gaussians") {
    SyntheticSpec spec{d.source, d.n_labels, d.n_unlabeled, d.n_test, d.noise, d.seed};
    auto syn = generate_synthetic(spec);
    td.split = std::move(syn.split);
    td.test = std::move(syn.test);
    if (d.fully_labeled) {
      for (std::size_t k = 0; k < td.split.unlabeled.size(); ++k) {
        const std::size_t y = syn.unlabeled_labels[k];
        td.split.labeled.push_back({td.split.unlabeled[k], y});
        td.split.labeled_source.push_back(td.split.unlabeled_source[k]);
        ++td.split.class_counts[y];
      }
    }
    td.validation.shape = td.test.shape;
    td.validation.num_classes = td.test.num_classes;
    Rng rng(derive_seed(d.seed, "validation"));
    for (std::size_t k = 0; k < d.n_validation; ++k) {
      td.validation.x.push_back(detail::synthetic_point(d.source, k % 2, d.noise, rng));
      td.validation.y.push_back(k % 2);
    }
    return td;
  }

  LabeledCorpus train;
  if (d.source == "cifar10") {
    train = load_cifar10_binary(d.path, true);
    td.test = load_cifar10_binary(d.path, false);
  } else if (d.source == "csv") {
    const LabeledCorpus all = load_csv_corpus(d.path);
    if (d.n_test >= all.size()) throw DataError("csv: n_test leaves no training data");
    std::vector<std::size_t> order(all.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    Rng rng(derive_seed(d.seed, "holdout"));
    rng.shuffle(order.begin(), order.end());
    td.test = detail::subset(all, std::span<const std::size_t>(order.data(), d.n_test));
    train = detail::subset(all, std::span<const std::size_t>(order.data() + d.n_test,
                                                             order.size() - d.n_test));
  } else {
    throw ConfigError("data: unknown source '" + d.source + "'");
  }
  if (d.n_validation > 0) {
    if (d.n_validation >= train.size()) throw DataError("data: n_validation leaves no training data");
    std::vector<std::size_t> order(train.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    Rng rng(derive_seed(d.seed, "validation"));
    rng.shuffle(order.begin(), order.end());
    td.validation = detail::subset(train, std::span<const std::size_t>(order.data(), d.n_validation));
    train = detail::subset(train, std::span<const std::size_t>(order.data() + d.n_validation,
                                                               order.size() - d.n_validation));
  }
  const std::size_t n = d.fully_labeled ? train.size() : d.n_labels;
  td.split = split_dataset(train, n, d.seed, {d.unlabeled_includes_labeled});
  return td;
}

struct RunOptions {
  /// Directory for config.json, metrics.jsonl, checkpoints and result.json;
  /// empty keeps the run in memory.
  std::filesystem::path run_dir;
  /// Continue from run_dir/checkpoint.bin when present.
  bool resume = true;
  /// Stop after this many completed steps (0: run to the end).
  std::uint64_t stop_after = 0;
  std::function<void(const MetricRecord&)> on_record;
};

struct RunResult {
  TrainState final_state;
  std::optional<TrainState> best_state;  // set when a validation set exists
  std::uint64_t best_step = 0;
  double best_validation_error = std::numeric_limits<double>::quiet_NaN();
  EvalResult final_eval;  // EMA model on the test set
  EvalResult best_eval;   // best-by-validation (else final) model on the test set
  bool completed = false;
};

namespace detail {

inline nlohmann::json config_identity(const ResolvedConfig& rc) {
  auto j = to_json(rc);
  j.erase("preset");
  return j;
}

inline void write_metrics(const std::filesystem::path& p, const std::vector<MetricRecord>& hist) {
  std::ofstream out(p, std::ios::trunc);
  if (!out) throw DataError("run: cannot write " + p.string());
  for (const auto& r : hist) out << to_json(r).dump() << '\n';
}

inline nlohmann::json eval_json(const EvalResult& e) {
  return {{"error_rate", e.error_rate}, {"per_class_error", e.per_class_error},
          {"per_class_count", e.per_class_count}};
}

}  // namespace detail

/// Loops train_step to K with periodic evaluation and checkpoints. The best
/// state is chosen by validation error when a validation set exists, else
/// the final state stands in for it.
inline RunResult run_training(const ResolvedConfig& rc, const TrainData& data,
                              const RunOptions& opt = {}) {
  const auto& cfg = rc.train;
  const Trainer trainer(cfg, data.split.shape, data.split.num_classes);
  const bool persist = !opt.run_dir.empty();
  const auto identity = detail::config_identity(rc);
  std::filesystem::path ckpt_path, best_path, metrics_path;
  if (persist) {
    std::filesystem::create_directories(opt.run_dir);
    ckpt_path = opt.run_dir / "checkpoint.bin";
    best_path = opt.run_dir / "best.bin";
    metrics_path = opt.run_dir / "metrics.jsonl";
    std::ofstream(opt.run_dir / "config.json") << to_json(rc).dump(2) << '\n';
  }

  RunResult res;
  TrainState state = trainer.initial_state();
  if (persist && opt.resume && std::filesystem::exists(ckpt_path)) {
    auto ck = load_checkpoint(ckpt_path);
    if (ck.config != identity) {
      throw ConfigError("run: checkpoint in " + opt.run_dir.string() + " was written by a different config");
    }
    trainer.check_state(ck.state);
    state = std::move(ck.state);
    if (std::filesystem::exists(best_path)) {
      auto best = load_checkpoint(best_path);
      res.best_step = best.state.step;
      if (!data.validation.x.empty()) {
        res.best_validation_error = trainer.evaluate(best.state, data.validation).error_rate;
      }
      res.best_state = std::move(best.state);
    }
  }
  if (persist) detail::write_metrics(metrics_path, state.history);

  const std::uint64_t stop =
      opt.stop_after > 0 ? std::min<std::uint64_t>(opt.stop_after, cfg.steps) : cfg.steps;
  std::ofstream metrics_out;
  if (persist) metrics_out.open(metrics_path, std::ios::app);
  const bool has_validation = !data.validation.x.empty();

  while (state.step < stop) {
    trainer.train_step(state, data.split);
    auto& rec = state.history.back();
    const bool eval_now =
        (cfg.eval_every > 0 && state.step % cfg.eval_every == 0) || state.step == cfg.steps;
    if (eval_now) {
      rec.eval_error = trainer.evaluate(state, data.test).error_rate;
      if (has_validation) {
        const double v = trainer.evaluate(state, data.validation).error_rate;
        if (!res.best_state || v < res.best_validation_error) {
          res.best_validation_error = v;
          res.best_step = state.step;
          res.best_state = state;
          res.best_state->history.clear();
          if (persist) save_checkpoint(best_path, *res.best_state, identity, cfg.plus_mode);
        }
      }
    }
    if (persist) metrics_out << to_json(rec).dump() << '\n' << std::flush;
    if (opt.on_record) opt.on_record(rec);
    const bool ckpt_now = (cfg.checkpoint_every > 0 && state.step % cfg.checkpoint_every == 0) ||
                          state.step == stop;
    if (persist && ckpt_now) save_checkpoint(ckpt_path, state, identity, cfg.plus_mode);
  }

  res.completed = state.step == cfg.steps;
  res.final_eval = trainer.evaluate(state, data.test);
  if (!has_validation) {
    res.best_step = state.step;
    res.best_eval = res.final_eval;
  } else if (res.best_state) {
    res.best_eval = trainer.evaluate(*res.best_state, data.test);
  }
  if (persist) {
    nlohmann::json r = {{"steps", state.step},
                        {"completed", res.completed},
                        {"final", detail::eval_json(res.final_eval)},
                        {"best", detail::eval_json(res.best_eval)},
                        {"best_step", res.best_step}};
    std::ofstream(opt.run_dir / "result.json") << r.dump(2) << '\n';
  }
  res.final_state = std::move(state);
  return res;
}

}  // namespace interlude
