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
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "interlude/interlude.hpp"

namespace fs = std::filesystem;
using namespace interlude;

namespace {

struct Common {
  std::string config;
  std::string preset;
  std::vector<std::string> overrides;
};

json preset_override(const std::string& p) {
  std::vector<std::string> names;
  std::string cur;
  for (char ch : p + ",") {
    if (ch == ',') {
      if (!cur.empty()) names.push_back(cur);
      cur.clear();
    } else {
      cur += ch;
    }
  }
  return names;
}

ResolvedConfig resolve(const Common& c) {
  json doc = c.config.empty() ? json::object() : read_config_document(c.config);
  json over = parse_overrides(c.overrides);
  if (!c.preset.empty()) over["preset"] = preset_override(c.preset);
  return resolve_config(doc, over);
}

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("-c,--config", c.config, "JSON config file");
  cmd->add_option("-p,--preset", c.preset,
                  "preset(s), comma separated: cnn-cifar10, cnn-small, vit, mlp-moons, "
                  "interlude-plus, supervised, fully-supervised");
  cmd->allow_extras();
}

/// Remaining "--key=value" / "key=value" tokens become config overrides.
std::vector<std::string> extras_as_overrides(const CLI::App* cmd) {
  std::vector<std::string> out;
  for (const auto& e : cmd->remaining()) {
    if (e.find('=') == std::string::npos) throw ConfigError("unrecognised argument '" + e + "'");
    out.push_back(e);
  }
  return out;
}

void print_eval(const char* what, const EvalResult& e) {
  std::printf("%s error %.4f (", what, e.error_rate);
  for (std::size_t c = 0; c < e.per_class_error.size(); ++c) {
    std::printf("%sclass %zu: %.4f", c ? ", " : "", c, e.per_class_error[c]);
  }
  std::printf(")\n");
}

int cmd_validate(const Common& c, const std::string& out) {
  const auto rc = resolve(c);
  std::cout << to_json(rc).dump(2) << "\nconfig hash " << config_hash(rc) << '\n';
  if (!out.empty()) {
    fs::create_directories(out);
    std::ofstream(fs::path(out) / "config.json") << to_json(rc).dump(2) << '\n';
  }
  return 0;
}

int cmd_split(const Common& c, const std::string& out) {
  const auto rc = resolve(c);
  const auto data = load_data(rc.data);
  if (out.empty() || out == "-") {
    write_split_manifest(std::cout, data.split);
  } else {
    std::ofstream f(out);
    if (!f) throw DataError("cannot write " + out);
    write_split_manifest(f, data.split);
  }
  std::fprintf(stderr, "labeled %zu, unlabeled %zu, classes %zu\n", data.split.labeled.size(),
               data.split.unlabeled.size(), data.split.num_classes);
  return 0;
}

int cmd_train(const Common& c, std::string run_dir, bool no_resume, bool quiet) {
  const auto rc = resolve(c);
  if (run_dir.empty()) run_dir = (default_run_root() / ("train-" + config_hash(rc))).string();
  const auto data = load_data(rc.data);
  RunOptions opt;
  opt.run_dir = run_dir;
  opt.resume = !no_resume;
  const auto every = std::max<std::uint64_t>(1, rc.train.steps / 20);
  opt.on_record = [&](const MetricRecord& r) {
    if (quiet) return;
    if (r.step % every == 0 || !std::isnan(r.eval_error)) {
      std::fprintf(stderr, "step %llu lr %.5f loss %.5f (sup %.4f unsup %.4f dc %.4f saf %.4f) mask %.3f",
                   static_cast<unsigned long long>(r.step), r.lr, r.loss.total, r.loss.l_sup,
                   r.loss.l_unsup, r.loss.l_dc, r.loss.l_saf, r.loss.mask_rate);
      if (!std::isnan(r.eval_error)) std::fprintf(stderr, " eval_error %.4f", r.eval_error);
      std::fprintf(stderr, "\n");
    }
  };
  const auto res = run_training(rc, data, opt);
  std::printf("run dir %s\n", run_dir.c_str());
  print_eval("final (EMA)", res.final_eval);
  if (res.best_state) print_eval("best-by-validation", res.best_eval);
  return 0;
}

int cmd_eval(const std::string& checkpoint, const Common& c, bool live) {
  auto ck = load_checkpoint(checkpoint);
  ResolvedConfig rc = from_json(ck.config);
  if (!c.overrides.empty() || !c.config.empty() || !c.preset.empty()) {
    // Data selection may be changed for evaluation; the model must not.
    json doc = to_json(rc);
    doc.erase("preset");
    json over = parse_overrides(c.overrides);
    if (!c.config.empty()) {
      for (auto& [k, v] : detail::flatten(read_config_document(c.config)).items()) over[k] = v;
    }
    rc = resolve_config(doc, over);
  }
  const auto data = load_data(rc.data);
  const Trainer trainer(rc.train, data.split.shape, data.split.num_classes);
  trainer.check_state(ck.state);
  std::printf("checkpoint step %llu\n", static_cast<unsigned long long>(ck.state.step));
  print_eval(live ? "live model" : "EMA model", trainer.evaluate(ck.state, data.test, !live));
  return 0;
}

int cmd_sweep(const std::string& spec_path, const std::string& root) {
  const auto spec = parse_experiment(read_config_document(spec_path));
  ExperimentOptions opt;
  if (!root.empty()) opt.root = root;
  opt.log = [](const std::string& m) { std::fprintf(stderr, "%s\n", m.c_str()); };
  const auto records = run_experiment(spec, opt);
  std::printf("records in %s\n", (experiment_dir(spec, opt.root) / "records.jsonl").c_str());
  for (const auto& r : records) {
    std::printf("%-40s error %.2f%%", r.point.dump().c_str(), 100.0 * r.mean_error);
    if (!std::isnan(r.ci_half_width)) std::printf(" +- %.2f", 100.0 * r.ci_half_width);
    std::printf("  (%zu seeds%s)\n", r.seeds.size(), r.cached ? ", cached" : "");
  }
  return 0;
}

int cmd_plot(const std::string& kind, const std::string& records, const std::string& metrics,
             const std::string& from_csv, const std::string& key, const std::string& out) {
  if (!from_csv.empty()) {
    const auto svg = regenerate_plot(from_csv);
    fs::path target = out.empty() ? fs::path(from_csv).replace_extension(".svg") : fs::path(out + ".svg");
    std::ofstream(target, std::ios::binary) << svg;
    std::printf("%s\n", target.c_str());
    return 0;
  }
  if (out.empty()) throw ConfigError("plot: --out prefix is required");
  PlotTable table;
  const auto k = parse_plot_kind(kind);
  if (k == PlotKind::LearningCurve) {
    if (metrics.empty()) throw ConfigError("plot: learning-curve needs --metrics");
    std::ifstream in(metrics);
    if (!in) throw DataError("cannot open " + metrics);
    std::vector<MetricRecord> m;
    std::string line;
    while (std::getline(in, line)) {
      if (!line.empty()) m.push_back(metric_from_json(json::parse(line), false));
    }
    table = table_from_metrics(m, fs::path(metrics).parent_path().filename().string());
  } else {
    if (records.empty()) throw ConfigError("plot: " + kind + " needs --records");
    const std::string axis = key.empty() ? (k == PlotKind::LayoutAblation ? "layout" : "") : key;
    if (axis.empty()) throw ConfigError("plot: sensitivity needs --key");
    table = table_from_records(read_records(records), k, axis);
  }
  const auto files = emit_plots(table, out);
  std::printf("%s\n%s\n", files.svg.c_str(), files.csv.c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"InterLUDE semi-supervised training harness"};
  app.require_subcommand(1);

  Common common;
  std::string out, run_dir, checkpoint, spec, root, kind, records, metrics, from_csv, key;
  bool no_resume = false, quiet = false, live = false;

  auto* validate = app.add_subcommand("validate-config", "resolve and print a config");
  add_common(validate, common);
  validate->add_option("-o,--out", out, "directory to write the resolved config.json into");

  auto* split = app.add_subcommand("split", "write the labeled/unlabeled split manifest");
  add_common(split, common);
  split->add_option("-o,--out", out, "manifest path (default stdout)");

  auto* train = app.add_subcommand("train", "run training");
  add_common(train, common);
  train->add_option("--run-dir", run_dir, "run directory (default $INTERLUDE_RUN_ROOT/train-<hash>)");
  train->add_flag("--no-resume", no_resume, "ignore an existing checkpoint");
  train->add_flag("-q,--quiet", quiet, "no progress lines");

  auto* eval = app.add_subcommand("eval", "evaluate a checkpoint on its test set");
  add_common(eval, common);
  eval->add_option("--checkpoint", checkpoint, "checkpoint file")->required();
  eval->add_flag("--live", live, "evaluate the live weights instead of the EMA model");

  auto* sweep = app.add_subcommand("sweep", "run an experiment spec (seeds x sweep grid)");
  sweep->add_option("spec", spec, "experiment JSON")->required();
  sweep->add_option("--root", root, "run root (default $INTERLUDE_RUN_ROOT or ./runs)");

  auto* plot = app.add_subcommand("plot", "emit an SVG plot plus its CSV data file");
  plot->add_option("--kind", kind, "sensitivity, learning-curve or layout-ablation");
  plot->add_option("--records", records, "records.jsonl from a sweep");
  plot->add_option("--metrics", metrics, "metrics.jsonl from a run");
  plot->add_option("--from-csv", from_csv, "re-render an SVG from a plot data file");
  plot->add_option("--key", key, "swept config key for the x axis");
  plot->add_option("-o,--out", out, "output prefix");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : static_cast<int>(ExitCode::kConfigError);
  }

  try {
    auto with_extras = [&](CLI::App* cmd) {
      common.overrides = extras_as_overrides(cmd);
    };
    if (validate->parsed()) {
      with_extras(validate);
      return cmd_validate(common, out);
    }
    if (split->parsed()) {
      with_extras(split);
      return cmd_split(common, out);
    }
    if (train->parsed()) {
      with_extras(train);
      return cmd_train(common, run_dir, no_resume, quiet);
    }
    if (eval->parsed()) {
      with_extras(eval);
      return cmd_eval(checkpoint, common, live);
    }
    if (sweep->parsed()) return cmd_sweep(spec, root);
    if (plot->parsed()) return cmd_plot(kind, records, metrics, from_csv, key, out);
  } catch (const interlude::Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return static_cast<int>(e.exit_code());
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
