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
#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <regex>
#include <sstream>

#include "interlude/experiment.hpp"
#include "interlude/plot.hpp"

using namespace interlude;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  auto p = fs::temp_directory_path() / ("interlude_experiment_" + name);
  fs::remove_all(p);
  return p;
}

json tiny_config() {
  return json::parse(R"({"preset": "mlp-moons",
    "train": {"steps": 6, "batch_size": 2, "mu": 2, "eval_every": 0},
    "model": {"hidden": [4]},
    "data": {"n_unlabeled": 16, "n_test": 20}})");
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST(ConfidenceInterval, Values) {
  auto ci = confidence_interval({0.1, 0.2, 0.3});
  EXPECT_NEAR(ci.mean, 0.2, 1e-15);
  EXPECT_NEAR(ci.half_width, 1.96 * 0.1 / std::sqrt(3.0), 1e-15);
  auto one = confidence_interval({0.4});
  EXPECT_TRUE(std::isnan(one.half_width));
  EXPECT_THROW(confidence_interval({}), NumericError);
}

TEST(Experiment, ParseAndSweepPoints) {
  auto s = parse_experiment(json{{"name", "dc"},
                                 {"seeds", {0, 1}},
                                 {"sweep", {{"loss.lambda_dc", {0.1, 0.5}}, {"fusion.alpha", {0.1, 0.2, 0.3}}}}});
  // Object keys come back sorted, so fusion.alpha is the slow axis here.
  auto pts = sweep_points(s);
  ASSERT_EQ(pts.size(), 6u);
  EXPECT_EQ(pts[0]["fusion.alpha"], 0.1);
  EXPECT_EQ(pts[1]["fusion.alpha"], 0.1);
  EXPECT_EQ(pts[1]["loss.lambda_dc"], 0.5);
  EXPECT_EQ(pts[2]["fusion.alpha"], 0.2);

  auto listed = parse_experiment(json{{"sweep",
                                       {{{"key", "loss.lambda_dc"}, {"values", {0.1, 0.5}}},
                                        {{"key", "fusion.alpha"}, {"values", {0.1, 0.2, 0.3}}}}}});
  pts = sweep_points(listed);
  ASSERT_EQ(pts.size(), 6u);
  EXPECT_EQ(pts[1]["fusion.alpha"], 0.2);
  EXPECT_EQ(pts[3]["loss.lambda_dc"], 0.5);
  EXPECT_EQ(sweep_points(parse_experiment(json::object())).size(), 1u);
}

TEST(Experiment, ParseErrors) {
  EXPECT_THROW(parse_experiment(json{{"seeds", {1, 1}}}), ConfigError);
  EXPECT_THROW(parse_experiment(json{{"seeds", json::array()}}), ConfigError);
  EXPECT_THROW(parse_experiment(json{{"sweep", {{"loss.nope", {1}}}}}), ConfigError);
  EXPECT_THROW(parse_experiment(json{{"sweep", {{"loss.lambda_dc", json::array()}}}}), ConfigError);
  EXPECT_THROW(parse_experiment(json{{"runs", 3}}), ConfigError);
  EXPECT_THROW(parse_experiment(json::array()), ConfigError);
}

TEST(Experiment, RunRoot) {
  ::setenv(kRunRootEnv, "/tmp/somewhere", 1);
  EXPECT_EQ(default_run_root(), fs::path("/tmp/somewhere"));
  ::unsetenv(kRunRootEnv);
  EXPECT_EQ(default_run_root(), fs::path("runs"));
}

TEST(Experiment, ThreeSeedsNoSweep) {
  auto root = scratch("seeds");
  auto s = parse_experiment(json{{"name", "seeds"}, {"config", tiny_config()}, {"seeds", {0, 1, 2}}});
  auto recs = run_experiment(s, {root, {}});
  ASSERT_EQ(recs.size(), 1u);
  ASSERT_EQ(recs[0].best_errors.size(), 3u);
  auto ci = confidence_interval(recs[0].best_errors);
  EXPECT_DOUBLE_EQ(recs[0].mean_error, ci.mean);
  EXPECT_DOUBLE_EQ(recs[0].ci_half_width, ci.half_width);
  fs::remove_all(root);
}

TEST(Experiment, SweepFiveValuesThenCached) {
  auto root = scratch("sweep");
  auto s = parse_experiment(json{{"name", "dc"},
                                 {"config", tiny_config()},
                                 {"seeds", {0}},
                                 {"sweep", {{"loss.lambda_dc", {0.0, 0.25, 0.5, 1.0, 2.0}}}}});
  auto first = run_experiment(s, {root, {}});
  ASSERT_EQ(first.size(), 5u);
  for (const auto& r : first) EXPECT_FALSE(r.cached);
  const auto dir = experiment_dir(s, root);
  const auto before = slurp(dir / "records.jsonl");
  const auto stamp = fs::last_write_time(dir / "records.jsonl");
  auto again = run_experiment(s, {root, {}});
  ASSERT_EQ(again.size(), 5u);
  for (std::size_t k = 0; k < 5; ++k) {
    EXPECT_TRUE(again[k].cached);
    EXPECT_EQ(again[k].final_errors, first[k].final_errors);
    EXPECT_EQ(again[k].point, first[k].point);
  }
  EXPECT_EQ(slurp(dir / "records.jsonl"), before);
  EXPECT_EQ(fs::last_write_time(dir / "records.jsonl"), stamp);
  EXPECT_EQ(read_records(dir / "records.jsonl").size(), 5u);
  fs::remove_all(root);
}

TEST(Experiment, BadPointFailsBeforeRunning) {
  auto root = scratch("bad");
  auto s = parse_experiment(json{{"config", tiny_config()}, {"sweep", {{"fusion.alpha", {0.1, 0.7}}}}});
  EXPECT_THROW(run_experiment(s, {root, {}}), ConfigError);
  EXPECT_FALSE(fs::exists(experiment_dir(s, root)));
  fs::remove_all(root);
}

TEST(Plot, LayoutBarsMatchCsv) {
  std::vector<RunRecord> recs;
  const char* names[] = {"low_i", "high_i1", "high_i2", "high_i3"};
  for (int k = 0; k < 4; ++k) {
    RunRecord r;
    r.point = {{"layout", names[k]}};
    r.mean_error = 0.1 + 0.013 * k;
    r.ci_half_width = 0.01;
    recs.push_back(r);
  }
  auto t = table_from_records(recs, PlotKind::LayoutAblation, "layout");
  auto prefix = scratch("plots") / "layout";
  auto files = emit_plots(t, prefix);
  std::ifstream in(files.csv);
  auto back = read_csv(in);
  ASSERT_EQ(back.rows.size(), 4u);
  const std::string svg = slurp(files.svg);
  std::regex value_re("<rect [^>]*data-value=\"([^\"]+)\"");
  std::vector<double> plotted;
  for (std::sregex_iterator it(svg.begin(), svg.end(), value_re), end; it != end; ++it) {
    plotted.push_back(std::stod((*it)[1].str()));
  }
  ASSERT_EQ(plotted.size(), 4u);
  for (int k = 0; k < 4; ++k) {
    EXPECT_EQ(plotted[k], back.rows[k].y);
    EXPECT_EQ(back.rows[k].y, 100.0 * recs[k].mean_error);
    EXPECT_EQ(back.rows[k].label, names[k]);
  }
  EXPECT_EQ(regenerate_plot(files.csv), svg);
  EXPECT_EQ(render_svg(t), svg);
  fs::remove_all(prefix.parent_path());
}

TEST(Plot, SensitivityBandAndSinglePoint) {
  std::vector<RunRecord> recs;
  for (double a : {0.05, 0.1, 0.2, 0.3}) {
    RunRecord r;
    r.point = {{"fusion.alpha", a}};
    r.mean_error = 0.2 - a / 4;
    r.ci_half_width = 0.02;
    recs.push_back(r);
  }
  auto svg = render_svg(table_from_records(recs, PlotKind::Sensitivity, "fusion.alpha"));
  EXPECT_NE(svg.find("<polygon"), std::string::npos);
  auto single = render_svg(table_from_records({recs[0]}, PlotKind::Sensitivity, "fusion.alpha"));
  EXPECT_EQ(single.find("<polygon"), std::string::npos);
  EXPECT_NE(single.find("data-value"), std::string::npos);
  EXPECT_THROW(table_from_records(recs, PlotKind::Sensitivity, "loss.tau"), DataError);
  EXPECT_THROW(table_from_records({}, PlotKind::Sensitivity, "fusion.alpha"), DataError);
}

TEST(Plot, LearningCurveFromMetrics) {
  std::vector<MetricRecord> ms(10);
  for (std::size_t k = 0; k < ms.size(); ++k) {
    ms[k].step = k + 1;
    if ((k + 1) % 5 == 0) ms[k].eval_error = 0.5 / (k + 1);
  }
  auto t = table_from_metrics(ms);
  ASSERT_EQ(t.rows.size(), 2u);
  EXPECT_EQ(t.rows[1].x, 10.0);
  EXPECT_DOUBLE_EQ(t.rows[1].y, 5.0);
  std::stringstream ss;
  write_csv(t, ss);
  auto back = read_csv(ss);
  EXPECT_EQ(render_svg(back), render_svg(t));
  EXPECT_THROW(table_from_metrics(std::vector<MetricRecord>(3)), DataError);
}

TEST(Plot, CsvErrors) {
  std::stringstream bad("#kind,sensitivity\nx,y\n1,2\n");
  EXPECT_THROW(read_csv(bad), DataError);
  std::stringstream empty("series,label,x,y,lo,hi\n");
  EXPECT_THROW(read_csv(empty), DataError);
  EXPECT_THROW(parse_plot_kind("pie"), ConfigError);
}

TEST(SampleConfigs, AllResolve) {
  const fs::path root = fs::path(INTERLUDE_SOURCE_DIR) / "configs";
  std::size_t n = 0;
  for (const auto& e : fs::directory_iterator(root)) {
    if (e.path().extension() != ".json") continue;
    SCOPED_TRACE(e.path().string());
    EXPECT_NO_THROW(resolve_config(read_config_document(e.path())));
    ++n;
  }
  for (const auto& e : fs::directory_iterator(root / "experiments")) {
    SCOPED_TRACE(e.path().string());
    const auto spec = parse_experiment(read_config_document(e.path()));
    for (const auto& p : sweep_points(spec)) {
      for (auto seed : spec.seeds) EXPECT_NO_THROW(resolve_run(spec, p, seed));
    }
    ++n;
  }
  EXPECT_GE(n, 7u);
}
