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
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <istream>
#include <limits>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "interlude/error.hpp"
#include "interlude/experiment.hpp"
#include "interlude/trainer.hpp"

namespace interlude {

enum class PlotKind { Sensitivity, LearningCurve, LayoutAblation };

inline std::string_view to_string(PlotKind k) {
  switch (k) {
    case PlotKind::Sensitivity: return "sensitivity";
    case PlotKind::LearningCurve: return "learning-curve";
    case PlotKind::LayoutAblation: return "layout-ablation";
  }
  return "?";
}

inline PlotKind parse_plot_kind(std::string_view s) {
  if (s == "sensitivity") return PlotKind::Sensitivity;
  if (s == "learning-curve") return PlotKind::LearningCurve;
  if (s == "layout-ablation") return PlotKind::LayoutAblation;
  throw ConfigError("plot: unknown kind '" + std::string(s) +
                    "' (expected sensitivity, learning-curve or layout-ablation)");
}

/// One plotted value. lo/hi are NaN when there is no band.
struct PlotRow {
  std::string series;
  std::string label;  // category name for bar charts
  double x = 0.0;
  double y = 0.0;
  double lo = std::numeric_limits<double>::quiet_NaN();
  double hi = std::numeric_limits<double>::quiet_NaN();
};

/// Everything a figure shows; the CSV form of this is the plot's data file.
struct PlotTable {
  PlotKind kind = PlotKind::Sensitivity;
  std::string x_label;
  std::string y_label;
  std::vector<PlotRow> rows;
};

namespace detail {

inline std::string num(double v) {
  if (std::isnan(v)) return "";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

inline std::vector<std::string> csv_split(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.push_back(std::move(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(std::move(cur));
  return out;
}

inline double parse_num(const std::string& s) {
  if (s.empty()) return std::numeric_limits<double>::quiet_NaN();
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw DataError("plot: bad number '" + s + "' in data file");
  }
}

inline std::string point_label(const json& point, const std::string& skip) {
  std::string s;
  for (auto it = point.begin(); it != point.end(); ++it) {
    if (it.key() == skip) continue;
    if (!s.empty()) s += " ";
    s += it.key() + "=" + (it->is_string() ? it->get<std::string>() : it->dump());
  }
  return s.empty() ? "all" : s;
}

inline std::string xml_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

inline std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

inline constexpr const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                                           "#9467bd", "#8c564b", "#e377c2", "#7f7f7f"};

}  // namespace detail

/// Error (%) against a swept numeric key, or per layout for the ablation
/// chart. Other swept keys become separate series.
inline PlotTable table_from_records(const std::vector<RunRecord>& records, PlotKind kind,
                                    const std::string& key) {
  if (records.empty()) throw DataError("plot: no records");
  if (kind == PlotKind::LearningCurve) {
    throw ConfigError("plot: learning curves are built from metrics, not run records");
  }
  PlotTable t;
  t.kind = kind;
  t.x_label = key;
  t.y_label = "error (%)";
  for (const auto& r : records) {
    if (!r.point.contains(key)) throw DataError("plot: record has no sweep value for '" + key + "'");
    PlotRow row;
    row.series = detail::point_label(r.point, key);
    const auto& v = r.point.at(key);
    if (kind == PlotKind::Sensitivity) {
      if (!v.is_number()) throw DataError("plot: sweep key '" + key + "' is not numeric");
      row.x = v.get<double>();
      row.label = detail::num(row.x);
    } else {
      row.label = v.is_string() ? v.get<std::string>() : v.dump();
      row.x = static_cast<double>(t.rows.size());
    }
    row.y = 100.0 * r.mean_error;
    if (!std::isnan(r.ci_half_width)) {
      row.lo = 100.0 * (r.mean_error - r.ci_half_width);
      row.hi = 100.0 * (r.mean_error + r.ci_half_width);
    }
    t.rows.push_back(std::move(row));
  }
  return t;
}

/// Evaluation error (%) against step for every record carrying one.
inline PlotTable table_from_metrics(const std::vector<MetricRecord>& metrics,
                                    const std::string& series = "run") {
  PlotTable t;
  t.kind = PlotKind::LearningCurve;
  t.x_label = "step";
  t.y_label = "error (%)";
  for (const auto& m : metrics) {
    if (std::isnan(m.eval_error)) continue;
    PlotRow row;
    row.series = series;
    row.x = static_cast<double>(m.step);
    row.label = std::to_string(m.step);
    row.y = 100.0 * m.eval_error;
    t.rows.push_back(std::move(row));
  }
  if (t.rows.empty()) throw DataError("plot: no evaluated steps in the metrics");
  return t;
}

inline void write_csv(const PlotTable& t, std::ostream& out) {
  out << "#kind," << to_string(t.kind) << '\n';
  out << "#x_label," << detail::csv_field(t.x_label) << '\n';
  out << "#y_label," << detail::csv_field(t.y_label) << '\n';
  out << "series,label,x,y,lo,hi\n";
  for (const auto& r : t.rows) {
    out << detail::csv_field(r.series) << ',' << detail::csv_field(r.label) << ','
        << detail::num(r.x) << ',' << detail::num(r.y) << ',' << detail::num(r.lo) << ','
        << detail::num(r.hi) << '\n';
  }
}

inline PlotTable read_csv(std::istream& in) {
  PlotTable t;
  std::string line;
  bool header = false;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto f = detail::csv_split(line);
    if (line[0] == '#') {
      if (f.size() != 2) throw DataError("plot: bad metadata line '" + line + "'");
      if (f[0] == "#kind") t.kind = parse_plot_kind(f[1]);
      else if (f[0] == "#x_label") t.x_label = f[1];
      else if (f[0] == "#y_label") t.y_label = f[1];
      continue;
    }
    if (!header) {
      if (line != "series,label,x,y,lo,hi") throw DataError("plot: unexpected header '" + line + "'");
      header = true;
      continue;
    }
    if (f.size() != 6) throw DataError("plot: expected 6 fields in '" + line + "'");
    t.rows.push_back({f[0], f[1], detail::parse_num(f[2]), detail::parse_num(f[3]),
                      detail::parse_num(f[4]), detail::parse_num(f[5])});
  }
  if (!header) throw DataError("plot: data file has no header");
  if (t.rows.empty()) throw DataError("plot: data file has no rows");
  return t;
}

/// SVG rendering that depends on the table alone (no clocks, no locale).
inline std::string render_svg(const PlotTable& t) {
  if (t.rows.empty()) throw DataError("plot: nothing to draw");
  constexpr double W = 640, H = 400, L = 70, R = 170, T = 30, B = 60;
  const double pw = W - L - R, ph = H - T - B;

  std::vector<std::string> series;
  for (const auto& r : t.rows) {
    if (std::find(series.begin(), series.end(), r.series) == series.end()) series.push_back(r.series);
  }
  double ylo = std::numeric_limits<double>::infinity(), yhi = -ylo;
  for (const auto& r : t.rows) {
    ylo = std::min({ylo, r.y, std::isnan(r.lo) ? r.y : r.lo});
    yhi = std::max({yhi, r.y, std::isnan(r.hi) ? r.y : r.hi});
  }
  const bool bars = t.kind == PlotKind::LayoutAblation;
  if (bars) ylo = std::min(0.0, ylo);
  if (yhi - ylo < 1e-12) {
    ylo -= 1.0;
    yhi += 1.0;
  }
  const double pad = 0.05 * (yhi - ylo);
  if (!bars || ylo < 0.0) ylo -= pad;
  yhi += pad;
  auto ypix = [&](double y) { return T + ph * (1.0 - (y - ylo) / (yhi - ylo)); };

  std::vector<std::string> cats;  // bar categories, or sorted x values
  double xlo = std::numeric_limits<double>::infinity(), xhi = -xlo;
  for (const auto& r : t.rows) {
    if (std::find(cats.begin(), cats.end(), r.label) == cats.end()) cats.push_back(r.label);
    xlo = std::min(xlo, r.x);
    xhi = std::max(xhi, r.x);
  }
  auto xpix = [&](double x) {
    if (xhi - xlo < 1e-300) return L + pw / 2.0;
    return L + pw * 0.05 + pw * 0.9 * (x - xlo) / (xhi - xlo);
  };

  std::ostringstream o;
  using detail::fmt;
  o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
    << "\" viewBox=\"0 0 " << W << ' ' << H << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  o << "<rect x=\"0\" y=\"0\" width=\"" << W << "\" height=\"" << H << "\" fill=\"white\"/>\n";
  o << "<text x=\"" << L + pw / 2 << "\" y=\"18\" text-anchor=\"middle\" font-size=\"14\">"
    << to_string(t.kind) << "</text>\n";
  // Axes and y ticks.
  o << "<line x1=\"" << L << "\" y1=\"" << T + ph << "\" x2=\"" << L + pw << "\" y2=\"" << T + ph
    << "\" stroke=\"black\"/>\n";
  o << "<line x1=\"" << L << "\" y1=\"" << T << "\" x2=\"" << L << "\" y2=\"" << T + ph
    << "\" stroke=\"black\"/>\n";
  for (int k = 0; k <= 4; ++k) {
    const double v = ylo + (yhi - ylo) * k / 4.0;
    const double py = ypix(v);
    o << "<line x1=\"" << L - 4 << "\" y1=\"" << fmt("%.2f", py) << "\" x2=\"" << L << "\" y2=\""
      << fmt("%.2f", py) << "\" stroke=\"black\"/>\n";
    o << "<text x=\"" << L - 6 << "\" y=\"" << fmt("%.2f", py + 4) << "\" text-anchor=\"end\">"
      << fmt("%.3g", v) << "</text>\n";
  }
  o << "<text x=\"" << L + pw / 2 << "\" y=\"" << H - 15 << "\" text-anchor=\"middle\">"
    << detail::xml_escape(t.x_label) << "</text>\n";
  o << "<text x=\"18\" y=\"" << T + ph / 2 << "\" text-anchor=\"middle\" transform=\"rotate(-90 18 "
    << T + ph / 2 << ")\">" << detail::xml_escape(t.y_label) << "</text>\n";

  const std::size_t ns = series.size();
  for (std::size_t si = 0; si < ns; ++si) {
    const char* color = detail::kPalette[si % std::size(detail::kPalette)];
    std::vector<const PlotRow*> rows;
    for (const auto& r : t.rows) {
      if (r.series == series[si]) rows.push_back(&r);
    }
    if (bars) {
      const double slot = pw / static_cast<double>(cats.size());
      const double bw = 0.8 * slot / static_cast<double>(ns);
      for (const auto* r : rows) {
        const auto ci = static_cast<double>(
            std::find(cats.begin(), cats.end(), r->label) - cats.begin());
        const double x0 = L + slot * ci + 0.1 * slot + bw * static_cast<double>(si);
        const double y0 = ypix(std::max(r->y, 0.0));
        const double y1 = ypix(std::min(r->y, 0.0));
        o << "<rect x=\"" << fmt("%.2f", x0) << "\" y=\"" << fmt("%.2f", y0) << "\" width=\""
          << fmt("%.2f", bw) << "\" height=\"" << fmt("%.2f", y1 - y0) << "\" fill=\"" << color
          << "\" data-value=\"" << detail::num(r->y) << "\"><title>" << detail::xml_escape(r->label)
          << ": " << detail::num(r->y) << "</title></rect>\n";
        if (!std::isnan(r->lo)) {
          const double cx = x0 + bw / 2;
          o << "<line x1=\"" << fmt("%.2f", cx) << "\" y1=\"" << fmt("%.2f", ypix(r->lo))
            << "\" x2=\"" << fmt("%.2f", cx) << "\" y2=\"" << fmt("%.2f", ypix(r->hi))
            << "\" stroke=\"black\"/>\n";
        }
      }
    } else {
      std::sort(rows.begin(), rows.end(), [](auto* a, auto* b) { return a->x < b->x; });
      bool band = rows.size() >= 2;
      for (const auto* r : rows) band = band && !std::isnan(r->lo);
      if (band) {
        o << "<polygon fill=\"" << color << "\" fill-opacity=\"0.2\" stroke=\"none\" points=\"";
        for (const auto* r : rows) o << fmt("%.2f", xpix(r->x)) << ',' << fmt("%.2f", ypix(r->hi)) << ' ';
        for (auto it = rows.rbegin(); it != rows.rend(); ++it) {
          o << fmt("%.2f", xpix((*it)->x)) << ',' << fmt("%.2f", ypix((*it)->lo)) << ' ';
        }
        o << "\"/>\n";
      }
      if (rows.size() >= 2) {
        o << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"2\" points=\"";
        for (const auto* r : rows) o << fmt("%.2f", xpix(r->x)) << ',' << fmt("%.2f", ypix(r->y)) << ' ';
        o << "\"/>\n";
      }
      for (const auto* r : rows) {
        o << "<circle cx=\"" << fmt("%.2f", xpix(r->x)) << "\" cy=\"" << fmt("%.2f", ypix(r->y))
          << "\" r=\"3\" fill=\"" << color << "\" data-value=\"" << detail::num(r->y) << "\"><title>"
          << detail::xml_escape(r->label) << ": " << detail::num(r->y) << "</title></circle>\n";
      }
    }
    const double ly = T + 14.0 * static_cast<double>(si) + 6;
    o << "<rect x=\"" << W - R + 10 << "\" y=\"" << fmt("%.2f", ly - 8) << "\" width=\"10\" height=\"10\" fill=\""
      << color << "\"/>\n";
    o << "<text x=\"" << W - R + 24 << "\" y=\"" << fmt("%.2f", ly + 1) << "\">"
      << detail::xml_escape(series[si]) << "</text>\n";
  }
  // x tick labels: categories for bars, distinct x values otherwise.
  for (std::size_t k = 0; k < cats.size(); ++k) {
    double px = 0.0;
    if (bars) {
      px = L + pw / static_cast<double>(cats.size()) * (static_cast<double>(k) + 0.5);
    } else {
      for (const auto& r : t.rows) {
        if (r.label == cats[k]) px = xpix(r.x);
      }
    }
    o << "<text x=\"" << fmt("%.2f", px) << "\" y=\"" << T + ph + 16 << "\" text-anchor=\"middle\">"
      << detail::xml_escape(cats[k]) << "</text>\n";
  }
  o << "</svg>\n";
  return o.str();
}

struct PlotFiles {
  std::filesystem::path svg;
  std::filesystem::path csv;
};

/// Writes <prefix>.csv and <prefix>.svg; the SVG is rendered from the CSV
/// just written, so regenerate_plot reproduces it byte for byte.
inline PlotFiles emit_plots(const PlotTable& t, const std::filesystem::path& prefix) {
  if (t.rows.empty()) throw DataError("plot: empty input");
  PlotFiles f{prefix, prefix};
  f.svg += ".svg";
  f.csv += ".csv";
  if (prefix.has_parent_path()) std::filesystem::create_directories(prefix.parent_path());
  {
    std::ofstream out(f.csv, std::ios::trunc);
    if (!out) throw DataError("plot: cannot write " + f.csv.string());
    write_csv(t, out);
  }
  std::ifstream in(f.csv);
  const auto svg = render_svg(read_csv(in));
  std::ofstream(f.svg, std::ios::trunc | std::ios::binary) << svg;
  return f;
}

inline std::string regenerate_plot(const std::filesystem::path& csv) {
  std::ifstream in(csv);
  if (!in) throw DataError("plot: cannot open " + csv.string());
  return render_svg(read_csv(in));
}

}  // namespace interlude
