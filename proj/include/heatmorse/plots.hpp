#pragma once

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <set>
#include <string>
#include <vector>

#include "heatmorse/error.hpp"
#include "heatmorse/experiments.hpp"

namespace heatmorse {

/// Round-trip formatting so CSVs regenerate byte-identically.
inline std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

struct Series {
  std::string label;
  std::vector<double> x, y;
};

struct ChartSpec {
  std::string title, x_label, y_label;
  bool log_y = false;
  std::vector<Series> series;
  std::string annotation;
};

namespace detail {

inline std::string xml_escape(const std::string& s) {
  std::string out;
  for (char c : s) switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  return out;
}

inline void write_text(const std::filesystem::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw DomainError("cannot write '" + p.string() + "'");
  out << text;
  if (!out) throw DomainError("write failed for '" + p.string() + "'");
}

}  // namespace detail

/// Plain SVG line chart; fixed layout so output depends only on the data.
inline std::string svg_line_chart(const ChartSpec& c) {
  constexpr double W = 640, H = 420, L = 70, R = 20, T = 40, B = 50;
  static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e"};
  double x0 = std::numeric_limits<double>::infinity(), x1 = -x0, y0 = x0, y1 = -x0;
  auto ty = [&](double v) { return c.log_y ? std::log10(v) : v; };
  for (const auto& s : c.series)
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if (c.log_y && !(s.y[i] > 0)) continue;
      x0 = std::min(x0, s.x[i]), x1 = std::max(x1, s.x[i]);
      y0 = std::min(y0, ty(s.y[i])), y1 = std::max(y1, ty(s.y[i]));
    }
  if (!std::isfinite(x0)) x0 = 0, x1 = 1, y0 = 0, y1 = 1;
  if (x1 == x0) x0 -= 0.5, x1 += 0.5;
  if (y1 == y0) y0 -= 0.5, y1 += 0.5;
  auto px = [&](double v) { return L + (v - x0) / (x1 - x0) * (W - L - R); };
  auto py = [&](double v) { return H - B - (ty(v) - y0) / (y1 - y0) * (H - T - B); };

  std::string s = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"640\" height=\"420\" viewBox=\"0 0 640 420\">\n";
  s += "<rect width=\"640\" height=\"420\" fill=\"white\"/>\n";
  s += "<text x=\"320\" y=\"24\" text-anchor=\"middle\" font-size=\"16\">" + detail::xml_escape(c.title) + "</text>\n";
  s += "<line x1=\"70\" y1=\"370\" x2=\"620\" y2=\"370\" stroke=\"black\"/>\n";
  s += "<line x1=\"70\" y1=\"40\" x2=\"70\" y2=\"370\" stroke=\"black\"/>\n";
  s += "<text x=\"345\" y=\"405\" text-anchor=\"middle\" font-size=\"13\">" + detail::xml_escape(c.x_label) + "</text>\n";
  s += "<text x=\"18\" y=\"205\" text-anchor=\"middle\" font-size=\"13\" transform=\"rotate(-90 18 205)\">" +
       detail::xml_escape(c.y_label + (c.log_y ? " (log10)" : "")) + "</text>\n";
  char buf[160];
  for (int k = 0; k <= 4; ++k) {
    const double xv = x0 + (x1 - x0) * k / 4, yv = y0 + (y1 - y0) * k / 4;
    const double xp = L + (W - L - R) * k / 4, yp = H - B - (H - T - B) * k / 4;
    std::snprintf(buf, sizeof buf, "<text x=\"%.2f\" y=\"388\" text-anchor=\"middle\" font-size=\"11\">%.3g</text>\n", xp, xv);
    s += buf;
    std::snprintf(buf, sizeof buf, "<text x=\"64\" y=\"%.2f\" text-anchor=\"end\" font-size=\"11\">%.3g</text>\n", yp + 4, yv);
    s += buf;
  }
  for (std::size_t k = 0; k < c.series.size(); ++k) {
    const auto& ser = c.series[k];
    const char* color = colors[k % 5];
    std::string pts;
    for (std::size_t i = 0; i < ser.x.size(); ++i) {
      if (c.log_y && !(ser.y[i] > 0)) continue;
      std::snprintf(buf, sizeof buf, "%.2f,%.2f ", px(ser.x[i]), py(ser.y[i]));
      pts += buf;
    }
    s += "<polyline fill=\"none\" stroke=\"" + std::string(color) + "\" stroke-width=\"1.5\" points=\"" + pts + "\"/>\n";
    std::snprintf(buf, sizeof buf, "<text x=\"%.0f\" y=\"%.0f\" font-size=\"12\" fill=\"%s\">", W - R - 150, T + 16.0 + 16.0 * k,
                  color);
    s += buf + detail::xml_escape(ser.label) + "</text>\n";
  }
  if (!c.annotation.empty())
    s += "<text x=\"80\" y=\"60\" font-size=\"12\">" + detail::xml_escape(c.annotation) + "</text>\n";
  s += "</svg>\n";
  return s;
}

namespace detail {

inline std::string base_name(const ExperimentRecord& r, std::size_t index) {
  std::string name = r.kind + "_" + (r.id.empty() ? std::to_string(index) : r.id);
  for (char& ch : name)
    if (!(std::isalnum(static_cast<unsigned char>(ch)) || ch == '_' || ch == '-')) ch = '_';
  return name;
}

inline std::string b(bool v) { return v ? "1" : "0"; }

inline void emit_transition(const ExperimentRecord& r, const std::filesystem::path& stem, std::vector<std::string>& out) {
  const auto& o = r.outcome;
  const auto t = o.at("t_grid").get<std::vector<double>>();
  const auto counts = o.at("counts").get<std::vector<long>>();
  const auto morse = o.at("is_morse").get<std::vector<bool>>();
  const auto minimal = o.at("minimal_flags").get<std::vector<bool>>();
  const auto conf = o.at("confidence").get<std::vector<std::string>>();
  std::string csv = "t,count,is_morse,is_minimal,confidence\n";
  Series s{"critical points", {}, {}};
  for (std::size_t i = 0; i < t.size(); ++i) {
    csv += fmt17(t[i]) + "," + std::to_string(counts[i]) + "," + b(morse[i]) + "," + b(minimal[i]) + "," + conf[i] + "\n";
    s.x.push_back(t[i]);
    s.y.push_back(static_cast<double>(counts[i]));
  }
  write_text(stem.string() + ".csv", csv);
  ChartSpec chart{"Critical points along the heat flow", "t", "count", false, {s}, ""};
  if (o.at("T_estimate").is_number()) chart.annotation = "T = " + fmt17(o.at("T_estimate").get<double>());
  write_text(stem.string() + ".svg", svg_line_chart(chart));
  out.push_back(stem.string() + ".csv");
  out.push_back(stem.string() + ".svg");
}

inline void emit_decay(const ExperimentRecord& r, const std::filesystem::path& stem, std::vector<std::string>& out) {
  const auto& o = r.outcome;
  const auto t = o.at("times").get<std::vector<double>>();
  const auto res = o.at("residuals").get<std::vector<double>>();
  std::string csv = "t,residual\n";
  for (std::size_t i = 0; i < t.size(); ++i) csv += fmt17(t[i]) + "," + fmt17(res[i]) + "\n";
  write_text(stem.string() + ".csv", csv);
  char note[128];
  std::snprintf(note, sizeof note, "slope %.6g, expected %.6g", o.at("slope").get<double>(),
                -o.at("expected_gap").get<double>());
  ChartSpec chart{"Renormalized residual", "t", "C^r residual", true, {{"residual", t, res}}, note};
  write_text(stem.string() + ".svg", svg_line_chart(chart));
  out.push_back(stem.string() + ".csv");
  out.push_back(stem.string() + ".svg");
}

inline void emit_sweep(const ExperimentRecord& r, const std::filesystem::path& stem, std::vector<std::string>& out) {
  std::string csv = "seed,generic,minimal_at_t_probe,count\n";
  Series s{"count at t_probe", {}, {}};
  for (const auto& row : r.outcome.at("rows")) {
    const auto seed = row.at("seed").get<std::uint64_t>();
    const auto count = row.at("count").get<long>();
    csv += std::to_string(seed) + "," + b(row.at("generic").get<bool>()) + "," + b(row.at("minimal").get<bool>()) + "," +
           std::to_string(count) + "\n";
    s.x.push_back(static_cast<double>(seed));
    s.y.push_back(static_cast<double>(count));
  }
  write_text(stem.string() + ".csv", csv);
  char note[128];
  std::snprintf(note, sizeof note, "generic %.4g, minimal among generic %.4g",
                r.outcome.at("fraction_generic").get<double>(),
                r.outcome.at("fraction_minimal_among_generic").get<double>());
  write_text(stem.string() + ".svg", svg_line_chart({"Genericity sweep", "seed", "critical points", false, {s}, note}));
  out.push_back(stem.string() + ".csv");
  out.push_back(stem.string() + ".svg");
}

inline void emit_stability(const ExperimentRecord& r, const std::filesystem::path& stem, std::vector<std::string>& out) {
  const auto& o = r.outcome;
  const auto eps = o.at("epsilons").get<std::vector<double>>();
  const auto counts = o.at("counts").get<std::vector<std::vector<long>>>();
  const auto agreement = o.at("agreement").get<std::vector<double>>();
  std::string csv = "epsilon,trial,count,agreement\n";
  for (std::size_t e = 0; e < eps.size(); ++e)
    for (std::size_t i = 0; i < counts[e].size(); ++i)
      csv += fmt17(eps[e]) + "," + std::to_string(i) + "," + std::to_string(counts[e][i]) + "," + fmt17(agreement[e]) + "\n";
  write_text(stem.string() + ".csv", csv);
  write_text(stem.string() + ".svg",
             svg_line_chart({"Count agreement under perturbation", "epsilon", "agreement", false,
                             {{"agreement", eps, agreement}},
                             "base count " + std::to_string(o.at("base_count").get<long>())}));
  out.push_back(stem.string() + ".csv");
  out.push_back(stem.string() + ".svg");
}

}  // namespace detail

/// Writes one CSV and one SVG per record into out_dir; returns the paths.
inline std::vector<std::string> emit_plots(const std::vector<ExperimentRecord>& records, const std::string& out_dir) {
  if (records.empty()) throw DomainError("no experiment records to plot");
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec || !std::filesystem::is_directory(out_dir)) throw DomainError("cannot create output directory '" + out_dir + "'");
  std::vector<std::string> paths;
  std::set<std::string> used;
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto& r = records[i];
    std::string name = detail::base_name(r, i);
    if (!used.insert(name).second) name += "_" + std::to_string(i);
    const auto stem = std::filesystem::path(out_dir) / name;
    try {
      if (r.kind == "transition")
        detail::emit_transition(r, stem, paths);
      else if (r.kind == "decay")
        detail::emit_decay(r, stem, paths);
      else if (r.kind == "sweep")
        detail::emit_sweep(r, stem, paths);
      else if (r.kind == "stability")
        detail::emit_stability(r, stem, paths);
      else
        throw FormatError("unknown record kind '" + r.kind + "'");
    } catch (const nlohmann::json::exception& e) {
      throw FormatError("record " + std::to_string(i) + " is missing plot data: " + e.what());
    }
  }
  return paths;
}

}  // namespace heatmorse
