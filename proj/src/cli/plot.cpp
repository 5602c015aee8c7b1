// Copyright 2026 The vdeblur Authors
// SPDX-License-Identifier: Apache-2.0

#include "vdb/plot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "vdb/errors.hpp"

namespace vdb::cli {

namespace {

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (c == '<') out += "&lt;";
    else if (c == '>') out += "&gt;";
    else if (c == '&') out += "&amp;";
    else out += c;
  }
  return out;
}

bool powers_of_two(const std::vector<double>& x) {
  for (double v : x) {
    if (v <= 0) return false;
    const double l = std::log2(v);
    if (std::abs(l - std::round(l)) > 1e-12) return false;
  }
  return true;
}

}  // namespace

std::string svg_line_plot(const std::string& title, const std::string& note,
                          const std::string& x_label,
                          const std::vector<double>& x,
                          const std::vector<Series>& series) {
  constexpr double kPanelW = 260, kPanelH = 200, kMargin = 50, kTop = 60;
  const double width = kMargin + series.size() * (kPanelW + kMargin);
  const double height = kTop + kPanelH + 60;
  const bool log_x = powers_of_two(x);
  std::vector<double> xs = x;
  if (log_x)
    for (double& v : xs) v = std::log2(v);
  const double x_lo = xs.empty() ? 0 : *std::min_element(xs.begin(), xs.end());
  const double x_hi = xs.empty() ? 1 : *std::max_element(xs.begin(), xs.end());

  std::string svg = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" +
                    num(width) + "\" height=\"" + num(height) +
                    "\" font-family=\"sans-serif\" font-size=\"11\">\n";
  svg += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  svg += "<text x=\"" + num(kMargin) + "\" y=\"20\" font-size=\"14\">" +
         escape(title) + "</text>\n";
  svg += "<text x=\"" + num(kMargin) + "\" y=\"38\" fill=\"#555\">" +
         escape(note) + "</text>\n";

  for (std::size_t s = 0; s < series.size(); ++s) {
    const Series& ser = series[s];
    const double left = kMargin + s * (kPanelW + kMargin);
    std::vector<double> finite;
    for (double v : ser.y)
      if (std::isfinite(v)) finite.push_back(v);
    double y_lo = finite.empty() ? 0 : *std::min_element(finite.begin(), finite.end());
    double y_hi = finite.empty() ? 1 : *std::max_element(finite.begin(), finite.end());
    if (y_hi - y_lo < 1e-12) {
      y_lo -= 0.5;
      y_hi += 0.5;
    }
    auto px = [&](double v) {
      return left + (x_hi > x_lo ? (v - x_lo) / (x_hi - x_lo) : 0.5) * kPanelW;
    };
    auto py = [&](double v) {
      return kTop + kPanelH - (v - y_lo) / (y_hi - y_lo) * kPanelH;
    };
    svg += "<rect x=\"" + num(left) + "\" y=\"" + num(kTop) + "\" width=\"" +
           num(kPanelW) + "\" height=\"" + num(kPanelH) +
           "\" fill=\"none\" stroke=\"#888\"/>\n";
    svg += "<text x=\"" + num(left) + "\" y=\"" + num(kTop - 6) + "\">" +
           escape(ser.name) + "</text>\n";
    svg += "<text x=\"" + num(left - 4) + "\" y=\"" + num(kTop + 10) +
           "\" text-anchor=\"end\">" + num(y_hi) + "</text>\n";
    svg += "<text x=\"" + num(left - 4) + "\" y=\"" + num(kTop + kPanelH) +
           "\" text-anchor=\"end\">" + num(y_lo) + "</text>\n";
    std::string points;
    for (std::size_t i = 0; i < xs.size() && i < ser.y.size(); ++i) {
      if (!std::isfinite(ser.y[i])) continue;
      points += num(px(xs[i])) + "," + num(py(ser.y[i])) + " ";
      svg += "<circle cx=\"" + num(px(xs[i])) + "\" cy=\"" + num(py(ser.y[i])) +
             "\" r=\"3\" fill=\"#1f5fa8\"/>\n";
    }
    svg += "<polyline fill=\"none\" stroke=\"#1f5fa8\" stroke-width=\"1.5\" points=\"" +
           points + "\"/>\n";
    for (std::size_t i = 0; i < xs.size(); ++i)
      svg += "<text x=\"" + num(px(xs[i])) + "\" y=\"" +
             num(kTop + kPanelH + 16) + "\" text-anchor=\"middle\">" +
             num(x[i]) + "</text>\n";
    svg += "<text x=\"" + num(left + kPanelW / 2) + "\" y=\"" +
           num(kTop + kPanelH + 34) + "\" text-anchor=\"middle\">" +
           escape(x_label) + "</text>\n";
  }
  svg += "</svg>\n";
  return svg;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  out << text;
  if (!out) throw UsageError("cannot write " + path.string());
}

}  // namespace vdb::cli
