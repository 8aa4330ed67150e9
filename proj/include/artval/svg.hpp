#pragma once

// Minimal SVG charts: line, bar and scatter series on linear axes. Output
// depends only on the input data.

#include "artval/core.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <string>
#include <vector>

namespace artval::svg {

enum class SeriesKind { line, bar, scatter };

struct Series {
  std::string name;
  SeriesKind kind = SeriesKind::line;
  std::vector<double> x, y;
  std::vector<std::string> labels;  // bar charts: one tick label per bar
};

struct Chart {
  std::string title, x_label, y_label;
  std::vector<Series> series;
  int width = 640, height = 420;
  bool zero_line = false;  // horizontal rule at y = 0
};

namespace detail {

inline std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", std::abs(v) < 0.005 ? 0.0 : v);
  return buf;
}

inline std::string tick(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", std::abs(v) < 1e-12 ? 0.0 : v);
  return buf;
}

inline std::string escape(const std::string& s) {
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

inline const char* color(std::size_t k) {
  static const char* palette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd",
                                  "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};
  return palette[k % 10];
}

}  // namespace detail

inline std::string render(const Chart& c) {
  using detail::num;
  double x0 = std::numeric_limits<double>::infinity(), x1 = -x0, y0 = x0, y1 = -x0;
  bool any_bar = false;
  for (const auto& s : c.series) {
    require(s.x.size() == s.y.size(), ErrorKind::invalid_argument, "svg: series '" + s.name + "' x/y length mismatch");
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) continue;
      x0 = std::min(x0, s.x[i]);
      x1 = std::max(x1, s.x[i]);
      y0 = std::min(y0, s.y[i]);
      y1 = std::max(y1, s.y[i]);
    }
    any_bar = any_bar || s.kind == SeriesKind::bar;
  }
  if (!std::isfinite(x0)) x0 = 0, x1 = 1, y0 = 0, y1 = 1;
  if (any_bar || c.zero_line) y0 = std::min(y0, 0.0), y1 = std::max(y1, 0.0);
  if (any_bar) x0 -= 0.5, x1 += 0.5;
  if (x1 - x0 < 1e-12) x0 -= 0.5, x1 += 0.5;
  if (y1 - y0 < 1e-12) y0 -= 0.5, y1 += 0.5;
  const double pad = 0.05 * (y1 - y0);
  y1 += pad;
  if (y0 < 0) y0 -= pad;

  const double left = 70, right = 20, top = 40, bottom = 60;
  const double pw = c.width - left - right, ph = c.height - top - bottom;
  auto px = [&](double x) { return left + (x - x0) / (x1 - x0) * pw; };
  auto py = [&](double y) { return top + (1.0 - (y - y0) / (y1 - y0)) * ph; };

  std::string o;
  o += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + std::to_string(c.width) + "\" height=\"" +
       std::to_string(c.height) + "\" font-family=\"sans-serif\" font-size=\"11\">\n";
  o += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  o += "<text x=\"" + num(c.width / 2.0) + "\" y=\"20\" text-anchor=\"middle\" font-size=\"14\">" +
       detail::escape(c.title) + "</text>\n";
  o += "<rect x=\"" + num(left) + "\" y=\"" + num(top) + "\" width=\"" + num(pw) + "\" height=\"" + num(ph) +
       "\" fill=\"none\" stroke=\"#333\"/>\n";
  for (int k = 0; k <= 4; ++k) {
    const double yv = y0 + (y1 - y0) * k / 4.0;
    o += "<line x1=\"" + num(left - 4) + "\" y1=\"" + num(py(yv)) + "\" x2=\"" + num(left) + "\" y2=\"" +
         num(py(yv)) + "\" stroke=\"#333\"/>\n";
    o += "<text x=\"" + num(left - 6) + "\" y=\"" + num(py(yv) + 4) + "\" text-anchor=\"end\">" + detail::tick(yv) +
         "</text>\n";
  }
  const Series* labelled = nullptr;
  for (const auto& s : c.series)
    if (s.kind == SeriesKind::bar && !s.labels.empty()) labelled = &s;
  if (labelled) {
    for (std::size_t i = 0; i < labelled->x.size() && i < labelled->labels.size(); ++i) {
      const double xv = px(labelled->x[i]), yv = top + ph + 12;
      o += "<text x=\"" + num(xv) + "\" y=\"" + num(yv) + "\" text-anchor=\"end\" transform=\"rotate(-35 " + num(xv) +
           " " + num(yv) + ")\">" + detail::escape(labelled->labels[i]) + "</text>\n";
    }
  } else {
    for (int k = 0; k <= 4; ++k) {
      const double xv = x0 + (x1 - x0) * k / 4.0;
      o += "<text x=\"" + num(px(xv)) + "\" y=\"" + num(top + ph + 16) + "\" text-anchor=\"middle\">" +
           detail::tick(xv) + "</text>\n";
    }
  }
  o += "<text x=\"" + num(left + pw / 2) + "\" y=\"" + num(c.height - 8.0) + "\" text-anchor=\"middle\">" +
       detail::escape(c.x_label) + "</text>\n";
  o += "<text x=\"14\" y=\"" + num(top + ph / 2) + "\" text-anchor=\"middle\" transform=\"rotate(-90 14 " +
       num(top + ph / 2) + ")\">" + detail::escape(c.y_label) + "</text>\n";
  if (c.zero_line || any_bar)
    o += "<line x1=\"" + num(left) + "\" y1=\"" + num(py(0)) + "\" x2=\"" + num(left + pw) + "\" y2=\"" + num(py(0)) +
         "\" stroke=\"#999\" stroke-dasharray=\"4 3\"/>\n";

  std::size_t n_bar_series = 0;
  for (const auto& s : c.series) n_bar_series += s.kind == SeriesKind::bar;
  std::size_t bar_k = 0;
  for (std::size_t k = 0; k < c.series.size(); ++k) {
    const auto& s = c.series[k];
    const std::string col = detail::color(k);
    if (s.kind == SeriesKind::line) {
      std::string pts;
      for (std::size_t i = 0; i < s.x.size(); ++i) {
        if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) continue;
        pts += (pts.empty() ? "" : " ") + num(px(s.x[i])) + "," + num(py(s.y[i]));
      }
      o += "<polyline fill=\"none\" stroke=\"" + col + "\" stroke-width=\"1.5\" points=\"" + pts + "\"/>\n";
    } else if (s.kind == SeriesKind::scatter) {
      for (std::size_t i = 0; i < s.x.size(); ++i) {
        if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) continue;
        o += "<circle cx=\"" + num(px(s.x[i])) + "\" cy=\"" + num(py(s.y[i])) + "\" r=\"2\" fill=\"" + col +
             "\" fill-opacity=\"0.6\"/>\n";
      }
    } else {
      // bars share each unit-wide slot between the bar series
      double slot = pw / (x1 - x0) * 0.8;
      const double w = slot / static_cast<double>(std::max<std::size_t>(1, n_bar_series));
      for (std::size_t i = 0; i < s.x.size(); ++i) {
        if (!std::isfinite(s.y[i])) continue;
        const double xl = px(s.x[i]) - slot / 2 + w * static_cast<double>(bar_k);
        const double ya = py(std::max(0.0, s.y[i])), yb = py(std::min(0.0, s.y[i]));
        o += "<rect x=\"" + num(xl) + "\" y=\"" + num(ya) + "\" width=\"" + num(w) + "\" height=\"" + num(yb - ya) +
             "\" fill=\"" + col + "\"/>\n";
      }
      ++bar_k;
    }
  }
  // legend
  double ly = top + 14;
  for (std::size_t k = 0; k < c.series.size(); ++k) {
    if (c.series[k].name.empty()) continue;
    o += "<rect x=\"" + num(left + pw - 150) + "\" y=\"" + num(ly - 9) + "\" width=\"10\" height=\"10\" fill=\"" +
         detail::color(k) + "\"/>\n";
    o += "<text x=\"" + num(left + pw - 135) + "\" y=\"" + num(ly) + "\">" + detail::escape(c.series[k].name) +
         "</text>\n";
    ly += 15;
  }
  o += "</svg>\n";
  return o;
}

// Equal-width bin counts; values outside [lo, hi] are ignored.
struct Histogram {
  std::vector<double> edges;  // bins + 1
  std::vector<double> counts;
};

inline Histogram histogram(const std::vector<double>& v, int bins, double lo, double hi) {
  require(bins > 0 && hi > lo, ErrorKind::invalid_argument, "histogram: need bins > 0 and hi > lo");
  Histogram h;
  h.counts.assign(static_cast<std::size_t>(bins), 0.0);
  for (int k = 0; k <= bins; ++k) h.edges.push_back(lo + (hi - lo) * k / bins);
  for (double x : v) {
    if (!std::isfinite(x) || x < lo || x > hi) continue;
    auto k = static_cast<int>((x - lo) / (hi - lo) * bins);
    h.counts[static_cast<std::size_t>(std::min(k, bins - 1))] += 1;
  }
  return h;
}

inline Histogram histogram(const std::vector<double>& v, int bins) {
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (double x : v)
    if (std::isfinite(x)) lo = std::min(lo, x), hi = std::max(hi, x);
  if (!std::isfinite(lo)) lo = 0, hi = 1;
  if (hi - lo < 1e-12) lo -= 0.5, hi += 0.5;
  return histogram(v, bins, lo, hi);
}

// Normalized to a density so histograms with different n overlay.
inline Series histogram_series(const std::string& name, const Histogram& h) {
  Series s;
  s.name = name;
  s.kind = SeriesKind::line;
  double total = 0;
  for (double c : h.counts) total += c;
  const double width = h.edges.size() > 1 ? h.edges[1] - h.edges[0] : 1.0;
  for (std::size_t k = 0; k < h.counts.size(); ++k) {
    s.x.push_back(0.5 * (h.edges[k] + h.edges[k + 1]));
    s.y.push_back(total > 0 ? h.counts[k] / (total * width) : 0.0);
  }
  return s;
}

}  // namespace artval::svg
