#pragma once

// Minimal SVG plots: line/scatter series and grouped bars, written directly.

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "lka/error.hpp"

namespace lka::svg {

struct Series {
  std::string name;
  std::vector<double> x, y;
  bool points = false;  // scatter instead of polyline
  std::string color;    // empty: palette

  Series(std::string name, std::vector<double> x = {}, std::vector<double> y = {}, bool points = false,
         std::string color = {})
      : name(std::move(name)), x(std::move(x)), y(std::move(y)), points(points), color(std::move(color)) {}
};

inline const char* palette(std::size_t i) {
  static const char* p[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#17becf", "#7f7f7f"};
  return p[i % 8];
}

inline std::string fmt(double v) {
  std::ostringstream s;
  s.precision(4);
  s << v;
  return s.str();
}

inline std::string escape(const std::string& s) {
  std::string o;
  for (char c : s) {
    if (c == '<')
      o += "&lt;";
    else if (c == '>')
      o += "&gt;";
    else if (c == '&')
      o += "&amp;";
    else
      o += c;
  }
  return o;
}

struct Plot {
  std::string title, xlabel, ylabel;
  bool logx = false, logy = false;
  std::vector<Series> series;
  int width = 640, height = 420;

  std::string render() const {
    const double L = 70, R = 20, T = 36, B = 50;
    const double W = width - L - R, H = height - T - B;
    auto tx = [&](double v) { return logx ? std::log10(v) : v; };
    auto ty = [&](double v) { return logy ? std::log10(v) : v; };
    double x0 = std::numeric_limits<double>::infinity(), x1 = -x0, y0 = x0, y1 = -x0;
    for (const auto& s : series)
      for (std::size_t i = 0; i < s.x.size(); ++i) {
        const double a = tx(s.x[i]), b = ty(s.y[i]);
        if (!std::isfinite(a) || !std::isfinite(b)) continue;
        x0 = std::min(x0, a);
        x1 = std::max(x1, a);
        y0 = std::min(y0, b);
        y1 = std::max(y1, b);
      }
    if (!std::isfinite(x0)) x0 = 0, x1 = 1, y0 = 0, y1 = 1;
    if (x1 == x0) x1 = x0 + 1;
    if (y1 == y0) y1 = y0 + 1;
    auto px = [&](double v) { return L + (tx(v) - x0) / (x1 - x0) * W; };
    auto py = [&](double v) { return T + H - (ty(v) - y0) / (y1 - y0) * H; };
    std::ostringstream o;
    o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
      << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
    o << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    o << "<text x=\"" << width / 2 << "\" y=\"20\" text-anchor=\"middle\" font-size=\"14\">" << escape(title) << "</text>\n";
    o << "<rect x=\"" << L << "\" y=\"" << T << "\" width=\"" << W << "\" height=\"" << H
      << "\" fill=\"none\" stroke=\"black\"/>\n";
    for (int k = 0; k <= 4; ++k) {
      const double fx = x0 + (x1 - x0) * k / 4, fy = y0 + (y1 - y0) * k / 4;
      const double gx = L + W * k / 4, gy = T + H - H * k / 4;
      o << "<text x=\"" << gx << "\" y=\"" << T + H + 16 << "\" text-anchor=\"middle\">"
        << (logx ? "1e" + fmt(fx) : fmt(fx)) << "</text>\n";
      o << "<text x=\"" << L - 6 << "\" y=\"" << gy + 4 << "\" text-anchor=\"end\">" << (logy ? "1e" + fmt(fy) : fmt(fy))
        << "</text>\n";
      o << "<line x1=\"" << L << "\" x2=\"" << L + W << "\" y1=\"" << gy << "\" y2=\"" << gy
        << "\" stroke=\"#ddd\"/>\n";
    }
    o << "<text x=\"" << L + W / 2 << "\" y=\"" << height - 10 << "\" text-anchor=\"middle\">" << escape(xlabel)
      << "</text>\n";
    o << "<text x=\"14\" y=\"" << T + H / 2 << "\" text-anchor=\"middle\" transform=\"rotate(-90 14 " << T + H / 2
      << ")\">" << escape(ylabel) << "</text>\n";
    for (std::size_t k = 0; k < series.size(); ++k) {
      const auto& s = series[k];
      const std::string col = s.color.empty() ? palette(k) : s.color;
      if (s.points) {
        for (std::size_t i = 0; i < s.x.size(); ++i) {
          if (!std::isfinite(tx(s.x[i])) || !std::isfinite(ty(s.y[i]))) continue;
          o << "<circle cx=\"" << px(s.x[i]) << "\" cy=\"" << py(s.y[i]) << "\" r=\"1.6\" fill=\"" << col << "\"/>\n";
        }
      } else {
        o << "<polyline fill=\"none\" stroke=\"" << col << "\" stroke-width=\"1.2\" points=\"";
        for (std::size_t i = 0; i < s.x.size(); ++i)
          if (std::isfinite(tx(s.x[i])) && std::isfinite(ty(s.y[i]))) o << px(s.x[i]) << ',' << py(s.y[i]) << ' ';
        o << "\"/>\n";
      }
      o << "<text x=\"" << L + 10 << "\" y=\"" << T + 16 + 14 * k << "\" fill=\"" << col << "\">" << escape(s.name)
        << "</text>\n";
    }
    o << "</svg>\n";
    return o.str();
  }
};

// groups along x (e.g. thresholds), one bar per series in each group
struct Bars {
  std::string title, ylabel;
  std::vector<std::string> groups;
  std::vector<std::string> names;
  std::vector<std::vector<double>> values;  // [series][group]
  double ymax = 100.0;
  int width = 720, height = 420;

  std::string render() const {
    const double L = 60, R = 20, T = 36, B = 50;
    const double W = width - L - R, H = height - T - B;
    std::ostringstream o;
    o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
      << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
    o << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    o << "<text x=\"" << width / 2 << "\" y=\"20\" text-anchor=\"middle\" font-size=\"14\">" << escape(title) << "</text>\n";
    o << "<rect x=\"" << L << "\" y=\"" << T << "\" width=\"" << W << "\" height=\"" << H
      << "\" fill=\"none\" stroke=\"black\"/>\n";
    const double gw = groups.empty() ? W : W / double(groups.size());
    const double bw = names.empty() ? gw : 0.8 * gw / double(names.size());
    for (std::size_t g = 0; g < groups.size(); ++g) {
      o << "<text x=\"" << L + gw * (g + 0.5) << "\" y=\"" << T + H + 16 << "\" text-anchor=\"middle\">"
        << escape(groups[g]) << "</text>\n";
      for (std::size_t s = 0; s < names.size(); ++s) {
        const double v = g < values[s].size() && std::isfinite(values[s][g]) ? values[s][g] : 0.0;
        const double h = std::clamp(v / ymax, 0.0, 1.0) * H;
        o << "<rect x=\"" << L + gw * g + 0.1 * gw + bw * s << "\" y=\"" << T + H - h << "\" width=\"" << bw
          << "\" height=\"" << h << "\" fill=\"" << palette(s) << "\"/>\n";
      }
    }
    for (int k = 0; k <= 4; ++k)
      o << "<text x=\"" << L - 6 << "\" y=\"" << T + H - H * k / 4 + 4 << "\" text-anchor=\"end\">" << fmt(ymax * k / 4)
        << "</text>\n";
    o << "<text x=\"14\" y=\"" << T + H / 2 << "\" text-anchor=\"middle\" transform=\"rotate(-90 14 " << T + H / 2
      << ")\">" << escape(ylabel) << "</text>\n";
    for (std::size_t s = 0; s < names.size(); ++s)
      o << "<text x=\"" << L + 10 + 70 * s << "\" y=\"" << T + 16 << "\" fill=\"" << palette(s) << "\">"
        << escape(names[s]) << "</text>\n";
    o << "</svg>\n";
    return o.str();
  }
};

inline void write(const std::string& path, const std::string& content) {
  std::ofstream f(path);
  require(bool(f), "cannot write " + path);
  f << content;
}

}  // namespace lka::svg
