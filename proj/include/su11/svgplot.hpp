#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

#include "su11/common.hpp"

namespace su11 {

// Self-contained SVG emitters: line plots, complex-matrix cell plots with
// phase handles, grouped bar charts and heat maps with contour overlays.
// Coordinates are written with fixed precision so reruns emit identical
// bytes.
namespace svg {

inline std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

struct Series {
  std::vector<double> x, y;
  std::string label;
  std::string color = "#1f77b4";
  bool dashed = false;
};

namespace detail {

inline void axis_range(const std::vector<Series>& series, double& x0,
                       double& x1, double& y0, double& y1) {
  x0 = y0 = 1e300;
  x1 = y1 = -1e300;
  for (const Series& s : series)
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      x0 = std::min(x0, s.x[i]);
      x1 = std::max(x1, s.x[i]);
      if (std::isfinite(s.y[i])) {
        y0 = std::min(y0, s.y[i]);
        y1 = std::max(y1, s.y[i]);
      }
    }
  if (!(x1 > x0)) x1 = x0 + 1;
  if (!(y1 > y0)) y1 = y0 + 1;
  const double pad = 0.06 * (y1 - y0);
  y0 -= pad;
  y1 += pad;
}

inline std::string esc(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (c == '&') out += "&amp;";
    else if (c == '<') out += "&lt;";
    else if (c == '>') out += "&gt;";
    else out += c;
  }
  return out;
}

// perceptually ordered dark-blue -> yellow map
inline std::string colormap(double t) {
  t = std::clamp(t, 0.0, 1.0);
  static const double stops[5][3] = {{68, 1, 84},
                                     {59, 82, 139},
                                     {33, 145, 140},
                                     {94, 201, 98},
                                     {253, 231, 37}};
  const double x = t * 4;
  const int k = std::min(3, static_cast<int>(x));
  const double f = x - k;
  char buf[24];
  std::snprintf(buf, sizeof buf, "#%02x%02x%02x",
                static_cast<int>(stops[k][0] + f * (stops[k + 1][0] - stops[k][0])),
                static_cast<int>(stops[k][1] + f * (stops[k + 1][1] - stops[k][1])),
                static_cast<int>(stops[k][2] + f * (stops[k + 1][2] - stops[k][2])));
  return buf;
}

}  // namespace detail

// Line plot with axes, ticks and an optional pair of vertical marker
// lines (used for support margins).
inline void line_plot(const std::string& path, const std::vector<Series>& series,
                      const std::string& title, const std::string& xlabel,
                      const std::string& ylabel,
                      const std::vector<double>& vmarks = {}) {
  const double W = 640, H = 420, L = 70, R = 20, T = 36, Bm = 48;
  double x0, x1, y0, y1;
  detail::axis_range(series, x0, x1, y0, y1);
  auto px = [&](double x) { return L + (x - x0) / (x1 - x0) * (W - L - R); };
  auto py = [&](double y) { return H - Bm - (y - y0) / (y1 - y0) * (H - T - Bm); };

  std::ofstream f(path, std::ios::binary);
  if (!f) throw config_error("svg: cannot open " + path);
  f << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W
    << "\" height=\"" << H << "\" viewBox=\"0 0 " << W << " " << H << "\">\n";
  f << "<rect width=\"" << W << "\" height=\"" << H << "\" fill=\"white\"/>\n";
  f << "<text x=\"" << W / 2 << "\" y=\"20\" text-anchor=\"middle\" font-size=\"14\">"
    << detail::esc(title) << "</text>\n";

  // frame and ticks
  f << "<rect x=\"" << L << "\" y=\"" << T << "\" width=\"" << W - L - R
    << "\" height=\"" << H - T - Bm
    << "\" fill=\"none\" stroke=\"black\" stroke-width=\"1\"/>\n";
  for (int k = 0; k <= 5; ++k) {
    const double xv = x0 + (x1 - x0) * k / 5;
    const double yv = y0 + (y1 - y0) * k / 5;
    f << "<line x1=\"" << svg::num(px(xv)) << "\" y1=\"" << H - Bm << "\" x2=\""
      << svg::num(px(xv)) << "\" y2=\"" << H - Bm + 5 << "\" stroke=\"black\"/>\n";
    char lab[32];
    std::snprintf(lab, sizeof lab, "%.4g", xv);
    f << "<text x=\"" << svg::num(px(xv)) << "\" y=\"" << H - Bm + 18
      << "\" text-anchor=\"middle\" font-size=\"11\">" << lab << "</text>\n";
    f << "<line x1=\"" << L - 5 << "\" y1=\"" << svg::num(py(yv)) << "\" x2=\"" << L
      << "\" y2=\"" << svg::num(py(yv)) << "\" stroke=\"black\"/>\n";
    std::snprintf(lab, sizeof lab, "%.4g", yv);
    f << "<text x=\"" << L - 8 << "\" y=\"" << svg::num(py(yv) + 4)
      << "\" text-anchor=\"end\" font-size=\"11\">" << lab << "</text>\n";
  }
  f << "<text x=\"" << (L + W - R) / 2 << "\" y=\"" << H - 12
    << "\" text-anchor=\"middle\" font-size=\"12\">" << detail::esc(xlabel)
    << "</text>\n";
  f << "<text x=\"16\" y=\"" << (T + H - Bm) / 2
    << "\" text-anchor=\"middle\" font-size=\"12\" transform=\"rotate(-90 16 "
    << (T + H - Bm) / 2 << ")\">" << detail::esc(ylabel) << "</text>\n";

  for (double xm : vmarks)
    f << "<line x1=\"" << svg::num(px(xm)) << "\" y1=\"" << T << "\" x2=\""
      << svg::num(px(xm)) << "\" y2=\"" << H - Bm
      << "\" stroke=\"#999999\" stroke-dasharray=\"4 3\"/>\n";

  int li = 0;
  for (const Series& s : series) {
    std::string pts;
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if (!std::isfinite(s.y[i])) continue;
      pts += svg::num(px(s.x[i])) + "," + svg::num(py(s.y[i])) + " ";
    }
    f << "<polyline points=\"" << pts << "\" fill=\"none\" stroke=\"" << s.color
      << "\" stroke-width=\"1.5\""
      << (s.dashed ? " stroke-dasharray=\"6 4\"" : "") << "/>\n";
    if (!s.label.empty()) {
      const double ly = T + 16 + 16 * li;
      f << "<line x1=\"" << W - R - 150 << "\" y1=\"" << ly << "\" x2=\""
        << W - R - 122 << "\" y2=\"" << ly << "\" stroke=\"" << s.color
        << "\" stroke-width=\"1.5\"" << (s.dashed ? " stroke-dasharray=\"6 4\"" : "")
        << "/>\n";
      f << "<text x=\"" << W - R - 116 << "\" y=\"" << ly + 4
        << "\" font-size=\"11\">" << detail::esc(s.label) << "</text>\n";
    }
    ++li;
  }
  f << "</svg>\n";
}

// Complex-matrix cell plot: cell color encodes the modulus, the handle
// from the cell center points along the complex phase (right = positive
// real, up = positive imaginary). Handles below handle_floor are omitted.
inline void cell_plot(const std::string& path, const MatrixXcd& M,
                      const std::string& title, double handle_floor = 0.02) {
  const int m = static_cast<int>(M.rows());
  const double cell = std::max(14.0, 360.0 / std::max(m, 1));
  const double L = 50, T = 46;
  const double W = L + m * cell + 20, H = T + m * cell + 30;
  double vmax = 0;
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j) vmax = std::max(vmax, std::abs(M(i, j)));
  if (vmax <= 0) vmax = 1;

  std::ofstream f(path, std::ios::binary);
  if (!f) throw config_error("svg: cannot open " + path);
  f << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\""
    << H << "\" viewBox=\"0 0 " << W << " " << H << "\">\n";
  f << "<rect width=\"" << W << "\" height=\"" << H << "\" fill=\"white\"/>\n";
  f << "<text x=\"" << W / 2 << "\" y=\"20\" text-anchor=\"middle\" font-size=\"13\">"
    << detail::esc(title) << "</text>\n";
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j) {
      const double a = std::abs(M(i, j)) / vmax;
      const double x = L + j * cell, y = T + i * cell;
      f << "<rect x=\"" << svg::num(x) << "\" y=\"" << svg::num(y) << "\" width=\""
        << svg::num(cell) << "\" height=\"" << svg::num(cell) << "\" fill=\""
        << detail::colormap(a) << "\"/>\n";
      if (std::abs(M(i, j)) >= handle_floor * vmax && std::abs(M(i, j)) > 0) {
        const double ang = std::arg(M(i, j));
        const double cx = x + cell / 2, cy = y + cell / 2;
        const double r = 0.42 * cell;
        f << "<line x1=\"" << svg::num(cx) << "\" y1=\"" << svg::num(cy)
          << "\" x2=\"" << svg::num(cx + r * std::cos(ang)) << "\" y2=\""
          << svg::num(cy - r * std::sin(ang))
          << "\" stroke=\"white\" stroke-width=\"1.2\"/>\n";
      }
    }
  for (int k = 0; k < m; k += std::max(1, m / 8)) {
    f << "<text x=\"" << svg::num(L + (k + 0.5) * cell) << "\" y=\"" << T - 6
      << "\" text-anchor=\"middle\" font-size=\"10\">" << k << "</text>\n";
    f << "<text x=\"" << L - 6 << "\" y=\"" << svg::num(T + (k + 0.7) * cell)
      << "\" text-anchor=\"end\" font-size=\"10\">" << k << "</text>\n";
  }
  f << "</svg>\n";
}

// Grouped bar chart: one group per mode, one bar per method.
inline void bar_chart(const std::string& path,
                      const std::vector<std::string>& method_labels,
                      const std::vector<std::vector<double>>& per_mode,
                      const std::string& title, const std::string& ylabel) {
  const int groups = static_cast<int>(per_mode.size());
  const int bars = groups ? static_cast<int>(per_mode[0].size()) : 0;
  const double W = 680, H = 400, L = 60, R = 20, T = 40, Bm = 44;
  double y0 = 0, y1 = 0;
  for (const auto& g : per_mode)
    for (double v : g) {
      if (!std::isfinite(v)) continue;
      y0 = std::min(y0, v);
      y1 = std::max(y1, v);
    }
  if (!(y1 > y0)) y1 = y0 + 1;
  const double pad = 0.08 * (y1 - y0);
  y0 -= pad;
  y1 += pad;
  auto py = [&](double y) { return H - Bm - (y - y0) / (y1 - y0) * (H - T - Bm); };
  static const char* colors[3] = {"#1f77b4", "#d62728", "#2ca02c"};

  std::ofstream f(path, std::ios::binary);
  if (!f) throw config_error("svg: cannot open " + path);
  f << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\""
    << H << "\" viewBox=\"0 0 " << W << " " << H << "\">\n";
  f << "<rect width=\"" << W << "\" height=\"" << H << "\" fill=\"white\"/>\n";
  f << "<text x=\"" << W / 2 << "\" y=\"20\" text-anchor=\"middle\" font-size=\"13\">"
    << detail::esc(title) << "</text>\n";
  f << "<line x1=\"" << L << "\" y1=\"" << svg::num(py(0)) << "\" x2=\"" << W - R
    << "\" y2=\"" << svg::num(py(0)) << "\" stroke=\"black\"/>\n";
  for (int k = 0; k <= 4; ++k) {
    const double yv = y0 + (y1 - y0) * k / 4;
    char lab[32];
    std::snprintf(lab, sizeof lab, "%.3g", yv);
    f << "<text x=\"" << L - 6 << "\" y=\"" << svg::num(py(yv) + 4)
      << "\" text-anchor=\"end\" font-size=\"10\">" << lab << "</text>\n";
  }
  const double gw = (W - L - R) / std::max(groups, 1);
  for (int g = 0; g < groups; ++g) {
    const double bx = L + g * gw;
    for (int b = 0; b < bars; ++b) {
      const double v = per_mode[g][b];
      if (!std::isfinite(v)) continue;
      const double x = bx + gw * (0.12 + 0.76 * b / bars);
      const double wbar = gw * 0.76 / bars * 0.9;
      const double ytop = std::min(py(0), py(v));
      const double hbar = std::abs(py(v) - py(0));
      f << "<rect x=\"" << svg::num(x) << "\" y=\"" << svg::num(ytop)
        << "\" width=\"" << svg::num(wbar) << "\" height=\"" << svg::num(hbar)
        << "\" fill=\"" << colors[b % 3] << "\"/>\n";
    }
    f << "<text x=\"" << svg::num(bx + gw / 2) << "\" y=\"" << H - Bm + 16
      << "\" text-anchor=\"middle\" font-size=\"10\">" << g << "</text>\n";
  }
  for (std::size_t b = 0; b < method_labels.size(); ++b) {
    const double ly = T + 6 + 15 * b;
    f << "<rect x=\"" << W - R - 150 << "\" y=\"" << ly - 9
      << "\" width=\"12\" height=\"12\" fill=\"" << colors[b % 3] << "\"/>\n";
    f << "<text x=\"" << W - R - 132 << "\" y=\"" << ly + 2 << "\" font-size=\"11\">"
      << detail::esc(method_labels[b]) << "</text>\n";
  }
  f << "<text x=\"16\" y=\"" << (T + H - Bm) / 2
    << "\" text-anchor=\"middle\" font-size=\"12\" transform=\"rotate(-90 16 "
    << (T + H - Bm) / 2 << ")\">" << detail::esc(ylabel) << "</text>\n";
  f << "<text x=\"" << (L + W - R) / 2 << "\" y=\"" << H - 10
    << "\" text-anchor=\"middle\" font-size=\"12\">mode index</text>\n";
  f << "</svg>\n";
}

// Heat map of a real field sampled on a square grid, with optional contour
// overlays at the given fractions of the maximum (marching squares).
inline void heatmap(const std::string& path, const MatrixXd& V,
                    const MatrixXd* contour_field,
                    const std::vector<double>& contour_fracs,
                    const std::string& title, double lo, double hi) {
  const int n = static_cast<int>(V.rows());
  const int stride = std::max(1, n / 160);  // keep files small
  const double cell = 480.0 / (n / stride);
  const double L = 50, T = 46;
  const double W = L + (n / stride) * cell + 20, H = T + (n / stride) * cell + 30;

  std::ofstream f(path, std::ios::binary);
  if (!f) throw config_error("svg: cannot open " + path);
  f << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\""
    << H << "\" viewBox=\"0 0 " << W << " " << H << "\">\n";
  f << "<rect width=\"" << W << "\" height=\"" << H << "\" fill=\"white\"/>\n";
  f << "<text x=\"" << W / 2 << "\" y=\"20\" text-anchor=\"middle\" font-size=\"13\">"
    << detail::esc(title) << "</text>\n";
  for (int i = 0; i < n / stride; ++i)
    for (int j = 0; j < n / stride; ++j) {
      const double v = V(std::min(i * stride, n - 1), std::min(j * stride, n - 1));
      const double t = (v - lo) / (hi - lo + 1e-300);
      f << "<rect x=\"" << svg::num(L + j * cell) << "\" y=\""
        << svg::num(T + i * cell) << "\" width=\"" << svg::num(cell + 0.5)
        << "\" height=\"" << svg::num(cell + 0.5) << "\" fill=\""
        << detail::colormap(t) << "\"/>\n";
    }
  if (contour_field) {
    const MatrixXd& C = *contour_field;
    const double cmax = C.maxCoeff();
    const double px = cell * (n / stride) / (n - 1.0);
    for (double frac : contour_fracs) {
      const double level = frac * cmax;
      std::string segs;
      for (int i = 0; i + 1 < n; ++i)
        for (int j = 0; j + 1 < n; ++j) {
          // marching squares, midpoint interpolation per edge
          const double a = C(i, j), b = C(i, j + 1), c = C(i + 1, j + 1),
                       d = C(i + 1, j);
          auto cross = [&](double u, double v) { return (u - level) * (v - level) < 0; };
          std::vector<std::pair<double, double>> pts;
          auto lerp = [&](double u, double v) { return (level - u) / (v - u); };
          if (cross(a, b)) pts.push_back({j + lerp(a, b), static_cast<double>(i)});
          if (cross(b, c)) pts.push_back({j + 1.0, i + lerp(b, c)});
          if (cross(d, c)) pts.push_back({j + lerp(d, c), i + 1.0});
          if (cross(a, d)) pts.push_back({static_cast<double>(j), i + lerp(a, d)});
          if (pts.size() == 2)
            segs += "M" + svg::num(L + pts[0].first * px) + " " +
                    svg::num(T + pts[0].second * px) + "L" +
                    svg::num(L + pts[1].first * px) + " " +
                    svg::num(T + pts[1].second * px);
        }
      f << "<path d=\"" << segs
        << "\" fill=\"none\" stroke=\"white\" stroke-width=\"0.8\"/>\n";
    }
  }
  f << "</svg>\n";
}

}  // namespace svg
}  // namespace su11
