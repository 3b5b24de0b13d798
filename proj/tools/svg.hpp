#pragma once

#include <cmath>
#include <cstdio>
#include <string>
#include <utility>
#include <vector>

#include "sinkasym/relate.hpp"

namespace sinkasym::svg {

using Curve = std::vector<std::pair<double, double>>;

inline std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

inline std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      default: out += c;
    }
  }
  return out;
}

// Lines, polylines, rectangles and labels over a data window mapped onto a
// fixed pixel frame with a margin for the axes.
class Canvas {
 public:
  Canvas(double xlo, double xhi, double ylo, double yhi, int w = 640, int h = 560)
      : xlo_(xlo), xhi_(xhi), ylo_(ylo), yhi_(yhi), w_(w), h_(h) {}

  double px(double x) const { return margin_ + (x - xlo_) / (xhi_ - xlo_) * (w_ - 2 * margin_); }
  double py(double y) const { return h_ - margin_ - (y - ylo_) / (yhi_ - ylo_) * (h_ - 2 * margin_); }

  void line(double x0, double y0, double x1, double y1, const std::string& color, double width = 1.0) {
    body_ += "<line x1=\"" + num(px(x0)) + "\" y1=\"" + num(py(y0)) + "\" x2=\"" + num(px(x1)) +
             "\" y2=\"" + num(py(y1)) + "\" stroke=\"" + color + "\" stroke-width=\"" +
             num(width) + "\"/>\n";
  }

  void polyline(const Curve& pts, const std::string& color, double width = 1.2,
                const std::string& dash = "") {
    if (pts.size() < 2) return;
    body_ += "<polyline fill=\"none\" stroke=\"" + color + "\" stroke-width=\"" + num(width) + "\"";
    if (!dash.empty()) body_ += " stroke-dasharray=\"" + dash + "\"";
    body_ += " points=\"";
    for (const auto& [x, y] : pts) {
      if (x < xlo_ || x > xhi_ || y < ylo_ || y > yhi_) continue;
      body_ += num(px(x)) + "," + num(py(y)) + " ";
    }
    body_ += "\"/>\n";
  }

  void cell(double x0, double y0, double x1, double y1, const std::string& fill) {
    const double a = px(std::min(x0, x1)), b = py(std::max(y0, y1));
    body_ += "<rect x=\"" + num(a) + "\" y=\"" + num(b) + "\" width=\"" +
             num(std::abs(px(x1) - px(x0))) + "\" height=\"" + num(std::abs(py(y1) - py(y0))) +
             "\" fill=\"" + fill + "\"/>\n";
  }

  void label(double x, double y, const std::string& text, int size = 12,
             const std::string& anchor = "middle") {
    body_ += "<text x=\"" + num(px(x)) + "\" y=\"" + num(py(y)) + "\" font-size=\"" +
             std::to_string(size) + "\" text-anchor=\"" + anchor + "\">" + escape(text) +
             "</text>\n";
  }

  void axes(const std::string& xname, const std::string& yname) {
    const std::string grey = "#888888";
    if (ylo_ <= 0 && yhi_ >= 0) line(xlo_, 0, xhi_, 0, grey);
    if (xlo_ <= 0 && xhi_ >= 0) line(0, ylo_, 0, yhi_, grey);
    body_ += "<rect x=\"" + num(margin_) + "\" y=\"" + num(margin_) + "\" width=\"" +
             num(w_ - 2 * margin_) + "\" height=\"" + num(h_ - 2 * margin_) +
             "\" fill=\"none\" stroke=\"black\"/>\n";
    for (double v : {xlo_, xhi_}) {
      body_ += "<text x=\"" + num(px(v)) + "\" y=\"" + num(h_ - margin_ + 16) +
               "\" font-size=\"11\" text-anchor=\"middle\">" + num(v) + "</text>\n";
    }
    for (double v : {ylo_, yhi_}) {
      body_ += "<text x=\"" + num(margin_ - 6) + "\" y=\"" + num(py(v) + 4) +
               "\" font-size=\"11\" text-anchor=\"end\">" + num(v) + "</text>\n";
    }
    body_ += "<text x=\"" + num(w_ / 2.0) + "\" y=\"" + num(h_ - 12) +
             "\" font-size=\"13\" text-anchor=\"middle\">" + escape(xname) + "</text>\n";
    body_ += "<text x=\"16\" y=\"" + num(h_ / 2.0) + "\" font-size=\"13\" text-anchor=\"middle\" "
             "transform=\"rotate(-90 16 " + num(h_ / 2.0) + ")\">" + escape(yname) + "</text>\n";
  }

  void title(const std::string& t) {
    body_ += "<text x=\"" + num(w_ / 2.0) + "\" y=\"24\" font-size=\"15\" text-anchor=\"middle\">" +
             escape(t) + "</text>\n";
  }

  std::string str() const {
    return "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + std::to_string(w_) +
           "\" height=\"" + std::to_string(h_) + "\" viewBox=\"0 0 " + std::to_string(w_) + " " +
           std::to_string(h_) + "\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n" +
           body_ + "</svg>\n";
  }

 private:
  double xlo_, xhi_, ylo_, yhi_;
  int w_, h_;
  double margin_ = 56.0;
  std::string body_;
};

// Sampled trajectories with an optional relation curve on top.
inline std::string phase_portrait(const std::vector<Curve>& trajectories, const Curve& relation,
                                  double half_width, const std::string& title) {
  Canvas c(-half_width, half_width, -half_width, half_width);
  c.axes("x1", "x2");
  for (const auto& t : trajectories) c.polyline(t, "#3366aa");
  if (!relation.empty()) c.polyline(relation, "#cc3311", 2.0, "6,3");
  c.title(title);
  return c.str();
}

// Positive cells red, negative blue, undefined grey.
inline std::string sign_map(const SignMap& m, const std::string& title) {
  Canvas c(m.lo, m.hi, m.lo, m.hi);
  const double h = (m.hi - m.lo) / (m.n - 1);
  for (int row = 0; row < m.n; ++row) {
    for (int col = 0; col < m.n; ++col) {
      const double x = m.lo + col * h, y = m.lo + row * h;
      const int s = m.at(row, col);
      const std::string fill = s > 0 ? "#e8a39b" : (s < 0 ? "#9bb8e8" : "#dddddd");
      c.cell(std::max(m.lo, x - h / 2), std::max(m.lo, y - h / 2), std::min(m.hi, x + h / 2),
             std::min(m.hi, y + h / 2), fill);
    }
  }
  c.axes("y01", "y02");
  c.title(title);
  return c.str();
}

}  // namespace sinkasym::svg
