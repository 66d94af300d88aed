#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "subcalc/formulas.hpp"

/* Deterministic SVG emission of labeled 1D/2D sets.  Unbounded sets are
 * clipped to a truncation box drawn as a dashed frame; rays are rendered as
 * arrows reaching the frame.  No timestamps or environment-dependent content
 * ever enters the output, so identical inputs give byte-identical files. */

namespace subcalc {

struct PlotSet {
  std::string label;
  Polyhedron set;
};

namespace svgdetail {

inline std::string num(double v) {
  char buf[64];
  if (std::fabs(v) < 5e-5) v = 0.0; // avoid "-0.0000"
  std::snprintf(buf, sizeof(buf), "%.4f", v);
  return std::string(buf);
}

inline const char* color(size_t i) {
  static const char* palette[] = {"#1f6fb2", "#c2452d", "#2d8a4e", "#8a5fb0",
                                  "#b08904", "#3aa6a6", "#b0467e", "#5d6d7e"};
  return palette[i % 8];
}

struct Frame {
  double lo, hi;   // world square [lo,hi]^2 (or [lo,hi] in 1D)
  double px0, py0; // top-left of the drawing area in pixels
  double side;     // pixel side length
  double sx(double x) const { return px0 + (x - lo) / (hi - lo) * side; }
  double sy(double y) const { return py0 + (hi - y) / (hi - lo) * side; }
};

inline void arrow_head(std::string& out, double x, double y, double dx, double dy,
                       const char* col) {
  double n = std::hypot(dx, dy);
  if (n < 1e-12) return;
  dx /= n;
  dy /= n;
  double px = -dy, py = dx;
  out += "<path d=\"M " + num(x) + " " + num(y) + " L " +
         num(x - 9 * dx + 4 * px) + " " + num(y - 9 * dy + 4 * py) + " L " +
         num(x - 9 * dx - 4 * px) + " " + num(y - 9 * dy - 4 * py) +
         " Z\" fill=\"" + col + "\"/>\n";
}

} // namespace svgdetail

/* Render the labeled sets into an SVG file.  `dim` must be 1 or 2 and every
 * set must match it; `box_radius` bounds the drawn region when a set is
 * unbounded. */
inline void emit_plot(int dim, const std::vector<PlotSet>& sets, const std::string& path,
                      double box_radius = 5.0) {
  using svgdetail::num;
  if (dim != 1 && dim != 2)
    throw std::invalid_argument("emit_plot: only dimensions 1 and 2 are supported");
  if (!(box_radius > 0)) throw std::invalid_argument("emit_plot: box_radius <= 0");
  for (const PlotSet& p : sets)
    if (!p.set.is_empty() && p.set.dim() != dim)
      throw std::invalid_argument("emit_plot: set dimension mismatch");

  // world extent: fit the vertices, fall back to box_radius for rays
  bool any_unbounded = false;
  double reach = 1.0;
  for (const PlotSet& p : sets) {
    if (p.set.is_empty()) continue;
    if (!p.set.rays().empty()) any_unbounded = true;
    for (const Vec& v : p.set.vertices())
      for (int i = 0; i < v.dim(); ++i) reach = std::max(reach, std::fabs(v[i]));
  }
  double R = any_unbounded ? std::max(std::min(reach * 2.0, box_radius), 1.0)
                           : reach * 1.15;

  const double W = 640, H = 480, margin = 56;
  svgdetail::Frame fr;
  fr.lo = -R;
  fr.hi = R;
  fr.side = std::min(W, H) - 2 * margin;
  fr.px0 = margin;
  fr.py0 = margin;

  std::string out;
  out += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + num(W) +
         "\" height=\"" + num(H) + "\" viewBox=\"0 0 " + num(W) + " " + num(H) +
         "\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";

  // truncation frame (dashed when something is unbounded)
  out += "<rect x=\"" + num(fr.px0) + "\" y=\"" + num(fr.py0) + "\" width=\"" +
         num(fr.side) + "\" height=\"" + num(fr.side) +
         "\" fill=\"none\" stroke=\"#555555\"";
  if (any_unbounded) out += " stroke-dasharray=\"6 4\"";
  out += "/>\n";
  out += "<text x=\"" + num(fr.px0) + "\" y=\"" + num(fr.py0 + fr.side + 18) +
         "\" font-size=\"12\" fill=\"#555555\">" +
         (any_unbounded ? "view truncated at radius " + num(R)
                        : "view radius " + num(R)) +
         "</text>\n";

  // axes through the origin
  out += "<line x1=\"" + num(fr.sx(-R)) + "\" y1=\"" + num(fr.sy(0)) + "\" x2=\"" +
         num(fr.sx(R)) + "\" y2=\"" + num(fr.sy(0)) +
         "\" stroke=\"#cccccc\"/>\n";
  if (dim == 2)
    out += "<line x1=\"" + num(fr.sx(0)) + "\" y1=\"" + num(fr.sy(-R)) + "\" x2=\"" +
           num(fr.sx(0)) + "\" y2=\"" + num(fr.sy(R)) + "\" stroke=\"#cccccc\"/>\n";

  for (size_t i = 0; i < sets.size(); ++i) {
    const PlotSet& p = sets[i];
    const char* col = svgdetail::color(i);
    if (p.set.is_empty()) continue;
    Polyhedron clip = intersect(p.set, detail::standard_box(dim, R));
    if (clip.is_empty()) continue;

    if (dim == 1) {
      // each 1D set occupies its own horizontal lane
      double lane = -R + (2.0 * R) * (double(i) + 1.0) / (double(sets.size()) + 1.0);
      double y = fr.sy(lane);
      double lo = clip.vertices().front().x(), hi = lo;
      for (const Vec& v : clip.vertices()) {
        lo = std::min(lo, v.x());
        hi = std::max(hi, v.x());
      }
      out += "<line x1=\"" + num(fr.sx(lo)) + "\" y1=\"" + num(y) + "\" x2=\"" +
             num(fr.sx(hi)) + "\" y2=\"" + num(y) + "\" stroke=\"" + col +
             "\" stroke-width=\"4\"/>\n";
      for (double e : {lo, hi})
        out += "<circle cx=\"" + num(fr.sx(e)) + "\" cy=\"" + num(y) +
               "\" r=\"3.5\" fill=\"" + col + "\"/>\n";
      for (const Vec& r : p.set.rays())
        svgdetail::arrow_head(out, fr.sx(r.x() > 0 ? hi : lo), y, r.x(), 0.0, col);
    } else {
      const std::vector<Vec>& vs = clip.vertices(); // counter-clockwise hull order
      if (vs.size() == 1) {
        out += "<circle cx=\"" + num(fr.sx(vs[0].x())) + "\" cy=\"" +
               num(fr.sy(vs[0].y())) + "\" r=\"4\" fill=\"" + col + "\"/>\n";
      } else {
        std::string pts;
        for (const Vec& v : vs)
          pts += num(fr.sx(v.x())) + "," + num(fr.sy(v.y())) + " ";
        out += "<polygon points=\"" + pts + "\" fill=\"" + col +
               "\" fill-opacity=\"0.18\" stroke=\"" + col +
               "\" stroke-width=\"1.5\"/>\n";
      }
      // direction rays drawn from the first original vertex
      if (!p.set.rays().empty() && !p.set.vertices().empty()) {
        Vec base = p.set.vertices().front();
        for (const Vec& r : p.set.rays()) {
          double n = r.norm();
          if (n < 1e-12) continue;
          // reach the frame along r from base
          double tmax = 2 * R / n;
          Vec tip = base + r * tmax;
          tip = Vec(std::clamp(tip.x(), -R, R), std::clamp(tip.y(), -R, R));
          out += "<line x1=\"" + num(fr.sx(base.x())) + "\" y1=\"" +
                 num(fr.sy(base.y())) + "\" x2=\"" + num(fr.sx(tip.x())) +
                 "\" y2=\"" + num(fr.sy(tip.y())) + "\" stroke=\"" + col +
                 "\" stroke-width=\"1.5\"/>\n";
          svgdetail::arrow_head(out, fr.sx(tip.x()), fr.sy(tip.y()), r.x(), -r.y(),
                                col);
        }
      }
    }
  }

  // legend, top-right of the canvas
  double lx = fr.px0 + fr.side + 14, ly = fr.py0 + 6;
  out += "<text x=\"" + num(lx) + "\" y=\"" + num(ly - 10) +
         "\" font-size=\"13\" fill=\"#222222\">legend</text>\n";
  for (size_t i = 0; i < sets.size(); ++i) {
    double y = ly + 20.0 * double(i) + 8;
    out += "<rect x=\"" + num(lx) + "\" y=\"" + num(y - 9) +
           "\" width=\"12\" height=\"12\" fill=\"" + svgdetail::color(i) + "\"/>\n";
    std::string note = sets[i].set.is_empty()
                           ? " (empty)"
                           : (sets[i].set.rays().empty() ? "" : " (unbounded)");
    out += "<text x=\"" + num(lx + 18) + "\" y=\"" + num(y + 2) +
           "\" font-size=\"12\" fill=\"#222222\">" + sets[i].label + note +
           "</text>\n";
  }
  out += "</svg>\n";

  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("emit_plot: cannot open '" + path + "'");
  f << out;
}

} // namespace subcalc
