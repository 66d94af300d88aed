#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "subcalc/extreal.hpp"
#include "subcalc/vec.hpp"

namespace subcalc {

/* Closed convex polyhedral sets in R^1 / R^2, stored as a canonical
 * V-representation conv(vertices) + cone(rays) together with a cached
 * H-representation.  Canonical means: vertices are exactly the extreme
 * points (anchored along any lineality direction), rays are unit extreme
 * generators of the recession cone, duplicates merged at tolerance 1e-9.
 *
 * Sets with lineality have no extreme points; by convention the canonical
 * vertex list then anchors the set with components along the lineality
 * space set to zero (e.g. the whole line R is stored as vertex {0} plus
 * rays {+1,-1}). */

constexpr double kGeomTol = 1e-9;

struct Halfspace {
  Vec d;    // unit outward normal
  double c; // set is { x : <d,x> <= c }
};

namespace detail {

inline bool vec_close(const Vec& a, const Vec& b, double tol = kGeomTol) {
  return (a - b).norm() <= tol;
}

/* Cyclic classification of cone(rays) in 2D. */
enum class ConeKind { zero, single, wedge, line, halfplane, plane };

struct ConeClass {
  ConeKind kind = ConeKind::zero;
  std::vector<Vec> rays; // canonical unit generators, sorted by angle
};

inline double angle_of(const Vec& u) { return std::atan2(u.y(), u.x()); }

inline std::vector<Vec> sort_by_angle(std::vector<Vec> us) {
  std::sort(us.begin(), us.end(),
            [](const Vec& a, const Vec& b) { return angle_of(a) < angle_of(b); });
  return us;
}

inline std::vector<Vec> dedupe_unit(const std::vector<Vec>& rays) {
  std::vector<Vec> out;
  for (const Vec& r : rays) {
    if (r.norm() <= kGeomTol) continue;
    Vec u = r.normalized();
    bool seen = false;
    for (const Vec& v : out)
      if (vec_close(u, v, 1e-8)) { seen = true; break; }
    if (!seen) out.push_back(u);
  }
  return out;
}

inline ConeClass classify_cone_2d(const std::vector<Vec>& rays) {
  constexpr double atol = 1e-8; // angular tolerance, above unit-vector dedupe noise
  ConeClass cc;
  std::vector<Vec> us = sort_by_angle(dedupe_unit(rays));
  if (us.empty()) { cc.kind = ConeKind::zero; return cc; }
  if (us.size() == 1) { cc.kind = ConeKind::single; cc.rays = us; return cc; }

  // largest cyclic gap between consecutive directions decides the class
  size_t n = us.size();
  double maxgap = -1.0;
  size_t gap_at = 0; // gap between us[gap_at] and us[gap_at+1 mod n]
  for (size_t i = 0; i < n; ++i) {
    double a = angle_of(us[i]);
    double b = angle_of(us[(i + 1) % n]) + (i + 1 == n ? 2.0 * M_PI : 0.0);
    double g = b - a;
    if (g > maxgap) { maxgap = g; gap_at = i; }
  }
  Vec lo = us[(gap_at + 1) % n]; // arc start (right after the gap)
  Vec hi = us[gap_at];           // arc end

  if (maxgap > M_PI + atol) {
    cc.kind = ConeKind::wedge;
    cc.rays = sort_by_angle({lo, hi});
    return cc;
  }
  if (maxgap >= M_PI - atol) {
    // arc spans exactly a half turn: boundary directions lo and hi = -lo
    if (n == 2) {
      cc.kind = ConeKind::line;
      cc.rays = sort_by_angle({lo, Vec(0.0, 0.0) - lo});
      return cc;
    }
    Vec w = lo.perp();
    // orient w toward the strictly interior generators
    for (const Vec& u : us) {
      double s = w.dot(u);
      if (std::fabs(s) > 1e-7) { if (s < 0) w = -w; break; }
    }
    cc.kind = ConeKind::halfplane;
    cc.rays = sort_by_angle({lo, -lo, w});
    return cc;
  }
  cc.kind = ConeKind::plane;
  cc.rays = {Vec(1, 0), Vec(-1, 0), Vec(0, 1), Vec(0, -1)};
  cc.rays = sort_by_angle(cc.rays);
  return cc;
}

/* Monotone chain; returns hull in CCW order, collinear points pruned. */
inline std::vector<Vec> convex_hull_2d(std::vector<Vec> pts) {
  /* Snap to the tolerance grid first: noisy near-ties in x (e.g. along a
   * vertical edge) otherwise break the chain's monotone-x assumption and can
   * drop true corners when near-duplicate clusters interleave in sort order. */
  auto snap = [](double v) { return std::round(v / kGeomTol) * kGeomTol; };
  for (Vec& p : pts) p = Vec(snap(p.x()), snap(p.y()));
  std::sort(pts.begin(), pts.end(), [](const Vec& a, const Vec& b) {
    if (a.x() != b.x()) return a.x() < b.x();
    return a.y() < b.y();
  });
  pts.erase(std::unique(pts.begin(), pts.end(),
                        [](const Vec& a, const Vec& b) { return vec_close(a, b); }),
            pts.end());
  size_t n = pts.size();
  if (n <= 2) return pts;
  auto turn = [](const Vec& o, const Vec& a, const Vec& b) {
    return (a - o).cross(b - o);
  };
  auto turn_tol = [](const Vec& o, const Vec& a, const Vec& b) {
    return kGeomTol * (1.0 + (a - o).norm() + (b - o).norm());
  };
  std::vector<Vec> h(2 * n);
  size_t k = 0;
  for (size_t i = 0; i < n; ++i) { // lower chain
    while (k >= 2 && turn(h[k - 2], h[k - 1], pts[i]) <= turn_tol(h[k - 2], h[k - 1], pts[i]))
      --k;
    h[k++] = pts[i];
  }
  for (size_t i = n - 1, t = k + 1; i-- > 0;) { // upper chain
    while (k >= t && turn(h[k - 2], h[k - 1], pts[i]) <= turn_tol(h[k - 2], h[k - 1], pts[i]))
      --k;
    h[k++] = pts[i];
  }
  h.resize(k - 1);
  return h;
}

} // namespace detail

class Polyhedron {
 public:
  Polyhedron() : dim_(1), empty_(true) {}

  int dim() const { return dim_; }
  bool is_empty() const { return empty_; }
  const std::vector<Vec>& vertices() const { return vertices_; }
  const std::vector<Vec>& rays() const { return rays_; }
  const std::vector<Halfspace>& halfspaces() const { return faces_; }
  bool is_full_space() const { return !empty_ && faces_.empty(); }

  std::string str() const {
    if (empty_) return "{}";
    std::ostringstream os;
    os << "conv{";
    for (size_t i = 0; i < vertices_.size(); ++i)
      os << (i ? ", " : "") << vertices_[i].str();
    os << "}";
    if (!rays_.empty()) {
      os << " + cone{";
      for (size_t i = 0; i < rays_.size(); ++i)
        os << (i ? ", " : "") << rays_[i].str();
      os << "}";
    }
    return os.str();
  }

  friend Polyhedron make_polyhedron(int, const std::vector<Vec>&, const std::vector<Vec>&);
  friend Polyhedron from_halfspaces(int, const std::vector<Halfspace>&);

 private:
  int dim_;
  bool empty_;
  std::vector<Vec> vertices_;
  std::vector<Vec> rays_;
  std::vector<Halfspace> faces_;
};

Polyhedron make_polyhedron(int dim, const std::vector<Vec>& vertices,
                           const std::vector<Vec>& rays = {});
Polyhedron from_halfspaces(int dim, const std::vector<Halfspace>& faces);

namespace detail {

/* V-rep -> halfspaces for a nonempty 2D set with the given cone class. */
inline std::vector<Halfspace> build_faces_2d(const std::vector<Vec>& hull,
                                             const ConeClass& cc) {
  std::vector<Halfspace> out;
  auto sup_v = [&](const Vec& d) {
    double m = hull[0].dot(d);
    for (const Vec& v : hull) m = std::max(m, v.dot(d));
    return m;
  };
  auto ray_ok = [&](const Vec& d) {
    for (const Vec& r : cc.rays)
      if (d.dot(r) > 1e-8) return false;
    return true;
  };
  auto push = [&](Vec d) {
    if (d.norm() <= kGeomTol) return;
    d = d.normalized();
    if (!ray_ok(d)) return;
    double c = sup_v(d);
    for (Halfspace& h : out)
      if (vec_close(h.d, d, 1e-8)) { h.c = std::min(h.c, c); return; }
    out.push_back({d, c});
  };

  switch (cc.kind) {
    case ConeKind::plane:
      return {};
    case ConeKind::halfplane: {
      // canonical rays are {u, -u, w}; w is the one without an antipode
      Vec w = cc.rays[0];
      for (const Vec& r : cc.rays) {
        bool has_anti = false;
        for (const Vec& s : cc.rays)
          if (vec_close(r, -s, 1e-8)) has_anti = true;
        if (!has_anti) { w = r; break; }
      }
      out.push_back({-w, sup_v(-w)});
      return out;
    }
    case ConeKind::line: {
      Vec n = cc.rays[0].perp();
      out.push_back({n, sup_v(n)});
      out.push_back({-n, sup_v(-n)});
      return out;
    }
    default:
      break; // pointed cases below
  }

  if (hull.size() >= 3) {
    for (size_t i = 0; i < hull.size(); ++i) {
      Vec e = hull[(i + 1) % hull.size()] - hull[i];
      push(Vec(e.y(), -e.x())); // right normal of a CCW edge points outward
    }
  } else if (hull.size() == 2) {
    Vec e = (hull[1] - hull[0]).normalized();
    push(e.perp());
    push(-(e.perp()));
    push(e);
    push(-e);
  } else if (cc.rays.empty()) { // single point, no recession
    push(Vec(1, 0));
    push(Vec(-1, 0));
    push(Vec(0, 1));
    push(Vec(0, -1));
  }
  for (const Vec& r : cc.rays) {
    push(r.perp());
    push(-(r.perp()));
    push(-r);
  }
  return out;
}

/* Feasible-direction classification of { u : <d_i,u> <= 0 } in 2D. */
inline ConeClass recession_of_faces_2d(const std::vector<Halfspace>& faces) {
  ConeClass cc;
  if (faces.empty()) { cc.kind = ConeKind::plane;
    cc.rays = sort_by_angle({Vec(1, 0), Vec(-1, 0), Vec(0, 1), Vec(0, -1)});
    return cc; }
  auto feasible = [&](const Vec& u) {
    for (const Halfspace& h : faces)
      if (h.d.dot(u) > 1e-8) return false;
    return true;
  };
  std::vector<Vec> cand;
  for (const Halfspace& h : faces) {
    for (Vec u : {h.d.perp(), -(h.d.perp())})
      if (feasible(u)) cand.push_back(u);
  }
  cand = dedupe_unit(cand);
  if (cand.empty()) { cc.kind = ConeKind::zero; return cc; }
  if (cand.size() == 1) { cc.kind = ConeKind::single; cc.rays = cand; return cc; }

  // extremes = pair with the largest angular separation (<= pi)
  double best = -1.0;
  Vec a = cand[0], b = cand[0];
  for (size_t i = 0; i < cand.size(); ++i)
    for (size_t j = i + 1; j < cand.size(); ++j) {
      double d = std::acos(std::clamp(cand[i].dot(cand[j]), -1.0, 1.0));
      if (d > best) { best = d; a = cand[i]; b = cand[j]; }
    }
  if (best >= M_PI - 1e-8) {
    for (Vec w : {a.perp(), -(a.perp())})
      if (feasible(w)) {
        cc.kind = ConeKind::halfplane;
        cc.rays = sort_by_angle({a, b, w});
        return cc;
      }
    cc.kind = ConeKind::line;
    cc.rays = sort_by_angle({a, b});
    return cc;
  }
  if (best <= 1e-8) { cc.kind = ConeKind::single; cc.rays = {a}; return cc; }
  cc.kind = ConeKind::wedge;
  cc.rays = sort_by_angle({a, b});
  return cc;
}

} // namespace detail

/* ---- factories ---- */

inline Polyhedron from_halfspaces(int dim, const std::vector<Halfspace>& faces_in) {
  using namespace detail;
  Polyhedron P;
  P.dim_ = dim;
  P.empty_ = true;

  // normalize + dedupe constraints
  std::vector<Halfspace> faces;
  for (const Halfspace& h : faces_in) {
    double n = h.d.norm();
    if (n <= kGeomTol) throw std::invalid_argument("from_halfspaces: zero normal");
    Halfspace g{h.d * (1.0 / n), h.c / n};
    bool dup = false;
    for (Halfspace& f : faces)
      if (vec_close(f.d, g.d, 1e-8)) { f.c = std::min(f.c, g.c); dup = true; break; }
    if (!dup) faces.push_back(g);
  }

  if (dim == 1) {
    double lo = -std::numeric_limits<double>::infinity();
    double hi = std::numeric_limits<double>::infinity();
    for (const Halfspace& h : faces) {
      if (h.d.x() > 0) hi = std::min(hi, h.c / h.d.x());
      else lo = std::max(lo, h.c / h.d.x());
    }
    if (lo > hi + kGeomTol * (1.0 + std::fabs(lo))) return P; // empty
    if (lo > hi) hi = lo = 0.5 * (lo + hi);
    std::vector<Vec> vs, rs;
    if (std::isinf(lo) && std::isinf(hi)) { vs = {Vec(0.0)}; rs = {Vec(1.0), Vec(-1.0)}; }
    else if (std::isinf(lo)) { vs = {Vec(hi)}; rs = {Vec(-1.0)}; }
    else if (std::isinf(hi)) { vs = {Vec(lo)}; rs = {Vec(1.0)}; }
    else { vs = {Vec(lo)}; if (hi - lo > kGeomTol) vs.push_back(Vec(hi)); }
    P.empty_ = false;
    P.vertices_ = vs;
    P.rays_ = rs;
    for (const Halfspace& h : faces) {
      if (h.d.x() > 0 && std::isfinite(hi)) P.faces_.push_back({Vec(1.0), hi});
      if (h.d.x() < 0 && std::isfinite(lo)) P.faces_.push_back({Vec(-1.0), -lo});
    }
    // dedupe the two possible faces
    std::vector<Halfspace> fs;
    for (const Halfspace& h : P.faces_) {
      bool dup = false;
      for (const Halfspace& g : fs) if (vec_close(g.d, h.d)) dup = true;
      if (!dup) fs.push_back(h);
    }
    P.faces_ = fs;
    return P;
  }

  ConeClass cc = recession_of_faces_2d(faces);

  if (cc.kind == ConeKind::plane) {
    P.empty_ = false;
    P.vertices_ = {Vec(0.0, 0.0)};
    P.rays_ = cc.rays;
    return P;
  }
  if (cc.kind == ConeKind::halfplane) {
    // all normals coincide; set = single halfspace
    Vec d = faces[0].d;
    double c = faces[0].c;
    for (const Halfspace& h : faces) c = std::min(c, h.c);
    P.empty_ = false;
    P.vertices_ = {d * c};
    P.rays_ = cc.rays;
    P.faces_ = {{d, c}};
    return P;
  }
  if (cc.kind == ConeKind::line) {
    Vec u = cc.rays[0];
    Vec n = u.perp(); // every normal is +-n
    double lo = -std::numeric_limits<double>::infinity();
    double hi = std::numeric_limits<double>::infinity();
    for (const Halfspace& h : faces) {
      double s = h.d.dot(n);
      if (s > 0) hi = std::min(hi, h.c / s);
      else lo = std::max(lo, h.c / s);
    }
    if (lo > hi + kGeomTol * (1.0 + std::fabs(lo))) return P;
    if (lo > hi) lo = hi = 0.5 * (lo + hi);
    P.empty_ = false;
    P.vertices_ = {n * lo};
    if (hi - lo > kGeomTol) P.vertices_.push_back(n * hi);
    P.rays_ = cc.rays;
    if (std::isfinite(hi)) P.faces_.push_back({n, hi});
    if (std::isfinite(lo)) P.faces_.push_back({-n, -lo});
    return P;
  }

  // pointed recession cone: every nonempty set here has a vertex
  auto feas = [&](const Vec& p) {
    double tol = kGeomTol * 8.0 * (1.0 + p.norm());
    for (const Halfspace& h : faces)
      if (h.d.dot(p) > h.c + tol) return false;
    return true;
  };
  std::vector<Vec> vs;
  for (size_t i = 0; i < faces.size(); ++i)
    for (size_t j = i + 1; j < faces.size(); ++j) {
      double det = faces[i].d.cross(faces[j].d);
      if (std::fabs(det) <= 1e-9) continue;
      double x = (faces[i].c * faces[j].d.y() - faces[j].c * faces[i].d.y()) / det;
      double y = (faces[i].d.x() * faces[j].c - faces[j].d.x() * faces[i].c) / det;
      Vec p(x, y);
      if (feas(p)) vs.push_back(p);
    }
  if (vs.empty()) return P; // infeasible
  vs = convex_hull_2d(vs);
  P.empty_ = false;
  P.vertices_ = vs;
  P.rays_ = cc.rays;
  P.faces_ = build_faces_2d(vs, cc);
  return P;
}

inline Polyhedron make_polyhedron(int dim, const std::vector<Vec>& vertices,
                                  const std::vector<Vec>& rays) {
  using namespace detail;
  if (dim != 1 && dim != 2) throw std::invalid_argument("make_polyhedron: dim must be 1 or 2");
  for (const Vec& v : vertices) {
    if (v.dim() != dim) throw std::invalid_argument("make_polyhedron: vertex dim mismatch");
    if (!std::isfinite(v.x()) || (dim == 2 && !std::isfinite(v.y())))
      throw std::invalid_argument("make_polyhedron: non-finite vertex");
  }
  for (const Vec& r : rays)
    if (r.dim() != dim) throw std::invalid_argument("make_polyhedron: ray dim mismatch");

  Polyhedron P;
  P.dim_ = dim;
  P.empty_ = true;
  if (vertices.empty()) return P; // conv(empty) + anything = empty

  if (dim == 1) {
    double lo = vertices[0].x(), hi = vertices[0].x();
    for (const Vec& v : vertices) { lo = std::min(lo, v.x()); hi = std::max(hi, v.x()); }
    bool up = false, down = false;
    for (const Vec& r : rays) {
      if (r.x() > kGeomTol) up = true;
      if (r.x() < -kGeomTol) down = true;
    }
    std::vector<Halfspace> fs;
    if (!up) fs.push_back({Vec(1.0), hi});
    if (!down) fs.push_back({Vec(-1.0), -lo});
    return from_halfspaces(1, fs);
  }

  ConeClass cc = classify_cone_2d(rays);
  std::vector<Vec> hull = convex_hull_2d(vertices);
  std::vector<Halfspace> fs = build_faces_2d(hull, cc);
  Polyhedron Q = from_halfspaces(2, fs);
  if (Q.is_empty())
    throw std::logic_error("make_polyhedron: canonicalization lost a nonempty set");
  return Q;
}

/* ---- basic ops ---- */

inline Polyhedron empty_poly(int dim) {
  Polyhedron p = Polyhedron();
  // default Polyhedron is 1D empty; rebuild for dim 2
  if (dim == 1) return p;
  return from_halfspaces(2, {{Vec(1, 0), 0.0}, {Vec(-1, 0), -1.0}}); // x<=0 & x>=1
}

inline Polyhedron full_space(int dim) {
  if (dim == 1) return make_polyhedron(1, {Vec(0.0)}, {Vec(1.0), Vec(-1.0)});
  return make_polyhedron(2, {Vec(0.0, 0.0)},
                         {Vec(1, 0), Vec(-1, 0), Vec(0, 1), Vec(0, -1)});
}

inline Polyhedron point_poly(const Vec& p) { return make_polyhedron(p.dim(), {p}); }

/* 1D closed interval with possibly infinite ends. */
inline Polyhedron interval_poly(ExtReal lo, ExtReal hi) {
  if (lo > hi) return empty_poly(1);
  std::vector<Halfspace> fs;
  if (hi.is_finite()) fs.push_back({Vec(1.0), hi.value()});
  if (lo.is_finite()) fs.push_back({Vec(-1.0), -lo.value()});
  return from_halfspaces(1, fs);
}

inline Polyhedron box_poly(int dim, double radius) {
  if (dim == 1) return interval_poly(ExtReal(-radius), ExtReal(radius));
  return make_polyhedron(2, {Vec(-radius, -radius), Vec(radius, -radius),
                             Vec(radius, radius), Vec(-radius, radius)});
}

inline ExtReal support(const Polyhedron& P, const Vec& v) {
  if (v.norm() <= kGeomTol) {
    if (P.is_empty()) return ExtReal::neg_inf();
    return ExtReal(0.0);
  }
  if (P.is_empty()) return ExtReal::neg_inf();
  for (const Vec& r : P.rays())
    if (v.dot(r) > 1e-8 * v.norm()) return ExtReal::pos_inf();
  double m = P.vertices()[0].dot(v);
  for (const Vec& u : P.vertices()) m = std::max(m, u.dot(v));
  return ExtReal(m);
}

struct SupportProfile {
  std::vector<Vec> directions;
  std::vector<ExtReal> values;
};

inline std::vector<Vec> direction_fan(int dim, int count) {
  if (dim == 1) return {Vec(1.0), Vec(-1.0)};
  std::vector<Vec> out;
  for (int k = 0; k < count; ++k) {
    double a = 2.0 * M_PI * k / count;
    out.emplace_back(std::cos(a), std::sin(a));
  }
  return out;
}

inline SupportProfile support_profile(const Polyhedron& P, const std::vector<Vec>& dirs) {
  SupportProfile sp;
  sp.directions = dirs;
  for (const Vec& v : dirs) sp.values.push_back(support(P, v));
  return sp;
}

inline bool contains(const Polyhedron& P, const Vec& x, double tol = kGeomTol) {
  if (P.is_empty()) return false;
  if (x.dim() != P.dim()) throw std::invalid_argument("contains: dim mismatch");
  for (const Halfspace& h : P.halfspaces())
    if (h.d.dot(x) > h.c + tol * (1.0 + x.norm())) return false;
  return true;
}

inline Polyhedron minkowski_sum(const Polyhedron& A, const Polyhedron& B) {
  if (A.dim() != B.dim()) throw std::invalid_argument("minkowski_sum: dim mismatch");
  if (A.is_empty() || B.is_empty()) return empty_poly(A.dim());
  std::vector<Vec> vs;
  for (const Vec& a : A.vertices())
    for (const Vec& b : B.vertices()) vs.push_back(a + b);
  std::vector<Vec> rs = A.rays();
  rs.insert(rs.end(), B.rays().begin(), B.rays().end());
  return make_polyhedron(A.dim(), vs, rs);
}

inline Polyhedron intersect(const Polyhedron& A, const Polyhedron& B) {
  if (A.dim() != B.dim()) throw std::invalid_argument("intersect: dim mismatch");
  if (A.is_empty() || B.is_empty()) return empty_poly(A.dim());
  std::vector<Halfspace> fs = A.halfspaces();
  fs.insert(fs.end(), B.halfspaces().begin(), B.halfspaces().end());
  return from_halfspaces(A.dim(), fs);
}

/* eps-normal set N^eps_A(x) = { d : <d, y-x> <= eps for all y in A }. */
inline Polyhedron normal_cone_eps(const Polyhedron& A, const Vec& x, double eps,
                                  double tol = kGeomTol) {
  if (A.is_empty()) return empty_poly(A.dim());
  if (eps < 0) throw std::invalid_argument("normal_cone_eps: eps < 0");
  if (!contains(A, x, tol)) return empty_poly(A.dim());
  std::vector<Halfspace> fs;
  for (const Vec& v : A.vertices()) {
    Vec d = v - x;
    double n = d.norm();
    if (n <= tol) continue; // <d, v-x> <= eps holds trivially
    fs.push_back({d * (1.0 / n), eps / n});
  }
  for (const Vec& r : A.rays()) fs.push_back({r, 0.0});
  if (fs.empty()) return full_space(A.dim());
  return from_halfspaces(A.dim(), fs);
}

inline Polyhedron recession_cone(const Polyhedron& P) {
  if (P.is_empty())
    throw std::invalid_argument("recession_cone: undefined for the empty set");
  return make_polyhedron(P.dim(), {Vec::zero(P.dim())}, P.rays());
}

/* ---- affine hull ---- */

struct AffineHull {
  int ambient = 1;
  int dim = 0;   // 0, 1, or 2
  Vec base;      // a point of the set
  Vec direction; // unit, meaningful when dim == 1
};

inline AffineHull affine_hull(const Polyhedron& P) {
  if (P.is_empty()) throw std::invalid_argument("affine_hull: empty set");
  AffineHull H;
  H.ambient = P.dim();
  H.base = P.vertices()[0];
  std::vector<Vec> dirs;
  for (const Vec& v : P.vertices()) dirs.push_back(v - H.base);
  for (const Vec& r : P.rays()) dirs.push_back(r);
  Vec u = Vec::zero(P.dim());
  double best = 0.0;
  for (const Vec& d : dirs)
    if (d.norm() > best) { best = d.norm(); u = d; }
  if (best <= kGeomTol) { H.dim = 0; return H; }
  u = u.normalized();
  if (P.dim() == 1) { H.dim = 1; H.direction = u; return H; }
  for (const Vec& d : dirs)
    if (std::fabs(d.cross(u)) > kGeomTol * (1.0 + d.norm())) { H.dim = 2; return H; }
  H.dim = 1;
  H.direction = u;
  return H;
}

inline Polyhedron affine_hull_poly(const Polyhedron& P) {
  AffineHull H = affine_hull(P);
  if (H.dim == 0) return point_poly(H.base);
  if (H.dim == H.ambient && H.ambient == 1) return full_space(1);
  if (H.dim == 2) return full_space(2);
  return make_polyhedron(H.ambient, {H.base}, {H.direction, -H.direction});
}

/* Orthogonal complement of the direction space of an affine set, through 0. */
inline Polyhedron perp_subspace(const AffineHull& H) {
  if (H.dim == 0) return full_space(H.ambient);
  if (H.dim == H.ambient) return point_poly(Vec::zero(H.ambient));
  Vec n = H.direction.perp().normalized();
  return make_polyhedron(2, {Vec(0.0, 0.0)}, {n, -n});
}

/* A point of the relative interior: vertex centroid plus a ray bias. */
inline Vec relative_interior_point(const Polyhedron& P) {
  if (P.is_empty()) throw std::invalid_argument("relative_interior_point: empty set");
  Vec c = Vec::zero(P.dim());
  for (const Vec& v : P.vertices()) c = c + v;
  c = c * (1.0 / double(P.vertices().size()));
  for (const Vec& r : P.rays()) c = c + r * 0.5;
  return c;
}

inline bool relative_interior_contains(const Polyhedron& P, const Vec& x,
                                       double tol = kGeomTol) {
  if (P.is_empty()) return false;
  AffineHull H = affine_hull(P);
  if (H.dim == 0) return detail::vec_close(x, H.base, tol);
  // x must lie in the affine hull
  if (H.dim == 1 && P.dim() == 2) {
    Vec d = x - H.base;
    if (std::fabs(d.cross(H.direction)) > tol * (1.0 + d.norm())) return false;
  }
  if (H.dim < P.dim()) {
    // 1D slice: strict interval test along the direction
    double s = (x - H.base).dot(H.direction);
    double lo = -std::numeric_limits<double>::infinity();
    double hi = std::numeric_limits<double>::infinity();
    bool up = false, down = false;
    for (const Vec& r : P.rays()) {
      if (r.dot(H.direction) > 0.5) up = true;
      if (r.dot(H.direction) < -0.5) down = true;
    }
    double vlo = std::numeric_limits<double>::infinity(), vhi = -vlo;
    for (const Vec& v : P.vertices()) {
      double t = (v - H.base).dot(H.direction);
      vlo = std::min(vlo, t);
      vhi = std::max(vhi, t);
    }
    if (!down) lo = vlo;
    if (!up) hi = vhi;
    if (std::isfinite(lo) && std::isfinite(hi) && hi - lo <= tol)
      return std::fabs(s - 0.5 * (lo + hi)) <= tol; // degenerate: single point
    return s > lo + tol && s < hi - tol;
  }
  // full-dimensional: all constraints strict
  for (const Halfspace& h : P.halfspaces())
    if (h.d.dot(x) > h.c - tol * (1.0 + x.norm())) return false;
  return true;
}

/* ---- Hausdorff distance on a truncation box ---- */

enum class HausdorffStatus { ok, input_empty, truncation_empty };

struct HausdorffResult {
  ExtReal value = ExtReal(0.0);
  HausdorffStatus status = HausdorffStatus::ok;
  bool recession_match = false;
};

namespace detail {

inline double dist_point_segment(const Vec& p, const Vec& a, const Vec& b) {
  Vec e = b - a;
  double L2 = e.dot(e);
  if (L2 <= kGeomTol * kGeomTol) return (p - a).norm();
  double t = std::clamp((p - a).dot(e) / L2, 0.0, 1.0);
  return (p - (a + e * t)).norm();
}

inline double dist_point_polytope(const Vec& p, const Polyhedron& Q) {
  if (contains(Q, p)) return 0.0;
  const std::vector<Vec>& vs = Q.vertices();
  if (Q.dim() == 1) {
    double lo = vs[0].x(), hi = vs[0].x();
    for (const Vec& v : vs) { lo = std::min(lo, v.x()); hi = std::max(hi, v.x()); }
    return std::max({lo - p.x(), p.x() - hi, 0.0});
  }
  double best = std::numeric_limits<double>::infinity();
  if (vs.size() == 1) return (p - vs[0]).norm();
  for (size_t i = 0; i < vs.size(); ++i)
    best = std::min(best, dist_point_segment(p, vs[i], vs[(i + 1) % vs.size()]));
  return best;
}

} // namespace detail

inline bool rays_match(const Polyhedron& A, const Polyhedron& B, double tol = 1e-8) {
  if (A.rays().size() != B.rays().size()) return false;
  std::vector<bool> used(B.rays().size(), false);
  for (const Vec& r : A.rays()) {
    bool found = false;
    for (size_t j = 0; j < B.rays().size(); ++j)
      if (!used[j] && detail::vec_close(r, B.rays()[j], tol)) {
        used[j] = true;
        found = true;
        break;
      }
    if (!found) return false;
  }
  return true;
}

inline HausdorffResult hausdorff_distance(const Polyhedron& A, const Polyhedron& B,
                                          double box_radius = 1e3) {
  HausdorffResult res;
  if (A.is_empty() || B.is_empty()) {
    res.value = ExtReal::pos_inf();
    res.status = HausdorffStatus::input_empty;
    res.recession_match = A.is_empty() && B.is_empty();
    return res;
  }
  res.recession_match = rays_match(A, B);
  Polyhedron box = box_poly(A.dim(), box_radius);
  Polyhedron At = intersect(A, box), Bt = intersect(B, box);
  if (At.is_empty() || Bt.is_empty()) {
    res.status = HausdorffStatus::truncation_empty;
    res.value = (At.is_empty() && Bt.is_empty()) ? ExtReal(0.0) : ExtReal::pos_inf();
    return res;
  }
  double d = 0.0;
  for (const Vec& v : At.vertices())
    d = std::max(d, detail::dist_point_polytope(v, Bt));
  for (const Vec& v : Bt.vertices())
    d = std::max(d, detail::dist_point_polytope(v, At));
  res.value = ExtReal(d);
  return res;
}

/* Set equality of canonical forms at tolerance. */
inline bool poly_equal(const Polyhedron& A, const Polyhedron& B, double tol = 1e-7) {
  if (A.is_empty() != B.is_empty()) return false;
  if (A.is_empty()) return true;
  if (A.dim() != B.dim()) return false;
  if (!rays_match(A, B)) return false;
  if (A.vertices().size() != B.vertices().size()) return false;
  std::vector<bool> used(B.vertices().size(), false);
  for (const Vec& v : A.vertices()) {
    bool found = false;
    for (size_t j = 0; j < B.vertices().size(); ++j)
      if (!used[j] && detail::vec_close(v, B.vertices()[j], tol * (1.0 + v.norm()))) {
        used[j] = true;
        found = true;
        break;
      }
    if (!found) return false;
  }
  return true;
}

} // namespace subcalc
