#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <memory>
#include <random>
#include <stdexcept>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "subcalc/extreal.hpp"
#include "subcalc/polyhedron.hpp"
#include "subcalc/vec.hpp"

namespace subcalc {

/* Catalog of proper convex functions on R^1/R^2 as an immutable expression
 * tree.  The eps-subdifferential machinery has closed forms for the leaf
 * primitives; Sum/RestrictTo deliberately go through the directional-support
 * kernel instead of any sum rule, since failure of the sum rule is exactly
 * what this library is meant to probe. */

class ConvexFunction;

namespace fn {

struct Affine {
  Vec a;
  double b;
};

struct PiecewiseLinearMax {
  std::vector<std::pair<Vec, double>> pieces; // max_i <a_i,x> + b_i
};

/* f(x) = 0.5 x'Qx + <c,x> + d with Q symmetric PSD.  In 1D only xx is used. */
struct Quadratic {
  double xx = 0, xy = 0, yy = 0;
  Vec c;
  double d = 0;
};

struct IndicatorOf {
  Polyhedron set;
};

struct AffinePlusBoxIndicator {
  Vec a;
  double b;
  Polyhedron box;
};

struct Custom1D {
  std::string name;
  std::function<ExtReal(double)> eval;
  double lo, hi; // declared domain interval (may be infinite)
};

struct Sum {
  std::vector<ConvexFunction> terms;
};

struct Scale {
  double lambda;
  std::shared_ptr<const ConvexFunction> inner;
};

struct RestrictTo {
  std::shared_ptr<const ConvexFunction> inner;
  Polyhedron set;
};

using Node = std::variant<Affine, PiecewiseLinearMax, Quadratic, IndicatorOf,
                          AffinePlusBoxIndicator, Custom1D, Sum, Scale, RestrictTo>;

} // namespace fn

class ConvexFunction {
 public:
  explicit ConvexFunction(fn::Node node, int dim)
      : node_(std::make_shared<fn::Node>(std::move(node))), dim_(dim) {}

  const fn::Node& node() const { return *node_; }
  int dim() const { return dim_; }

 private:
  std::shared_ptr<fn::Node> node_;
  int dim_;
};

/* ---- factories ---- */

inline ConvexFunction affine_fn(const Vec& a, double b) {
  return ConvexFunction(fn::Affine{a, b}, a.dim());
}

inline ConvexFunction pl_max_fn(const std::vector<std::pair<Vec, double>>& pieces) {
  if (pieces.empty()) throw std::invalid_argument("pl_max_fn: no pieces");
  int d = pieces[0].first.dim();
  for (const auto& p : pieces)
    if (p.first.dim() != d) throw std::invalid_argument("pl_max_fn: dim mismatch");
  return ConvexFunction(fn::PiecewiseLinearMax{pieces}, d);
}

inline ConvexFunction abs_fn(double shift = 0.0) { // |x - shift| in 1D
  return pl_max_fn({{Vec(1.0), -shift}, {Vec(-1.0), shift}});
}

inline ConvexFunction quadratic_1d(double q, double c, double d) {
  if (q < -1e-12) throw std::invalid_argument("quadratic_1d: negative curvature");
  fn::Quadratic n;
  n.xx = std::max(q, 0.0);
  n.c = Vec(c);
  n.d = d;
  return ConvexFunction(n, 1);
}

inline ConvexFunction quadratic_2d(double xx, double xy, double yy, const Vec& c,
                                   double d) {
  double tr = xx + yy, det = xx * yy - xy * xy;
  if (tr < -1e-12 || det < -1e-9 * (1.0 + tr * tr))
    throw std::invalid_argument("quadratic_2d: matrix not PSD");
  fn::Quadratic n;
  n.xx = xx; n.xy = xy; n.yy = yy;
  n.c = c;
  n.d = d;
  return ConvexFunction(n, 2);
}

inline ConvexFunction indicator_fn(const Polyhedron& P) {
  return ConvexFunction(fn::IndicatorOf{P}, P.dim());
}

inline ConvexFunction affine_plus_box_fn(const Vec& a, double b, const Polyhedron& box) {
  if (box.dim() != a.dim()) throw std::invalid_argument("affine_plus_box_fn: dim mismatch");
  if (box.is_empty()) throw std::invalid_argument("affine_plus_box_fn: empty box");
  return ConvexFunction(fn::AffinePlusBoxIndicator{a, b, box}, a.dim());
}

inline ConvexFunction sum_fn(std::vector<ConvexFunction> terms) {
  if (terms.empty()) throw std::invalid_argument("sum_fn: no terms");
  int d = terms[0].dim();
  for (const auto& t : terms)
    if (t.dim() != d) throw std::invalid_argument("sum_fn: dim mismatch");
  return ConvexFunction(fn::Sum{std::move(terms)}, d);
}

inline ConvexFunction scale_fn(double lambda, const ConvexFunction& f) {
  if (lambda < 0) throw std::invalid_argument("scale_fn: negative multiplier");
  return ConvexFunction(fn::Scale{lambda, std::make_shared<const ConvexFunction>(f)},
                        f.dim());
}

inline ConvexFunction restrict_fn(const ConvexFunction& f, const Polyhedron& P) {
  if (P.dim() != f.dim()) throw std::invalid_argument("restrict_fn: dim mismatch");
  return ConvexFunction(fn::RestrictTo{std::make_shared<const ConvexFunction>(f), P},
                        f.dim());
}

/* ---- named Custom1D registry ----
 * Custom evaluators are referenced by name only, so scenario files stay pure
 * data.  Each entry is convexity-checked by sampling at registration time. */

struct Custom1DSpec {
  std::function<ExtReal(double)> eval;
  double lo, hi;
};

inline std::map<std::string, Custom1DSpec>& custom1d_registry() {
  static std::map<std::string, Custom1DSpec> reg = [] {
    std::map<std::string, Custom1DSpec> r;
    double inf = std::numeric_limits<double>::infinity();
    r["neg_sqrt"] = {[](double x) {
                       if (x < 0) return ExtReal::pos_inf();
                       return ExtReal(-std::sqrt(x));
                     },
                     0.0, inf};
    r["exp"] = {[](double x) { return ExtReal(std::exp(x)); }, -inf, inf};
    r["neg_log"] = {[](double x) {
                      if (x <= 0) return ExtReal::pos_inf();
                      return ExtReal(-std::log(x));
                    },
                    0.0, inf};
    return r;
  }();
  return reg;
}

inline void check_sampled_convexity(const Custom1DSpec& s, const std::string& name) {
  std::mt19937 gen(1234567u);
  double lo = std::max(s.lo, -1e3), hi = std::min(s.hi, 1e3);
  if (!(lo < hi)) return;
  std::uniform_real_distribution<double> d(lo, hi);
  int checked = 0;
  for (int i = 0; i < 20000 && checked < 1000; ++i) {
    double x = d(gen), y = d(gen);
    ExtReal fx = s.eval(x), fy = s.eval(y), fm = s.eval(0.5 * (x + y));
    if (!fx.is_finite() || !fy.is_finite() || !fm.is_finite()) continue;
    ++checked;
    double avg = 0.5 * (fx.value() + fy.value());
    if (fm.value() > avg + 1e-9 * (1.0 + std::fabs(avg)))
      throw std::invalid_argument("custom1d '" + name + "' fails midpoint convexity");
  }
}

inline ConvexFunction custom1d_fn(const std::string& name) {
  auto it = custom1d_registry().find(name);
  if (it == custom1d_registry().end())
    throw std::invalid_argument("custom1d_fn: unknown evaluator '" + name + "'");
  check_sampled_convexity(it->second, name);
  return ConvexFunction(fn::Custom1D{name, it->second.eval, it->second.lo, it->second.hi},
                        1);
}

/* ---- evaluation ---- */

inline ExtReal evaluate(const ConvexFunction& f, const Vec& x);

namespace detail {

inline Vec quad_grad(const fn::Quadratic& q, const Vec& x) {
  if (x.dim() == 1) return Vec(q.xx * x.x() + q.c.x());
  return Vec(q.xx * x.x() + q.xy * x.y() + q.c.x(),
             q.xy * x.x() + q.yy * x.y() + q.c.y());
}

inline double quad_form(const fn::Quadratic& q, const Vec& v) {
  if (v.dim() == 1) return q.xx * v.x() * v.x();
  return q.xx * v.x() * v.x() + 2.0 * q.xy * v.x() * v.y() + q.yy * v.y() * v.y();
}

struct Eig2 {
  double l1, l2; // l1 >= l2
  Vec u1, u2;
};

inline Eig2 eig_sym_2x2(double xx, double xy, double yy) {
  Eig2 e;
  double half = 0.5 * (xx - yy);
  double disc = std::sqrt(half * half + xy * xy);
  double mid = 0.5 * (xx + yy);
  e.l1 = mid + disc;
  e.l2 = mid - disc;
  if (std::fabs(xy) > 1e-14) {
    e.u1 = Vec(e.l1 - yy, xy).normalized();
  } else {
    e.u1 = xx >= yy ? Vec(1, 0) : Vec(0, 1);
  }
  e.u2 = e.u1.perp();
  return e;
}

} // namespace detail

inline ExtReal evaluate(const ConvexFunction& f, const Vec& x) {
  if (x.dim() != f.dim()) throw std::invalid_argument("evaluate: dim mismatch");
  const fn::Node& n = f.node();
  if (auto* a = std::get_if<fn::Affine>(&n)) return ExtReal(a->a.dot(x) + a->b);
  if (auto* p = std::get_if<fn::PiecewiseLinearMax>(&n)) {
    double m = p->pieces[0].first.dot(x) + p->pieces[0].second;
    for (const auto& pc : p->pieces) m = std::max(m, pc.first.dot(x) + pc.second);
    return ExtReal(m);
  }
  if (auto* q = std::get_if<fn::Quadratic>(&n))
    return ExtReal(0.5 * detail::quad_form(*q, x) + q->c.dot(x) + q->d);
  if (auto* i = std::get_if<fn::IndicatorOf>(&n))
    return contains(i->set, x) ? ExtReal(0.0) : ExtReal::pos_inf();
  if (auto* ab = std::get_if<fn::AffinePlusBoxIndicator>(&n))
    return contains(ab->box, x) ? ExtReal(ab->a.dot(x) + ab->b) : ExtReal::pos_inf();
  if (auto* c = std::get_if<fn::Custom1D>(&n)) {
    if (x.x() < c->lo || x.x() > c->hi) return ExtReal::pos_inf();
    ExtReal v = c->eval(x.x());
    if (v.is_neg_inf()) throw std::logic_error("custom1d evaluator returned -inf");
    return v;
  }
  if (auto* s = std::get_if<fn::Sum>(&n)) {
    ExtReal acc(0.0);
    for (const auto& t : s->terms) acc = acc + evaluate(t, x);
    return acc;
  }
  if (auto* sc = std::get_if<fn::Scale>(&n))
    return ExtReal(sc->lambda) * evaluate(*sc->inner, x);
  const auto& r = std::get<fn::RestrictTo>(n);
  return contains(r.set, x) ? evaluate(*r.inner, x) : ExtReal::pos_inf();
}

/* ---- domain ---- */

struct FunctionDomain {
  Polyhedron set;
  bool exact = true;
};

inline FunctionDomain domain(const ConvexFunction& f) {
  const fn::Node& n = f.node();
  if (std::holds_alternative<fn::Affine>(n) ||
      std::holds_alternative<fn::PiecewiseLinearMax>(n) ||
      std::holds_alternative<fn::Quadratic>(n))
    return {full_space(f.dim()), true};
  if (auto* i = std::get_if<fn::IndicatorOf>(&n)) return {i->set, true};
  if (auto* ab = std::get_if<fn::AffinePlusBoxIndicator>(&n)) return {ab->box, true};
  if (auto* c = std::get_if<fn::Custom1D>(&n)) {
    ExtReal lo = std::isfinite(c->lo) ? ExtReal(c->lo) : ExtReal::neg_inf();
    ExtReal hi = std::isfinite(c->hi) ? ExtReal(c->hi) : ExtReal::pos_inf();
    // declared interval only: the evaluator may still be +inf inside
    return {interval_poly(lo, hi), false};
  }
  if (auto* s = std::get_if<fn::Sum>(&n)) {
    FunctionDomain acc = domain(s->terms[0]);
    for (size_t i = 1; i < s->terms.size(); ++i) {
      FunctionDomain di = domain(s->terms[i]);
      acc.set = intersect(acc.set, di.set);
      acc.exact = acc.exact && di.exact;
    }
    return acc;
  }
  if (auto* sc = std::get_if<fn::Scale>(&n)) {
    if (sc->lambda == 0.0) return {full_space(f.dim()), true}; // 0*f == 0 pointwise
    return domain(*sc->inner);
  }
  const auto& r = std::get<fn::RestrictTo>(n);
  FunctionDomain di = domain(*r.inner);
  return {intersect(di.set, r.set), di.exact};
}

/* ---- 1D/2D concave maximization (for conjugates with no closed form) ---- */

namespace detail {

/* Golden-section max of a concave objective on [lo,hi]; +-inf ends are
 * bracketed by doubling from a finite seed.  Returns +inf when the objective
 * keeps growing at |x| ~ 1e9. */
inline ExtReal max_concave_1d(const std::function<ExtReal(double)>& h, double lo,
                              double hi, int iters = 200) {
  auto val = [&](double x) { return h(x); };
  // find a finite seed
  double seed = 0.0;
  bool have_seed = false;
  std::vector<double> trials;
  if (std::isfinite(lo) && std::isfinite(hi)) trials.push_back(0.5 * (lo + hi));
  if (std::isfinite(hi)) { trials.push_back(hi); trials.push_back(hi - 1.0); trials.push_back(hi - 1e-6); }
  if (std::isfinite(lo)) { trials.push_back(lo); trials.push_back(lo + 1.0); trials.push_back(lo + 1e-6); }
  for (double t : {0.0, 1.0, -1.0, 0.5, -0.5}) trials.push_back(t);
  for (double t : trials) {
    if (t < lo || t > hi) continue;
    ExtReal vt = val(t);
    if (vt.is_pos_inf()) return ExtReal::pos_inf();
    if (vt.is_finite()) { seed = t; have_seed = true; break; }
  }
  if (!have_seed) {
    for (double step = 1e-3; step <= 1e8 && !have_seed; step *= 4.0)
      for (double t : {seed + step, seed - step}) {
        if (t < lo || t > hi) continue;
        ExtReal vt = val(t);
        if (vt.is_pos_inf()) return ExtReal::pos_inf();
        if (vt.is_finite()) { seed = t; have_seed = true; break; }
      }
  }
  if (!have_seed) return ExtReal::neg_inf(); // objective is identically -inf

  // expand to a bracket [a,b] containing the max
  bool hit_pos_inf = false;
  auto fin = [&](double x) {
    ExtReal v = val(x);
    if (v.is_pos_inf()) { hit_pos_inf = true; return 1e308; }
    return v.is_finite() ? v.value() : -1e308;
  };
  double a = std::max(lo, seed - 1.0), b = std::min(hi, seed + 1.0);
  double fa = fin(a), fb = fin(b);
  double fs = val(seed).value();
  double step = 1.0;
  while (b < hi && fb >= std::max(fs, fa) && !hit_pos_inf) {
    step *= 2.0;
    if (step > 2e9) return ExtReal::pos_inf();
    b = std::min(hi, b + step);
    fa = std::max(fa, fb);
    fs = std::max(fs, fb);
    fb = fin(b);
  }
  step = 1.0;
  while (a > lo && fa >= std::max(fs, fb) && !hit_pos_inf) {
    step *= 2.0;
    if (step > 2e9) return ExtReal::pos_inf();
    a = std::max(lo, a - step);
    fb = std::max(fb, fa);
    fs = std::max(fs, fa);
    fa = fin(a);
  }
  if (hit_pos_inf) return ExtReal::pos_inf();

  const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
  double x1 = b - gr * (b - a), x2 = a + gr * (b - a);
  double f1 = fin(x1), f2 = fin(x2);
  for (int i = 0; i < iters; ++i) {
    if (f1 < f2) {
      a = x1; x1 = x2; f1 = f2;
      x2 = a + gr * (b - a); f2 = fin(x2);
    } else {
      b = x2; x2 = x1; f2 = f1;
      x1 = b - gr * (b - a); f1 = fin(x1);
    }
  }
  double best = std::max({f1, f2, fin(0.5 * (a + b)), fs});
  if (hit_pos_inf || best >= 1e307) return ExtReal::pos_inf();
  if (best <= -1e307) return ExtReal::neg_inf();
  return ExtReal(best);
}

inline ExtReal max_concave_2d(const std::function<ExtReal(const Vec&)>& h) {
  // nested golden: partial max over y of a jointly concave h is concave in x
  auto outer = [&](double x) {
    return max_concave_1d(
        [&](double y) { return h(Vec(x, y)); },
        -std::numeric_limits<double>::infinity(),
        std::numeric_limits<double>::infinity(), 120);
  };
  return max_concave_1d([&](double x) { return outer(x); },
                        -std::numeric_limits<double>::infinity(),
                        std::numeric_limits<double>::infinity(), 120);
}

} // namespace detail

/* ---- conjugate ---- */

inline ExtReal conjugate_value(const ConvexFunction& f, const Vec& y);

namespace detail {

inline ExtReal conjugate_pl(const fn::PiecewiseLinearMax& p, const Vec& y) {
  // f*(y) = min { sum l_i (-b_i) : sum l_i a_i = y, l in simplex }
  double best = std::numeric_limits<double>::infinity();
  size_t m = p.pieces.size();
  auto consider = [&](double v) { best = std::min(best, v); };
  double tol = 1e-9 * (1.0 + y.norm());
  for (size_t i = 0; i < m; ++i)
    if (vec_close(p.pieces[i].first, y, tol)) consider(-p.pieces[i].second);
  for (size_t i = 0; i < m; ++i)
    for (size_t j = i + 1; j < m; ++j) {
      Vec ai = p.pieces[i].first, aj = p.pieces[j].first;
      Vec e = aj - ai;
      double L2 = e.dot(e);
      if (L2 <= 1e-18) continue;
      double t = (y - ai).dot(e) / L2;
      if (t < -1e-9 || t > 1.0 + 1e-9) continue;
      t = std::clamp(t, 0.0, 1.0);
      if (!vec_close(ai + e * t, y, tol)) continue;
      consider(-(1.0 - t) * p.pieces[i].second - t * p.pieces[j].second);
    }
  if (y.dim() == 2) {
    for (size_t i = 0; i < m; ++i)
      for (size_t j = i + 1; j < m; ++j)
        for (size_t k = j + 1; k < m; ++k) {
          Vec ai = p.pieces[i].first;
          Vec u = p.pieces[j].first - ai, v = p.pieces[k].first - ai;
          double det = u.cross(v);
          if (std::fabs(det) <= 1e-12) continue;
          Vec w = y - ai;
          double s = w.cross(v) / det, t = u.cross(w) / det;
          if (s < -1e-9 || t < -1e-9 || s + t > 1.0 + 1e-9) continue;
          s = std::max(s, 0.0); t = std::max(t, 0.0);
          consider(-(1.0 - s - t) * p.pieces[i].second - s * p.pieces[j].second -
                   t * p.pieces[k].second);
        }
  }
  if (!std::isfinite(best)) return ExtReal::pos_inf();
  return ExtReal(best);
}

inline ExtReal conjugate_quadratic(const fn::Quadratic& q, const Vec& y) {
  Vec w = y - q.c;
  if (y.dim() == 1) {
    if (q.xx > 1e-12) return ExtReal(0.5 * w.x() * w.x() / q.xx - q.d);
    if (std::fabs(w.x()) <= 1e-9) return ExtReal(-q.d);
    return ExtReal::pos_inf();
  }
  Eig2 e = eig_sym_2x2(q.xx, q.xy, q.yy);
  double w1 = w.dot(e.u1), w2 = w.dot(e.u2);
  double acc = -q.d;
  if (e.l1 > 1e-12) acc += 0.5 * w1 * w1 / e.l1;
  else if (std::fabs(w1) > 1e-9) return ExtReal::pos_inf();
  if (e.l2 > 1e-12) acc += 0.5 * w2 * w2 / e.l2;
  else if (std::fabs(w2) > 1e-9) return ExtReal::pos_inf();
  return ExtReal(acc);
}

inline ExtReal conjugate_generic(const ConvexFunction& f, const Vec& y) {
  if (f.dim() == 1) {
    FunctionDomain D = domain(f);
    double lo = -std::numeric_limits<double>::infinity();
    double hi = std::numeric_limits<double>::infinity();
    if (!D.set.is_empty()) {
      ExtReal slo = support(D.set, Vec(-1.0)), shi = support(D.set, Vec(1.0));
      if (slo.is_finite()) lo = -slo.value();
      if (shi.is_finite()) hi = shi.value();
    } else {
      return ExtReal::neg_inf(); // conjugate of +inf everywhere
    }
    return max_concave_1d(
        [&](double x) {
          ExtReal fx = evaluate(f, Vec(x));
          if (!fx.is_finite()) return fx.is_pos_inf() ? ExtReal::neg_inf() : ExtReal::pos_inf();
          return ExtReal(y.x() * x - fx.value());
        },
        lo, hi);
  }
  return max_concave_2d([&](const Vec& x) {
    ExtReal fx = evaluate(f, x);
    if (!fx.is_finite()) return fx.is_pos_inf() ? ExtReal::neg_inf() : ExtReal::pos_inf();
    return ExtReal(y.dot(x) - fx.value());
  });
}

} // namespace detail

inline ExtReal conjugate_value(const ConvexFunction& f, const Vec& y) {
  if (y.dim() != f.dim()) throw std::invalid_argument("conjugate_value: dim mismatch");
  const fn::Node& n = f.node();
  if (auto* a = std::get_if<fn::Affine>(&n)) {
    if (detail::vec_close(a->a, y, 1e-9 * (1.0 + y.norm()))) return ExtReal(-a->b);
    return ExtReal::pos_inf();
  }
  if (auto* p = std::get_if<fn::PiecewiseLinearMax>(&n)) return detail::conjugate_pl(*p, y);
  if (auto* q = std::get_if<fn::Quadratic>(&n)) return detail::conjugate_quadratic(*q, y);
  if (auto* i = std::get_if<fn::IndicatorOf>(&n)) return support(i->set, y);
  if (auto* ab = std::get_if<fn::AffinePlusBoxIndicator>(&n))
    return support(ab->box, y - ab->a) - ExtReal(ab->b);
  if (std::holds_alternative<fn::Custom1D>(n)) return detail::conjugate_generic(f, y);
  if (auto* sc = std::get_if<fn::Scale>(&n)) {
    if (sc->lambda == 0.0)
      return y.norm() <= 1e-12 ? ExtReal(0.0) : ExtReal::pos_inf();
    return ExtReal(sc->lambda) * conjugate_value(*sc->inner, y * (1.0 / sc->lambda));
  }
  if (auto* r = std::get_if<fn::RestrictTo>(&n)) {
    // affine restricted to a polyhedron has the support-function closed form
    if (auto* a = std::get_if<fn::Affine>(&r->inner->node()))
      return support(r->set, y - a->a) - ExtReal(a->b);
    return detail::conjugate_generic(f, y);
  }
  return detail::conjugate_generic(f, y);
}

/* Fenchel-Young gap f(x) + f*(x*) - <x*,x>; the eps-certificate machinery
 * reads it as the exact eps at which x* enters the eps-subdifferential. */
inline ExtReal fenchel_young_gap(const ConvexFunction& f, const Vec& x, const Vec& xstar) {
  ExtReal fx = evaluate(f, x);
  if (!fx.is_finite())
    throw std::domain_error("fenchel_young_gap: f(x) is not finite");
  ExtReal fs = conjugate_value(f, xstar);
  return fx + fs - ExtReal(xstar.dot(x));
}

/* ---- directional support of the eps-subdifferential ---- */

/* inf_{s>0} (f(x+sv) - f(x) + eps)/s by ternary search over log s.  The
 * quotient is unimodal (nonincreasing then nondecreasing) in s, so interval
 * thirds with ties resolved toward the left bracket converge to the inf. */
inline ExtReal directional_support_kernel(const ConvexFunction& f, const Vec& x,
                                          const Vec& v, double eps,
                                          double s_lo = 1e-8, double s_hi = 1e8,
                                          int iters = 200) {
  ExtReal fx = evaluate(f, x);
  if (!fx.is_finite()) return ExtReal::neg_inf(); // empty subdifferential
  auto h = [&](double logs) {
    double s = std::exp(logs);
    ExtReal fv = evaluate(f, x + v * s);
    if (!fv.is_finite()) return ExtReal::pos_inf();
    return ExtReal((fv.value() - fx.value() + eps) / s);
  };
  double a = std::log(s_lo), b = std::log(s_hi);
  for (int i = 0; i < iters; ++i) {
    double m1 = a + (b - a) / 3.0, m2 = b - (b - a) / 3.0;
    if (h(m1) <= h(m2)) b = m2;
    else a = m1;
  }
  ExtReal best = ExtReal::pos_inf();
  for (double t : {a, 0.5 * (a + b), b, std::log(s_lo), std::log(s_hi)}) {
    ExtReal ht = h(t);
    if (ht < best) best = ht;
  }
  return best;
}

struct EpsSubdiffResult {
  Polyhedron set;
  bool closed_form = true; // false: outer approximation on the direction grid
  int direction_count = 0;
};

inline EpsSubdiffResult eps_subdifferential(const ConvexFunction& f, const Vec& x,
                                            double eps, int directions = 360);

inline ExtReal directional_support(const ConvexFunction& f, const Vec& x, const Vec& v,
                                   double eps) {
  if (!evaluate(f, x).is_finite())
    throw std::domain_error("directional_support: f(x) is not finite");
  const fn::Node& n = f.node();
  if (auto* a = std::get_if<fn::Affine>(&n)) { (void)x; return ExtReal(a->a.dot(v)); }
  if (auto* q = std::get_if<fn::Quadratic>(&n)) {
    Vec g = detail::quad_grad(*q, x);
    return ExtReal(g.dot(v) + std::sqrt(std::max(0.0, 2.0 * eps * detail::quad_form(*q, v))));
  }
  if (auto* p = std::get_if<fn::PiecewiseLinearMax>(&n)) {
    // max over the lambda-characterization points, without building the set
    // (this sits in the allocator's inner loop)
    size_t m = p->pieces.size();
    std::vector<double> q(m);
    double fx = p->pieces[0].first.dot(x) + p->pieces[0].second;
    for (size_t i = 0; i < m; ++i) {
      q[i] = p->pieces[i].first.dot(x) + p->pieces[i].second;
      fx = std::max(fx, q[i]);
    }
    double c = fx - eps;
    double tol = 1e-12 * (1.0 + std::fabs(fx));
    double best = -std::numeric_limits<double>::infinity();
    for (size_t i = 0; i < m; ++i)
      if (q[i] >= c - tol) best = std::max(best, p->pieces[i].first.dot(v));
    for (size_t i = 0; i < m; ++i)
      for (size_t j = 0; j < m; ++j) {
        if (q[i] <= c + tol || q[j] >= c - tol) continue;
        double t = (c - q[j]) / (q[i] - q[j]);
        best = std::max(best, (p->pieces[j].first +
                               (p->pieces[i].first - p->pieces[j].first) * t)
                                  .dot(v));
      }
    return ExtReal(best);
  }
  if (std::holds_alternative<fn::IndicatorOf>(n) ||
      std::holds_alternative<fn::AffinePlusBoxIndicator>(n)) {
    EpsSubdiffResult r = eps_subdifferential(f, x, eps);
    return support(r.set, v);
  }
  if (auto* sc = std::get_if<fn::Scale>(&n)) {
    if (sc->lambda == 0.0) return ExtReal(0.0);
    return ExtReal(sc->lambda) * directional_support(*sc->inner, x, v, eps / sc->lambda);
  }
  {
    // point-domain fast path: the eps-subdifferential is the whole space
    FunctionDomain dom = domain(f);
    if (dom.exact && !dom.set.is_empty() && dom.set.vertices().size() == 1 &&
        dom.set.rays().empty())
      return v.norm() > 0 ? ExtReal::pos_inf() : ExtReal(0.0);
  }
  return directional_support_kernel(f, x, v, eps);
}

namespace detail {

inline Polyhedron poly_from_support_grid(int dim, const std::vector<Vec>& dirs,
                                         const std::vector<ExtReal>& sup) {
  std::vector<Halfspace> fs;
  for (size_t i = 0; i < dirs.size(); ++i)
    if (sup[i].is_finite()) fs.push_back({dirs[i], sup[i].value()});
  if (fs.empty()) return full_space(dim);
  return from_halfspaces(dim, fs);
}

inline EpsSubdiffResult eps_subdiff_kernel(const ConvexFunction& f, const Vec& x,
                                           double eps, int directions) {
  EpsSubdiffResult out;
  out.closed_form = false;
  std::vector<Vec> dirs = direction_fan(f.dim(), directions);
  out.direction_count = int(dirs.size());
  std::vector<ExtReal> sup;
  bool all_neg_inf = true;
  for (const Vec& v : dirs) {
    ExtReal s = directional_support_kernel(f, x, v, eps);
    all_neg_inf = all_neg_inf && s.is_neg_inf();
    sup.push_back(s);
  }
  if (all_neg_inf) { out.set = empty_poly(f.dim()); return out; }
  if (f.dim() == 1) {
    // [-sigma(-1), sigma(+1)] with infinite ends becoming rays
    ExtReal hi = sup[0], lo = -sup[1];
    if (lo.is_finite() && hi.is_finite() && lo.value() > hi.value()) {
      // quotients at s ~ 1e-8 carry cancellation noise ~1e-7; a genuine
      // inversion beyond that certifies emptiness, anything less is a
      // singleton pinched by roundoff
      if (lo.value() - hi.value() > 1e-6 * (1.0 + std::fabs(lo.value()))) {
        out.set = empty_poly(1);
        return out;
      }
      ExtReal mid(0.5 * (lo.value() + hi.value()));
      lo = mid;
      hi = mid;
    }
    out.set = interval_poly(lo, hi);
    return out;
  }
  out.set = poly_from_support_grid(2, dirs, sup);
  return out;
}

} // namespace detail

inline EpsSubdiffResult eps_subdifferential(const ConvexFunction& f, const Vec& x,
                                            double eps, int directions) {
  if (eps < 0) throw std::invalid_argument("eps_subdifferential: eps < 0");
  EpsSubdiffResult out;
  ExtReal fx = evaluate(f, x);
  if (!fx.is_finite()) { // definition gives the empty set outside the domain
    out.set = empty_poly(f.dim());
    out.closed_form = true;
    return out;
  }
  const fn::Node& n = f.node();
  if (auto* a = std::get_if<fn::Affine>(&n)) {
    out.set = point_poly(a->a);
    return out;
  }
  if (auto* p = std::get_if<fn::PiecewiseLinearMax>(&n)) {
    // lambda-characterization: conv of active slopes and threshold crossings
    double c = fx.value() - eps;
    std::vector<Vec> pts;
    size_t m = p->pieces.size();
    std::vector<double> q(m);
    for (size_t i = 0; i < m; ++i) q[i] = p->pieces[i].first.dot(x) + p->pieces[i].second;
    double tol = 1e-12 * (1.0 + std::fabs(fx.value()));
    for (size_t i = 0; i < m; ++i)
      if (q[i] >= c - tol) pts.push_back(p->pieces[i].first);
    for (size_t i = 0; i < m; ++i)
      for (size_t j = 0; j < m; ++j) {
        if (q[i] <= c + tol || q[j] >= c - tol) continue; // need q_i > c > q_j
        double t = (c - q[j]) / (q[i] - q[j]);
        pts.push_back(p->pieces[j].first +
                      (p->pieces[i].first - p->pieces[j].first) * t);
      }
    out.set = make_polyhedron(f.dim(), pts);
    return out;
  }
  if (auto* q = std::get_if<fn::Quadratic>(&n)) {
    Vec g = detail::quad_grad(*q, x);
    if (f.dim() == 1) {
      double s = std::sqrt(std::max(0.0, 2.0 * eps * q->xx));
      out.set = interval_poly(ExtReal(g.x() - s), ExtReal(g.x() + s));
      return out;
    }
    detail::Eig2 e = detail::eig_sym_2x2(q->xx, q->xy, q->yy);
    double s1 = std::sqrt(std::max(0.0, 2.0 * eps * e.l1));
    double s2 = std::sqrt(std::max(0.0, 2.0 * eps * e.l2));
    if (s1 <= 1e-12) { out.set = point_poly(g); return out; }
    if (s2 <= 1e-12) { // degenerate ellipse: an exact segment
      out.set = make_polyhedron(2, {g - e.u1 * s1, g + e.u1 * s1});
      return out;
    }
    out.closed_form = false; // ellipse: polyhedral outer approximation
    std::vector<Vec> dirs = direction_fan(2, directions);
    out.direction_count = int(dirs.size());
    std::vector<ExtReal> sup;
    for (const Vec& v : dirs)
      sup.push_back(ExtReal(g.dot(v) +
                            std::sqrt(std::max(0.0, 2.0 * eps * detail::quad_form(*q, v)))));
    out.set = detail::poly_from_support_grid(2, dirs, sup);
    return out;
  }
  if (auto* i = std::get_if<fn::IndicatorOf>(&n)) {
    out.set = normal_cone_eps(i->set, x, eps);
    return out;
  }
  if (auto* ab = std::get_if<fn::AffinePlusBoxIndicator>(&n)) {
    out.set = minkowski_sum(point_poly(ab->a), normal_cone_eps(ab->box, x, eps));
    return out;
  }
  if (auto* sc = std::get_if<fn::Scale>(&n)) {
    if (sc->lambda == 0.0) { out.set = point_poly(Vec::zero(f.dim())); return out; }
    EpsSubdiffResult inner = eps_subdifferential(*sc->inner, x, eps / sc->lambda, directions);
    out.closed_form = inner.closed_form;
    out.direction_count = inner.direction_count;
    if (inner.set.is_empty()) { out.set = inner.set; return out; }
    std::vector<Vec> vs;
    for (const Vec& v : inner.set.vertices()) vs.push_back(v * sc->lambda);
    out.set = make_polyhedron(f.dim(), vs, inner.set.rays());
    return out;
  }
  {
    /* Point-domain fast path for the kernel-bound variants (Sum, RestrictTo,
     * Custom1D): when dom f = {x}, every slope satisfies the subgradient
     * inequality vacuously, so the set is the whole space. */
    FunctionDomain dom = domain(f);
    if (dom.exact && !dom.set.is_empty() && dom.set.vertices().size() == 1 &&
        dom.set.rays().empty())
      return {full_space(f.dim()), true, 0};
  }
  return detail::eps_subdiff_kernel(f, x, eps, directions);
}

/* ---- convexity defect of a raw (possibly nonconvex) 1D sample ---- */

/* g(x) minus the lower convex envelope of g sampled on [lo,hi].  The window
 * must contain x; the envelope is the lower hull of the sampled graph. */
inline double convexity_modulus(const std::function<double(double)>& g, double x,
                                double lo, double hi, int samples = 10001) {
  if (!(lo <= x && x <= hi))
    throw std::invalid_argument("convexity_modulus: x outside window");
  std::vector<Vec> graph;
  bool x_sampled = false;
  for (int i = 0; i < samples; ++i) {
    double t = lo + (hi - lo) * i / (samples - 1);
    if (std::fabs(t - x) < 1e-12) x_sampled = true;
    graph.emplace_back(t, g(t));
  }
  if (!x_sampled) graph.emplace_back(x, g(x));
  std::sort(graph.begin(), graph.end(),
            [](const Vec& a, const Vec& b) { return a.x() < b.x(); });
  // lower hull of the graph
  std::vector<Vec> hull;
  for (const Vec& p : graph) {
    while (hull.size() >= 2) {
      const Vec& a = hull[hull.size() - 2];
      const Vec& b = hull[hull.size() - 1];
      if ((b - a).cross(p - a) <= 1e-15 * (1.0 + std::fabs(p.x()) + std::fabs(p.y())))
        hull.pop_back();
      else
        break;
    }
    hull.push_back(p);
  }
  // evaluate the envelope at x
  double env = g(x);
  for (size_t i = 0; i + 1 < hull.size(); ++i) {
    if (hull[i].x() <= x + 1e-12 && x <= hull[i + 1].x() + 1e-12) {
      double w = hull[i + 1].x() - hull[i].x();
      double lam = w > 1e-15 ? (x - hull[i].x()) / w : 0.0;
      env = std::min(env, (1.0 - lam) * hull[i].y() + lam * hull[i + 1].y());
    }
  }
  return std::max(0.0, g(x) - env);
}

} // namespace subcalc
