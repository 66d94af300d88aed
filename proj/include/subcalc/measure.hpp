#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <stdexcept>
#include <vector>

#include "subcalc/extreal.hpp"

namespace subcalc {

/* Discretized measure spaces.  Interval spaces carry their quadrature nodes
 * (composite two-point Gauss-Legendre); a declared power-law singularity at
 * an endpoint switches to the substitution t = a + s^2 (resp. b - s^2) so
 * integrable singularities are handled by change of variables rather than
 * node count. */

enum class IntegralStatus { finite, divergent, indeterminate };

struct IntervalOptions {
  int node_count = 2048; // must be even: two GL nodes per panel
  bool singular_a = false;
  double exponent_a = 0.0;
  bool singular_b = false;
  double exponent_b = 0.0;
};

class MeasureSpace {
 public:
  enum class Kind { finite_discrete, countable_truncated, interval };

  Kind kind() const { return kind_; }
  const std::vector<double>& nodes() const { return nodes_; }
  const std::vector<double>& weights() const { return weights_; }
  double tail_bound() const { return tail_bound_; }
  double a() const { return a_; }
  double b() const { return b_; }
  const IntervalOptions& interval_options() const { return opt_; }

  double total_mass() const {
    double m = tail_bound_;
    for (double w : weights_) m += w;
    return m;
  }

  friend MeasureSpace finite_discrete_space(const std::vector<double>&,
                                            const std::vector<double>&);
  friend MeasureSpace countable_space(const std::function<double(int)>&, int, double);
  friend MeasureSpace interval_space(double, double, const IntervalOptions&);

 private:
  Kind kind_ = Kind::finite_discrete;
  std::vector<double> nodes_, weights_;
  double tail_bound_ = 0.0;
  double a_ = 0.0, b_ = 0.0;
  IntervalOptions opt_;
};

inline MeasureSpace finite_discrete_space(const std::vector<double>& ts,
                                          const std::vector<double>& ws) {
  if (ts.size() != ws.size() || ts.empty())
    throw std::invalid_argument("finite_discrete_space: bad node/weight lists");
  for (double w : ws)
    if (!(w >= 0)) throw std::invalid_argument("finite_discrete_space: negative weight");
  MeasureSpace m;
  m.kind_ = MeasureSpace::Kind::finite_discrete;
  m.nodes_ = ts;
  m.weights_ = ws;
  return m;
}

inline MeasureSpace countable_space(const std::function<double(int)>& w, int truncation = 10000,
                                    double tail_bound = 0.0) {
  if (truncation < 1) throw std::invalid_argument("countable_space: truncation < 1");
  if (tail_bound < 0) throw std::invalid_argument("countable_space: negative tail bound");
  MeasureSpace m;
  m.kind_ = MeasureSpace::Kind::countable_truncated;
  for (int n = 1; n <= truncation; ++n) {
    double wn = w(n);
    if (!(wn >= 0)) throw std::invalid_argument("countable_space: negative weight");
    m.nodes_.push_back(double(n));
    m.weights_.push_back(wn);
  }
  m.tail_bound_ = tail_bound;
  return m;
}

namespace detail {

// two-point Gauss-Legendre panel on [u, u+h] in a substituted variable s;
// push (t(s), w * t'(s)) for each node
inline void gl2_panel(double u, double h, const std::function<double(double)>& t_of_s,
                      const std::function<double(double)>& dt_ds,
                      std::vector<double>& nodes, std::vector<double>& weights) {
  const double off = 0.5 / std::sqrt(3.0);
  for (double c : {0.5 - off, 0.5 + off}) {
    double s = u + c * h;
    nodes.push_back(t_of_s(s));
    weights.push_back(0.5 * h * std::fabs(dt_ds(s)));
  }
}

inline void build_interval_nodes(double a, double b, bool sub_a, bool sub_b, int count,
                                 std::vector<double>& nodes, std::vector<double>& weights) {
  int panels = count / 2;
  if (sub_a && sub_b) {
    double mid = 0.5 * (a + b);
    build_interval_nodes(a, mid, true, false, count / 2, nodes, weights);
    build_interval_nodes(mid, b, false, true, count / 2, nodes, weights);
    return;
  }
  if (sub_a) {
    double S = std::sqrt(b - a), h = S / panels;
    for (int i = 0; i < panels; ++i)
      gl2_panel(i * h, h, [a](double s) { return a + s * s; },
                [](double s) { return 2.0 * s; }, nodes, weights);
    return;
  }
  if (sub_b) {
    double S = std::sqrt(b - a), h = S / panels;
    for (int i = 0; i < panels; ++i)
      gl2_panel(i * h, h, [b](double s) { return b - s * s; },
                [](double s) { return 2.0 * s; }, nodes, weights);
    std::reverse(nodes.end() - 2 * panels, nodes.end());
    std::reverse(weights.end() - 2 * panels, weights.end());
    return;
  }
  double h = (b - a) / panels;
  for (int i = 0; i < panels; ++i)
    gl2_panel(a + i * h, h, [](double s) { return s; }, [](double) { return 1.0; },
              nodes, weights);
}

} // namespace detail

inline MeasureSpace interval_space(double a, double b, const IntervalOptions& opt = {}) {
  if (!(a < b)) throw std::invalid_argument("interval_space: need a < b");
  if (opt.node_count < 4 || opt.node_count % 2)
    throw std::invalid_argument("interval_space: node_count must be even and >= 4");
  MeasureSpace m;
  m.kind_ = MeasureSpace::Kind::interval;
  m.a_ = a;
  m.b_ = b;
  m.opt_ = opt;
  detail::build_interval_nodes(a, b, opt.singular_a, opt.singular_b, opt.node_count,
                               m.nodes_, m.weights_);
  return m;
}

/* ---- upper integral with divergence detection ---- */

struct IntegrateResult {
  ExtReal value = ExtReal(0.0);
  IntegralStatus status = IntegralStatus::finite;
};

namespace detail {

/* Fitted power-law exponent of |phi| against the distance to a singular
 * endpoint, using the nodes nearest that endpoint.  Returns false when the
 * values near the endpoint do not actually blow up. */
inline bool fit_endpoint_exponent(const std::vector<double>& dist,
                                  const std::vector<double>& phi, double& p_hat,
                                  int& sign) {
  std::vector<size_t> idx(dist.size());
  for (size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  std::sort(idx.begin(), idx.end(),
            [&](size_t i, size_t j) { return dist[i] < dist[j]; });
  size_t k = std::min<size_t>(24, idx.size());
  if (k < 6) return false;
  // blow-up trigger is scale-relative: a divergent integrand may be tiny in
  // absolute terms (x^2/t at small x) yet still follow its power law
  double near = std::fabs(phi[idx[0]]);
  double mid = std::fabs(phi[idx[idx.size() / 2]]);
  if (!(near > 1e3 * mid) || !(near > 0.0)) return false;
  sign = phi[idx[0]] > 0 ? 1 : -1;
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  size_t used = 0;
  for (size_t j = 0; j < k; ++j) {
    double d = dist[idx[j]], v = phi[idx[j]];
    if (d <= 0 || v == 0.0 || (v > 0) != (sign > 0)) continue;
    double lx = std::log(d), ly = std::log(std::fabs(v));
    sx += lx; sy += ly; sxx += lx * lx; sxy += lx * ly;
    ++used;
  }
  if (used < 6) return false;
  double var = sxx - sx * sx / used;
  if (var <= 1e-12) return false;
  p_hat = -(sxy - sx * sy / used) / var; // |phi| ~ d^{-p}
  return true;
}

} // namespace detail

inline IntegrateResult integrate(const std::vector<ExtReal>& values,
                                 const MeasureSpace& mu) {
  if (values.size() != mu.nodes().size())
    throw std::invalid_argument("integrate: value count != node count");
  bool has_pos = false, has_neg = false;
  double sum = 0.0;
  for (size_t i = 0; i < values.size(); ++i) {
    double w = mu.weights()[i];
    if (w == 0.0) continue; // 0 * (+-inf) = 0 inside the pointwise product
    if (values[i].is_pos_inf()) { has_pos = true; continue; }
    if (values[i].is_neg_inf()) { has_neg = true; continue; }
    sum += w * values[i].value();
  }
  IntegrateResult out;
  if (has_pos && has_neg) {
    out.status = IntegralStatus::indeterminate;
    out.value = ExtReal::pos_inf();
    return out;
  }
  if (has_pos || has_neg) {
    out.status = IntegralStatus::divergent;
    out.value = has_pos ? ExtReal::pos_inf() : ExtReal::neg_inf();
    return out;
  }
  if (mu.kind() == MeasureSpace::Kind::interval) {
    const IntervalOptions& o = mu.interval_options();
    for (int end = 0; end < 2; ++end) {
      if (end == 0 && !o.singular_a) continue;
      if (end == 1 && !o.singular_b) continue;
      double ref = end == 0 ? mu.a() : mu.b();
      std::vector<double> dist, phi;
      for (size_t i = 0; i < values.size(); ++i) {
        dist.push_back(std::fabs(mu.nodes()[i] - ref));
        phi.push_back(values[i].value());
      }
      double p_hat = 0.0;
      int sign = 1;
      if (detail::fit_endpoint_exponent(dist, phi, p_hat, sign) && p_hat >= 1.0 - 1e-3) {
        out.status = IntegralStatus::divergent;
        out.value = sign > 0 ? ExtReal::pos_inf() : ExtReal::neg_inf();
        return out;
      }
    }
  }
  if (std::fabs(sum) > 1e12) {
    out.status = IntegralStatus::divergent;
    out.value = sum > 0 ? ExtReal::pos_inf() : ExtReal::neg_inf();
    return out;
  }
  out.value = ExtReal(sum);
  return out;
}

/* Callable flavor; interval spaces are re-evaluated at doubled resolution and
 * the refined verdict wins (growth between refinements past the threshold is
 * what flags undeclared divergence). */
inline IntegrateResult integrate_fn(const std::function<ExtReal(double)>& phi,
                                    const MeasureSpace& mu) {
  auto eval_on = [&](const MeasureSpace& m) {
    std::vector<ExtReal> vals;
    vals.reserve(m.nodes().size());
    for (double t : m.nodes()) vals.push_back(phi(t));
    return integrate(vals, m);
  };
  IntegrateResult base = eval_on(mu);
  if (mu.kind() != MeasureSpace::Kind::interval) return base;
  IntervalOptions o = mu.interval_options();
  o.node_count *= 2;
  IntegrateResult fine = eval_on(interval_space(mu.a(), mu.b(), o));
  if (base.status == IntegralStatus::indeterminate ||
      fine.status == IntegralStatus::indeterminate) {
    return {ExtReal::pos_inf(), IntegralStatus::indeterminate};
  }
  if (base.status == IntegralStatus::divergent) return base;
  return fine;
}

/* ---- error allocations ---- */

struct ErrorAllocation {
  std::vector<double> values; // l(t) >= 0 per node
  double budget = 0.0;
  double certified_integral = 0.0;
};

inline void validate_allocation(const ErrorAllocation& a, const MeasureSpace& mu) {
  if (a.values.size() != mu.nodes().size())
    throw std::logic_error("allocation/node count mismatch");
  double s = 0.0;
  for (size_t i = 0; i < a.values.size(); ++i) {
    if (!(a.values[i] >= 0)) throw std::logic_error("negative allocation value");
    s += a.values[i] * mu.weights()[i];
  }
  if (std::fabs(s - a.certified_integral) > 1e-9 * (1.0 + std::fabs(s)))
    throw std::logic_error("certified integral does not re-integrate");
  if (s > a.budget + 1e-12) throw std::logic_error("allocation exceeds budget");
}

inline ErrorAllocation uniform_allocation(double eps1, const MeasureSpace& mu) {
  if (eps1 < 0) throw std::invalid_argument("uniform_allocation: negative budget");
  double M = mu.total_mass();
  if (!(M > 0) || !std::isfinite(M))
    throw std::invalid_argument("uniform_allocation: total mass must be finite positive");
  ErrorAllocation out;
  out.budget = eps1;
  double level = eps1 / M;
  double s = 0.0;
  for (double w : mu.weights()) {
    out.values.push_back(level);
    s += level * w;
  }
  out.certified_integral = s;
  return out;
}

/* Lagrangian allocator for the separable concave problem
 *   max sum_i w_i sigma_i(l_i)  s.t.  sum_i w_i l_i <= eps1, l >= 0.
 * sigma_i must be concave nondecreasing in the per-node budget (it is a
 * support value of a growing set).  Nodes whose sigma is +inf are excluded
 * and reported; the caller owns what an infinite node means. */
struct AllocationResult {
  ErrorAllocation alloc;
  ExtReal achieved_support = ExtReal(0.0);
  std::vector<int> non_finite_nodes;
};

namespace detail {

inline double argmax_concave_on_segment(const std::function<double(double)>& h, double lo,
                                        double hi, int iters = 60) {
  const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
  double a = lo, b = hi;
  double x1 = b - gr * (b - a), x2 = a + gr * (b - a);
  double f1 = h(x1), f2 = h(x2);
  for (int i = 0; i < iters; ++i) {
    if (f1 < f2) {
      a = x1; x1 = x2; f1 = f2;
      x2 = a + gr * (b - a); f2 = h(x2);
    } else {
      b = x2; x2 = x1; f2 = f1;
      x1 = b - gr * (b - a); f1 = h(x1);
    }
  }
  double best = 0.5 * (a + b);
  for (double c : {lo, hi, x1, x2})
    if (h(c) > h(best)) best = c;
  return best;
}

} // namespace detail

inline AllocationResult optimal_allocation(double eps1, const MeasureSpace& mu,
                                           const std::function<ExtReal(int, double)>& sigma) {
  if (eps1 < 0) throw std::invalid_argument("optimal_allocation: negative budget");
  size_t n = mu.nodes().size();
  AllocationResult out;
  out.alloc.budget = eps1;
  out.alloc.values.assign(n, 0.0);

  std::vector<bool> usable(n, true);
  for (size_t i = 0; i < n; ++i)
    if (sigma(int(i), eps1).is_pos_inf()) {
      usable[i] = false;
      out.non_finite_nodes.push_back(int(i));
    }

  auto sig = [&](size_t i, double e) {
    ExtReal v = sigma(int(i), e);
    if (v.is_neg_inf()) return -1e308; // empty set at this budget level
    return v.value();
  };
  auto achieved = [&](const std::vector<double>& l) {
    ExtReal acc(0.0);
    for (size_t i = 0; i < n; ++i) {
      if (mu.weights()[i] == 0.0) continue;
      ExtReal s = sigma(int(i), l[i]);
      acc = acc + ExtReal(mu.weights()[i]) * s;
    }
    return acc;
  };

  std::vector<double> best = out.alloc.values;
  ExtReal best_val = achieved(best);

  auto consider = [&](const std::vector<double>& cand) {
    double tot = 0.0;
    for (size_t i = 0; i < n; ++i) tot += cand[i] * mu.weights()[i];
    if (tot > eps1 + 1e-12) return;
    ExtReal v = achieved(cand);
    if (best_val < v) { best_val = v; best = cand; }
  };

  if (eps1 > 0 && n > 0) {
    // per-node cap: one node may consume the entire budget
    std::vector<double> cap(n, 0.0);
    for (size_t i = 0; i < n; ++i) {
      double w = mu.weights()[i];
      cap[i] = usable[i] && w > 0 ? eps1 / w : 0.0;
    }

    double lam_max = 1.0;
    for (size_t i = 0; i < n; ++i) {
      if (!usable[i] || cap[i] <= 0) continue;
      double e0 = 1e-12;
      double slope = (sig(i, 2 * e0) - sig(i, e0)) / e0;
      if (std::isfinite(slope)) lam_max = std::max(lam_max, slope);
    }
    lam_max = std::min(lam_max, 1e12);

    auto alloc_at = [&](double lam) {
      std::vector<double> l(n, 0.0);
      for (size_t i = 0; i < n; ++i) {
        if (!usable[i] || cap[i] <= 0) continue;
        l[i] = detail::argmax_concave_on_segment(
            [&](double e) { return sig(i, e) - lam * e; }, 0.0, cap[i]);
        if (l[i] < 1e-14 * cap[i]) l[i] = 0.0;
      }
      return l;
    };
    auto spent = [&](const std::vector<double>& l) {
      double s = 0.0;
      for (size_t i = 0; i < n; ++i) s += l[i] * mu.weights()[i];
      return s;
    };

    double lo = 0.0, hi = lam_max;
    std::vector<double> l_hi = alloc_at(hi);
    for (int step = 0; step < 100; ++step) {
      double mid = 0.5 * (lo + hi);
      std::vector<double> l = alloc_at(mid);
      double g = spent(l);
      if (std::fabs(g - eps1) <= 1e-9 * (1.0 + eps1)) { l_hi = l; break; }
      if (g > eps1) lo = mid;
      else { hi = mid; l_hi = l; }
    }
    consider(l_hi);

    // cheap structured candidates guard the degenerate (piecewise) cases
    double M = mu.total_mass();
    if (M > 0 && std::isfinite(M)) {
      std::vector<double> u(n, eps1 / M);
      for (size_t i = 0; i < n; ++i)
        if (!usable[i]) u[i] = 0.0;
      consider(u);
    }
    if (n <= 8) // single-node sweeps are only worth it on small discrete spaces
      for (size_t k = 0; k < n; ++k) {
        if (!usable[k] || cap[k] <= 0) continue;
        std::vector<double> s(n, 0.0);
        s[k] = cap[k];
        consider(s);
      }
  }

  out.alloc.values = best;
  double tot = 0.0;
  for (size_t i = 0; i < n; ++i) tot += best[i] * mu.weights()[i];
  out.alloc.certified_integral = tot;
  out.achieved_support = best_val;
  validate_allocation(out.alloc, mu);
  return out;
}

} // namespace subcalc
