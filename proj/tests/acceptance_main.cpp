// Acceptance gate: eight criteria, one pass/fail line each.
// Exit code 0 iff every criterion passes (including its runtime budget).

#include <chrono>
#include <cstdio>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "subcalc/catalog.hpp"
#include "oracles.hpp"

using namespace subcalc;

namespace {

/* pinned tolerances */
constexpr double kEndpointTol = 1e-9; // criterion 1: closed-form endpoints
constexpr double kQuadHaus = 1e-3;    // criteria 3,4,7: quadrature-backed Hausdorff
constexpr double kHupTol = 1e-6;      // criterion 5: per-step support error (relative)
constexpr double kDominance = 1e-9;   // criterion 6: per-direction slack
constexpr double kFenchel = 1e-9;     // criterion 7: Fenchel-Young lower bound
constexpr double kSupportTol = 1e-9;  // criterion 7: Minkowski support additivity
constexpr double kConcavity = 1e-7;   // criterion 7: midpoint concavity slack
constexpr double kModulusTol = 1e-9;  // criterion 8: threshold integral error

struct Outcome {
  bool ok = true;
  std::string note;
};

int g_failures = 0;

void run_criterion(int id, const std::string& label, double budget_seconds,
                   const std::function<Outcome()>& body) {
  auto t0 = std::chrono::steady_clock::now();
  Outcome out;
  try {
    out = body();
  } catch (const std::exception& e) {
    out.ok = false;
    out.note = std::string("exception: ") + e.what();
  }
  double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  bool in_budget = secs < budget_seconds;
  bool pass = out.ok && in_budget;
  if (!pass) ++g_failures;
  std::printf("criterion %d: %s  %s (%.2fs of %gs budget)%s%s\n", id,
              pass ? "PASS" : "FAIL", label.c_str(), secs, budget_seconds,
              out.note.empty() ? "" : " -- ", out.note.c_str());
  if (out.ok && !in_budget) std::printf("  (checks passed but runtime budget exceeded)\n");
  std::fflush(stdout);
}

Integrand builtin_integrand(const std::string& name) {
  Scenario s = scenario_from_json(builtin_scenario_json(name));
  return rundetail::build_integrand(s);
}

double hausdorff_to(const Polyhedron& A, const Polyhedron& B) {
  HausdorffResult h = hausdorff_distance(A, B, 1e3);
  if (h.status != HausdorffStatus::ok || !h.recession_match || !h.value.is_finite())
    return 1e30;
  return h.value.value();
}

std::string fmt(double v) {
  char b[48];
  std::snprintf(b, sizeof(b), "%.3g", v);
  return b;
}

/* random convex functions finite on [-1.5, 1.5], closed forms throughout;
 * kink abscissae are carried along so definitional oracles can probe the
 * quotient's corners exactly (a uniform grid misses them at first order) */
struct Prim {
  ConvexFunction f;
  std::vector<double> kinks;
};

Prim random_prim(std::mt19937& g, bool with_indicator) {
  std::uniform_real_distribution<double> U(0.0, 1.0);
  auto u = [&](double lo, double hi) { return lo + (hi - lo) * U(g); };
  switch (int(u(0.0, with_indicator ? 7.0 : 6.0))) {
    case 0: {
      double c = u(-1.0, 1.0);
      return {abs_fn(c), {c}};
    }
    case 1: return {quadratic_1d(u(0.2, 4.0), u(-1.0, 1.0), u(-1.0, 1.0)), {}};
    case 2: {
      std::vector<std::pair<Vec, double>> pieces;
      int n = 2 + int(u(0.0, 2.0));
      for (int i = 0; i < n; ++i) pieces.push_back({Vec(u(-3.0, 3.0)), u(-1.0, 1.0)});
      std::vector<double> kinks;
      for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j) {
          double da = pieces[i].first[0] - pieces[j].first[0];
          if (std::fabs(da) > 1e-9)
            kinks.push_back((pieces[j].second - pieces[i].second) / da);
        }
      return {pl_max_fn(pieces), kinks};
    }
    case 3: return {affine_fn(Vec(u(-2.0, 2.0)), u(-1.0, 1.0)), {}};
    case 4: {
      double lo = u(-4.0, -2.0), hi = u(2.0, 4.0);
      return {affine_plus_box_fn(Vec(u(-2.0, 2.0)), u(-1.0, 1.0),
                                 interval_poly(ExtReal(lo), ExtReal(hi))),
              {lo, hi}};
    }
    case 5: {
      double c = u(-1.0, 1.0);
      return {sum_fn({abs_fn(c), quadratic_1d(u(0.2, 2.0), 0.0, 0.0)}), {c}};
    }
    default: {
      double lo = u(-4.0, -2.0), hi = u(2.0, 4.0);
      return {indicator_fn(interval_poly(ExtReal(lo), ExtReal(hi))), {lo, hi}};
    }
  }
}

ConvexFunction random_fn(std::mt19937& g) { return random_prim(g, false).f; }

/* ---------------------------------------------------------------- */

Outcome criterion1_endpoints() {
  Integrand F = builtin_integrand("example_4_1");
  double worst = 0.0;
  for (double t : {0.01, 0.1, 0.5, 1.0}) {
    ConvexFunction f = F.family(t);
    for (double eps : {0.0, 0.1, 0.5, 0.9}) {
      EpsSubdiffResult r = eps_subdifferential(f, Vec(0.0), eps);
      if (!r.closed_form || r.set.is_empty() || !r.set.rays().empty())
        return {false, "expected a closed-form bounded interval at t=" + fmt(t)};
      double lo = r.set.vertices().front()[0], hi = lo;
      for (const Vec& v : r.set.vertices()) {
        lo = std::min(lo, v[0]);
        hi = std::max(hi, v[0]);
      }
      double want_lo = (1.0 - eps) / t + std::pow(t, -1.5);
      double want_hi = (1.0 + eps) / t + std::pow(t, -1.5);
      worst = std::max({worst, std::fabs(lo - want_lo), std::fabs(hi - want_hi)});
    }
  }
  if (worst > kEndpointTol)
    return {false, "endpoint error " + fmt(worst) + " beyond " + fmt(kEndpointTol)};
  return {true, "16 endpoint pairs, max error " + fmt(worst)};
}

Outcome criterion2_emptiness() {
  Integrand F = builtin_integrand("example_4_1");
  std::vector<ConvexFunction> raw = node_functions(F);
  for (double eps : {0.1, 0.5, 0.9}) {
    std::vector<Polyhedron> sets;
    sets.reserve(raw.size());
    for (const ConvexFunction& f : raw)
      sets.push_back(eps_subdifferential(f, Vec(0.0), eps).set);
    SetWithStatus got = aumann_integral(sets, F.space);
    if (got.status != AumannStatus::empty_no_integrable_selection)
      return {false, std::string("eps=") + fmt(eps) + " gave status '" +
                         to_string(got.status) + "'"};
  }
  FormulaResult r = rhs_theorem41(F, Vec(0.0), 0.0);
  if (r.refused) return {false, "characterization refused: " + r.refusal_reason};
  if (!poly_equal(r.set.set, full_space(1)))
    return {false, "characterization at 0 is not the whole line"};
  if (!poly_equal(recession_cone(r.set.set), full_space(1)))
    return {false, "recession cone is not the whole line"};
  if (!formula_exact(r)) return {false, "verdict is not exact"};
  return {true, "integral empty for all three eps; characterization gives R, exact"};
}

Outcome criterion3_quadratic_over_t() {
  Integrand F = builtin_integrand("quadratic_over_t");
  std::vector<ConvexFunction> raw = node_functions(F);
  std::vector<Polyhedron> sets;
  for (const ConvexFunction& f : raw)
    sets.push_back(eps_subdifferential(f, Vec(0.0), 0.0).set);
  SetWithStatus nodewise = aumann_integral(sets, F.space);
  if (!poly_equal(nodewise.set, point_poly(Vec(0.0))))
    return {false, "node-wise integral is not {0}"};

  FormulaResult r = rhs_cor42(F, Vec(0.0));
  if (r.refused || !poly_equal(r.set.set, full_space(1)))
    return {false, "domain-aware formula did not return R"};

  Polyhedron O = oracle_eps_subdiff(F, Vec(0.0), 0.0);
  if (!poly_equal(O, full_space(1))) return {false, "definitional oracle did not return R"};

  // naive formula with a wrongly-declared full domain must disagree
  Polyhedron naive =
      minkowski_sum(nodewise.set, normal_cone_eps(full_space(1), Vec(0.0), 0.0));
  if (hausdorff_to(naive, r.set.set) <= kQuadHaus)
    return {false, "naive full-domain formula was not flagged unequal"};
  return {true, "{0} node-wise vs R domain-aware, oracle agrees, naive flagged"};
}

Outcome criterion4_qualified_family() {
  Integrand F = builtin_integrand("qualified_abs_family");
  double worst = 0.0;
  for (double x : {0.0, 0.25, 0.5, 1.0}) {
    Polyhedron target = point_poly(Vec(2.0 * x - 1.0));

    FormulaResult a = rhs_cor42(F, Vec(x));
    if (a.refused) return {false, "ri-qualified formula refused at x=" + fmt(x)};
    double ga = hausdorff_to(a.set.set, target);

    FormulaResult b = rhs_cor52(F, Vec(x));
    if (b.refused) return {false, "finite-mass formula refused at x=" + fmt(x)};
    double gb = hausdorff_to(b.set.set, target);

    double gc = 1e30;
    for (double eps : {1e-2, 1e-3, 3e-5}) {
      FormulaResult c = rhs_theorem41(F, Vec(x), eps, AllocationStrategy::uniform);
      if (c.refused) return {false, "eps characterization refused at x=" + fmt(x)};
      gc = hausdorff_to(c.set.set, target); // keep the smallest-eps evaluation
    }
    worst = std::max({worst, ga, gb, gc});
  }
  if (worst > kQuadHaus)
    return {false, "worst Hausdorff gap " + fmt(worst) + " beyond " + fmt(kQuadHaus)};
  return {true, "three formulas x four points, worst gap " + fmt(worst)};
}

Outcome criterion5_hup() {
  ConvexFunction f1 = indicator_fn(make_polyhedron(1, {Vec(0.0)}, {Vec(1.0)}));
  ConvexFunction f2 = custom1d_fn("neg_sqrt");
  FormulaResult r = hup_sum(f1, f2, Vec(0.0));
  if (r.iterates.size() < 3) return {false, "too few iterates"};
  double eta = 1.0;
  for (size_t k = 0; k < r.iterates.size(); ++k, eta *= 0.5) {
    const Polyhedron& it = r.iterates[k];
    ExtReal lo = support(it, Vec(-1.0)), hi = support(it, Vec(1.0));
    if (!lo.is_pos_inf()) return {false, "iterate " + std::to_string(k) + " bounded below"};
    double want = -1.0 / (4.0 * eta);
    if (!hi.is_finite() ||
        std::fabs(hi.value() - want) > kHupTol * (1.0 + std::fabs(want)))
      return {false, "iterate " + std::to_string(k) + " upper endpoint " +
                         (hi.is_finite() ? fmt(hi.value()) : "inf") + " vs " + fmt(want)};
  }
  if (!r.set.set.is_empty()) return {false, "limit is not empty"};
  if (!r.stabilized) return {false, "run did not stabilize"};
  return {true, std::to_string(r.iterates.size()) +
                    " iterates match (-inf, -1/(4 eps_n)]; stabilized empty"};
}

Outcome criterion6_strategy_dominance() {
  std::mt19937 g(20260815);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  auto u = [&](double lo, double hi) { return lo + (hi - lo) * U(g); };
  int trials = 0;
  for (int k = 0; k < 50; ++k) {
    ConvexFunction fa = random_fn(g), fb = random_fn(g);
    MeasureSpace mu = finite_discrete_space({1.0, 2.0}, {u(0.2, 2.0), u(0.2, 2.0)});
    std::vector<ConvexFunction> fns = {fa, fb};
    Integrand F = make_integrand("trial", mu, [fns](double t) { return fns[t < 1.5 ? 0 : 1]; });
    Vec x(u(-1.0, 1.0));
    double eps = u(0.05, 0.8);

    FormulaResult uni = rhs_theorem41(F, x, eps, AllocationStrategy::uniform);
    FormulaResult opt = rhs_theorem41(F, x, eps, AllocationStrategy::optimal);
    if (uni.refused || opt.refused) return {false, "unexpected refusal in trial"};
    ++trials;
    for (const Vec& d : {Vec(1.0), Vec(-1.0)}) {
      ExtReal su = support(uni.set.set, d), so = support(opt.set.set, d);
      if (su.is_pos_inf() && !so.is_pos_inf())
        return {false, "trial " + std::to_string(k) + ": optimal support dropped below uniform"};
      if (su.is_finite() && so.is_finite() && su.value() > so.value() + kDominance)
        return {false, "trial " + std::to_string(k) + ": uniform exceeds optimal by " +
                           fmt(su.value() - so.value())};
      if (su.is_finite() && so.is_neg_inf())
        return {false, "trial " + std::to_string(k) + ": optimal empty, uniform not"};
    }
    if (!oracle::subset_by_supports(uni.set.set, opt.set.set, kDominance))
      return {false, "trial " + std::to_string(k) + ": uniform set not inside optimal set"};
  }
  return {true, std::to_string(trials) + " randomized two-node trials, dominance holds"};
}

Outcome criterion7_property_suites() {
  std::mt19937 g(71);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  auto u = [&](double lo, double hi) { return lo + (hi - lo) * U(g); };
  int cases = 0;

  // eps-monotonicity: subdifferentials grow with eps
  for (int k = 0; k < 150; ++k) {
    ConvexFunction f = random_fn(g);
    Vec x(u(-1.0, 1.0));
    double e1 = u(0.0, 0.5), e2 = e1 + u(0.0, 1.0);
    Polyhedron A = eps_subdifferential(f, x, e1).set;
    Polyhedron B = eps_subdifferential(f, x, e2).set;
    if (!oracle::subset_by_supports(A, B, 1e-7))
      return {false, "monotonicity failed (case " + std::to_string(k) + ")"};
    ++cases;
  }

  // eps-concavity of directional supports (midpoint form)
  for (int k = 0; k < 120; ++k) {
    ConvexFunction f = random_fn(g);
    Vec x(u(-1.0, 1.0));
    Vec v(U(g) < 0.5 ? 1.0 : -1.0);
    double e1 = u(0.0, 1.0), e2 = u(0.0, 1.0);
    ExtReal s1 = directional_support(f, x, v, e1);
    ExtReal s2 = directional_support(f, x, v, e2);
    ExtReal sm = directional_support(f, x, v, 0.5 * (e1 + e2));
    if (s1.is_finite() && s2.is_finite() && sm.is_finite() &&
        sm.value() < 0.5 * (s1.value() + s2.value()) - kConcavity)
      return {false, "support concavity failed (case " + std::to_string(k) + ")"};
    ++cases;
  }

  // Fenchel-Young: f(x) + f*(s) >= <s, x>
  for (int k = 0; k < 120; ++k) {
    ConvexFunction f = random_fn(g);
    Vec x(u(-1.0, 1.0)), s(u(-4.0, 4.0));
    ExtReal fx = evaluate(f, x), fs = conjugate_value(f, s);
    if (fx.is_finite() && fs.is_finite() &&
        fx.value() + fs.value() < s[0] * x[0] - kFenchel)
      return {false, "Fenchel-Young failed (case " + std::to_string(k) + ")"};
    ++cases;
  }

  // Minkowski support additivity
  for (int k = 0; k < 60; ++k) {
    bool two_d = (k % 3 == 0);
    Polyhedron A = two_d ? oracle::random_polyhedron_2d() : oracle::random_interval_1d();
    Polyhedron B = two_d ? oracle::random_polyhedron_2d() : oracle::random_interval_1d();
    Polyhedron S = minkowski_sum(A, B);
    for (const Vec& d : direction_fan(A.dim(), 16)) {
      ExtReal sa = support(A, d), sb = support(B, d), ss = support(S, d);
      bool inf = sa.is_pos_inf() || sb.is_pos_inf();
      if (inf != ss.is_pos_inf())
        return {false, "support additivity: infinite pattern mismatch"};
      if (!inf && std::fabs(ss.value() - sa.value() - sb.value()) >
                      kSupportTol * (1.0 + std::fabs(ss.value())))
        return {false, "support additivity failed (case " + std::to_string(k) + ")"};
    }
    ++cases;
  }

  // oracle vs closed form on the primitive catalog: the definitional oracle
  // probes a dense window, the function's kinks, and a geometric tail (the
  // quotient infimum of linear-growth functions is attained only at infinity)
  for (int k = 0; k < 80; ++k) {
    Prim p = random_prim(g, true);
    double x = u(-1.0, 1.0);
    double eps = u(0.01, 1.0);
    EpsSubdiffResult r = eps_subdifferential(p.f, Vec(x), eps);
    ProbeGrid grid;
    grid.lo = -8.0;
    grid.hi = 8.0;
    grid.points_per_axis = 3201;
    std::vector<Vec> extras;
    for (double c : p.kinks) extras.push_back(Vec(c));
    for (double w = 16.0; w <= 1e9; w *= 2.0) {
      extras.push_back(Vec(x + w));
      extras.push_back(Vec(x - w));
    }
    Polyhedron O = eps_subdiff_from_values(
        1, [&](const Vec& y) { return evaluate(p.f, y); }, Vec(x), eps, grid, extras);
    if (hausdorff_to(r.set, O) > kQuadHaus)
      return {false, "oracle vs closed form failed (case " + std::to_string(k) + ")"};
    ++cases;
  }

  // 2D kink points of piecewise-linear primitives at eps = 0
  for (int k = 0; k < 8; ++k) {
    double a = u(0.5, 2.0), b = u(0.5, 2.0);
    ConvexFunction f = pl_max_fn({{Vec(a, b), 0.0},
                                  {Vec(-a, b), 0.0},
                                  {Vec(a, -b), 0.0},
                                  {Vec(-a, -b), 0.0}});
    Vec x(0.0, 0.0);
    EpsSubdiffResult r = eps_subdifferential(f, x, 0.0);
    ProbeGrid grid;
    grid.lo = -5.0;
    grid.hi = 5.0;
    grid.points_per_axis = 201;
    Polyhedron O = eps_subdiff_from_values(
        2, [&](const Vec& y) { return evaluate(f, y); }, x, 0.0, grid);
    if (hausdorff_to(r.set, O) > kQuadHaus)
      return {false, "2d oracle vs closed form failed (case " + std::to_string(k) + ")"};
    ++cases;
  }

  if (cases < 500)
    return {false, "only " + std::to_string(cases) + " property cases ran"};
  return {true, std::to_string(cases) + " property cases, all holding"};
}

Outcome criterion8_modulus() {
  Scenario s = scenario_from_json(builtin_scenario_json("modulus_two_node"));
  NonconvexFamily G = rundetail::build_nonconvex(s);
  const double threshold = 0.25; // tent height 1/4, tent-node weight 1

  ModulusReport at = modulus_penalty_check(G, 1.0, threshold);
  if (at.skipped) return {false, "definitional set empty at the threshold"};
  if (!at.passes) return {false, "penalty bound failed at the threshold"};
  if (std::fabs(at.modulus_integral - threshold) > kModulusTol)
    return {false, "integrated modulus " + fmt(at.modulus_integral) + " != " +
                       fmt(threshold)};

  for (double eps : {0.1, 0.2, 0.24}) {
    ModulusReport below = modulus_penalty_check(G, 1.0, eps);
    if (!below.skipped || !below.oracle_set.is_empty())
      return {false, "definitional set unexpectedly nonempty at eps=" + fmt(eps)};
  }
  ModulusReport above = modulus_penalty_check(G, 1.0, 0.4);
  if (above.skipped || !above.passes)
    return {false, "penalty bound failed above the threshold"};
  return {true, "exact pass at eps*=0.25, empty definitional set below, pass above"};
}

} // namespace

int main() {
  std::printf("acceptance gate: 8 criteria\n");
  run_criterion(1, "shrinking-box family closed-form endpoints", 1.0,
                criterion1_endpoints);
  run_criterion(2, "shrinking-box family: empty integral, full-line characterization",
                5.0, criterion2_emptiness);
  run_criterion(3, "x^2/t family: node-wise {0} vs domain-aware R, naive flagged", 5.0,
                criterion3_quadratic_over_t);
  run_criterion(4, "|x-t| family: three formulas match 2x-1", 30.0,
                criterion4_qualified_family);
  run_criterion(5, "two-summand intersection drifts to empty via box escape", 2.0,
                criterion5_hup);
  run_criterion(6, "optimal allocation dominates uniform on random two-node data",
                60.0, criterion6_strategy_dominance);
  run_criterion(7, "property suites across the primitive catalog", 120.0,
                criterion7_property_suites);
  run_criterion(8, "integrated convexity-modulus threshold", 5.0, criterion8_modulus);

  if (g_failures == 0) {
    std::printf("acceptance: all 8 criteria PASS\n");
    return 0;
  }
  std::printf("acceptance: %d criterion(s) FAILED\n", g_failures);
  return 1;
}
