#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <limits>
#include <optional>
#include <vector>

#include "subcalc/formulas.hpp"
#include "oracles.hpp"

using namespace subcalc;

namespace {

/* Frozen closed forms used as independent references:
 *   - |.| at 0:            eps-subdifferential [-1, 1] for every eps
 *   - x^2 at 0:            eps-subdifferential [-2 sqrt(eps), 2 sqrt(eps)]
 *   - -sqrt(x)+dom[0,inf): eps-subdifferential at 0 is (-inf, -1/(4 eps)]
 *   - |x - t| over t in [0,1]: derivative of the integral at interior x is
 *     2x - 1 wherever x avoids the nodes. */

Integrand two_node(const ConvexFunction& f1, const ConvexFunction& f2,
                   std::vector<double> w = {1.0, 1.0},
                   std::optional<Polyhedron> dom = std::nullopt) {
  MeasureSpace mu = finite_discrete_space({1.0, 2.0}, w);
  auto fam = [f1, f2](double t) { return t < 1.5 ? f1 : f2; };
  return make_integrand("two_node", mu, fam, std::move(dom));
}

Integrand single_node(const ConvexFunction& f) {
  MeasureSpace mu = finite_discrete_space({1.0}, {1.0});
  return make_integrand("single_node", mu, [f](double) { return f; });
}

/* |x - t| on [0,1]; the integral is smooth with derivative 2x - 1. */
Integrand abs_shift_family() {
  MeasureSpace mu = interval_space(0.0, 1.0, {});
  return make_integrand("abs_shift", mu, [](double t) { return abs_fn(t); });
}

/* x^2 / t on (0,1]: all nodes finite everywhere yet dom I_f = {0}. */
Integrand quadratic_over_t_family(std::optional<Polyhedron> dom_override = std::nullopt) {
  IntervalOptions o;
  o.singular_a = true;
  o.exponent_a = 1.0;
  MeasureSpace mu = interval_space(0.0, 1.0, o);
  auto fam = [](double t) { return quadratic_1d(2.0 / t, 0.0, 0.0); };
  return make_integrand("quadratic_over_t", mu, fam,
                        dom_override ? dom_override
                                     : std::optional<Polyhedron>(point_poly(Vec(0.0))));
}

/* Slopes diverging as t -> 0 with box domains shrinking to {0}; the plain
 * Aumann integral of node subdifferentials admits no integrable selection. */
Integrand shrinking_box_family() {
  IntervalOptions o;
  o.singular_a = true;
  o.exponent_a = 0.5;
  MeasureSpace mu = interval_space(0.0, 1.0, o);
  auto fam = [](double t) {
    double slope = 1.0 / t + std::pow(t, -1.5);
    double offset = 1.0 + 1.0 / std::sqrt(t);
    return affine_plus_box_fn(Vec(slope), offset,
                              interval_poly(ExtReal(-t), ExtReal(t)));
  };
  return make_integrand("shrinking_box", mu, fam, point_poly(Vec(0.0)));
}

/* Opposing half-line indicators: dom I_f = {0}, every qualification built on
 * relative interiors fails at both nodes. */
Integrand opposing_halflines() {
  return two_node(indicator_fn(interval_poly(ExtReal(0.0), ExtReal::pos_inf())),
                  indicator_fn(interval_poly(ExtReal::neg_inf(), ExtReal(0.0))));
}

double hi_support(const Polyhedron& P) {
  ExtReal s = support(P, Vec(1.0));
  REQUIRE(s.is_finite());
  return s.value();
}

double lo_support(const Polyhedron& P) {
  ExtReal s = support(P, Vec(-1.0));
  REQUIRE(s.is_finite());
  return -s.value();
}

void check_log_nonincreasing(const std::vector<double>& log, double slack = 1e-9) {
  for (size_t i = 1; i < log.size(); ++i)
    CHECK(log[i] <= log[i - 1] + slack * (1.0 + std::fabs(log[i - 1])));
}

Polyhedron oracle_interval(const std::function<ExtReal(double)>& f, double x, double eps) {
  oracle::Interval iv = oracle::eps_subdiff_grid_1d(f, x, eps);
  if (iv.empty) return empty_poly(1);
  return interval_poly(iv.lo, iv.hi);
}

} // namespace

/* ------------------------------------------------------------------ */
/* finite-sum intersection formula (cor4_1_eq4)                        */
/* ------------------------------------------------------------------ */

TEST_CASE("finite-sum formula: exact node in T0 stabilizes immediately") {
  Integrand F = two_node(abs_fn(0.0), quadratic_1d(2.0, 0.0, 0.0));

  FormulaResult R = rhs_cor41_eq4(F, Vec(0.0), {1});
  CHECK(R.formula_id == "cor4_1_eq4");
  CHECK_FALSE(R.refused);
  CHECK(R.stabilized);
  CHECK(R.monotone);
  CHECK(R.set.status == AumannStatus::nonempty_exact);
  CHECK(poly_equal(R.set.set, interval_poly(ExtReal(-1.0), ExtReal(1.0))));
  check_log_nonincreasing(R.convergence_log);

  FormulaResult both = rhs_cor41_eq4(F, Vec(0.0), {0, 1});
  CHECK(both.stabilized);
  CHECK(poly_equal(both.set.set, interval_poly(ExtReal(-1.0), ExtReal(1.0))));
}

TEST_CASE("finite-sum formula: quadratic tail converges to the sharp set") {
  Integrand F = two_node(abs_fn(0.0), quadratic_1d(2.0, 0.0, 0.0));
  // T0 hits only the |.| node; the x^2 term keeps width 4 sqrt(eps_n)
  FormulaResult R = rhs_cor41_eq4(F, Vec(0.0), {0});
  CHECK_FALSE(R.refused);
  CHECK(R.monotone);
  check_log_nonincreasing(R.convergence_log);
  // cap reached before the 1e-6 stabilization rule at this decay rate
  CHECK_FALSE(R.stabilized);
  CHECK(hi_support(R.set.set) == Catch::Approx(1.0).margin(1e-3));
  CHECK(lo_support(R.set.set) == Catch::Approx(-1.0).margin(1e-3));
  // every iterate contains the limit set
  for (const Polyhedron& it : R.iterates)
    CHECK(oracle::subset_by_supports(interval_poly(ExtReal(-1.0), ExtReal(1.0)), it));
}

TEST_CASE("finite-sum formula: refusal carries the failing qualification") {
  Integrand F = opposing_halflines();
  FormulaResult R = rhs_cor41_eq4(F, Vec(0.0), {0});
  CHECK(R.refused);
  CHECK(R.set.set.is_empty());
  CHECK(R.refusal_reason.find("QC(i)") != std::string::npos);
  REQUIRE(R.qualification.size() == 1);
  CHECK(R.qualification[0].condition == "QC(i)");
  CHECK_FALSE(R.qualification[0].holds);
}

TEST_CASE("finite-sum formula: input contracts") {
  Integrand F = two_node(abs_fn(0.0), quadratic_1d(2.0, 0.0, 0.0));
  CHECK_THROWS_AS(rhs_cor41_eq4(abs_shift_family(), Vec(0.0), {}),
                  std::invalid_argument);
  CHECK_THROWS_AS(rhs_cor41_eq4(F, Vec(0.0), {7}), std::invalid_argument);
  CHECK_THROWS_AS(rhs_cor41_eq4(F, Vec(0.0, 0.0), {}), std::invalid_argument);

  // dispatcher picks the finite-sum shape for discrete measures and the
  // affine-perp shape otherwise
  CHECK(rhs_cor41(F, Vec(0.0), {}).formula_id == "cor4_1_eq4");
  CHECK(rhs_cor41(abs_shift_family(), Vec(0.25), {}).formula_id == "cor4_1_eq3");
}

/* ------------------------------------------------------------------ */
/* two-summand intersection formula (hup)                              */
/* ------------------------------------------------------------------ */

TEST_CASE("two-summand formula: iterates match the ternary closed form and "
          "emptiness is certified by box escape") {
  ConvexFunction f1 = indicator_fn(interval_poly(ExtReal(0.0), ExtReal::pos_inf()));
  ConvexFunction f2 = custom1d_fn("neg_sqrt");
  FormulaResult R = hup_sum(f1, f2, Vec(0.0));
  CHECK(R.formula_id == "hup");

  // iterate k is (-inf, -2^k / 4]
  REQUIRE(R.iterates.size() >= 12);
  for (size_t k = 0; k < R.iterates.size(); ++k) {
    double expected = -std::pow(2.0, double(k)) / 4.0;
    CHECK(hi_support(R.iterates[k]) == Catch::Approx(expected).margin(
              1e-6 * (1.0 + std::fabs(expected))));
    CHECK(support(R.iterates[k], Vec(-1.0)).is_pos_inf());
  }
  CHECK(R.set.set.is_empty());
  CHECK(R.escaped);
  CHECK(R.stabilized);
  CHECK(R.monotone);
  // successive-distance log doubles as the sets march to -infinity
  REQUIRE(R.convergence_log.size() >= 3);
  for (size_t i = 1; i < R.convergence_log.size(); ++i)
    CHECK(R.convergence_log[i] == Catch::Approx(2.0 * R.convergence_log[i - 1])
                                      .margin(1e-4 * (1.0 + R.convergence_log[i])));
}

TEST_CASE("two-summand formula: eps-independent summands stabilize at once") {
  FormulaResult R = hup_sum(abs_fn(0.0), abs_fn(0.0), Vec(0.0));
  CHECK(R.stabilized);
  CHECK_FALSE(R.escaped);
  CHECK(poly_equal(R.set.set, interval_poly(ExtReal(-2.0), ExtReal(2.0))));
  CHECK(R.set.status == AumannStatus::nonempty_exact);
}

TEST_CASE("two-summand formula: smooth pair converges to the gradient sum") {
  // (x^2)' + ((x-1)^2)' at 0.3 is 0.6 - 1.4 = -0.8
  FormulaResult R = hup_sum(quadratic_1d(2.0, 0.0, 0.0), quadratic_1d(2.0, -2.0, 1.0),
                            Vec(0.3));
  CHECK(R.monotone);
  check_log_nonincreasing(R.convergence_log);
  CHECK(hi_support(R.set.set) == Catch::Approx(-0.8).margin(1e-3));
  CHECK(lo_support(R.set.set) == Catch::Approx(-0.8).margin(1e-3));

  // definitional oracle on the summed function contains the iterate limit
  Polyhedron O = oracle_interval(
      [](double y) { return ExtReal(y * y + (y - 1.0) * (y - 1.0)); }, 0.3, 0.0);
  CHECK(oracle::subset_by_supports(R.set.set, O, 1e-6));
}

TEST_CASE("two-summand formula: requires finiteness at the query point") {
  ConvexFunction f = custom1d_fn("neg_sqrt");
  CHECK_THROWS_AS(hup_sum(f, f, Vec(-1.0)), std::domain_error);
}

/* ------------------------------------------------------------------ */
/* main characterization (thm4_1)                                      */
/* ------------------------------------------------------------------ */

TEST_CASE("main formula: allocation strategies on the |x| + x^2 pair") {
  Integrand F = two_node(abs_fn(0.0), quadratic_1d(2.0, 0.0, 0.0));
  const double eps = 0.5;
  const double best_hi = 1.0 + std::sqrt(2.0); // all budget on the x^2 node

  FormulaResult uni = rhs_theorem41(F, Vec(0.0), eps, AllocationStrategy::uniform);
  CHECK(uni.formula_id == "thm4_1");
  CHECK(formula_exact(uni));
  // uniform split gives each node eps/2 = 0.25, so the x^2 term has width
  // 2*2*sqrt(0.25) and the whole set is [-2, 2]
  CHECK(poly_equal(uni.set.set, interval_poly(ExtReal(-2.0), ExtReal(2.0))));

  FormulaResult opt = rhs_theorem41(F, Vec(0.0), eps, AllocationStrategy::optimal);
  CHECK(hi_support(opt.set.set) == Catch::Approx(best_hi).margin(1e-9));
  CHECK(lo_support(opt.set.set) == Catch::Approx(-best_hi).margin(1e-9));

  FormulaResult grd = rhs_theorem41(F, Vec(0.0), eps, AllocationStrategy::grid);
  CHECK(hi_support(grd.set.set) == Catch::Approx(best_hi).margin(1e-9));

  // strategy dominance: the optimal union contains the uniform one
  CHECK(oracle::subset_by_supports(uni.set.set, opt.set.set, 1e-9));
  CHECK(oracle::subset_by_supports(uni.set.set, grd.set.set, 1e-9));

  // the union always sits inside the definitional eps-subdifferential
  Polyhedron O = oracle_interval(
      [](double y) { return ExtReal(std::fabs(y) + y * y); }, 0.0, eps);
  CHECK(oracle::subset_by_supports(opt.set.set, O, 1e-6));
  CHECK(oracle::subset_by_supports(uni.set.set, O, 1e-6));
}

TEST_CASE("main formula: eps nesting and the zero-budget limit") {
  Integrand F = two_node(abs_fn(0.0), quadratic_1d(2.0, 0.0, 0.0));
  FormulaResult a = rhs_theorem41(F, Vec(0.0), 0.1, AllocationStrategy::optimal);
  FormulaResult b = rhs_theorem41(F, Vec(0.0), 0.5, AllocationStrategy::optimal);
  FormulaResult c = rhs_theorem41(F, Vec(0.0), 0.9, AllocationStrategy::optimal);
  CHECK(oracle::subset_by_supports(a.set.set, b.set.set, 1e-9));
  CHECK(oracle::subset_by_supports(b.set.set, c.set.set, 1e-9));

  FormulaResult zero = rhs_theorem41(F, Vec(0.0), 0.0, AllocationStrategy::optimal);
  CHECK(poly_equal(zero.set.set, interval_poly(ExtReal(-1.0), ExtReal(1.0))));
  CHECK(formula_exact(zero));

  CHECK_THROWS_AS(rhs_theorem41(F, Vec(0.0), -0.1), std::invalid_argument);
  CHECK_THROWS_AS(rhs_theorem41(F, Vec(0.0, 0.0), 0.1), std::invalid_argument);
}

TEST_CASE("main formula: boundary point of a restricted domain") {
  // I(x) = x + indicator([-1,1]) at the right endpoint: every eps1/eps2
  // split lands on [1 - eps/2, inf)
  Integrand F = two_node(affine_fn(Vec(1.0), 0.0),
                         indicator_fn(interval_poly(ExtReal(-1.0), ExtReal(1.0))));
  for (AllocationStrategy s : {AllocationStrategy::uniform, AllocationStrategy::optimal,
                               AllocationStrategy::grid}) {
    FormulaResult R = rhs_theorem41(F, Vec(1.0), 0.5, s);
    CHECK(lo_support(R.set.set) == Catch::Approx(0.75).margin(1e-6));
    CHECK(support(R.set.set, Vec(1.0)).is_pos_inf());
  }
}

TEST_CASE("main formula: divergent slopes need the domain restriction") {
  Integrand F = shrinking_box_family();

  // without restriction there is no integrable selection
  std::vector<Polyhedron> plain;
  for (const ConvexFunction& f : node_functions(F))
    plain.push_back(eps_subdifferential(f, Vec(0.0), 0.0).set);
  SetWithStatus raw = aumann_integral(plain, F.space);
  CHECK(raw.status == AumannStatus::empty_no_integrable_selection);

  // the restricted characterization recovers the full line
  FormulaResult R = rhs_theorem41(F, Vec(0.0), 0.5);
  CHECK(formula_exact(R));
  CHECK(R.set.status == AumannStatus::unbounded_direction);
  CHECK(support(R.set.set, Vec(1.0)).is_pos_inf());
  CHECK(support(R.set.set, Vec(-1.0)).is_pos_inf());
  CHECK(contains(R.set.set, Vec(17.0)));

  // outside the domain the set is empty
  FormulaResult out = rhs_theorem41(F, Vec(0.5), 0.5);
  CHECK(out.set.set.is_empty());
  CHECK(out.set.status == AumannStatus::empty_no_integrable_selection);
}

/* ------------------------------------------------------------------ */
/* qualified corollaries (cor4_2, cor5_2, cor4_1_eq3)                  */
/* ------------------------------------------------------------------ */

TEST_CASE("ri-qualified form on the |x - t| family is quadrature-exact at "
          "panel boundaries") {
  Integrand F = abs_shift_family();
  for (double x : {0.25, 0.5, 1.0}) {
    FormulaResult R = rhs_cor42(F, Vec(x));
    CHECK(R.formula_id == "cor4_2");
    CHECK_FALSE(R.refused);
    CHECK(R.set.status == AumannStatus::nonempty_exact);
    CHECK(hi_support(R.set.set) == Catch::Approx(2.0 * x - 1.0).margin(1e-9));
    CHECK(lo_support(R.set.set) == Catch::Approx(2.0 * x - 1.0).margin(1e-9));
  }
}

TEST_CASE("ri-qualified, finite-mass, and main formulas agree in the limit") {
  Integrand F = abs_shift_family();
  const double x = 0.25;
  FormulaResult a = rhs_cor42(F, Vec(x));
  FormulaResult b = rhs_cor52(F, Vec(x));
  FormulaResult c = rhs_theorem41(F, Vec(x), 0.0);
  CHECK(b.stabilized);
  CHECK(b.monotone);
  check_log_nonincreasing(b.convergence_log, 1e-6);
  for (const FormulaResult* r : {&a, &b, &c}) {
    CHECK(hi_support(r->set.set) == Catch::Approx(-0.5).margin(1e-3));
    CHECK(lo_support(r->set.set) == Catch::Approx(-0.5).margin(1e-3));
  }
  HausdorffResult hab = hausdorff_distance(a.set.set, b.set.set);
  REQUIRE(hab.status == HausdorffStatus::ok);
  CHECK(hab.value.value() <= 1e-3);
  HausdorffResult hac = hausdorff_distance(a.set.set, c.set.set);
  REQUIRE(hac.status == HausdorffStatus::ok);
  CHECK(hac.value.value() <= 1e-3);
}

TEST_CASE("ri-qualified form: normal cone inside the integral turns points "
          "into the full line") {
  FormulaResult R = rhs_cor42(quadratic_over_t_family(), Vec(0.0));
  CHECK_FALSE(R.refused);
  CHECK(R.set.status == AumannStatus::unbounded_direction);
  CHECK(support(R.set.set, Vec(1.0)).is_pos_inf());
  CHECK(support(R.set.set, Vec(-1.0)).is_pos_inf());

  // a wrongly declared full domain silently degrades the set to {0}: the
  // disagreement with the previous result is the flag
  FormulaResult naive = rhs_cor42(quadratic_over_t_family(full_space(1)), Vec(0.0));
  CHECK(poly_equal(naive.set.set, point_poly(Vec(0.0))));
  CHECK_FALSE(poly_equal(naive.set.set, R.set.set));
}

TEST_CASE("ri-qualified form refuses opposing half-lines") {
  FormulaResult R = rhs_cor42(opposing_halflines(), Vec(0.0));
  CHECK(R.refused);
  CHECK(R.set.set.is_empty());
  REQUIRE_FALSE(R.qualification.empty());
  CHECK_FALSE(R.qualification[0].holds);
  CHECK(R.qualification[0].separator.has_value());
}

TEST_CASE("finite-mass form: geometric eta sequence and the single-step variant") {
  Integrand F = abs_shift_family();
  FormulaResult R = rhs_cor52(F, Vec(0.25));
  CHECK(R.formula_id == "cor5_2");
  CHECK(R.stabilized);
  CHECK(R.monotone);
  check_log_nonincreasing(R.convergence_log, 1e-6);
  CHECK(hi_support(R.set.set) == Catch::Approx(-0.5).margin(1e-3));

  // the constant-zero sequence reduces to the ri-qualified form
  FormulaResult single = rhs_cor52(F, Vec(0.25), {0.0});
  CHECK(single.stabilized);
  FormulaResult direct = rhs_cor42(F, Vec(0.25));
  CHECK(poly_equal(single.set.set, direct.set.set, 1e-9));

  // infinite total mass is rejected up front
  MeasureSpace heavy = countable_space([](int) { return 1.0; }, 4,
                                       std::numeric_limits<double>::infinity());
  Integrand H = make_integrand("heavy", heavy, [](double) { return abs_fn(0.0); });
  CHECK_THROWS_AS(rhs_cor52(H, Vec(0.0)), std::invalid_argument);
}

TEST_CASE("exact-sum form with affine-perp correction") {
  Integrand F = abs_shift_family();
  // full-dimensional domain: the perp term vanishes and T0 choice is moot
  FormulaResult e3 = rhs_cor41_eq3(F, Vec(0.25), {});
  CHECK(e3.formula_id == "cor4_1_eq3");
  CHECK(hi_support(e3.set.set) == Catch::Approx(-0.5).margin(1e-9));
  std::vector<int> all;
  for (size_t i = 0; i < F.space.nodes().size(); ++i) all.push_back(int(i));
  FormulaResult e3b = rhs_cor41_eq3(F, Vec(0.25), all);
  CHECK(poly_equal(e3.set.set, e3b.set.set, 1e-9));

  // point domain: aff-perp is the whole line and the result is unbounded
  FormulaResult box = rhs_cor41_eq3(shrinking_box_family(), Vec(0.0), {});
  CHECK(box.set.status == AumannStatus::unbounded_direction);
  CHECK(support(box.set.set, Vec(1.0)).is_pos_inf());

  FormulaResult refused = rhs_cor41_eq3(opposing_halflines(), Vec(0.0), {0});
  CHECK(refused.refused);
}

TEST_CASE("exact-sum form in 2D: segment domain produces the normal line") {
  Polyhedron seg = make_polyhedron(2, {Vec(-1.0, 0.0), Vec(1.0, 0.0)}, {});
  Integrand F = two_node(quadratic_2d(2.0, 0.0, 2.0, Vec(0.0, 0.0), 0.0),
                         indicator_fn(seg));
  for (const std::vector<int>& T0 : {std::vector<int>{0}, std::vector<int>{1}}) {
    FormulaResult R = rhs_cor41_eq3(F, Vec(0.0, 0.0), T0);
    CHECK_FALSE(R.refused);
    CHECK(support(R.set.set, Vec(0.0, 1.0)).is_pos_inf());
    CHECK(support(R.set.set, Vec(0.0, -1.0)).is_pos_inf());
    ExtReal sx = support(R.set.set, Vec(1.0, 0.0));
    REQUIRE(sx.is_finite());
    CHECK(sx.value() == Catch::Approx(0.0).margin(1e-6));
    ExtReal sxn = support(R.set.set, Vec(-1.0, 0.0));
    REQUIRE(sxn.is_finite());
    CHECK(sxn.value() == Catch::Approx(0.0).margin(1e-6));
  }
}

/* ------------------------------------------------------------------ */
/* finite sums with a shared qualification point (qualfin)             */
/* ------------------------------------------------------------------ */

TEST_CASE("shared-point finite sums: variant i iterates the full sum") {
  Integrand F = two_node(abs_fn(0.0), quadratic_1d(2.0, 0.0, 0.0));
  FormulaResult R = rhs_qualfin(F, Vec(0.0), {0, 1}, QualfinVariant::i);
  CHECK(R.formula_id == "qualfin_i");
  CHECK_FALSE(R.refused);
  CHECK(R.stabilized);
  CHECK(poly_equal(R.set.set, interval_poly(ExtReal(-1.0), ExtReal(1.0))));

  // a point-domain node still qualifies under relative interiors
  Integrand P = two_node(indicator_fn(point_poly(Vec(0.0))), abs_fn(0.0));
  FormulaResult RP = rhs_qualfin(P, Vec(0.0), {0}, QualfinVariant::i);
  CHECK_FALSE(RP.refused);
  CHECK(RP.set.status == AumannStatus::unbounded_direction);
  CHECK(support(RP.set.set, Vec(1.0)).is_pos_inf());
}

TEST_CASE("shared-point finite sums: variant ii pulls the exact part out") {
  Integrand F = two_node(abs_fn(0.0), quadratic_1d(2.0, 0.0, 0.0));
  FormulaResult R = rhs_qualfin(F, Vec(0.0), {0}, QualfinVariant::ii);
  CHECK(R.formula_id == "qualfin_ii");
  CHECK_FALSE(R.refused);
  CHECK(hi_support(R.set.set) == Catch::Approx(1.0).margin(1e-3));
  CHECK(lo_support(R.set.set) == Catch::Approx(-1.0).margin(1e-3));
  CHECK(R.monotone);
  check_log_nonincreasing(R.convergence_log, 1e-6);

  // interiors are required on T0: a point domain refuses under variant ii
  Integrand P = two_node(indicator_fn(point_poly(Vec(0.0))), abs_fn(0.0));
  FormulaResult RP = rhs_qualfin(P, Vec(0.0), {0}, QualfinVariant::ii);
  CHECK(RP.refused);

  CHECK_THROWS_AS(rhs_qualfin(abs_shift_family(), Vec(0.0), {}, QualfinVariant::i),
                  std::invalid_argument);
  CHECK_THROWS_AS(rhs_qualfin(F, Vec(0.0), {5}, QualfinVariant::i),
                  std::invalid_argument);
}

TEST_CASE("shared-point finite sums refuse disjoint relative interiors") {
  Integrand F = opposing_halflines();
  FormulaResult R = rhs_qualfin(F, Vec(0.0), {0, 1}, QualfinVariant::i);
  CHECK(R.refused);
  CHECK(R.set.set.is_empty());
}

/* ------------------------------------------------------------------ */
/* qualification reports                                               */
/* ------------------------------------------------------------------ */

TEST_CASE("QC(i): witness sits in the relative interior when it holds") {
  Integrand box = shrinking_box_family();
  QualificationReport q = check_qualification(box, Vec(0.0), 5, full_space(1), QCId::i);
  CHECK(q.condition == "QC(i)");
  CHECK(q.holds);
  REQUIRE(q.witness.has_value());
  ConvexFunction f5 = box.family(box.space.nodes()[5]);
  CHECK(relative_interior_contains(domain(f5).set, *q.witness));
  CHECK(contains(point_poly(Vec(0.0)), *q.witness)); // aff(dom I_f) = {0}

  QualificationReport bad =
      check_qualification(opposing_halflines(), Vec(0.0), 0, full_space(1), QCId::i);
  CHECK_FALSE(bad.holds);
  REQUIRE(bad.separator.has_value());
  CHECK(bad.separator->x() == Catch::Approx(-1.0));
}

TEST_CASE("QC(ii): difference cone must be a subspace") {
  Integrand F = opposing_halflines();
  QualificationReport q = check_qualification(F, Vec(0.0), 0, full_space(1), QCId::ii);
  CHECK_FALSE(q.holds); // cone([0,inf) - {0}) is only a half-line
  REQUIRE(q.separator.has_value());

  Integrand G = two_node(abs_fn(0.0), indicator_fn(point_poly(Vec(0.0))));
  QualificationReport ok = check_qualification(G, Vec(0.0), 0, full_space(1), QCId::ii);
  CHECK(ok.holds); // cone(R - {0}) is the whole line
}

TEST_CASE("QC(iii): continuity needs a full-dimensional domain") {
  QualificationReport q =
      check_qualification(quadratic_over_t_family(), Vec(0.0), 100, full_space(1),
                          QCId::iii);
  CHECK(q.holds);
  REQUIRE(q.witness.has_value());

  Integrand F = opposing_halflines();
  QualificationReport bad = check_qualification(F, Vec(0.0), 0, full_space(1), QCId::iii);
  CHECK_FALSE(bad.holds); // dom I_f = {0} touches only the boundary of [0,inf)
}

TEST_CASE("QC(iv): reachable neighborhoods along span directions") {
  Integrand G = two_node(abs_fn(0.0), indicator_fn(point_poly(Vec(0.0))));
  QualificationReport ok = check_qualification(G, Vec(0.0), 0, full_space(1), QCId::iv);
  CHECK(ok.holds);

  Integrand F = opposing_halflines();
  QualificationReport bad = check_qualification(F, Vec(0.0), 0, full_space(1), QCId::iv);
  CHECK_FALSE(bad.holds);
  REQUIRE(bad.separator.has_value());
  CHECK(bad.separator->x() == Catch::Approx(-1.0));
}

TEST_CASE("QC(v): conjugate decomposition attainment on the fan") {
  Integrand G = two_node(abs_fn(0.0), indicator_fn(point_poly(Vec(0.0))));
  QualificationReport ok = check_qualification(G, Vec(0.0), 0, full_space(1), QCId::v);
  CHECK(ok.holds);

  // -sqrt against a point domain: the infimum escapes to infinity
  Integrand B = two_node(custom1d_fn("neg_sqrt"), indicator_fn(point_poly(Vec(0.0))));
  QualificationReport bad = check_qualification(B, Vec(0.0), 0, full_space(1), QCId::v);
  CHECK_FALSE(bad.holds);
  REQUIRE(bad.separator.has_value());

  CHECK_THROWS_AS(check_qualification(G, Vec(0.0), 9, full_space(1), QCId::i),
                  std::invalid_argument);
}

/* ------------------------------------------------------------------ */
/* inf-convolution attainment                                          */
/* ------------------------------------------------------------------ */

TEST_CASE("inf-convolution attainment: attained, diverging, and skipped cases") {
  Polyhedron origin = point_poly(Vec(0.0));

  InfConvReport ok = verify_inf_convolution_attainment(abs_fn(0.0), origin, Vec(0.5));
  CHECK_FALSE(ok.skipped);
  CHECK(ok.attained);
  REQUIRE(ok.lhs.is_finite());
  CHECK(ok.lhs.value() == Catch::Approx(0.0).margin(1e-9));
  CHECK(ok.rhs.value() >= ok.lhs.value() - 1e-9); // weak duality

  // decompositions of the -sqrt conjugate only improve toward infinity
  InfConvReport div = verify_inf_convolution_attainment(
      custom1d_fn("neg_sqrt"), origin, Vec(1.0), 64, /*check_hypothesis=*/false);
  CHECK_FALSE(div.attained);
  CHECK(div.note.find("diverging") != std::string::npos);

  // hypothesis check: boundary-only contact is reported as skipped
  InfConvReport sk = verify_inf_convolution_attainment(
      indicator_fn(interval_poly(ExtReal(0.0), ExtReal::pos_inf())), origin, Vec(1.0));
  CHECK(sk.skipped);

  // same data without the hypothesis guard: attained at a finite shift
  InfConvReport fr = verify_inf_convolution_attainment(
      indicator_fn(interval_poly(ExtReal(0.0), ExtReal::pos_inf())), origin, Vec(1.0),
      64, false);
  CHECK(fr.attained);

  InfConvReport empty_L = verify_inf_convolution_attainment(abs_fn(0.0), empty_poly(1),
                                                            Vec(0.0));
  CHECK(empty_L.skipped);
}

TEST_CASE("inf-convolution attainment along a 2D line") {
  Polyhedron xaxis = make_polyhedron(2, {Vec(0.0, 0.0)}, {Vec(1.0, 0.0), Vec(-1.0, 0.0)});
  ConvexFunction g = quadratic_2d(2.0, 0.0, 2.0, Vec(0.0, 0.0), 0.0); // x^2 + y^2
  InfConvReport r = verify_inf_convolution_attainment(g, xaxis, Vec(1.0, 7.0));
  CHECK_FALSE(r.skipped);
  CHECK(r.attained);
  REQUIRE(r.lhs.is_finite());
  CHECK(r.lhs.value() == Catch::Approx(0.25).margin(1e-6));
  REQUIRE(r.argmin.has_value());
  CHECK(r.argmin->x() == Catch::Approx(1.0).margin(1e-3));
  CHECK(r.argmin->y() == Catch::Approx(0.0).margin(1e-3));
}

/* ------------------------------------------------------------------ */
/* conjugate interchange                                               */
/* ------------------------------------------------------------------ */

TEST_CASE("conjugate interchange: closed forms match grid suprema node-wise") {
  Integrand S = single_node(quadratic_1d(2.0, 0.0, 0.0));
  InterchangeReport r1 = verify_conjugate_interchange(S, {Vec(3.0)});
  CHECK(r1.equal);
  REQUIRE(r1.lhs.is_finite());
  CHECK(r1.lhs.value() == Catch::Approx(2.25).margin(1e-9)); // (3)^2 / 4

  Integrand F = two_node(abs_fn(0.0),
                         pl_max_fn({{Vec(2.0), -1.0}, {Vec(-1.0), 0.0}}),
                         {0.5, 2.0});
  InterchangeReport r2 = verify_conjugate_interchange(F, {Vec(0.5), Vec(1.0)});
  CHECK(r2.equal);
  CHECK(r2.gap <= 1e-6 * (1.0 + std::fabs(r2.lhs.value())));

  // an affine node off its only slope sends both routes to +inf
  Integrand A = two_node(affine_fn(Vec(2.0), 0.0), abs_fn(0.0));
  InterchangeReport r3 = verify_conjugate_interchange(A, {Vec(3.0), Vec(0.0)});
  CHECK(r3.equal);
  CHECK(r3.lhs.is_pos_inf());
  CHECK(r3.rhs.is_pos_inf());

  CHECK_THROWS_AS(verify_conjugate_interchange(abs_shift_family(), {}),
                  std::invalid_argument);
  CHECK_THROWS_AS(verify_conjugate_interchange(F, {Vec(0.0)}), std::invalid_argument);
}

/* ------------------------------------------------------------------ */
/* modulus-of-convexity penalty                                        */
/* ------------------------------------------------------------------ */

namespace {

/* Node A (weight 1/3): piecewise-linear bump with values 0, 1, 0.5 at
 * y = 0, 1, 2; its lower convex envelope on [0,2] is the chord through
 * (0,0) and (2,0.5), so the modulus at y=1 is 1 - 0.25 = 0.75.
 * Node B (weight 2/3): identically zero.  The integrated modulus is 0.25,
 * and the definitional eps-subdifferential of I at 1 is [1/3-eps, eps-1/6],
 * nonempty exactly when eps >= 1/4. */
NonconvexFamily bump_family() {
  NonconvexFamily G;
  G.name = "bump";
  G.space = finite_discrete_space({1.0, 2.0}, {1.0 / 3.0, 2.0 / 3.0});
  G.family = [](double t) -> std::function<double(double)> {
    if (t < 1.5)
      return [](double y) {
        if (y <= 1.0) return y;
        return 1.0 - 0.5 * (y - 1.0);
      };
    return [](double) { return 0.0; };
  };
  G.window_lo = 0.0;
  G.window_hi = 2.0;
  return G;
}

} // namespace

TEST_CASE("modulus penalty: necessary bound holds above the threshold") {
  NonconvexFamily G = bump_family();

  ModulusReport pass = modulus_penalty_check(G, 1.0, 0.3);
  CHECK_FALSE(pass.skipped);
  CHECK(pass.passes);
  CHECK(pass.modulus_integral == Catch::Approx(0.25).margin(1e-6));
  CHECK_FALSE(pass.oracle_set.is_empty());
  CHECK(hi_support(pass.oracle_set) == Catch::Approx(0.3 - 1.0 / 6.0).margin(1e-6));
  CHECK(lo_support(pass.oracle_set) == Catch::Approx(1.0 / 3.0 - 0.3).margin(1e-6));

  ModulusReport skip = modulus_penalty_check(G, 1.0, 0.1);
  CHECK(skip.skipped);
  CHECK(skip.oracle_set.is_empty());
  CHECK(skip.reason.find("hypothesis") != std::string::npos);
}

TEST_CASE("modulus penalty: convex families have zero modulus") {
  NonconvexFamily G;
  G.name = "vee";
  G.space = finite_discrete_space({1.0}, {1.0});
  G.family = [](double) -> std::function<double(double)> {
    return [](double y) { return std::fabs(y - 1.0); };
  };
  G.window_lo = 0.0;
  G.window_hi = 2.0;
  ModulusReport r = modulus_penalty_check(G, 1.0, 0.0);
  CHECK_FALSE(r.skipped);
  CHECK(r.passes);
  CHECK(r.modulus_integral == Catch::Approx(0.0).margin(1e-9));

  CHECK_THROWS_AS(modulus_penalty_check(G, 1.0, -0.1), std::invalid_argument);
  CHECK_THROWS_AS(modulus_penalty_check(G, 5.0, 0.1), std::invalid_argument);
}

/* ------------------------------------------------------------------ */
/* randomized structural properties                                    */
/* ------------------------------------------------------------------ */

TEST_CASE("random qualified pairs: dominance, nesting, and oracle containment") {
  for (int trial = 0; trial < 30; ++trial) {
    double s1 = oracle::uniform(0.2, 3.0), b1 = oracle::uniform(-1.0, 1.0);
    double q = oracle::uniform(0.5, 4.0), c = oracle::uniform(-2.0, 2.0);
    ConvexFunction f1 = pl_max_fn({{Vec(s1), b1}, {Vec(-s1), -b1}});
    ConvexFunction f2 = quadratic_1d(q, c, 0.0);
    double w1 = oracle::uniform(0.2, 2.0), w2 = oracle::uniform(0.2, 2.0);
    Integrand F = two_node(f1, f2, {w1, w2});
    double eps = oracle::uniform(0.05, 1.0);

    FormulaResult uni = rhs_theorem41(F, Vec(0.0), eps, AllocationStrategy::uniform);
    FormulaResult opt = rhs_theorem41(F, Vec(0.0), eps, AllocationStrategy::optimal);
    CHECK(oracle::subset_by_supports(uni.set.set, opt.set.set, 1e-9));

    FormulaResult smaller =
        rhs_theorem41(F, Vec(0.0), 0.5 * eps, AllocationStrategy::optimal);
    CHECK(oracle::subset_by_supports(smaller.set.set, opt.set.set, 1e-9));

    Polyhedron O = oracle_interval(
        [&](double y) -> ExtReal {
          ExtReal a = evaluate(f1, Vec(y)), b = evaluate(f2, Vec(y));
          return ExtReal(w1) * a + ExtReal(w2) * b;
        },
        0.0, eps);
    CHECK(oracle::subset_by_supports(opt.set.set, O, 1e-5));
  }
}
