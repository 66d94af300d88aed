#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <functional>
#include <optional>
#include <vector>

#include "subcalc/integral.hpp"
#include "oracles.hpp"

using namespace subcalc;

namespace {

/* Shrinking-box family: f_t(x) = (b/a) x + b + indicator([-a, a]) with
 * a(t) = t, b(t) = 1 + 1/sqrt(t) on (0,1].  I_f is the indicator of {0}
 * shifted by 3 = integral of (1 + 1/sqrt(t)). */
Integrand shrinking_box_family(bool declare) {
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
  return make_integrand("shrinking_box", mu, fam,
                        declare ? std::optional<Polyhedron>(point_poly(Vec(0.0)))
                                : std::nullopt);
}

/* f_t(x) = x^2 / t on (0,1]: every node is finite everywhere, yet the
 * integral is the indicator of {0}. */
Integrand quadratic_over_t_family(bool declare,
                                  std::optional<Polyhedron> declared_override = std::nullopt) {
  IntervalOptions o;
  o.singular_a = true;
  o.exponent_a = 1.0;
  MeasureSpace mu = interval_space(0.0, 1.0, o);
  auto fam = [](double t) { return quadratic_1d(2.0 / t, 0.0, 0.0); };
  std::optional<Polyhedron> dom;
  if (declare) dom = declared_override ? *declared_override : point_poly(Vec(0.0));
  return make_integrand("quadratic_over_t", mu, fam, dom);
}

/* f_t(x) = |x - t| on [0,1]: I_f(x) = x^2 - x + 1/2 on [0,1]. */
Integrand abs_shift_family() {
  MeasureSpace mu = interval_space(0.0, 1.0, {});
  return make_integrand("abs_shift", mu, [](double t) { return abs_fn(t); });
}

Integrand two_node(const ConvexFunction& f1, const ConvexFunction& f2,
                   std::vector<double> w = {1.0, 1.0},
                   std::optional<Polyhedron> dom = std::nullopt) {
  MeasureSpace mu = finite_discrete_space({1.0, 2.0}, w);
  auto fam = [f1, f2](double t) { return t < 1.5 ? f1 : f2; };
  return make_integrand("two_node", mu, fam, std::move(dom));
}

double set_width_1d(const Polyhedron& P) {
  ExtReal hi = support(P, Vec(1.0)), lo = support(P, Vec(-1.0));
  REQUIRE(hi.is_finite());
  REQUIRE(lo.is_finite());
  return hi.value() + lo.value();
}

} // namespace

TEST_CASE("integral values match hand-computed references") {
  Integrand box = shrinking_box_family(true);
  CHECK(integral_value(box, Vec(0.0)).is_finite());
  CHECK(integral_value(box, Vec(0.0)).value() == Catch::Approx(3.0).margin(1e-9));
  CHECK(integral_value(box, Vec(0.5)).is_pos_inf());
  CHECK(integral_value(box, Vec(-0.25)).is_pos_inf());
  CHECK(integral_value(box, Vec(1e-3)).is_pos_inf());

  Integrand qot = quadratic_over_t_family(true);
  CHECK(integral_value(qot, Vec(0.0)).value() == Catch::Approx(0.0).margin(1e-12));
  CHECK(integral_value(qot, Vec(1.0)).is_pos_inf());
  CHECK(integral_value(qot, Vec(-0.01)).is_pos_inf());

  Integrand abs_fam = abs_shift_family();
  CHECK(integral_value(abs_fam, Vec(0.3)).value() ==
        Catch::Approx(0.3 * 0.3 - 0.3 + 0.5).margin(1e-6));
  CHECK(integral_value(abs_fam, Vec(2.0)).value() == Catch::Approx(1.5).margin(1e-9));

  Integrand smooth = two_node(quadratic_1d(2.0, 0.0, 0.0), quadratic_1d(2.0, -2.0, 1.0));
  CHECK(integral_value(smooth, Vec(0.3)).value() == Catch::Approx(0.58).margin(1e-12));

  CHECK_THROWS_AS(integral_value(smooth, Vec(0.0, 0.0)), std::invalid_argument);
  CHECK_THROWS_AS(make_integrand("bad", smooth.space, nullptr), std::invalid_argument);
}

TEST_CASE("integral domains: declared, intersected, and probed") {
  SECTION("declared point domain is confirmed by probing") {
    IntegralDomain d = domain_of_integral(shrinking_box_family(true));
    CHECK(d.exact);
    CHECK(d.probe_confirmed);
    CHECK(poly_equal(d.set, point_poly(Vec(0.0))));

    IntegralDomain q = domain_of_integral(quadratic_over_t_family(true));
    CHECK(q.exact);
    CHECK(q.probe_confirmed);
    CHECK(poly_equal(q.set, point_poly(Vec(0.0))));
  }

  SECTION("undeclared shrinking boxes: probing stops at node resolution") {
    IntegralDomain d = domain_of_integral(shrinking_box_family(false));
    CHECK_FALSE(d.exact);
    CHECK_FALSE(d.set.is_empty());
    CHECK(support(d.set, Vec(1.0)).value() <= 1e-6);
    CHECK(support(d.set, Vec(-1.0)).value() <= 1e-6);
  }

  SECTION("finite node values everywhere, divergent integral: probing overrides the naive intersection") {
    Integrand F = quadratic_over_t_family(false);
    NaiveDomain naive = naive_node_domain_intersection(F);
    CHECK(naive.exact);
    CHECK(naive.set.is_full_space()); // the trap: every node domain is R
    IntegralDomain d = domain_of_integral(F);
    CHECK_FALSE(d.exact);
    CHECK(support(d.set, Vec(1.0)).value() <= 1e-6);
    CHECK(support(d.set, Vec(-1.0)).value() <= 1e-6);
  }

  SECTION("declared domain that is too wide fails confirmation but still rules") {
    Integrand F = quadratic_over_t_family(
        true, interval_poly(ExtReal(-1.0), ExtReal(1.0)));
    IntegralDomain d = domain_of_integral(F);
    CHECK(d.exact);
    CHECK_FALSE(d.probe_confirmed);
    CHECK(poly_equal(d.set, interval_poly(ExtReal(-1.0), ExtReal(1.0))));
  }

  SECTION("full-space and intersected discrete domains confirm") {
    IntegralDomain d = domain_of_integral(abs_shift_family());
    CHECK(d.exact);
    CHECK(d.probe_confirmed);
    CHECK(d.set.is_full_space());

    Integrand F = two_node(indicator_fn(interval_poly(ExtReal(0.0), ExtReal(2.0))),
                           indicator_fn(interval_poly(ExtReal(1.0), ExtReal(3.0))));
    IntegralDomain e = domain_of_integral(F);
    CHECK(e.exact);
    CHECK(e.probe_confirmed);
    CHECK(poly_equal(e.set, interval_poly(ExtReal(1.0), ExtReal(2.0))));
  }

  SECTION("disjoint node domains give the empty set") {
    Integrand F = two_node(indicator_fn(interval_poly(ExtReal(0.0), ExtReal(1.0))),
                           indicator_fn(interval_poly(ExtReal(2.0), ExtReal(3.0))));
    IntegralDomain d = domain_of_integral(F);
    CHECK(d.set.is_empty());
  }
}

TEST_CASE("definitional oracle for the subdifferential of the integral") {
  SECTION("indicator-of-a-point integrals make every constraint vacuous") {
    Integrand box = shrinking_box_family(true);
    CHECK(oracle_eps_subdiff(box, Vec(0.0), 0.0).is_full_space());
    CHECK(oracle_eps_subdiff(box, Vec(0.0), 0.5).is_full_space());
    CHECK(oracle_eps_subdiff(box, Vec(0.25), 0.1).is_empty()); // I not finite there

    Integrand qot = quadratic_over_t_family(true);
    CHECK(oracle_eps_subdiff(qot, Vec(0.0), 0.0).is_full_space());
    CHECK(oracle_eps_subdiff(qot, Vec(0.0), 0.3).is_full_space());
  }

  SECTION("median-type family: oracle brackets the derivative 2x-1") {
    Integrand abs_fam = abs_shift_family();
    for (double x : {0.3, 0.5, 0.75}) {
      Polyhedron O = oracle_eps_subdiff(abs_fam, Vec(x), 0.0);
      double want = 2.0 * x - 1.0;
      CHECK(contains(O, Vec(want), 1e-9));
      CHECK(set_width_1d(O) <= 0.1);
      /* formula-vs-oracle comparison direction: closed form inside oracle */
      CHECK(oracle::subset_by_supports(point_poly(Vec(want)), O, 1e-9));
    }
  }

  SECTION("smooth strictly convex integrand: oracle pinches to the gradient") {
    Integrand smooth = two_node(quadratic_1d(2.0, 0.0, 0.0), quadratic_1d(2.0, -2.0, 1.0));
    Polyhedron O = oracle_eps_subdiff(smooth, Vec(0.3), 0.0);
    CHECK(contains(O, Vec(-0.8), 1e-9));
    CHECK(set_width_1d(O) <= 0.11); // half of I'' = 4 times the 0.025 grid step, per side
  }

  SECTION("oracle is monotone in eps and in grid refinement") {
    Integrand abs_fam = abs_shift_family();
    Polyhedron O0 = oracle_eps_subdiff(abs_fam, Vec(0.3), 0.0);
    Polyhedron O2 = oracle_eps_subdiff(abs_fam, Vec(0.3), 0.2);
    Polyhedron O5 = oracle_eps_subdiff(abs_fam, Vec(0.3), 0.5);
    CHECK(oracle::subset_by_supports(O0, O2, 1e-9));
    CHECK(oracle::subset_by_supports(O2, O5, 1e-9));

    ProbeGrid coarse{-5.0, 5.0, 201}, fine{-5.0, 5.0, 801};
    Polyhedron Oc = oracle_eps_subdiff(abs_fam, Vec(0.3), 0.2, coarse);
    Polyhedron Of = oracle_eps_subdiff(abs_fam, Vec(0.3), 0.2, fine);
    CHECK(oracle::subset_by_supports(Of, Oc, 1e-9));
  }

  SECTION("2D oracle brackets the gradient of a smooth sum") {
    Integrand F = two_node(quadratic_2d(2.0, 0.0, 2.0, Vec(0.0, 0.0), 0.0),
                           quadratic_2d(2.0, 0.0, 2.0, Vec(-2.0, 0.0), 0.0));
    ProbeGrid grid{-5.0, 5.0, 101};
    Polyhedron O = oracle_eps_subdiff(F, Vec(0.5, 0.5), 0.0, grid);
    Vec want(0.0, 2.0); // gradient of 2|y|^2 - 2 y_1 at (0.5, 0.5)
    CHECK(contains(O, want, 1e-9));
    for (const Vec& v : direction_fan(2, 16)) {
      ExtReal s = support(O, v);
      REQUIRE(s.is_finite());
      CHECK(s.value() <= want.dot(v) + 0.45); // grid-step slack
    }
  }
}

TEST_CASE("aumann integrals of interval families") {
  IntervalOptions o;
  o.singular_a = true;
  o.exponent_a = 0.5;
  MeasureSpace mu_sing = interval_space(0.0, 1.0, o);
  MeasureSpace mu_plain = interval_space(0.0, 1.0, {});

  SECTION("shrinking-box subdifferential family has no integrable selection") {
    for (double eps : {0.1, 0.5, 0.9}) {
      auto G = [eps](double t) {
        double lo = (1.0 - eps) / t + std::pow(t, -1.5);
        double hi = (1.0 + eps) / t + std::pow(t, -1.5);
        return interval_poly(ExtReal(lo), ExtReal(hi));
      };
      SetWithStatus r = aumann_integral(G, mu_sing);
      CHECK(r.status == AumannStatus::empty_no_integrable_selection);
      CHECK(r.set.is_empty());
    }
    /* same verdict when the node sets come from the subdifferential code */
    auto G = [](double t) {
      double slope = 1.0 / t + std::pow(t, -1.5);
      double offset = 1.0 + 1.0 / std::sqrt(t);
      ConvexFunction f = affine_plus_box_fn(
          Vec(slope), offset, interval_poly(ExtReal(-t), ExtReal(t)));
      return eps_subdifferential(f, Vec(0.0), 0.5).set;
    };
    SetWithStatus r = aumann_integral(G, mu_sing);
    CHECK(r.status == AumannStatus::empty_no_integrable_selection);
  }

  SECTION("square-root envelope integrates exactly") {
    for (double eps : {0.1, 0.9}) {
      auto G = [eps](double t) {
        double u = 2.0 * std::sqrt(eps / t);
        return interval_poly(ExtReal(-u), ExtReal(u));
      };
      SetWithStatus r = aumann_integral(G, mu_sing);
      CHECK(r.status == AumannStatus::nonempty_exact);
      CHECK(r.unbounded_dirs.empty());
      CHECK(support(r.set, Vec(1.0)).value() ==
            Catch::Approx(4.0 * std::sqrt(eps)).margin(1e-9));
      CHECK(support(r.set, Vec(-1.0)).value() ==
            Catch::Approx(4.0 * std::sqrt(eps)).margin(1e-9));
    }
  }

  SECTION("singleton family integrates to the point integral") {
    auto G = [](double t) { return point_poly(Vec(t * t - 0.3)); };
    SetWithStatus r = aumann_integral(G, mu_plain);
    CHECK(r.status == AumannStatus::nonempty_exact);
    CHECK(poly_equal(r.set, point_poly(Vec(1.0 / 3.0 - 0.3)), 1e-10));
  }

  SECTION("half-line nodes give an exact ray and record the direction") {
    auto G = [](double t) { return interval_poly(ExtReal(t), ExtReal::pos_inf()); };
    SetWithStatus r = aumann_integral(G, mu_plain);
    CHECK(r.status == AumannStatus::unbounded_direction);
    REQUIRE(r.unbounded_dirs.size() == 1);
    CHECK(r.unbounded_dirs[0].x() == Catch::Approx(1.0));
    CHECK(support(r.set, Vec(1.0)).is_pos_inf());
    CHECK(support(r.set, Vec(-1.0)).value() == Catch::Approx(-0.5).margin(1e-9));
  }

  SECTION("empty node on positive mass empties the integral; zero mass does not") {
    MeasureSpace mu = finite_discrete_space({1.0, 2.0}, {1.0, 0.5});
    std::vector<Polyhedron> sets = {interval_poly(ExtReal(0.0), ExtReal(1.0)),
                                    empty_poly(1)};
    SetWithStatus r = aumann_integral(sets, mu);
    CHECK(r.status == AumannStatus::empty_no_integrable_selection);
    CHECK(r.set.is_empty());

    MeasureSpace mu0 = finite_discrete_space({1.0, 2.0}, {1.0, 0.0});
    SetWithStatus r0 = aumann_integral(sets, mu0);
    CHECK(r0.status == AumannStatus::nonempty_exact);
    CHECK(poly_equal(r0.set, interval_poly(ExtReal(0.0), ExtReal(1.0))));
  }

  SECTION("support identity: the result's support equals the integrated support") {
    auto lo_fn = [](double t) { return std::sin(3.0 * t) - 1.0; };
    auto hi_fn = [](double t) { return std::sin(3.0 * t) + t; };
    auto G = [&](double t) { return interval_poly(ExtReal(lo_fn(t)), ExtReal(hi_fn(t))); };
    SetWithStatus r = aumann_integral(G, mu_plain);
    REQUIRE(r.status == AumannStatus::nonempty_exact);
    double want_hi = oracle::simpson(hi_fn, 0.0, 1.0, 20001);
    double want_lo = oracle::simpson(lo_fn, 0.0, 1.0, 20001);
    CHECK(support(r.set, Vec(1.0)).value() == Catch::Approx(want_hi).margin(1e-7));
    CHECK(-support(r.set, Vec(-1.0)).value() == Catch::Approx(want_lo).margin(1e-7));
  }

  SECTION("emptiness is monotone when the node sets grow with eps") {
    std::vector<bool> empty_at;
    for (double eps : {0.05, 0.2, 0.8}) {
      auto G = [eps](double t) {
        double lo = (1.0 - eps) / t + std::pow(t, -1.5);
        double hi = (1.0 + eps) / t + std::pow(t, -1.5);
        return interval_poly(ExtReal(lo), ExtReal(hi));
      };
      empty_at.push_back(aumann_integral(G, mu_sing).set.is_empty());
    }
    /* node sets grow with eps, so emptiness at a larger eps forces emptiness
     * at every smaller one */
    for (size_t i = 0; i + 1 < empty_at.size(); ++i)
      CHECK((!empty_at[i + 1] || empty_at[i]));
    for (bool e : empty_at) CHECK(e); // this family is empty for every eps
  }
}

TEST_CASE("aumann integrals of 2D families") {
  MeasureSpace mu_plain = interval_space(0.0, 1.0, {});

  SECTION("2D singleton family") {
    auto G = [](double t) { return point_poly(Vec(t, t * t)); };
    SetWithStatus r = aumann_integral(G, mu_plain);
    CHECK(r.status == AumannStatus::nonempty_exact);
    auto h = hausdorff_distance(r.set, point_poly(Vec(0.5, 1.0 / 3.0)));
    REQUIRE(h.status == HausdorffStatus::ok);
    REQUIRE(h.value.is_finite());
    CHECK(h.value.value() <= 1e-6);
  }

  SECTION("growing boxes integrate to the averaged box") {
    auto G = [](double t) {
      return make_polyhedron(2, {Vec(0.0, 0.0), Vec(t, 0.0), Vec(t, t), Vec(0.0, t)});
    };
    SetWithStatus r = aumann_integral(G, mu_plain);
    CHECK(r.status == AumannStatus::nonempty_exact);
    Polyhedron want =
        make_polyhedron(2, {Vec(0.0, 0.0), Vec(0.5, 0.0), Vec(0.5, 0.5), Vec(0.0, 0.5)});
    auto h = hausdorff_distance(r.set, want);
    REQUIRE(h.status == HausdorffStatus::ok);
    REQUIRE(h.value.is_finite());
    CHECK(h.value.value() <= 1e-3);
  }

  SECTION("half-plane nodes: one supported direction, the rest unbounded") {
    auto G = [](double t) {
      return from_halfspaces(2, {Halfspace{Vec(1.0, 0.0), t}});
    };
    SetWithStatus r = aumann_integral(G, mu_plain, 360);
    CHECK(r.status == AumannStatus::unbounded_direction);
    CHECK(r.unbounded_dirs.size() == 359);
    CHECK(support(r.set, Vec(1.0, 0.0)).value() == Catch::Approx(0.5).margin(1e-9));
    CHECK(support(r.set, Vec(0.0, 1.0)).is_pos_inf());
  }

  SECTION("all directions divergent collapses to the full plane") {
    IntervalOptions o;
    o.singular_a = true;
    o.exponent_a = 1.5;
    MeasureSpace mu = interval_space(0.0, 1.0, o);
    auto G = [](double t) {
      double rbox = std::pow(t, -1.5);
      return box_poly(2, rbox);
    };
    SetWithStatus r = aumann_integral(G, mu, 64);
    CHECK(r.status == AumannStatus::unbounded_direction);
    CHECK(r.set.is_full_space());
    CHECK(r.unbounded_dirs.size() == 64);
  }

  SECTION("2D empty node on positive mass") {
    MeasureSpace mu = finite_discrete_space({1.0, 2.0}, {1.0, 1.0});
    std::vector<Polyhedron> sets = {box_poly(2, 1.0), empty_poly(2)};
    SetWithStatus r = aumann_integral(sets, mu);
    CHECK(r.status == AumannStatus::empty_no_integrable_selection);
    CHECK(r.set.is_empty());
  }
}

TEST_CASE("certificate decompositions of approximate subgradients") {
  SECTION("smooth two-node: gradients certify with zero budgets") {
    Integrand F = two_node(quadratic_1d(2.0, 0.0, 0.0), quadratic_1d(2.0, -2.0, 1.0));
    CertificateResult c = eps_certificate_decomposition(F, Vec(0.3), Vec(-0.8), 0.0);
    REQUIRE(c.found);
    CHECK(c.eps1_integral <= 1e-9);
    CHECK(c.eps2 <= 1e-9);
    CHECK(c.remainder.norm() <= 1e-9);
    CHECK(c.transport_error <= 1e-9);
    REQUIRE(c.selection.size() == 2);
    CHECK(c.selection[0].x() == Catch::Approx(0.6).margin(1e-9));
    CHECK(c.selection[1].x() == Catch::Approx(-1.4).margin(1e-9));
  }

  SECTION("kink plus parabola splits the subgradient across nodes") {
    Integrand F = two_node(abs_fn(0.0), quadratic_1d(2.0, 0.0, 0.0));
    CertificateResult c = eps_certificate_decomposition(F, Vec(0.0), Vec(0.5), 0.0);
    REQUIRE(c.found);
    REQUIRE(c.selection.size() == 2);
    CHECK(c.selection[0].x() == Catch::Approx(0.5).margin(1e-9));
    CHECK(c.selection[1].x() == Catch::Approx(0.0).margin(1e-9));
    CHECK(c.eps1_integral <= 1e-9);
    CHECK(c.eps2 <= 1e-9);
    /* the reported selection really is a subgradient of each node function */
    for (double y = -3.0; y <= 3.0; y += 0.06) {
      CHECK(std::fabs(y) >= c.selection[0].x() * y - c.eps1[0] - 1e-9);
      CHECK(y * y >= c.selection[1].x() * y - c.eps1[1] - 1e-9);
    }
  }

  SECTION("point-domain integral routes everything through the normal cone") {
    Integrand F = shrinking_box_family(true);
    for (double xstar : {0.0, 7.25}) {
      for (double eps : {0.0, 0.3}) {
        CertificateResult c =
            eps_certificate_decomposition(F, Vec(0.0), Vec(xstar), eps);
        REQUIRE(c.found);
        CHECK(c.total_budget <= eps + 1e-6);
        CHECK(c.eps2 <= 1e-9); // N_dom(0) is the whole line: no shift needed
        CHECK(c.transport_error <= 1e-9);
        double m = 0.0;
        for (size_t i = 0; i < c.selection.size(); ++i)
          m += F.space.weights()[i] * c.selection[i].x();
        CHECK(m + c.remainder.x() == Catch::Approx(xstar).margin(1e-9));
      }
    }
  }

  SECTION("positive budget spreads across identical smooth nodes") {
    Integrand F = two_node(quadratic_1d(2.0, 0.0, 0.0), quadratic_1d(2.0, 0.0, 0.0));
    CertificateResult c = eps_certificate_decomposition(F, Vec(0.0), Vec(1.9), 0.5);
    REQUIRE(c.found);
    CHECK(c.total_budget <= 0.5 + 1e-6);
    CHECK(c.remainder.norm() <= 1e-9);
    double m = F.space.weights()[0] * c.selection[0].x() +
               F.space.weights()[1] * c.selection[1].x();
    CHECK(m == Catch::Approx(1.9).margin(1e-9));
  }

  SECTION("lopsided curvatures need the Lagrangian allocation") {
    Integrand F = two_node(quadratic_1d(2.0, 0.0, 0.0), quadratic_1d(200.0, 0.0, 0.0));
    CertificateResult c = eps_certificate_decomposition(F, Vec(0.0), Vec(12.0), 0.5);
    REQUIRE(c.found);
    CHECK(c.note.find("optimal allocation") != std::string::npos);
    CHECK(c.total_budget <= 0.5 + 1e-6);

    CertificateResult miss = eps_certificate_decomposition(F, Vec(0.0), Vec(15.0), 0.5);
    CHECK_FALSE(miss.found);
    CHECK(miss.note.find("resolution failure") != std::string::npos);
  }

  SECTION("clear oracle violations are reported as precondition failures") {
    Integrand F = abs_shift_family();
    CertificateResult c = eps_certificate_decomposition(F, Vec(0.3), Vec(100.0), 0.0);
    CHECK_FALSE(c.found);
    CHECK(c.note.find("precondition") != std::string::npos);
  }

  SECTION("invalid inputs throw") {
    Integrand F = shrinking_box_family(true);
    CHECK_THROWS_AS(eps_certificate_decomposition(F, Vec(0.5), Vec(0.0), 0.1),
                    std::invalid_argument);
    CHECK_THROWS_AS(eps_certificate_decomposition(F, Vec(0.0), Vec(0.0), -0.1),
                    std::invalid_argument);
  }
}

TEST_CASE("easy inclusion: node subdifferentials plus normal cone stay inside the oracle") {
  struct Case {
    Integrand F;
    Vec x;
    double eps;
  };
  std::vector<Case> cases;
  cases.push_back({two_node(abs_fn(0.0), quadratic_1d(2.0, 0.0, 0.0)), Vec(0.0), 0.7});
  cases.push_back({shrinking_box_family(true), Vec(0.0), 0.5});
  cases.push_back({abs_shift_family(), Vec(0.3), 0.4});

  for (const Case& C : cases) {
    IntegralDomain D = domain_of_integral(C.F);
    Polyhedron O = oracle_eps_subdiff(C.F, C.x, C.eps);
    const bool trivial = D.set.is_full_space();
    for (double alpha : {0.0, 0.5, 1.0}) {
      double eps1 = alpha * C.eps, eps2 = C.eps - eps1;
      ErrorAllocation alloc = uniform_allocation(eps1, C.F.space);
      std::vector<Polyhedron> dsets;
      size_t k = 0;
      for (double t : C.F.space.nodes()) {
        ConvexFunction f = C.F.family(t);
        ConvexFunction g = trivial ? f : restrict_fn(f, D.set);
        dsets.push_back(eps_subdifferential(g, C.x, alloc.values[k++]).set);
      }
      SetWithStatus A = aumann_integral(dsets, C.F.space);
      if (A.set.is_empty()) continue; // nothing to include
      Polyhedron N = normal_cone_eps(D.set, C.x, eps2);
      Polyhedron lhs = minkowski_sum(A.set, N);
      CHECK(oracle::subset_by_supports(lhs, O, 2e-3));
    }
  }
}
