#pragma once

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "subcalc/json_io.hpp"
#include "subcalc/svg.hpp"

/* Declarative scenarios: a versioned JSON schema describing an integrand (or
 * a function pair, or a nonconvex family), the query points and budget grids,
 * a list of declared analytic facts with provenance, and the named checks to
 * execute.  run_scenario evaluates every listed check exactly once and
 * reports pass/fail/skipped verdicts with numeric gaps.  All computation is
 * deterministic: fixed grids, fixed iteration caps, no randomness. */

namespace subcalc {

/* ---- registries: families referenced from JSON by name only ---- */

inline const std::map<std::string, std::function<ConvexFunction(double)>>&
family_registry() {
  static const std::map<std::string, std::function<ConvexFunction(double)>> reg = {
      /* affine slope diverging as t -> 0 with box domain [-t, t]; the
       * integral's domain collapses to {0} */
      {"shrinking_box",
       [](double t) {
         double slope = 1.0 / t + std::pow(t, -1.5);
         double offset = 1.0 + 1.0 / std::sqrt(t);
         return affine_plus_box_fn(Vec(slope), offset,
                                   interval_poly(ExtReal(-t), ExtReal(t)));
       }},
      /* x^2 / t: every node finite everywhere, yet the integral is finite
       * only at 0 */
      {"inverse_t_quadratic", [](double t) { return quadratic_1d(2.0 / t, 0.0, 0.0); }},
      /* |x - t|: smooth integral with derivative 2x - 1 on [0, 1] */
      {"abs_shift", [](double t) { return abs_fn(t); }},
      /* (t + 1) x^2: qualified smooth family, integral derivative 3x */
      {"scaled_quadratic",
       [](double t) { return quadratic_1d(2.0 * (t + 1.0), 0.0, 0.0); }},
  };
  return reg;
}

inline const std::map<std::string, std::function<std::function<double(double)>(double)>>&
nonconvex_registry() {
  static const std::map<std::string, std::function<std::function<double(double)>(double)>>
      reg = {
          /* node weight on t < 1.5: tent of height 1/4 peaking at y = 1 and
           * vanishing at y = 0 and 2 (concave, so nonconvex); other nodes are
           * identically zero.  Lower convex envelope on [0, 2] is the zero
           * chord, so the convexity modulus at y = 1 is exactly 1/4. */
          {"tent_bump",
           [](double t) -> std::function<double(double)> {
             if (t < 1.5)
               return [](double y) { return 0.25 * (1.0 - std::fabs(y - 1.0)); };
             return [](double) { return 0.0; };
           }},
      };
  return reg;
}

/* ---- schema ---- */

struct Fact {
  std::string name;
  std::string provenance; // literature | derived | trivial
  std::string label;      // required when provenance == literature
  json data;              // full fact object, consumed by the named check
};

struct Scenario {
  int schema_version = 1;
  std::string name;
  std::string kind = "integrand"; // integrand | pair | modulus
  std::string description;
  int dim = 1;
  // kind == integrand
  std::optional<MeasureSpace> measure;
  std::string family_name;                  // registry family, or
  std::vector<ConvexFunction> per_node_fns; // explicit trees (finite_discrete only)
  std::optional<Polyhedron> declared_domain;
  // kind == pair
  std::vector<ConvexFunction> pair;
  // kind == modulus
  std::string nonconvex_name;
  double window_lo = -5.0, window_hi = 5.0;
  // shared
  std::vector<Vec> query_points;
  std::vector<double> eps_grid, eta_grid;
  ProbeGrid oracle_grid;
  std::vector<Fact> facts;
  std::vector<std::string> checks;
};

inline const std::set<std::string>& known_checks() {
  static const std::set<std::string> k = {
      "node_subdiff_closed_form", "aumann_status",         "formula_vs_fact",
      "thm41_subset_oracle",      "formula_consistency",   "declared_domain_confirmed",
      "naive_domain_flag",        "strategy_dominance",    "hup_iterates",
      "modulus_threshold",        "qualification_matrix",  "conjugate_interchange",
      "attainment"};
  return k;
}

/* Validate the raw JSON against schema version 1.  Throws
 * std::invalid_argument with a specific message; nothing is computed. */
inline void validate_scenario(const json& j) {
  auto fail = [](const std::string& m) {
    throw std::invalid_argument("scenario schema: " + m);
  };
  if (!j.is_object()) fail("top level must be an object");
  if (!j.contains("schema_version")) fail("missing schema_version");
  if (!j.at("schema_version").is_number_integer() ||
      j.at("schema_version").get<int>() != 1)
    fail("unsupported schema_version (expected 1)");
  if (!j.contains("name") || !j.at("name").is_string() ||
      j.at("name").get<std::string>().empty())
    fail("missing or empty name");
  const std::string kind = j.value("kind", "integrand");
  if (kind != "integrand" && kind != "pair" && kind != "modulus")
    fail("kind must be integrand|pair|modulus");
  const int dim = j.value("dim", 1);
  if (dim != 1 && dim != 2) fail("dim must be 1 or 2");

  if (kind == "integrand") {
    if (!j.contains("measure")) fail("integrand scenario needs a measure");
    if (!j.contains("family") || !j.at("family").is_object())
      fail("integrand scenario needs a family object");
    const json& fam = j.at("family");
    const bool reg = fam.contains("registry"), per = fam.contains("per_node");
    if (reg == per) fail("family needs exactly one of registry|per_node");
    if (reg) {
      const std::string n = fam.at("registry").get<std::string>();
      if (!family_registry().count(n)) fail("unknown registry family '" + n + "'");
    } else {
      if (!fam.at("per_node").is_array() || fam.at("per_node").empty())
        fail("family.per_node must be a nonempty array");
      if (j.at("measure").value("kind", "") != "finite_discrete")
        fail("family.per_node requires a finite_discrete measure");
      if (fam.at("per_node").size() != j.at("measure").at("nodes").size())
        fail("family.per_node size must match measure.nodes");
    }
  } else if (kind == "pair") {
    if (!j.contains("pair") || !j.at("pair").is_array() || j.at("pair").size() != 2)
      fail("pair scenario needs exactly two function trees under 'pair'");
  } else {
    if (!j.contains("nonconvex")) fail("modulus scenario needs a nonconvex family name");
    const std::string n = j.at("nonconvex").get<std::string>();
    if (!nonconvex_registry().count(n)) fail("unknown nonconvex family '" + n + "'");
    if (!j.contains("measure")) fail("modulus scenario needs a measure");
    if (!j.contains("window") || !j.at("window").is_array() || j.at("window").size() != 2)
      fail("modulus scenario needs window = [lo, hi]");
    if (!(j.at("window")[0].get<double>() < j.at("window")[1].get<double>()))
      fail("window must satisfy lo < hi");
  }

  if (!j.contains("query_points") || !j.at("query_points").is_array() ||
      j.at("query_points").empty())
    fail("query_points must be a nonempty array of points");
  for (const auto& q : j.at("query_points"))
    if (!q.is_array() || int(q.size()) != dim) fail("query point dimension mismatch");
  for (const char* grid : {"eps_grid", "eta_grid"}) {
    if (!j.contains(grid)) continue;
    if (!j.at(grid).is_array()) fail(std::string(grid) + " must be an array");
    for (const auto& e : j.at(grid))
      if (!e.is_number() || e.get<double>() < 0)
        fail(std::string(grid) + " entries must be numbers >= 0");
  }
  if (j.contains("oracle_grid")) {
    const json& g = j.at("oracle_grid");
    if (!g.is_object() || !g.contains("lo") || !g.contains("hi") ||
        !g.contains("points"))
      fail("oracle_grid needs lo, hi, points");
    if (!(g.at("lo").get<double>() < g.at("hi").get<double>()) ||
        g.at("points").get<int>() < 3)
      fail("oracle_grid needs lo < hi and points >= 3");
  }

  if (j.contains("facts")) {
    if (!j.at("facts").is_array()) fail("facts must be an array");
    for (const auto& f : j.at("facts")) {
      if (!f.is_object() || !f.contains("name")) fail("each fact needs a name");
      if (!f.contains("provenance")) fail("each fact needs a provenance");
      const std::string p = f.at("provenance").get<std::string>();
      if (p != "literature" && p != "derived" && p != "trivial")
        fail("fact provenance must be literature|derived|trivial");
      if (p == "literature" &&
          (!f.contains("label") || f.at("label").get<std::string>().empty()))
        fail("literature facts must carry a label");
    }
  }

  if (!j.contains("checks") || !j.at("checks").is_array() || j.at("checks").empty())
    fail("checks must be a nonempty array");
  for (const auto& c : j.at("checks")) {
    if (!c.is_string()) fail("check entries must be strings");
    if (!known_checks().count(c.get<std::string>()))
      fail("unknown check '" + c.get<std::string>() + "'");
  }
}

inline Scenario scenario_from_json(const json& j) {
  validate_scenario(j);
  Scenario s;
  s.schema_version = 1;
  s.name = j.at("name").get<std::string>();
  s.kind = j.value("kind", "integrand");
  s.description = j.value("description", "");
  s.dim = j.value("dim", 1);
  if (s.kind == "integrand") {
    s.measure = measure_from_json(j.at("measure"));
    const json& fam = j.at("family");
    if (fam.contains("registry"))
      s.family_name = fam.at("registry").get<std::string>();
    else
      for (const auto& fj : fam.at("per_node")) s.per_node_fns.push_back(fn_from_json(fj));
    if (j.contains("declared_domain") && !j.at("declared_domain").is_null())
      s.declared_domain = poly_from_json(j.at("declared_domain"));
  } else if (s.kind == "pair") {
    for (const auto& fj : j.at("pair")) s.pair.push_back(fn_from_json(fj));
  } else {
    s.nonconvex_name = j.at("nonconvex").get<std::string>();
    s.measure = measure_from_json(j.at("measure"));
    s.window_lo = j.at("window")[0].get<double>();
    s.window_hi = j.at("window")[1].get<double>();
  }
  for (const auto& q : j.at("query_points")) s.query_points.push_back(vec_from_json(q));
  if (j.contains("eps_grid"))
    s.eps_grid = j.at("eps_grid").get<std::vector<double>>();
  if (j.contains("eta_grid"))
    s.eta_grid = j.at("eta_grid").get<std::vector<double>>();
  if (j.contains("oracle_grid")) {
    s.oracle_grid.lo = j.at("oracle_grid").at("lo").get<double>();
    s.oracle_grid.hi = j.at("oracle_grid").at("hi").get<double>();
    s.oracle_grid.points_per_axis = j.at("oracle_grid").at("points").get<int>();
  }
  if (j.contains("facts"))
    for (const auto& fj : j.at("facts")) {
      Fact f;
      f.name = fj.at("name").get<std::string>();
      f.provenance = fj.at("provenance").get<std::string>();
      f.label = fj.value("label", "");
      f.data = fj;
      s.facts.push_back(std::move(f));
    }
  for (const auto& c : j.at("checks")) s.checks.push_back(c.get<std::string>());
  return s;
}

/* ---- reports ---- */

struct RunOptions {
  double tol = 1e-3;        // quadrature-backed set comparisons
  double closed_tol = 1e-6; // closed-form comparisons
  int directions = 360;
  double box_radius = 1e3;
  std::string out_dir; // empty: no artifacts written
};

struct CheckResult {
  std::string name;
  std::string verdict = "pass"; // pass | fail | skipped
  std::string reason;
  double gap = 0.0;
  double seconds = 0.0;
  json details; // offending sets, serialized, on failure
};

struct ScenarioReport {
  std::string scenario;
  std::vector<CheckResult> checks;
  std::vector<std::string> artifacts;
  bool all_passed() const {
    for (const CheckResult& c : checks)
      if (c.verdict == "fail") return false;
    return true;
  }
};

/* Deterministic JSON: runtimes are deliberately excluded (they belong to the
 * CSV summary) so identical invocations emit byte-identical reports. */
inline json report_to_json(const ScenarioReport& r) {
  json j;
  j["schema_version"] = 1;
  j["scenario"] = r.scenario;
  j["all_passed"] = r.all_passed();
  json cs = json::array();
  for (const CheckResult& c : r.checks) {
    json cj;
    cj["name"] = c.name;
    cj["verdict"] = c.verdict;
    if (!c.reason.empty()) cj["reason"] = c.reason;
    cj["gap"] = c.gap;
    if (!c.details.is_null()) cj["details"] = c.details;
    cs.push_back(cj);
  }
  j["checks"] = cs;
  // artifacts live next to the report file; store bare names so the report
  // does not depend on where the output directory happened to be
  json arts = json::array();
  for (const std::string& a : r.artifacts)
    arts.push_back(std::filesystem::path(a).filename().string());
  j["artifacts"] = arts;
  return j;
}

/* CSV rows "scenario,check,verdict,gap,seconds" (no header). */
inline std::vector<std::string> report_csv_rows(const ScenarioReport& r) {
  std::vector<std::string> rows;
  for (const CheckResult& c : r.checks) {
    char buf[256];
    std::snprintf(buf, sizeof(buf), "%s,%s,%s,%.6g,%.3f", r.scenario.c_str(),
                  c.name.c_str(), c.verdict.c_str(), c.gap, c.seconds);
    rows.push_back(buf);
  }
  return rows;
}

/* ---- runner ---- */

namespace rundetail {

constexpr double kBigGap = 1e30;

struct SetCompare {
  bool close = false;
  double gap = kBigGap;
};

inline SetCompare set_close(const Polyhedron& A, const Polyhedron& B, double tol,
                            double box_radius) {
  SetCompare r;
  if (A.is_empty() && B.is_empty()) {
    r.close = true;
    r.gap = 0.0;
    return r;
  }
  if (A.is_empty() != B.is_empty()) return r;
  // grow the truncation box to enclose both vertex sets, else far-away but
  // identical sets would truncate to nothing
  double reach = 0.0;
  for (const Polyhedron* P : {&A, &B})
    for (const Vec& v : P->vertices())
      for (int i = 0; i < v.dim(); ++i) reach = std::max(reach, std::fabs(v[i]));
  HausdorffResult h = hausdorff_distance(A, B, std::max(box_radius, 2.0 * reach + 1.0));
  if (h.status != HausdorffStatus::ok || !h.recession_match) return r;
  if (!h.value.is_finite()) return r;
  r.gap = h.value.value();
  r.close = r.gap <= tol;
  return r;
}

inline Integrand build_integrand(const Scenario& s,
                                 std::optional<Polyhedron> domain_override = std::nullopt) {
  if (s.kind != "integrand")
    throw std::logic_error("build_integrand: scenario kind is " + s.kind);
  std::optional<Polyhedron> dom = domain_override ? domain_override : s.declared_domain;
  if (!s.family_name.empty())
    return make_integrand(s.name, *s.measure, family_registry().at(s.family_name), dom);
  std::vector<double> nodes = s.measure->nodes();
  std::vector<ConvexFunction> fns = s.per_node_fns;
  auto fam = [nodes, fns](double t) {
    for (size_t i = 0; i < nodes.size(); ++i)
      if (std::fabs(nodes[i] - t) <= 1e-12 * (1.0 + std::fabs(nodes[i])))
        return fns[i];
    throw std::invalid_argument("per_node family: t is not a measure node");
  };
  return make_integrand(s.name, *s.measure, fam, dom);
}

inline NonconvexFamily build_nonconvex(const Scenario& s) {
  NonconvexFamily G;
  G.name = s.nonconvex_name;
  G.space = *s.measure;
  G.family = nonconvex_registry().at(s.nonconvex_name);
  G.window_lo = s.window_lo;
  G.window_hi = s.window_hi;
  return G;
}

inline std::vector<const Fact*> facts_named(const Scenario& s, const std::string& n) {
  std::vector<const Fact*> out;
  for (const Fact& f : s.facts)
    if (f.name == n) out.push_back(&f);
  return out;
}

inline QCId parse_qc(const std::string& w) {
  std::string core = w;
  if (core.rfind("QC(", 0) == 0 && core.back() == ')')
    core = core.substr(3, core.size() - 4);
  if (core == "i") return QCId::i;
  if (core == "ii") return QCId::ii;
  if (core == "iii") return QCId::iii;
  if (core == "iv") return QCId::iv;
  if (core == "v") return QCId::v;
  throw std::invalid_argument("unknown qualification id '" + w + "'");
}

inline AllocationStrategy parse_strategy(const std::string& s) {
  if (s == "uniform") return AllocationStrategy::uniform;
  if (s == "optimal") return AllocationStrategy::optimal;
  if (s == "grid") return AllocationStrategy::grid;
  throw std::invalid_argument("unknown allocation strategy '" + s + "'");
}

inline std::vector<int> parse_t0(const json& fact) {
  std::vector<int> t0;
  if (fact.contains("T0"))
    for (const auto& i : fact.at("T0")) t0.push_back(i.get<int>());
  return t0;
}

/* Evaluate a formula referenced by its stable id against the scenario data. */
inline FormulaResult eval_formula(const Scenario& s, const Integrand* F,
                                  const std::string& id, const Vec& x,
                                  const json& fact) {
  if (id == "hup") {
    if (s.pair.size() != 2)
      throw std::invalid_argument("formula 'hup' needs a pair scenario");
    return hup_sum(s.pair[0], s.pair[1], x, s.eta_grid);
  }
  if (!F) throw std::invalid_argument("formula '" + id + "' needs an integrand scenario");
  if (id == "thm4_1") {
    double eps = fact.value("eps", 0.0);
    AllocationStrategy st = parse_strategy(fact.value("strategy", "optimal"));
    return rhs_theorem41(*F, x, eps, st);
  }
  if (id == "cor4_1") return rhs_cor41(*F, x, parse_t0(fact));
  if (id == "cor4_1_eq3") return rhs_cor41_eq3(*F, x, parse_t0(fact));
  if (id == "cor4_1_eq4") return rhs_cor41_eq4(*F, x, parse_t0(fact), s.eta_grid);
  if (id == "cor4_2") return rhs_cor42(*F, x);
  if (id == "cor5_2") return rhs_cor52(*F, x, s.eta_grid);
  if (id == "qualfin_i") return rhs_qualfin(*F, x, parse_t0(fact), QualfinVariant::i);
  if (id == "qualfin_ii") return rhs_qualfin(*F, x, parse_t0(fact), QualfinVariant::ii);
  throw std::invalid_argument("unknown formula_id '" + id + "'");
}

inline std::vector<Vec> direction_fan(int dim, int count) {
  std::vector<Vec> d;
  if (dim == 1) {
    d.push_back(Vec(1.0));
    d.push_back(Vec(-1.0));
    return d;
  }
  for (int k = 0; k < count; ++k) {
    double a = 2.0 * M_PI * double(k) / double(count);
    d.push_back(Vec(std::cos(a), std::sin(a)));
  }
  return d;
}

/* max over a direction fan of support(A) - support(B); 0 when A subset B */
inline double subset_violation(const Polyhedron& A, const Polyhedron& B, int directions) {
  if (A.is_empty()) return 0.0;
  if (B.is_empty()) return kBigGap;
  double worst = 0.0;
  for (const Vec& d : direction_fan(A.dim(), directions)) {
    ExtReal sa = support(A, d), sb = support(B, d);
    if (sb.is_pos_inf()) continue;
    if (sa.is_pos_inf()) return kBigGap;
    worst = std::max(worst, sa.value() - sb.value());
  }
  return worst;
}

/* ---- individual checks ---- */

inline CheckResult check_node_subdiff(const Scenario& s, const Integrand& F,
                                      const RunOptions& opt) {
  CheckResult c;
  c.name = "node_subdiff_closed_form";
  auto facts = facts_named(s, "node_subdiff");
  if (facts.empty()) {
    c.verdict = "skipped";
    c.reason = "no node_subdiff facts declared";
    return c;
  }
  for (const Fact* f : facts) {
    double t = f->data.at("t").get<double>();
    Vec x = vec_from_json(f->data.at("x"));
    double eps = f->data.value("eps", 0.0);
    double tol = f->data.value("tol", opt.closed_tol);
    Polyhedron want = poly_from_json(f->data.at("set"));
    Polyhedron got = eps_subdifferential(F.family(t), x, eps).set;
    SetCompare sc = set_close(got, want, tol, opt.box_radius);
    c.gap = std::max(c.gap, sc.gap == kBigGap ? kBigGap : sc.gap);
    if (!sc.close) {
      c.verdict = "fail";
      c.reason = "node subdifferential mismatch at t=" + std::to_string(t);
      c.details = json{{"computed", to_json(got)}, {"declared", to_json(want)}};
      return c;
    }
  }
  return c;
}

inline CheckResult check_aumann_status(const Scenario& s, const Integrand& F,
                                       const RunOptions& opt) {
  CheckResult c;
  c.name = "aumann_status";
  auto facts = facts_named(s, "aumann_status");
  if (facts.empty()) {
    c.verdict = "skipped";
    c.reason = "no aumann_status facts declared";
    return c;
  }
  std::vector<ConvexFunction> raw = node_functions(F);
  for (const Fact* f : facts) {
    Vec x = vec_from_json(f->data.at("x"));
    double eps = f->data.value("eps", 0.0);
    std::string want = f->data.at("status").get<std::string>();
    std::vector<ConvexFunction> fns = raw;
    if (f->data.value("restricted", false)) {
      Polyhedron D = domain_of_integral(F).set;
      fns.clear();
      for (const ConvexFunction& g : raw) fns.push_back(restrict_fn(g, D));
    }
    std::vector<Polyhedron> sets;
    for (const ConvexFunction& g : fns)
      sets.push_back(eps_subdifferential(g, x, eps).set);
    SetWithStatus got = aumann_integral(sets, F.space, opt.directions);
    if (to_string(got.status) != want) {
      c.verdict = "fail";
      c.reason = "status '" + std::string(to_string(got.status)) + "' != declared '" +
                 want + "' at eps=" + std::to_string(eps);
      c.gap = kBigGap;
      c.details = json{{"computed", to_json(got)}};
      return c;
    }
    if (f->data.contains("set")) {
      Polyhedron want_set = poly_from_json(f->data.at("set"));
      double tol = f->data.value("tol", opt.tol);
      SetCompare sc = set_close(got.set, want_set, tol, opt.box_radius);
      c.gap = std::max(c.gap, sc.gap);
      if (!sc.close) {
        c.verdict = "fail";
        c.reason = "integral set differs from declared fact";
        c.details = json{{"computed", to_json(got)}, {"declared", to_json(want_set)}};
        return c;
      }
    }
  }
  return c;
}

inline CheckResult check_formula_vs_fact(const Scenario& s, const Integrand* F,
                                         const RunOptions& opt) {
  CheckResult c;
  c.name = "formula_vs_fact";
  auto facts = facts_named(s, "formula");
  if (facts.empty()) {
    c.verdict = "skipped";
    c.reason = "no formula facts declared";
    return c;
  }
  for (const Fact* f : facts) {
    const std::string id = f->data.at("formula_id").get<std::string>();
    Vec x = vec_from_json(f->data.at("x"));
    FormulaResult r = eval_formula(s, F, id, x, f->data);
    auto describe = [&](const std::string& what) {
      c.verdict = "fail";
      c.reason = id + ": " + what;
      c.details = json{{"computed", to_json(r)}, {"declared", f->data}};
    };
    if (f->data.value("refused", false)) {
      if (!r.refused) {
        describe("expected refusal, formula produced a set");
        c.gap = kBigGap;
        return c;
      }
      continue;
    }
    if (r.refused) {
      describe("unexpected refusal: " + r.refusal_reason);
      c.gap = kBigGap;
      return c;
    }
    if (f->data.contains("set")) {
      Polyhedron want = poly_from_json(f->data.at("set"));
      double tol = f->data.value("tol", opt.tol);
      SetCompare sc = set_close(r.set.set, want, tol, opt.box_radius);
      c.gap = std::max(c.gap, sc.gap);
      if (!sc.close) {
        describe("set differs from declared fact beyond tol");
        return c;
      }
    }
    if (f->data.contains("status") &&
        f->data.at("status").get<std::string>() != to_string(r.set.status)) {
      describe("status '" + std::string(to_string(r.set.status)) + "' != declared");
      c.gap = kBigGap;
      return c;
    }
    if (f->data.contains("exact") && f->data.at("exact").get<bool>() != formula_exact(r)) {
      describe("exactness flag differs from declared");
      c.gap = kBigGap;
      return c;
    }
  }
  return c;
}

inline CheckResult check_thm41_subset_oracle(const Scenario& s, const Integrand& F,
                                             const RunOptions& opt) {
  CheckResult c;
  c.name = "thm41_subset_oracle";
  std::vector<double> grid = s.eps_grid.empty() ? std::vector<double>{0.5} : s.eps_grid;
  for (const Vec& x : s.query_points)
    for (double eps : grid) {
      FormulaResult r = rhs_theorem41(F, x, eps, AllocationStrategy::optimal);
      if (r.refused) continue;
      Polyhedron O = oracle_eps_subdiff(F, x, eps, s.oracle_grid);
      double v = subset_violation(r.set.set, O, opt.directions);
      c.gap = std::max(c.gap, v);
      if (v > opt.tol) {
        c.verdict = "fail";
        char buf[128];
        std::snprintf(buf, sizeof(buf), "union exceeds the definitional set at eps=%g",
                      eps);
        c.reason = buf;
        c.details = json{{"computed", to_json(r.set)}, {"oracle", to_json(O)},
                         {"x", to_json(x)}};
        return c;
      }
    }
  return c;
}

inline CheckResult check_formula_consistency(const Scenario& s, const Integrand& F,
                                             const RunOptions& opt) {
  CheckResult c;
  c.name = "formula_consistency";
  for (const Vec& x : s.query_points) {
    FormulaResult a = rhs_cor42(F, x);
    FormulaResult b = rhs_cor52(F, x, s.eta_grid);
    FormulaResult d = rhs_theorem41(F, x, 0.0, AllocationStrategy::optimal);
    if (a.refused || b.refused || d.refused) {
      c.verdict = "skipped";
      c.reason = "a formula refused its hypotheses at this point";
      return c;
    }
    for (const auto& [P, Q] : {std::pair(&a, &b), std::pair(&a, &d)}) {
      SetCompare sc = set_close(P->set.set, Q->set.set, opt.tol, opt.box_radius);
      c.gap = std::max(c.gap, sc.gap);
      if (!sc.close) {
        c.verdict = "fail";
        c.reason = P->formula_id + " and " + Q->formula_id + " disagree beyond tol";
        c.details = json{{"first", to_json(*P)}, {"second", to_json(*Q)},
                         {"x", to_json(x)}};
        return c;
      }
    }
  }
  return c;
}

inline CheckResult check_declared_domain(const Scenario& s, const Integrand& F) {
  CheckResult c;
  c.name = "declared_domain_confirmed";
  if (!s.declared_domain) {
    c.verdict = "skipped";
    c.reason = "scenario declares no domain";
    return c;
  }
  IntegralDomain D = domain_of_integral(F);
  if (!D.probe_confirmed) {
    c.verdict = "fail";
    c.reason = "finiteness probes contradict the declared domain";
    c.gap = kBigGap;
    c.details = json{{"declared", to_json(D.set)}};
  }
  return c;
}

inline CheckResult check_naive_domain_flag(const Scenario& s, const Integrand& F,
                                           const RunOptions& opt) {
  CheckResult c;
  c.name = "naive_domain_flag";
  auto facts = facts_named(s, "naive_flag");
  if (facts.empty()) {
    c.verdict = "skipped";
    c.reason = "no naive_flag facts declared";
    return c;
  }
  Integrand naive = build_integrand(s, full_space(s.dim));
  for (const Fact* f : facts) {
    Vec x = vec_from_json(f->data.at("x"));
    FormulaResult good = rhs_cor42(F, x);
    FormulaResult bad = rhs_cor42(naive, x);
    SetCompare sc = set_close(good.set.set, bad.set.set, opt.tol, opt.box_radius);
    if (sc.close) {
      c.verdict = "fail";
      c.reason = "wrong declared domain went undetected (sets agree)";
      c.details = json{{"declared_domain_run", to_json(good)},
                       {"naive_run", to_json(bad)}};
      return c;
    }
    c.gap = std::max(c.gap, sc.gap == kBigGap ? kBigGap : sc.gap);
  }
  return c;
}

inline CheckResult check_strategy_dominance(const Scenario& s, const Integrand& F,
                                            const RunOptions& opt) {
  CheckResult c;
  c.name = "strategy_dominance";
  std::vector<double> grid = s.eps_grid.empty() ? std::vector<double>{0.5} : s.eps_grid;
  for (const Vec& x : s.query_points)
    for (double eps : grid) {
      FormulaResult uni = rhs_theorem41(F, x, eps, AllocationStrategy::uniform);
      FormulaResult op = rhs_theorem41(F, x, eps, AllocationStrategy::optimal);
      if (uni.refused || op.refused) continue;
      double v = subset_violation(uni.set.set, op.set.set, opt.directions);
      c.gap = std::max(c.gap, v);
      if (v > 1e-9) {
        c.verdict = "fail";
        c.reason = "optimal allocation lost support against uniform";
        c.details = json{{"uniform", to_json(uni.set)}, {"optimal", to_json(op.set)},
                         {"x", to_json(x)}, {"eps", eps}};
        return c;
      }
    }
  return c;
}

inline CheckResult check_hup_iterates(const Scenario& s, const RunOptions& opt) {
  CheckResult c;
  c.name = "hup_iterates";
  if (s.pair.size() != 2) {
    c.verdict = "skipped";
    c.reason = "not a pair scenario";
    return c;
  }
  FormulaResult r = hup_sum(s.pair[0], s.pair[1], s.query_points.at(0), s.eta_grid);
  for (const Fact* f : facts_named(s, "iterate_support")) {
    Vec d = vec_from_json(f->data.at("direction"));
    std::vector<double> want = f->data.at("values").get<std::vector<double>>();
    double tol = f->data.value("tol", opt.closed_tol);
    size_t n = std::min(want.size(), r.iterates.size());
    if (n < want.size()) {
      c.verdict = "fail";
      c.reason = "fewer iterates than declared support values";
      c.gap = kBigGap;
      return c;
    }
    for (size_t k = 0; k < n; ++k) {
      ExtReal sv = support(r.iterates[k], d);
      if (!sv.is_finite()) {
        c.verdict = "fail";
        c.reason = "iterate support not finite at step " + std::to_string(k);
        c.gap = kBigGap;
        return c;
      }
      double g = std::fabs(sv.value() - want[k]) / (1.0 + std::fabs(want[k]));
      c.gap = std::max(c.gap, g);
      if (g > tol) {
        c.verdict = "fail";
        c.reason = "iterate support off the closed form at step " + std::to_string(k);
        c.details = json{{"computed", sv.value()}, {"declared", want[k]}};
        return c;
      }
    }
  }
  for (const Fact* f : facts_named(s, "hup_expect")) {
    bool want_empty = f->data.value("empty", false);
    bool want_escaped = f->data.value("escaped", false);
    if (want_empty != r.set.set.is_empty() || want_escaped != r.escaped) {
      c.verdict = "fail";
      c.reason = "final verdict differs from declared expectation";
      c.gap = kBigGap;
      c.details = json{{"computed", to_json(r)}};
      return c;
    }
  }
  return c;
}

inline CheckResult check_modulus_threshold(const Scenario& s, const RunOptions& opt) {
  CheckResult c;
  c.name = "modulus_threshold";
  auto facts = facts_named(s, "modulus");
  if (s.kind != "modulus" || facts.empty()) {
    c.verdict = "skipped";
    c.reason = "no modulus facts declared";
    return c;
  }
  NonconvexFamily G = build_nonconvex(s);
  for (const Fact* f : facts) {
    double x = f->data.at("x").get<double>();
    double threshold = f->data.at("threshold").get<double>();
    double tol = f->data.value("tol", opt.closed_tol);
    for (double eps : s.eps_grid) {
      ModulusReport m = modulus_penalty_check(G, x, eps);
      bool above = eps >= threshold - 1e-12;
      if (above) {
        if (m.skipped || !m.passes) {
          c.verdict = "fail";
          c.reason = "bound should hold at eps=" + std::to_string(eps);
          c.gap = kBigGap;
          return c;
        }
        c.gap = std::max(c.gap, std::fabs(m.modulus_integral - threshold));
        if (std::fabs(m.modulus_integral - threshold) > tol) {
          c.verdict = "fail";
          c.reason = "modulus integral misses the declared threshold";
          return c;
        }
      } else if (!m.skipped) {
        c.verdict = "fail";
        c.reason = "definitional set should be empty below the threshold (eps=" +
                   std::to_string(eps) + ")";
        c.gap = kBigGap;
        c.details = json{{"oracle_set", to_json(m.oracle_set)}};
        return c;
      }
    }
  }
  return c;
}

inline CheckResult check_qualification_matrix(const Scenario& s, const Integrand& F) {
  CheckResult c;
  c.name = "qualification_matrix";
  auto facts = facts_named(s, "qualification");
  if (facts.empty()) {
    c.verdict = "skipped";
    c.reason = "no qualification facts declared";
    return c;
  }
  for (const Fact* f : facts) {
    QCId which = parse_qc(f->data.at("which").get<std::string>());
    int node = f->data.at("node").get<int>();
    bool want = f->data.at("holds").get<bool>();
    Vec x = f->data.contains("x") ? vec_from_json(f->data.at("x")) : s.query_points.at(0);
    QualificationReport q = check_qualification(F, x, node, full_space(s.dim), which);
    if (q.holds != want) {
      c.verdict = "fail";
      c.reason = q.condition + " at node " + std::to_string(node) + ": got " +
                 (q.holds ? "holds" : "fails") + ", declared " +
                 (want ? "holds" : "fails");
      c.gap = kBigGap;
      c.details = to_json(q);
      return c;
    }
  }
  return c;
}

inline CheckResult check_conjugate_interchange(const Scenario& s, const Integrand& F) {
  CheckResult c;
  c.name = "conjugate_interchange";
  auto facts = facts_named(s, "interchange");
  if (facts.empty()) {
    c.verdict = "skipped";
    c.reason = "no interchange facts declared";
    return c;
  }
  for (const Fact* f : facts) {
    std::vector<Vec> v;
    for (const auto& p : f->data.at("vstar")) v.push_back(vec_from_json(p));
    InterchangeReport r = verify_conjugate_interchange(F, v);
    c.gap = std::max(c.gap, r.gap);
    if (!r.equal) {
      c.verdict = "fail";
      c.reason = "node-wise conjugation disagrees with the direct conjugate";
      c.details = json{{"lhs", to_json(r.lhs)}, {"rhs", to_json(r.rhs)}};
      return c;
    }
  }
  return c;
}

inline CheckResult check_attainment(const Scenario& s, const Integrand* F) {
  CheckResult c;
  c.name = "attainment";
  auto facts = facts_named(s, "attainment");
  if (facts.empty()) {
    c.verdict = "skipped";
    c.reason = "no attainment facts declared";
    return c;
  }
  std::vector<ConvexFunction> fns;
  if (F) fns = node_functions(*F);
  for (const Fact* f : facts) {
    ConvexFunction g = f->data.contains("fn")
                           ? fn_from_json(f->data.at("fn"))
                           : fns.at(size_t(f->data.at("node").get<int>()));
    Polyhedron L = poly_from_json(f->data.at("L"));
    Vec xstar = vec_from_json(f->data.at("xstar"));
    InfConvReport r = verify_inf_convolution_attainment(g, L, xstar);
    bool want_skip = f->data.value("skipped", false);
    if (r.skipped != want_skip ||
        (!want_skip && r.attained != f->data.at("attained").get<bool>())) {
      c.verdict = "fail";
      c.reason = "attainment verdict differs from declared";
      c.gap = kBigGap;
      c.details = json{{"note", r.note}, {"skipped", r.skipped},
                       {"attained", r.attained}};
      return c;
    }
  }
  return c;
}

inline void emit_artifacts(const Scenario& s, const Integrand* F, const RunOptions& opt,
                           ScenarioReport& rep) {
  if (opt.out_dir.empty()) return;
  std::filesystem::create_directories(opt.out_dir);
  std::string path = opt.out_dir + "/" + s.name + ".svg";
  std::vector<PlotSet> sets;
  char buf[64];
  if (s.kind == "integrand" && F) {
    std::vector<double> grid = s.eps_grid.empty() ? std::vector<double>{0.5} : s.eps_grid;
    if (grid.size() > 4) grid.resize(4);
    for (double eps : grid) {
      FormulaResult r =
          rhs_theorem41(*F, s.query_points.at(0), eps, AllocationStrategy::optimal);
      std::snprintf(buf, sizeof(buf), "eps=%g", eps);
      sets.push_back({buf, r.set.set});
    }
  } else if (s.kind == "pair") {
    FormulaResult r = hup_sum(s.pair[0], s.pair[1], s.query_points.at(0), s.eta_grid);
    size_t n = std::min<size_t>(r.iterates.size(), 4);
    for (size_t k = 0; k < n; ++k) {
      std::snprintf(buf, sizeof(buf), "step %zu", k);
      sets.push_back({buf, r.iterates[k]});
    }
    sets.push_back({"limit", r.set.set});
  } else if (s.kind == "modulus") {
    NonconvexFamily G = build_nonconvex(s);
    double eps = s.eps_grid.empty() ? 0.5 : s.eps_grid.back();
    ModulusReport m = modulus_penalty_check(G, s.query_points.at(0)[0], eps);
    std::snprintf(buf, sizeof(buf), "definitional set, eps=%g", eps);
    sets.push_back({buf, m.oracle_set});
  }
  emit_plot(s.dim, sets, path);
  rep.artifacts.push_back(path);
}

} // namespace rundetail

inline ScenarioReport run_scenario(const Scenario& s, const RunOptions& opt = {}) {
  using namespace rundetail;
  ScenarioReport rep;
  rep.scenario = s.name;

  std::optional<Integrand> F;
  if (s.kind == "integrand") F = build_integrand(s);
  const Integrand* Fp = F ? &*F : nullptr;

  for (const std::string& name : s.checks) {
    auto t0 = std::chrono::steady_clock::now();
    CheckResult c;
    try {
      if (name == "node_subdiff_closed_form")
        c = check_node_subdiff(s, *F, opt);
      else if (name == "aumann_status")
        c = check_aumann_status(s, *F, opt);
      else if (name == "formula_vs_fact")
        c = check_formula_vs_fact(s, Fp, opt);
      else if (name == "thm41_subset_oracle")
        c = check_thm41_subset_oracle(s, *F, opt);
      else if (name == "formula_consistency")
        c = check_formula_consistency(s, *F, opt);
      else if (name == "declared_domain_confirmed")
        c = check_declared_domain(s, *F);
      else if (name == "naive_domain_flag")
        c = check_naive_domain_flag(s, *F, opt);
      else if (name == "strategy_dominance")
        c = check_strategy_dominance(s, *F, opt);
      else if (name == "hup_iterates")
        c = check_hup_iterates(s, opt);
      else if (name == "modulus_threshold")
        c = check_modulus_threshold(s, opt);
      else if (name == "qualification_matrix")
        c = check_qualification_matrix(s, *F);
      else if (name == "conjugate_interchange")
        c = check_conjugate_interchange(s, *F);
      else if (name == "attainment")
        c = check_attainment(s, Fp);
      else
        throw std::logic_error("unreachable: unknown check " + name);
    } catch (const std::exception& e) {
      c.name = name;
      c.verdict = "fail";
      c.reason = std::string("exception: ") + e.what();
      c.gap = kBigGap;
    }
    c.seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    rep.checks.push_back(std::move(c));
  }

  try {
    emit_artifacts(s, Fp, opt, rep);
  } catch (const std::exception& e) {
    CheckResult c;
    c.name = "artifacts";
    c.verdict = "fail";
    c.reason = std::string("exception: ") + e.what();
    rep.checks.push_back(std::move(c));
  }
  return rep;
}

} // namespace subcalc
