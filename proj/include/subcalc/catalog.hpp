#pragma once

#include <cmath>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "subcalc/scenario.hpp"

/* Builtin scenario catalog.  Every entry is produced as plain schema-1 JSON
 * (the same format users can author by hand) and validates against the
 * schema.  The collection contains the two counterexample families whose
 * qualification-free characterization is the point of the library, plus
 * qualified families where every formula collapses to the same set. */

namespace subcalc {

namespace catdetail {

inline json fact(const std::string& name, const std::string& provenance,
                 const std::string& label = "") {
  json f;
  f["name"] = name;
  f["provenance"] = provenance;
  if (!label.empty()) f["label"] = label;
  return f;
}

inline json full_line_json() { return to_json(full_space(1)); }

inline json point_json(double x) { return to_json(point_poly(Vec(x))); }

inline json interval_json(double lo, double hi) {
  return to_json(interval_poly(ExtReal(lo), ExtReal(hi)));
}

inline json scenario_example_4_1() {
  json j;
  j["schema_version"] = 1;
  j["name"] = "example_4_1";
  j["kind"] = "integrand";
  j["description"] =
      "affine slopes diverging as t->0 with box domains shrinking to a point; "
      "node-wise subdifferential integrals admit no integrable selection while "
      "the domain-restricted characterization returns the whole line";
  j["dim"] = 1;
  j["measure"] = json{{"kind", "interval"}, {"a", 0.0}, {"b", 1.0},
                      {"density", "lebesgue"},
                      {"singularity", json{{"at", "a"}, {"exponent", 0.5}}}};
  j["family"] = json{{"registry", "shrinking_box"}};
  j["declared_domain"] = point_json(0.0);
  j["query_points"] = json::array({json::array({0.0})});
  j["eps_grid"] = json::array({0.1, 0.5, 0.9});
  json facts = json::array();
  for (double t : {0.01, 0.1, 0.5, 1.0})
    for (double e : {0.0, 0.1, 0.5, 0.9}) {
      json f = fact("node_subdiff", "literature", "example_4_1");
      f["t"] = t;
      f["x"] = json::array({0.0});
      f["eps"] = e;
      f["tol"] = 1e-9;
      double base = 1.0 / t + std::pow(t, -1.5);
      f["set"] = interval_json(base - e / t, base + e / t);
      facts.push_back(f);
    }
  for (double e : {0.1, 0.5, 0.9}) {
    json f = fact("aumann_status", "literature", "example_4_1");
    f["x"] = json::array({0.0});
    f["eps"] = e;
    f["status"] = "empty-no-integrable-selection";
    facts.push_back(f);
  }
  {
    json f = fact("formula", "literature", "example_4_1");
    f["formula_id"] = "thm4_1";
    f["x"] = json::array({0.0});
    f["eps"] = 0.5;
    f["strategy"] = "optimal";
    f["set"] = full_line_json();
    f["status"] = "unbounded-direction";
    f["exact"] = true;
    facts.push_back(f);
  }
  j["facts"] = facts;
  j["checks"] = json::array({"node_subdiff_closed_form", "aumann_status",
                             "formula_vs_fact", "thm41_subset_oracle",
                             "declared_domain_confirmed"});
  return j;
}

inline json scenario_quadratic_over_t() {
  json j;
  j["schema_version"] = 1;
  j["name"] = "quadratic_over_t";
  j["kind"] = "integrand";
  j["description"] =
      "x^2/t over (0,1]: every node is finite everywhere yet the integral is "
      "finite only at 0, where the node-wise integral {0} differs from the "
      "full subdifferential R";
  j["dim"] = 1;
  j["measure"] = json{{"kind", "interval"}, {"a", 0.0}, {"b", 1.0},
                      {"density", "lebesgue"},
                      {"singularity", json{{"at", "a"}, {"exponent", 1.0}}}};
  j["family"] = json{{"registry", "inverse_t_quadratic"}};
  j["declared_domain"] = point_json(0.0);
  j["query_points"] = json::array({json::array({0.0})});
  j["eps_grid"] = json::array({0.5});
  json facts = json::array();
  for (double t : {0.25, 1.0}) {
    json f = fact("node_subdiff", "literature", "quadratic_over_t");
    f["t"] = t;
    f["x"] = json::array({0.0});
    f["eps"] = 0.0;
    f["tol"] = 1e-9;
    f["set"] = point_json(0.0);
    facts.push_back(f);
  }
  {
    json f = fact("aumann_status", "derived");
    f["x"] = json::array({0.0});
    f["eps"] = 0.0;
    f["status"] = "nonempty-exact";
    f["set"] = point_json(0.0);
    f["tol"] = 1e-9;
    facts.push_back(f);
  }
  for (const char* id : {"cor4_2", "cor5_2"}) {
    json f = fact("formula", "literature", "quadratic_over_t");
    f["formula_id"] = id;
    f["x"] = json::array({0.0});
    f["set"] = full_line_json();
    f["status"] = "unbounded-direction";
    facts.push_back(f);
  }
  {
    json f = fact("naive_flag", "derived");
    f["x"] = json::array({0.0});
    facts.push_back(f);
  }
  j["facts"] = facts;
  j["checks"] = json::array({"node_subdiff_closed_form", "aumann_status",
                             "formula_vs_fact", "naive_domain_flag",
                             "declared_domain_confirmed", "thm41_subset_oracle"});
  return j;
}

inline json scenario_qualified_abs_family() {
  json j;
  j["schema_version"] = 1;
  j["name"] = "qualified_abs_family";
  j["kind"] = "integrand";
  j["description"] =
      "f_t = |x - t| over t in [0,1]: fully qualified family whose integral "
      "has derivative 2x - 1; all formulas agree";
  j["dim"] = 1;
  j["measure"] = json{{"kind", "interval"}, {"a", 0.0}, {"b", 1.0},
                      {"density", "lebesgue"}, {"node_count", 128}};
  j["family"] = json{{"registry", "abs_shift"}};
  j["query_points"] = json::array({json::array({0.0}), json::array({0.25}),
                                   json::array({0.5}), json::array({1.0})});
  j["eps_grid"] = json::array({0.5});
  json facts = json::array();
  for (double x : {0.0, 0.25, 0.5, 1.0}) {
    json f = fact("formula", "derived");
    f["formula_id"] = "cor4_2";
    f["x"] = json::array({x});
    f["set"] = point_json(2.0 * x - 1.0);
    f["tol"] = 1e-9;
    facts.push_back(f);
  }
  {
    json f = fact("qualification", "derived");
    f["which"] = "QC(iii)";
    f["node"] = 60;
    f["holds"] = true;
    facts.push_back(f);
  }
  j["facts"] = facts;
  j["checks"] = json::array({"formula_vs_fact", "formula_consistency",
                             "thm41_subset_oracle", "qualification_matrix"});
  return j;
}

inline json scenario_quadratic_family() {
  json j;
  j["schema_version"] = 1;
  j["name"] = "quadratic_family";
  j["kind"] = "integrand";
  j["description"] =
      "f_t = (t+1) x^2 over t in [0,1]: smooth qualified family, integral "
      "derivative 3x; budget sequences shrink to the gradient";
  j["dim"] = 1;
  j["measure"] = json{{"kind", "interval"}, {"a", 0.0}, {"b", 1.0},
                      {"density", "lebesgue"}, {"node_count", 128}};
  j["family"] = json{{"registry", "scaled_quadratic"}};
  j["query_points"] = json::array({json::array({0.5}), json::array({-1.0})});
  j["eps_grid"] = json::array({0.2, 0.8});
  json facts = json::array();
  for (double x : {0.5, -1.0}) {
    json f = fact("formula", "derived");
    f["formula_id"] = "cor4_2";
    f["x"] = json::array({x});
    f["set"] = point_json(3.0 * x);
    f["tol"] = 1e-9;
    facts.push_back(f);
  }
  {
    json f = fact("qualification", "derived");
    f["which"] = "QC(iii)";
    f["node"] = 40;
    f["holds"] = true;
    facts.push_back(f);
  }
  j["facts"] = facts;
  j["checks"] = json::array({"formula_vs_fact", "formula_consistency",
                             "thm41_subset_oracle", "strategy_dominance",
                             "qualification_matrix"});
  return j;
}

inline json scenario_two_node_mixed() {
  const double best = 1.0 + std::sqrt(2.0);
  json j;
  j["schema_version"] = 1;
  j["name"] = "two_node_mixed";
  j["kind"] = "integrand";
  j["description"] =
      "|x| + x^2 as a two-node discrete integral: exercises the finite-sum "
      "intersection formulas, allocation strategies, and attainment checks";
  j["dim"] = 1;
  j["measure"] = json{{"kind", "finite_discrete"},
                      {"nodes", json::array({1.0, 2.0})},
                      {"weights", json::array({1.0, 1.0})}};
  j["family"] = json{
      {"per_node",
       json::array({json{{"kind", "abs"}, {"shift", 0.0}},
                    json{{"kind", "quadratic1d"}, {"q", 2.0}, {"c", 0.0}, {"d", 0.0}}})}};
  j["query_points"] = json::array({json::array({0.0})});
  j["eps_grid"] = json::array({0.1, 0.5, 0.9});
  json facts = json::array();
  auto formula = [&](const char* id, json extra) {
    json f = fact("formula", "derived");
    f["formula_id"] = id;
    f["x"] = json::array({0.0});
    f.update(extra);
    facts.push_back(f);
  };
  formula("thm4_1", json{{"eps", 0.5}, {"strategy", "uniform"},
                         {"set", interval_json(-2.0, 2.0)}, {"tol", 1e-9},
                         {"exact", true}});
  formula("thm4_1", json{{"eps", 0.5}, {"strategy", "optimal"},
                         {"set", interval_json(-best, best)}, {"tol", 1e-9}});
  formula("cor4_1_eq4", json{{"T0", json::array({0, 1})},
                             {"set", interval_json(-1.0, 1.0)}, {"tol", 1e-9}});
  formula("qualfin_i", json{{"T0", json::array({0, 1})},
                            {"set", interval_json(-1.0, 1.0)}, {"tol", 1e-9}});
  formula("qualfin_ii", json{{"T0", json::array({0})},
                             {"set", interval_json(-1.0, 1.0)}, {"tol", 1e-3}});
  formula("cor5_2", json{{"set", interval_json(-1.0, 1.0)}, {"tol", 1e-3}});
  formula("cor4_2", json{{"set", interval_json(-1.0, 1.0)}, {"tol", 1e-9}});
  {
    json f = fact("interchange", "derived");
    f["vstar"] = json::array({json::array({3.0}), json::array({0.5})});
    facts.push_back(f);
  }
  {
    json f = fact("attainment", "derived");
    f["node"] = 0;
    f["L"] = point_json(0.0);
    f["xstar"] = json::array({0.5});
    f["attained"] = true;
    facts.push_back(f);
  }
  {
    json f = fact("qualification", "derived");
    f["which"] = "QC(i)";
    f["node"] = 0;
    f["holds"] = true;
    facts.push_back(f);
  }
  j["facts"] = facts;
  j["checks"] = json::array({"formula_vs_fact", "thm41_subset_oracle",
                             "strategy_dominance", "formula_consistency",
                             "conjugate_interchange", "attainment",
                             "qualification_matrix"});
  return j;
}

inline json scenario_qualified_2d() {
  json j;
  j["schema_version"] = 1;
  j["name"] = "qualified_2d";
  j["kind"] = "integrand";
  j["description"] =
      "(x^2 + y^2) + (|x| + |y|) as a two-node discrete integral on R^2; the "
      "query point keeps both coordinates off the kinks so every formula "
      "returns the gradient sum";
  j["dim"] = 2;
  j["measure"] = json{{"kind", "finite_discrete"},
                      {"nodes", json::array({1.0, 2.0})},
                      {"weights", json::array({1.0, 1.0})}};
  json pl = json{{"kind", "pl_max"},
                 {"pieces", json::array({
                                json{{"a", json::array({1.0, 1.0})}, {"b", 0.0}},
                                json{{"a", json::array({1.0, -1.0})}, {"b", 0.0}},
                                json{{"a", json::array({-1.0, 1.0})}, {"b", 0.0}},
                                json{{"a", json::array({-1.0, -1.0})}, {"b", 0.0}}})}};
  json quad = json{{"kind", "quadratic2d"}, {"xx", 2.0}, {"xy", 0.0}, {"yy", 2.0},
                   {"c", json::array({0.0, 0.0})}, {"d", 0.0}};
  j["family"] = json{{"per_node", json::array({quad, pl})}};
  j["query_points"] = json::array({json::array({0.3, -0.2})});
  j["eps_grid"] = json::array({0.25, 1.0});
  json facts = json::array();
  json target = to_json(point_poly(Vec(1.6, -1.4)));
  for (const char* id : {"cor4_2", "cor4_1_eq4"}) {
    json f = fact("formula", "derived");
    f["formula_id"] = id;
    f["x"] = json::array({0.3, -0.2});
    if (std::string(id) == "cor4_1_eq4") f["T0"] = json::array({0, 1});
    f["set"] = target;
    f["tol"] = 1e-6;
    facts.push_back(f);
  }
  j["facts"] = facts;
  j["checks"] = json::array({"formula_vs_fact", "formula_consistency",
                             "thm41_subset_oracle", "strategy_dominance"});
  return j;
}

inline json scenario_hup_negsqrt() {
  json j;
  j["schema_version"] = 1;
  j["name"] = "hup_negsqrt";
  j["kind"] = "pair";
  j["description"] =
      "indicator of [0,inf) plus -sqrt(x): the two-summand intersection "
      "formula's iterates are (-inf, -1/(4 eps_n)] and drift to emptiness, "
      "certified by box escape";
  j["dim"] = 1;
  j["pair"] = json::array(
      {json{{"kind", "indicator"},
            {"set", to_json(make_polyhedron(1, {Vec(0.0)}, {Vec(1.0)}))}},
       json{{"kind", "custom1d"}, {"name", "neg_sqrt"}}});
  j["query_points"] = json::array({json::array({0.0})});
  json facts = json::array();
  {
    json f = fact("iterate_support", "derived");
    f["direction"] = json::array({1.0});
    json vals = json::array();
    for (int k = 0; k <= 12; ++k) vals.push_back(-0.25 * std::pow(2.0, k));
    f["values"] = vals;
    f["tol"] = 1e-6;
    facts.push_back(f);
  }
  {
    json f = fact("hup_expect", "literature", "hup");
    f["empty"] = true;
    f["escaped"] = true;
    facts.push_back(f);
  }
  j["facts"] = facts;
  j["checks"] = json::array({"hup_iterates"});
  return j;
}

inline json scenario_modulus_two_node() {
  json j;
  j["schema_version"] = 1;
  j["name"] = "modulus_two_node";
  j["kind"] = "modulus";
  j["description"] =
      "nonconvex tent of height 1/4 on one node, zero on the other: the "
      "integrated convexity modulus bound holds exactly from eps = 0.25 "
      "upward and the definitional set is empty below";
  j["dim"] = 1;
  j["nonconvex"] = "tent_bump";
  j["measure"] = json{{"kind", "finite_discrete"},
                      {"nodes", json::array({1.0, 2.0})},
                      {"weights", json::array({1.0, 1.0})}};
  j["window"] = json::array({0.0, 2.0});
  j["query_points"] = json::array({json::array({1.0})});
  j["eps_grid"] = json::array({0.1, 0.2, 0.25, 0.4});
  json facts = json::array();
  {
    json f = fact("modulus", "derived");
    f["x"] = 1.0;
    f["threshold"] = 0.25;
    f["tol"] = 1e-6;
    facts.push_back(f);
  }
  j["facts"] = facts;
  j["checks"] = json::array({"modulus_threshold"});
  return j;
}

} // namespace catdetail

inline const std::map<std::string, json>& builtin_scenarios() {
  static const std::map<std::string, json> cat = [] {
    std::map<std::string, json> m;
    for (const json& j :
         {catdetail::scenario_example_4_1(), catdetail::scenario_quadratic_over_t(),
          catdetail::scenario_qualified_abs_family(),
          catdetail::scenario_quadratic_family(), catdetail::scenario_two_node_mixed(),
          catdetail::scenario_qualified_2d(), catdetail::scenario_hup_negsqrt(),
          catdetail::scenario_modulus_two_node()})
      m[j.at("name").get<std::string>()] = j;
    return m;
  }();
  return cat;
}

inline std::vector<std::string> catalog_names() {
  std::vector<std::string> names;
  for (const auto& [n, _] : builtin_scenarios()) names.push_back(n);
  return names; // map iteration: already sorted
}

inline json builtin_scenario_json(const std::string& name) {
  auto it = builtin_scenarios().find(name);
  if (it == builtin_scenarios().end())
    throw std::out_of_range("unknown builtin scenario '" + name + "'");
  return it->second;
}

} // namespace subcalc
