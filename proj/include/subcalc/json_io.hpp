#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "json.hpp"

#include "subcalc/formulas.hpp"

/* JSON (de)serialization for the geometric and analytic types, plus the
 * versioned scenario schema.  All emitters use ordered_json with fixed
 * insertion order so that identical inputs produce byte-identical files. */

namespace subcalc {

using json = nlohmann::ordered_json;

/* ---- extended reals ---- */

inline json to_json(ExtReal v) {
  if (v.is_pos_inf()) return json("inf");
  if (v.is_neg_inf()) return json("-inf");
  return json(v.value());
}

inline ExtReal extreal_from_json(const json& j) {
  if (j.is_string()) {
    const std::string s = j.get<std::string>();
    if (s == "inf") return ExtReal::pos_inf();
    if (s == "-inf") return ExtReal::neg_inf();
    throw std::invalid_argument("extreal_from_json: unknown token '" + s + "'");
  }
  if (!j.is_number()) throw std::invalid_argument("extreal_from_json: expected number");
  return ExtReal(j.get<double>());
}

/* ---- vectors and polyhedra ---- */

inline json to_json(const Vec& v) {
  json a = json::array();
  for (int i = 0; i < v.dim(); ++i) a.push_back(v[i]);
  return a;
}

inline Vec vec_from_json(const json& j) {
  if (!j.is_array() || j.empty() || j.size() > 2)
    throw std::invalid_argument("vec_from_json: expected array of 1 or 2 numbers");
  for (const auto& c : j)
    if (!c.is_number()) throw std::invalid_argument("vec_from_json: non-numeric entry");
  if (j.size() == 1) return Vec(j[0].get<double>());
  return Vec(j[0].get<double>(), j[1].get<double>());
}

inline json to_json(const Polyhedron& P) {
  json j;
  j["dim"] = P.dim();
  j["empty"] = P.is_empty();
  json vs = json::array(), rs = json::array();
  if (!P.is_empty()) {
    for (const Vec& v : P.vertices()) vs.push_back(to_json(v));
    for (const Vec& r : P.rays()) rs.push_back(to_json(r));
  }
  j["vertices"] = vs;
  j["rays"] = rs;
  return j;
}

inline Polyhedron poly_from_json(const json& j) {
  if (!j.is_object() || !j.contains("dim"))
    throw std::invalid_argument("poly_from_json: expected object with 'dim'");
  const int dim = j.at("dim").get<int>();
  if (dim != 1 && dim != 2)
    throw std::invalid_argument("poly_from_json: dim must be 1 or 2");
  if (j.value("empty", false)) return empty_poly(dim);
  std::vector<Vec> vs, rs;
  for (const auto& v : j.value("vertices", json::array())) vs.push_back(vec_from_json(v));
  for (const auto& r : j.value("rays", json::array())) rs.push_back(vec_from_json(r));
  if (vs.empty()) {
    if (rs.empty()) return empty_poly(dim);
    throw std::invalid_argument("poly_from_json: rays without vertices");
  }
  return make_polyhedron(dim, vs, rs);
}

/* ---- convex functions as expression trees ---- */

inline json to_json(const ConvexFunction& f);

namespace detail {

struct FnToJson {
  int dim;
  json operator()(const fn::Affine& n) const {
    return json{{"kind", "affine"}, {"a", subcalc::to_json(n.a)}, {"b", n.b}};
  }
  json operator()(const fn::PiecewiseLinearMax& n) const {
    json ps = json::array();
    for (const auto& [a, b] : n.pieces)
      ps.push_back(json{{"a", subcalc::to_json(a)}, {"b", b}});
    return json{{"kind", "pl_max"}, {"pieces", ps}};
  }
  json operator()(const fn::Quadratic& n) const {
    if (dim == 1)
      return json{{"kind", "quadratic1d"}, {"q", n.xx}, {"c", n.c[0]}, {"d", n.d}};
    return json{{"kind", "quadratic2d"}, {"xx", n.xx}, {"xy", n.xy}, {"yy", n.yy},
                {"c", subcalc::to_json(n.c)}, {"d", n.d}};
  }
  json operator()(const fn::IndicatorOf& n) const {
    return json{{"kind", "indicator"}, {"set", subcalc::to_json(n.set)}};
  }
  json operator()(const fn::AffinePlusBoxIndicator& n) const {
    return json{{"kind", "affine_plus_box"}, {"a", subcalc::to_json(n.a)}, {"b", n.b},
                {"box", subcalc::to_json(n.box)}};
  }
  json operator()(const fn::Custom1D& n) const {
    return json{{"kind", "custom1d"}, {"name", n.name}};
  }
  json operator()(const fn::Sum& n) const {
    json ts = json::array();
    for (const ConvexFunction& t : n.terms) ts.push_back(subcalc::to_json(t));
    return json{{"kind", "sum"}, {"terms", ts}};
  }
  json operator()(const fn::Scale& n) const {
    return json{{"kind", "scale"}, {"factor", n.lambda},
                {"inner", subcalc::to_json(*n.inner)}};
  }
  json operator()(const fn::RestrictTo& n) const {
    return json{{"kind", "restrict"}, {"set", subcalc::to_json(n.set)},
                {"inner", subcalc::to_json(*n.inner)}};
  }
};

} // namespace detail

inline json to_json(const ConvexFunction& f) {
  return std::visit(detail::FnToJson{f.dim()}, f.node());
}

inline ConvexFunction fn_from_json(const json& j) {
  if (!j.is_object() || !j.contains("kind"))
    throw std::invalid_argument("fn_from_json: expected object with 'kind'");
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "affine")
    return affine_fn(vec_from_json(j.at("a")), j.at("b").get<double>());
  if (kind == "pl_max") {
    std::vector<std::pair<Vec, double>> pieces;
    for (const auto& p : j.at("pieces"))
      pieces.emplace_back(vec_from_json(p.at("a")), p.at("b").get<double>());
    return pl_max_fn(pieces);
  }
  if (kind == "abs") return abs_fn(j.value("shift", 0.0));
  if (kind == "quadratic1d")
    return quadratic_1d(j.at("q").get<double>(), j.value("c", 0.0), j.value("d", 0.0));
  if (kind == "quadratic2d")
    return quadratic_2d(j.at("xx").get<double>(), j.value("xy", 0.0),
                        j.at("yy").get<double>(), vec_from_json(j.at("c")),
                        j.value("d", 0.0));
  if (kind == "indicator") return indicator_fn(poly_from_json(j.at("set")));
  if (kind == "affine_plus_box")
    return affine_plus_box_fn(vec_from_json(j.at("a")), j.at("b").get<double>(),
                              poly_from_json(j.at("box")));
  if (kind == "custom1d") return custom1d_fn(j.at("name").get<std::string>());
  if (kind == "sum") {
    std::vector<ConvexFunction> terms;
    for (const auto& t : j.at("terms")) terms.push_back(fn_from_json(t));
    return sum_fn(terms);
  }
  if (kind == "scale")
    return scale_fn(j.at("factor").get<double>(), fn_from_json(j.at("inner")));
  if (kind == "restrict")
    return restrict_fn(fn_from_json(j.at("inner")), poly_from_json(j.at("set")));
  throw std::invalid_argument("fn_from_json: unknown kind '" + kind + "'");
}

/* ---- measure spaces ---- */

inline json to_json(const MeasureSpace& mu) {
  json j;
  switch (mu.kind()) {
    case MeasureSpace::Kind::finite_discrete:
      j["kind"] = "finite_discrete";
      j["nodes"] = mu.nodes();
      j["weights"] = mu.weights();
      return j;
    case MeasureSpace::Kind::countable_truncated:
      j["kind"] = "countable";
      j["weights"] = mu.weights();
      j["tail_bound"] = mu.tail_bound();
      return j;
    case MeasureSpace::Kind::interval: {
      j["kind"] = "interval";
      j["a"] = mu.a();
      j["b"] = mu.b();
      j["density"] = "lebesgue";
      const IntervalOptions& o = mu.interval_options();
      if (o.singular_a)
        j["singularity"] = json{{"at", "a"}, {"exponent", o.exponent_a}};
      else if (o.singular_b)
        j["singularity"] = json{{"at", "b"}, {"exponent", o.exponent_b}};
      j["node_count"] = o.node_count;
      return j;
    }
  }
  throw std::logic_error("to_json(MeasureSpace): unreachable");
}

inline MeasureSpace measure_from_json(const json& j) {
  if (!j.is_object() || !j.contains("kind"))
    throw std::invalid_argument("measure_from_json: expected object with 'kind'");
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "finite_discrete")
    return finite_discrete_space(j.at("nodes").get<std::vector<double>>(),
                                 j.at("weights").get<std::vector<double>>());
  if (kind == "countable") {
    std::vector<double> ws = j.at("weights").get<std::vector<double>>();
    return countable_space([ws](int n) { return ws.at(size_t(n) - 1); }, int(ws.size()),
                           j.value("tail_bound", 0.0));
  }
  if (kind == "interval") {
    if (j.value("density", "lebesgue") != std::string("lebesgue"))
      throw std::invalid_argument("measure_from_json: only lebesgue density supported");
    IntervalOptions o;
    o.node_count = j.value("node_count", 2048);
    if (j.contains("singularity")) {
      const json& s = j.at("singularity");
      const std::string at = s.at("at").get<std::string>();
      if (at == "a") {
        o.singular_a = true;
        o.exponent_a = s.at("exponent").get<double>();
      } else if (at == "b") {
        o.singular_b = true;
        o.exponent_b = s.at("exponent").get<double>();
      } else {
        throw std::invalid_argument("measure_from_json: singularity.at must be a|b");
      }
    }
    return interval_space(j.at("a").get<double>(), j.at("b").get<double>(), o);
  }
  throw std::invalid_argument("measure_from_json: unknown kind '" + kind + "'");
}

/* ---- computed sets and formula results ---- */

inline json to_json(const SetWithStatus& s) {
  json j;
  j["status"] = to_string(s.status);
  j["set"] = to_json(s.set);
  if (!s.unbounded_dirs.empty()) {
    json ds = json::array();
    for (const Vec& d : s.unbounded_dirs) ds.push_back(to_json(d));
    j["unbounded_directions"] = ds;
  }
  return j;
}

inline json to_json(const QualificationReport& q) {
  json j;
  j["condition"] = q.condition;
  j["holds"] = q.holds;
  if (q.witness) j["witness"] = to_json(*q.witness);
  if (q.separator) j["separator"] = to_json(*q.separator);
  if (!q.note.empty()) j["note"] = q.note;
  return j;
}

inline json to_json(const FormulaResult& r) {
  json j;
  j["formula_id"] = r.formula_id;
  j["parameters"] = r.parameters;
  j["refused"] = r.refused;
  if (r.refused) j["refusal_reason"] = r.refusal_reason;
  j["result"] = to_json(r.set);
  j["exact"] = formula_exact(r);
  if (!r.convergence_log.empty()) {
    j["convergence_log"] = r.convergence_log;
    j["stabilized"] = r.stabilized;
    j["escaped"] = r.escaped;
    j["monotone"] = r.monotone;
    j["iterate_count"] = r.iterates.size();
  }
  if (!r.qualification.empty()) {
    json qs = json::array();
    for (const QualificationReport& q : r.qualification) qs.push_back(to_json(q));
    j["qualification"] = qs;
  }
  return j;
}

} // namespace subcalc
