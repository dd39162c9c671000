#pragma once

#include "cli.hpp"

#include <supermoment/supermoment.hpp>

#include <initializer_list>
#include <string>
#include <vector>

namespace supermoment::cli {

/// Section `key` of the config, or an empty object when absent.
inline Json section(const Json& cfg, const char* key) {
  if (!cfg.contains(key)) return Json::object();
  const Json& s = cfg.at(key);
  require(s.is_object(), std::string("config: '") + key + "' must be an object");
  return s;
}

/// Rejects keys outside `allowed`, so typos fail loudly instead of silently
/// falling back to defaults.
inline void allowKeys(const Json& obj, std::initializer_list<const char*> allowed, const std::string& where) {
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    bool ok = false;
    for (const char* k : allowed) ok = ok || it.key() == k;
    require(ok, "config: unknown key '" + it.key() + "' in " + where);
  }
}

template <class T>
T get(const Json& obj, const char* key, T fallback) {
  if (!obj.contains(key)) return fallback;
  const Json& v = obj.at(key);
  if constexpr (std::is_same_v<T, bool>) {
    require(v.is_boolean(), std::string("config: '") + key + "' must be a boolean");
  } else if constexpr (std::is_integral_v<T>) {
    require(v.is_number_integer(), std::string("config: '") + key + "' must be an integer");
    if constexpr (std::is_unsigned_v<T>) require(v.get<long long>() >= 0 || v.is_number_unsigned(),
                                                 std::string("config: '") + key + "' must be >= 0");
  } else if constexpr (std::is_floating_point_v<T>) {
    require(v.is_number(), std::string("config: '") + key + "' must be a number");
  } else {
    require(v.is_string(), std::string("config: '") + key + "' must be a string");
  }
  return v.get<T>();
}

inline int dimensionOf(const Json& cfg) {
  Json dom = section(cfg, "domain");
  int d = get(dom, "dimension", 3);
  require(d == 2 || d == 3, "config: domain.dimension must be 2 or 3");
  return d;
}

template <int Dim>
Point<Dim> parsePoint(const Json& v, const std::string& what) {
  require(v.is_array() && v.size() == Dim, "config: " + what + " must be an array of " + std::to_string(Dim) + " numbers");
  Point<Dim> p;
  for (int k = 0; k < Dim; ++k) {
    require(v[k].is_number(), "config: " + what + " must hold numbers");
    p[k] = v[k].get<double>();
  }
  return p;
}

template <int Dim>
std::vector<Point<Dim>> parsePoints(const Json& v, const std::string& what) {
  require(v.is_array() && !v.empty(), "config: " + what + " must be a nonempty array of points");
  std::vector<Point<Dim>> out;
  for (std::size_t i = 0; i < v.size(); ++i) out.push_back(parsePoint<Dim>(v[i], what + "[" + std::to_string(i) + "]"));
  return out;
}

template <int Dim>
Json toJson(const Point<Dim>& p) {
  Json a = Json::array();
  for (int k = 0; k < Dim; ++k) a.push_back(p[k]);
  return a;
}

template <int Dim>
BallDomain<Dim> parseDomain(const Json& cfg) {
  Json dom = section(cfg, "domain");
  allowKeys(dom, {"dimension", "radius", "center"}, "domain");
  double R = get(dom, "radius", 1.0);
  Point<Dim> c = dom.contains("center") ? parsePoint<Dim>(dom.at("center"), "domain.center") : Point<Dim>::Zero();
  return BallDomain<Dim>(R, c);
}

template <int Dim>
Json toJson(const BallDomain<Dim>& dom) {
  return Json{{"dimension", Dim}, {"radius", dom.radius()}, {"center", toJson<Dim>(dom.center())}};
}

inline GridParams parseGrid(const Json& obj, GridParams p = {}) {
  allowKeys(obj,
            {"radialCells", "angularCells", "order", "grading", "eta", "boundaryDepth", "interiorDepth", "minCellSize",
             "patchRadialOrder", "patchAngularOrder", "patchCap", "patchFraction", "patchCellRatio"},
            "grid");
  p.radialCells = get(obj, "radialCells", p.radialCells);
  p.angularCells = get(obj, "angularCells", p.angularCells);
  p.order = get(obj, "order", p.order);
  p.grading = get(obj, "grading", p.grading);
  p.eta = get(obj, "eta", p.eta);
  p.boundaryDepth = get(obj, "boundaryDepth", p.boundaryDepth);
  p.interiorDepth = get(obj, "interiorDepth", p.interiorDepth);
  p.minCellSize = get(obj, "minCellSize", p.minCellSize);
  p.patchRadialOrder = get(obj, "patchRadialOrder", p.patchRadialOrder);
  p.patchAngularOrder = get(obj, "patchAngularOrder", p.patchAngularOrder);
  p.patchCap = get(obj, "patchCap", p.patchCap);
  p.patchFraction = get(obj, "patchFraction", p.patchFraction);
  p.patchCellRatio = get(obj, "patchCellRatio", p.patchCellRatio);
  p.validate();
  return p;
}

inline Json toJson(const GridParams& p) {
  return Json{{"radialCells", p.radialCells},     {"angularCells", p.angularCells},
              {"order", p.order},                 {"grading", p.grading},
              {"eta", p.eta},                     {"boundaryDepth", p.boundaryDepth},
              {"interiorDepth", p.interiorDepth}, {"minCellSize", p.minCellSize},
              {"patchRadialOrder", p.patchRadialOrder}, {"patchAngularOrder", p.patchAngularOrder},
              {"patchCap", p.patchCap},           {"patchFraction", p.patchFraction},
              {"patchCellRatio", p.patchCellRatio}};
}

template <int Dim>
DiscreteMeasure<Dim> parseMeasure(const Json& obj, const BallDomain<Dim>& dom) {
  DiscreteMeasure<Dim> mu;
  if (obj.is_null()) {
    mu.points = {dom.center()};
    mu.masses = {1.0};
    return mu;
  }
  require(obj.is_object(), "config: measure must be an object");
  allowKeys(obj, {"points", "masses"}, "measure");
  require(obj.contains("points") && obj.contains("masses"), "config: measure needs 'points' and 'masses'");
  mu.points = parsePoints<Dim>(obj.at("points"), "measure.points");
  const Json& m = obj.at("masses");
  require(m.is_array() && m.size() == mu.points.size(), "config: measure.masses must match measure.points");
  for (const auto& v : m) {
    require(v.is_number(), "config: measure.masses must hold numbers");
    mu.masses.push_back(v.get<double>());
  }
  mu.validate(dom);
  return mu;
}

template <int Dim>
Json toJson(const DiscreteMeasure<Dim>& mu) {
  Json pts = Json::array();
  for (const auto& p : mu.points) pts.push_back(toJson<Dim>(p));
  return Json{{"points", pts}, {"masses", mu.masses}};
}

/// Boundary test functions, evaluated at the unit direction u = (z - c)/R:
///   "one", "z0".."z{d-1}", "hemisphere" (indicator of u_{d-1} > 0), or
///   {"polynomial": [[coef, p_0, ..., p_{d-1}], ...]} for sum coef * prod u_k^{p_k}.
template <int Dim>
BoundaryFunction<Dim> parseFunction(const Json& v, const BallDomain<Dim>& dom) {
  const Point<Dim> c = dom.center();
  const double R = dom.radius();
  if (v.is_string()) {
    const std::string s = v.get<std::string>();
    if (s == "one") return [](const Point<Dim>&) { return 1.0; };
    if (s == "hemisphere") return [c](const Point<Dim>& z) { return z[Dim - 1] > c[Dim - 1] ? 1.0 : 0.0; };
    for (int k = 0; k < Dim; ++k)
      if (s == "z" + std::to_string(k)) return [c, R, k](const Point<Dim>& z) { return (z[k] - c[k]) / R; };
    throw InputError("config: unknown test function '" + s + "'");
  }
  require(v.is_object() && v.contains("polynomial") && v.size() == 1,
          "config: a test function is a name or {\"polynomial\": [...]}");
  std::vector<std::pair<double, std::array<int, Dim>>> terms;
  for (const auto& t : v.at("polynomial")) {
    require(t.is_array() && t.size() == Dim + 1, "config: polynomial terms are [coef, p_0, ..., p_{d-1}]");
    std::array<int, Dim> pw{};
    for (int k = 0; k < Dim; ++k) {
      require(t[k + 1].is_number_integer() && t[k + 1].get<int>() >= 0, "config: polynomial powers must be integers >= 0");
      pw[k] = t[k + 1].get<int>();
    }
    require(t[0].is_number(), "config: polynomial coefficients must be numbers");
    terms.emplace_back(t[0].get<double>(), pw);
  }
  require(!terms.empty(), "config: polynomial needs at least one term");
  return [c, R, terms](const Point<Dim>& z) {
    double s = 0.0;
    for (const auto& [coef, pw] : terms) {
      double m = coef;
      for (int k = 0; k < Dim; ++k) m *= std::pow((z[k] - c[k]) / R, pw[k]);
      s += m;
    }
    return s;
  };
}

/// Dispatches fn.template operator()<Dim>() on the configured dimension.
template <class Fn>
int withDimension(const Json& cfg, Fn&& fn) {
  return dimensionOf(cfg) == 2 ? fn.template operator()<2>() : fn.template operator()<3>();
}

inline Json check(const std::string& name, bool passed, double value, double tolerance) {
  return Json{{"name", name}, {"passed", passed}, {"value", value}, {"tolerance", tolerance}};
}

inline bool allPassed(const Json& checks) {
  for (const auto& c : checks)
    if (!c.at("passed").get<bool>()) return false;
  return true;
}

}  // namespace supermoment::cli
