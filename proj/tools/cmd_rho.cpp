#include "config.hpp"

#include <spdlog/spdlog.h>

#include <sstream>

namespace supermoment::cli {

namespace {

template <int Dim>
std::vector<Point<Dim>> configPoints(const Json& opt, const BallDomain<Dim>& dom) {
  if (opt.contains("points")) return parsePoints<Dim>(opt.at("points"), "points");
  // default: an antipodal pair on the last axis
  Point<Dim> e = Point<Dim>::Zero();
  e[Dim - 1] = dom.radius();
  return {dom.center() + e, dom.center() - e};
}

template <int Dim>
int rho(const RunContext& ctx) {
  const BallDomain<Dim> dom = parseDomain<Dim>(ctx.config);
  const Json opt = section(ctx.config, "rho");
  allowKeys(opt, {"points", "evaluate", "maxLevel", "grid", "writeTable"}, "rho");
  const BoundaryConfig<Dim> cfg(dom, configPoints(opt, dom));
  const std::vector<Point<Dim>> evals =
      opt.contains("evaluate") ? parsePoints<Dim>(opt.at("evaluate"), "evaluate") : std::vector<Point<Dim>>{dom.center()};
  const GridParams gp = parseGrid(section(opt, "grid"));
  RhoOptions ro;
  ro.maxLevel = get(opt, "maxLevel", 0);
  require(ro.maxLevel >= 0, "rho: maxLevel must be >= 0");
  const bool writeTable = get(opt, "writeTable", true);

  spdlog::info("rho: n={} grid params radial={} angular={} order={}", cfg.size(), gp.radialCells, gp.angularCells,
               gp.order);
  auto grid = std::make_shared<const VolumeGrid<Dim>>(dom, cfg.points(), gp);
  const RhoTable<Dim> table = computeRhoTables(dom, cfg, grid, ro);
  spdlog::info("rho: {} nodes, complete through level {}", grid->size(), table.completeLevel());

  Json checks = Json::array();
  {
    double worst = 0.0;
    for (int i = 0; i < cfg.size(); ++i) {
      const auto& f = table.field(SubsetKey{1} << i);
      for (std::size_t j = 0; j < grid->size(); ++j)
        worst = std::max(worst, std::abs(f[j] - poissonUnchecked(dom, grid->nodes()[j], cfg[i])));
    }
    checks.push_back(check("singleton fields equal the Poisson kernel", worst == 0.0, worst, 0.0));
    bool positive = true;
    for (SubsetKey A = 1; A <= cfg.fullKey(); ++A) {
      if (!table.has(A)) continue;
      for (double v : table.field(A)) positive = positive && std::isfinite(v) && v > 0.0;
    }
    checks.push_back(check("all tabulated fields finite and positive", positive, positive ? 1.0 : 0.0, 1.0));
  }

  // every subset whose lower levels are tabulated can be evaluated off-grid
  const int evalLevel = std::min(cfg.size(), table.completeLevel() + 1);
  Json values = Json::array();
  for (const auto& x : evals) {
    dom.requireInterior(x, "evaluation point");
    Json row = {{"x", toJson<Dim>(x)}, {"rho", Json::array()}};
    for (SubsetKey A = 1; A <= cfg.fullKey(); ++A) {
      if (subsetSize(A) > evalLevel) continue;
      row["rho"].push_back(Json{{"subset", A}, {"value", rhoAt(dom, table, x, A)}});
    }
    values.push_back(row);
  }

  if (writeTable) {
    std::ostringstream os;
    writeRhoTableCsv(os, table);
    ctx.writeText("rho_table.csv", os.str());
  }
  Json pts = Json::array();
  for (const auto& z : cfg.points()) pts.push_back(toJson<Dim>(z));
  const bool ok = allPassed(checks);
  Json report = ctx.provenance();
  report["domain"] = toJson(dom);
  report["points"] = pts;
  report["grid"] = toJson(gp);
  report["grid_nodes"] = grid->size();
  report["grid_weight_sum"] = grid->totalWeight();
  report["complete_level"] = table.completeLevel();
  report["values"] = values;
  report["checks"] = checks;
  report["passed"] = ok;
  ctx.writeJson("rho_summary.json", report);
  return ok ? kPass : kCheckFailed;
}

template <int Dim>
int rhoOracle(const RunContext& ctx) {
  const BallDomain<Dim> dom = parseDomain<Dim>(ctx.config);
  const Json opt = section(ctx.config, "oracle");
  allowKeys(opt, {"points", "x", "subset", "samples", "compare", "grid", "tolerance"}, "oracle");
  const BoundaryConfig<Dim> cfg(dom, configPoints(opt, dom));
  const Point<Dim> x = opt.contains("x") ? parsePoint<Dim>(opt.at("x"), "oracle.x") : dom.center();
  const auto A = get<SubsetKey>(opt, "subset", cfg.fullKey());
  require(A >= 1 && A <= cfg.fullKey(), "oracle: subset out of range");
  const auto samples = get<std::uint64_t>(opt, "samples", 100000);
  const bool compare = get(opt, "compare", true);
  const double tol = get(opt, "tolerance", 3.0);

  const MonteCarloEstimate mc = rhoMonteCarlo(dom, cfg, x, A, samples, ctx.seed);
  Json report = ctx.provenance();
  report["domain"] = toJson(dom);
  Json pts = Json::array();
  for (const auto& z : cfg.points()) pts.push_back(toJson<Dim>(z));
  report["points"] = pts;
  report["x"] = toJson<Dim>(x);
  report["subset"] = A;
  report["monte_carlo"] = Json{{"estimate", mc.estimate}, {"stderr", mc.standardError}, {"samples", mc.samples}};
  bool ok = true;
  if (compare) {
    const GridParams gp = parseGrid(section(opt, "grid"));
    auto grid = std::make_shared<const VolumeGrid<Dim>>(dom, cfg.points(), gp);
    RhoOptions ro;
    ro.maxLevel = std::max(1, subsetSize(A) - 1);
    const RhoTable<Dim> table = computeRhoTables(dom, cfg, grid, ro);
    const double q = rhoAt(dom, table, x, A);
    // the quadrature error is far below the Monte Carlo error, so the
    // combined standard error is the Monte Carlo one
    const double se = mc.standardError;
    const double z = se > 0.0 ? (q - mc.estimate) / se : (q == mc.estimate ? 0.0 : INFINITY);
    ok = std::abs(z) <= tol || std::abs(q - mc.estimate) <= 1e-12 * std::abs(q);
    report["grid"] = toJson(gp);
    report["quadrature"] = q;
    report["z_score"] = z;
    report["tolerance_stderr"] = tol;
  }
  report["passed"] = ok;
  ctx.writeJson("rho_oracle.json", report);
  return ok ? kPass : kCheckFailed;
}

}  // namespace

int cmdRho(const RunContext& ctx) {
  return withDimension(ctx.config, [&]<int Dim>() { return rho<Dim>(ctx); });
}

int cmdRhoOracle(const RunContext& ctx) {
  return withDimension(ctx.config, [&]<int Dim>() { return rhoOracle<Dim>(ctx); });
}

}  // namespace supermoment::cli
