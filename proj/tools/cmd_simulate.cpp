#include "config.hpp"

#include <spdlog/spdlog.h>

#include <cstdio>
#include <sstream>

namespace supermoment::cli {

namespace {

template <int Dim>
SimParams<Dim> parseSimParams(const Json& opt, const BallDomain<Dim>& dom, std::uint64_t seed) {
  SimParams<Dim> p;
  p.domain = dom;
  p.mu = parseMeasure<Dim>(opt.contains("measure") ? opt.at("measure") : Json(), dom);
  p.particlesPerUnitMass = get(opt, "particlesPerUnitMass", p.particlesPerUnitMass);
  p.branchRate = get(opt, "branchRate", p.branchRate);
  p.stepSize = get(opt, "stepSize", p.stepSize);
  p.replicates = get(opt, "replicates", p.replicates);
  p.stepBudget = get(opt, "stepBudget", p.stepBudget);
  p.seed = seed;
  p.validate();
  return p;
}

template <int Dim>
Json simParamsJson(const SimParams<Dim>& p) {
  return Json{{"measure", toJson(p.mu)},
              {"particlesPerUnitMass", p.particlesPerUnitMass},
              {"branchRate", p.branchRate},
              {"branchProbability", p.branchProbability()},
              {"stepSize", p.stepSize},
              {"replicates", p.replicates},
              {"stepBudget", p.stepBudget},
              {"seed", p.seed}};
}

template <int Dim>
int simulate(const RunContext& ctx) {
  const BallDomain<Dim> dom = parseDomain<Dim>(ctx.config);
  const Json opt = section(ctx.config, "simulate");
  allowKeys(opt,
            {"measure", "particlesPerUnitMass", "branchRate", "stepSize", "replicates", "stepBudget", "functions",
             "products", "exitReplicates", "boundaryCells", "boundaryOrder", "tolerance"},
            "simulate");
  const SimParams<Dim> params = parseSimParams<Dim>(opt, dom, ctx.seed);
  const Json fnSpec = opt.contains("functions") ? opt.at("functions") : Json::array({"one"});
  require(fnSpec.is_array() && !fnSpec.empty(), "simulate: functions must be a nonempty array");
  std::vector<BoundaryFunction<Dim>> fs;
  for (const auto& f : fnSpec) fs.push_back(parseFunction<Dim>(f, dom));
  std::vector<std::vector<int>> products;
  if (opt.contains("products")) {
    for (const auto& pr : opt.at("products")) {
      require(pr.is_array(), "simulate: each product is an array of function indices");
      std::vector<int> idx;
      for (const auto& i : pr) {
        require(i.is_number_integer() && i.get<int>() >= 0 && i.get<int>() < static_cast<int>(fs.size()),
                "simulate: product index out of range");
        idx.push_back(i.get<int>());
      }
      products.push_back(idx);
    }
  } else {
    for (int i = 0; i < static_cast<int>(fs.size()); ++i) products.push_back({i});
  }
  const int exitReps = get(opt, "exitReplicates", 0);
  const int bCells = get(opt, "boundaryCells", 12);
  const int bOrder = get(opt, "boundaryOrder", 6);
  const double tol = get(opt, "tolerance", 3.0);
  require(exitReps >= 0 && exitReps <= params.replicates, "simulate: exitReplicates must lie in [0, replicates]");

  const std::size_t reps = static_cast<std::size_t>(params.replicates);
  std::vector<std::vector<double>> values(products.size(), std::vector<double>(reps));
  std::vector<std::uint64_t> exits(reps), initial(reps), steps(reps);
  std::vector<ExitMeasure<Dim>> kept(static_cast<std::size_t>(exitReps));
  parallelFor(reps, [&](std::size_t r) {
    ExitMeasure<Dim> x = sampleExitMeasure(params, r);
    std::vector<double> pair(fs.size());
    for (std::size_t i = 0; i < fs.size(); ++i) pair[i] = x.pairing(fs[i]);
    for (std::size_t k = 0; k < products.size(); ++k) {
      double v = 1.0;
      for (int i : products[k]) v *= pair[i];
      values[k][r] = v;
    }
    exits[r] = x.atoms.size();
    initial[r] = x.initialParticles;
    steps[r] = x.steps;
    if (r < kept.size()) kept[r] = std::move(x);
  });

  BoundaryGrid<Dim> bnd(dom, bCells, bOrder);
  Json moments = Json::array();
  Json checks = Json::array();
  for (std::size_t k = 0; k < products.size(); ++k) {
    const MomentEstimate e = detail::summarize(values[k]);
    Json row = {{"functions", products[k]}, {"value", e.value}, {"stderr", e.standardError}, {"replicates", e.replicates}};
    if (products[k].size() == 1) {
      // first moment <mu, K f> by the Poisson integral
      const auto& f = fs[products[k][0]];
      std::vector<double> fz;
      for (const auto& z : bnd.nodes()) fz.push_back(f(z));
      double exact = 0.0;
      for (std::size_t a = 0; a < params.mu.points.size(); ++a)
        exact += params.mu.masses[a] * harmonicExtension(dom, bnd, f, fz, params.mu.points[a]);
      const bool same = std::abs(e.value - exact) <= 1e-12 * std::max(1.0, std::abs(exact));
      double z = e.standardError > 0.0 ? (e.value - exact) / e.standardError : (same ? 0.0 : INFINITY);
      row["exact_first_moment"] = exact;
      row["z_score"] = z;
      checks.push_back(check("first moment of " + fnSpec[products[k][0]].dump(), std::abs(z) <= tol || same, z, tol));
    }
    moments.push_back(row);
  }
  if (params.branchRate == 0.0) {
    bool conserved = true;
    for (std::size_t r = 0; r < reps; ++r) conserved = conserved && exits[r] == initial[r];
    checks.push_back(check("mass conservation without branching", conserved, conserved ? 1.0 : 0.0, 1.0));
  }
  std::uint64_t totalSteps = 0;
  double meanExit = 0.0;
  for (std::size_t r = 0; r < reps; ++r) totalSteps += steps[r], meanExit += static_cast<double>(exits[r]);

  if (exitReps > 0) {
    std::ostringstream os;
    os << "replicate";
    for (int k = 0; k < Dim; ++k) os << ",x" << k;
    os << ",mass\n";
    char buf[64];
    for (std::size_t r = 0; r < kept.size(); ++r)
      for (const auto& z : kept[r].atoms) {
        os << r;
        for (int k = 0; k < Dim; ++k) {
          std::snprintf(buf, sizeof buf, ",%.17g", z[k]);
          os << buf;
        }
        std::snprintf(buf, sizeof buf, ",%.17g\n", kept[r].atomMass);
        os << buf;
      }
    ctx.writeText("exits.csv", os.str());
  }

  const bool ok = allPassed(checks);
  Json report = ctx.provenance();
  report["domain"] = toJson(dom);
  report["parameters"] = simParamsJson(params);
  report["functions"] = fnSpec;
  report["moments"] = moments;
  report["total_particle_steps"] = totalSteps;
  report["mean_exit_atoms"] = meanExit / static_cast<double>(reps);
  report["checks"] = checks;
  report["passed"] = ok;
  ctx.writeJson("moments.json", report);
  return ok ? kPass : kCheckFailed;
}

template <int Dim>
int calibrate(const RunContext& ctx) {
  const BallDomain<Dim> dom = parseDomain<Dim>(ctx.config);
  const Json opt = section(ctx.config, "calibrate");
  allowKeys(opt, {"particlesPerUnitMass", "stepSize", "replicates", "relTol"}, "calibrate");
  const int N = get(opt, "particlesPerUnitMass", 1000);
  const double h = get(opt, "stepSize", 1e-4);
  const int reps = get(opt, "replicates", 100);
  const double relTol = get(opt, "relTol", 0.02);
  const CalibrationResult c = calibrateBranchRate(dom, N, h, reps, ctx.seed, relTol);
  spdlog::info("calibrate: gamma* = {} in [{}, {}]", c.gamma, c.lower, c.upper);
  Json report = ctx.provenance();
  report["domain"] = toJson(dom);
  report["parameters"] = Json{{"particlesPerUnitMass", N}, {"stepSize", h}, {"replicates", reps}, {"relTol", relTol}};
  report["gamma"] = c.gamma;
  report["bracket"] = {c.lower, c.upper};
  report["target_second_moment"] = c.target;
  report["achieved_second_moment"] = Json{{"value", c.achieved.value}, {"stderr", c.achieved.standardError}};
  report["mean_inside_steps"] = c.meanInsideSteps;
  report["iterations"] = c.iterations;
  report["passed"] = true;
  ctx.writeJson("calibration.json", report);
  return kPass;
}

}  // namespace

int cmdSimulate(const RunContext& ctx) {
  return withDimension(ctx.config, [&]<int Dim>() { return simulate<Dim>(ctx); });
}

int cmdCalibrate(const RunContext& ctx) {
  return withDimension(ctx.config, [&]<int Dim>() { return calibrate<Dim>(ctx); });
}

}  // namespace supermoment::cli
