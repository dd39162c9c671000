#include "config.hpp"

#include <spdlog/spdlog.h>

#include <cstdio>
#include <sstream>

namespace supermoment::cli {

namespace {

struct HarnackOptions {
  double a = 0.5;
  std::uint64_t thetaSamples = 100000;
  double safety = 2.0;
  int horizon = 10000;
  int nestDepth = 6;
  int nMax = 4;
  int trials = 50;
  double minSeparation = 0.1;
  bool adversarial = true;
  GridParams grid = harnackGridParams();
};

HarnackOptions parseHarnack(const Json& cfg, double radius) {
  const Json opt = section(cfg, "harnack");
  allowKeys(opt,
            {"a", "thetaSamples", "safety", "horizon", "nestDepth", "nMax", "trials", "minSeparation", "adversarial",
             "grid"},
            "harnack");
  HarnackOptions h;
  h.a = get(opt, "a", 0.5 * radius);
  h.thetaSamples = get(opt, "thetaSamples", h.thetaSamples);
  h.safety = get(opt, "safety", h.safety);
  h.horizon = get(opt, "horizon", h.horizon);
  h.nestDepth = get(opt, "nestDepth", h.nestDepth);
  h.nMax = get(opt, "nMax", h.nMax);
  h.trials = get(opt, "trials", h.trials);
  h.minSeparation = get(opt, "minSeparation", h.minSeparation);
  h.adversarial = get(opt, "adversarial", h.adversarial);
  h.grid = parseGrid(section(opt, "grid"), harnackGridParams());
  require(h.thetaSamples >= 1, "harnack: thetaSamples must be >= 1");
  return h;
}

Json ledgerJson(const ConstantLedger& L, const std::vector<LedgerCheck>& replay) {
  Json entries = Json::array();
  for (const auto& e : L.entries())
    entries.push_back(Json{{"name", e.name}, {"value", e.value}, {"provenance", provenanceName(e.provenance)}});
  Json checks = Json::array();
  for (const auto& c : replay) checks.push_back(Json{{"name", c.name}, {"passed", c.passed}, {"detail", c.detail}});
  return Json{{"entries", entries},
              {"safety", L.safety},
              {"binding_n", L.bindingN},
              {"horizon", L.horizon},
              {"replay", checks}};
}

bool replayPassed(const std::vector<LedgerCheck>& replay) {
  for (const auto& c : replay)
    if (!c.passed) return false;
  return true;
}

template <int Dim>
ConstantLedger buildLedger(const BallDomain<Dim>& dom, const HarnackOptions& h, std::uint64_t seed) {
  const auto th = threeGEstimate(dom, h.thetaSamples, seed);
  return constructiveLambda(dom, h.a, th.thetaHat, h.safety, h.horizon);
}

template <int Dim>
int constructive(const RunContext& ctx) {
  const BallDomain<Dim> dom = parseDomain<Dim>(ctx.config);
  const HarnackOptions h = parseHarnack(ctx.config, dom.radius());
  const ConstantLedger L = buildLedger(dom, h, ctx.seed);
  const auto replay = replayLedger(L);
  const CompactNest nest = buildCompactNest(dom, h.a, h.nestDepth);
  const bool ok = replayPassed(replay);
  spdlog::info("harnack-constructive: lambda = {} (binding n = {})", L.lambda, L.bindingN);
  Json report = ctx.provenance();
  report["domain"] = toJson(dom);
  report["a"] = h.a;
  report["theta_samples"] = h.thetaSamples;
  report["ledger"] = ledgerJson(L, replay);
  report["nest"] = Json{{"scale", nest.scale}, {"delta", nest.delta}, {"margin", nest.margin}, {"radii", nest.radii}};
  report["lambda"] = L.lambda;
  report["passed"] = ok;
  ctx.writeJson("ledger.json", report);
  return ok ? kPass : kCheckFailed;
}

template <int Dim>
int empirical(const RunContext& ctx) {
  const BallDomain<Dim> dom = parseDomain<Dim>(ctx.config);
  const HarnackOptions h = parseHarnack(ctx.config, dom.radius());
  const ConstantLedger L = buildLedger(dom, h, ctx.seed);
  const auto replay = replayLedger(L);
  EmpiricalOptions<Dim> eo;
  eo.grid = h.grid;
  eo.minSeparation = h.minSeparation;
  eo.adversarial = h.adversarial;
  const auto levels = empiricalLambda(dom, h.a, h.nMax, h.trials, ctx.seed, eo);
  const double phi = harnackConstant(dom, h.a);

  Json checks = Json::array();
  checks.push_back(check("ledger replay", replayPassed(replay), replayPassed(replay) ? 1.0 : 0.0, 1.0));
  Json table = Json::array();
  std::ostringstream levelsCsv, rootCsv;
  levelsCsv << "n,trials,max_ratio,root,lambda_power\n";
  rootCsv << "n,root\n";
  char buf[160];
  double worstRoot = 0.0;
  for (const auto& rep : levels) {
    const double bound = std::pow(L.lambda, rep.n);
    bool within = true;
    for (const auto& t : rep.all) within = within && t.ratio <= bound;
    worstRoot = std::max(worstRoot, rep.root);
    checks.push_back(check("every ratio <= lambda^" + std::to_string(rep.n), within, rep.maxRatio, bound));
    Json z = Json::array();
    for (const auto& p : rep.argmax.z) z.push_back(toJson<Dim>(p));
    table.push_back(Json{{"n", rep.n},
                         {"trials", rep.trials},
                         {"max_ratio", rep.maxRatio},
                         {"root", rep.root},
                         {"lambda_power", bound},
                         {"argmax", Json{{"x", toJson<Dim>(rep.argmax.x)},
                                         {"x0", toJson<Dim>(rep.argmax.x0)},
                                         {"z", z},
                                         {"adversarial", rep.argmax.adversarial}}}});
    std::snprintf(buf, sizeof buf, "%d,%d,%.17g,%.17g,%.17g\n", rep.n, rep.trials, rep.maxRatio, rep.root, bound);
    levelsCsv << buf;
    std::snprintf(buf, sizeof buf, "%d,%.17g\n", rep.n, rep.root);
    rootCsv << buf;
    if (rep.n == 1) {
      checks.push_back(check("n = 1 ratios <= phi(a)", rep.maxRatio <= phi * (1.0 + 1e-9), rep.maxRatio, phi));
      bool forced = false;
      for (const auto& t : rep.all) forced = forced || (t.x == t.x0 && t.ratio == 1.0);
      checks.push_back(check("forced trial x = x0 has ratio 1", forced, forced ? 1.0 : 0.0, 1.0));
    }
  }
  checks.push_back(check("roots bounded by lambda", worstRoot <= L.lambda, worstRoot, L.lambda));

  const bool ok = allPassed(checks);
  Json report = ctx.provenance();
  report["domain"] = toJson(dom);
  report["a"] = h.a;
  report["phi"] = phi;
  report["grid"] = toJson(h.grid);
  report["trials_per_level"] = h.trials;
  report["min_separation"] = h.minSeparation;
  report["ledger"] = ledgerJson(L, replay);
  report["lambda"] = L.lambda;
  report["levels"] = table;
  report["checks"] = checks;
  report["passed"] = ok;
  ctx.writeJson("harnack_report.json", report);
  ctx.writeText("harnack_levels.csv", levelsCsv.str());
  ctx.writeText("harnack_root.csv", rootCsv.str());
  return ok ? kPass : kCheckFailed;
}

}  // namespace

int cmdHarnackConstructive(const RunContext& ctx) {
  return withDimension(ctx.config, [&]<int Dim>() { return constructive<Dim>(ctx); });
}

int cmdHarnackEmpirical(const RunContext& ctx) {
  return withDimension(ctx.config, [&]<int Dim>() { return empirical<Dim>(ctx); });
}

}  // namespace supermoment::cli
