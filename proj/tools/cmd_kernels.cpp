#include "config.hpp"

#include <spdlog/spdlog.h>

namespace supermoment::cli {

namespace {

/// Centred second-difference Laplacian of k(., z) at x relative to the
/// Frobenius norm of the difference Hessian, the natural size of the terms
/// that cancel.
template <int Dim>
double harmonicResidual(const BallDomain<Dim>& dom, const Point<Dim>& x, const Point<Dim>& z, double h) {
  auto k = [&](const Point<Dim>& p) { return poissonUnchecked(dom, p, z); };
  const double k0 = k(x);
  double lap = 0.0, frob = 0.0;
  for (int i = 0; i < Dim; ++i)
    for (int j = 0; j < Dim; ++j) {
      Point<Dim> ei = Point<Dim>::Zero(), ej = Point<Dim>::Zero();
      ei[i] = h;
      ej[j] = h;
      double d2;
      if (i == j) {
        d2 = (k(x + ei) + k(x - ei) - 2.0 * k0) / (h * h);
        lap += d2;
      } else {
        d2 = (k(x + ei + ej) - k(x + ei - ej) - k(x - ei + ej) + k(x - ei - ej)) / (4.0 * h * h);
      }
      frob += d2 * d2;
    }
  return std::abs(lap) / std::sqrt(frob);
}

template <int Dim>
int kernelsCheck(const RunContext& ctx) {
  const BallDomain<Dim> dom = parseDomain<Dim>(ctx.config);
  const Json opt = section(ctx.config, "kernels");
  allowKeys(opt,
            {"samples", "compactRadius", "normalizationPoints", "normalizationRadius", "boundaryCells",
             "boundaryOrder", "harmonicPoints", "harmonicStep", "harmonicSeparation", "thetaSamples",
             "thetaTolerance"},
            "kernels");
  const double R = dom.radius();
  const auto samples = get<std::uint64_t>(opt, "samples", 100000);
  const double a = get(opt, "compactRadius", 0.5 * R);
  const int normPoints = get(opt, "normalizationPoints", 100);
  const double normRadius = get(opt, "normalizationRadius", 0.5);
  const int bCells = get(opt, "boundaryCells", Dim == 3 ? 10 : 64);
  const int bOrder = get(opt, "boundaryOrder", Dim == 3 ? 4 : 8);
  const int harmPoints = get(opt, "harmonicPoints", 2000);
  const double harmStep = get(opt, "harmonicStep", 1e-3);
  const double harmSep = get(opt, "harmonicSeparation", 0.2);
  const auto thetaSamples = get<std::uint64_t>(opt, "thetaSamples", 100000);
  const double thetaTol = get(opt, "thetaTolerance", 0.05);
  require(samples >= 1 && thetaSamples >= 1, "kernels: sample counts must be >= 1");
  require(a > 0.0 && a < R, "kernels: compactRadius must lie in (0, radius)");
  require(normRadius > 0.0 && normRadius < 1.0, "kernels: normalizationRadius must lie in (0, 1)");
  require(harmSep > 0.0 && harmStep > 0.0, "kernels: harmonic parameters must be positive");

  const KernelConstants<Dim> kc = kernelConstants(dom, a);
  const std::uint64_t seed = ctx.seed;
  Json checks = Json::array();

  // normalisation of the Poisson kernel
  {
    BoundaryGrid<Dim> bnd(dom, bCells, bOrder);
    double worst = 0.0;
    for (int i = 0; i < normPoints; ++i) {
      Engine rng = stream(seed, 0x1000000ull + i);
      Point<Dim> x = uniformInBall(dom, rng, normRadius * R);
      double s = bnd.integrate([&](const Point<Dim>& z) { return poissonUnchecked(dom, x, z); });
      worst = std::max(worst, std::abs(s - 1.0));
    }
    checks.push_back(check("poisson normalization (" + std::to_string(bnd.size()) + " boundary nodes)",
                           worst <= 1e-6, worst, 1e-6));
  }

  // symmetry and the two-sided bounds on h_x(y) = c_d |x-y|^{2-d} - g(x,y)
  {
    const std::uint64_t block = 4096, blocks = (samples + block - 1) / block;
    struct Worst {
      double symmetry = 0.0, upper = 0.0, lower = 0.0;
    };
    std::vector<Worst> part(blocks);
    const double hMax = Dim == 2 ? kc.c_d * std::log(1.0 / kc.beta) : kc.c_d * std::pow(kc.beta, 2 - Dim);
    const double hMin = Dim == 2 ? -kc.ctilde : 0.0;
    parallelFor(blocks, [&](std::size_t b) {
      Worst w;
      for (std::uint64_t i = b * block; i < std::min(samples, (b + 1) * block); ++i) {
        Engine rng = stream(seed, 0x2000000ull + i);
        Point<Dim> x = uniformInBall(dom, rng), y = uniformInBall(dom, rng);
        if (x == y) continue;
        double gxy = green(dom, x, y), gyx = green(dom, y, x);
        w.symmetry = std::max(w.symmetry, std::abs(gxy - gyx) / gxy);
        double free = freeSpaceGreen<Dim>(x, y);
        double slackTol = 1e-12 * std::abs(free);
        w.upper = std::max(w.upper, hMin - (free - gxy) - slackTol);
        // lower bound needs B(x, beta) inside the ball; redraw x there
        Point<Dim> xc = uniformInBall(dom, rng, R - kc.beta);
        if (xc == y) continue;
        double hc = freeSpaceGreen<Dim>(xc, y) - green(dom, xc, y);
        w.lower = std::max(w.lower, hc - hMax - 1e-12 * std::abs(freeSpaceGreen<Dim>(xc, y)));
      }
      part[b] = w;
    });
    Worst w;
    for (const auto& p : part) {
      w.symmetry = std::max(w.symmetry, p.symmetry);
      w.upper = std::max(w.upper, p.upper);
      w.lower = std::max(w.lower, p.lower);
    }
    checks.push_back(check("green symmetry", w.symmetry <= 1e-12, w.symmetry, 1e-12));
    checks.push_back(check(Dim == 2 ? "green upper bound g <= c_2 log(1/r) + ctilde" : "green upper bound g <= c_d r^{2-d}",
                           w.upper <= 0.0, w.upper, 0.0));
    checks.push_back(check(Dim == 2 ? "green lower bound g >= c_2 log(beta/r)" : "green lower bound g >= c_d (r^{2-d} - beta^{2-d})",
                           w.lower <= 0.0, w.lower, 0.0));
  }

  // harmonicity of k(., z) by centred second differences
  {
    double worst = 0.0;
    for (int i = 0; i < harmPoints; ++i) {
      Engine rng = stream(seed, 0x3000000ull + i);
      Point<Dim> z = uniformOnBoundary(dom, rng), x;
      do x = uniformInBall(dom, rng, 0.99 * R);
      while ((x - z).norm() < harmSep * R);
      worst = std::max(worst, harmonicResidual(dom, x, z, harmStep * R));
    }
    checks.push_back(check("poisson harmonicity (second differences)", worst <= 1e-4, worst, 1e-4));
  }

  // Harnack constant: closed form and monotonicity in a
  const double phi = harnackConstant(dom, a);
  {
    const double exact = std::pow((R + a) / (R - a), Dim);
    double rel = std::abs(phi - exact) / exact;
    checks.push_back(check("harnack constant equals ((R+a)/(R-a))^d", rel <= 1e-9, rel, 1e-9));
    double prev = 1.0, worstDrop = 0.0;
    for (int i = 1; i <= 40; ++i) {
      double v = harnackConstant(dom, 0.95 * R * i / 40);
      worstDrop = std::max(worstDrop, prev - v);
      prev = v;
    }
    checks.push_back(check("harnack constant nondecreasing in a", worstDrop <= 0.0, worstDrop, 0.0));
  }

  // 3-G estimate on two disjoint seeds
  const auto th1 = threeGEstimate(dom, thetaSamples, seed);
  const auto th2 = threeGEstimate(dom, thetaSamples, seed ^ 0x9e3779b97f4a7c15ull);
  {
    double rel = std::abs(th1.thetaHat - th2.thetaHat) / std::max(th1.thetaHat, th2.thetaHat);
    checks.push_back(check("3-G estimate finite", std::isfinite(th1.thetaHat) && std::isfinite(th2.thetaHat),
                           th1.thetaHat, 0.0));
    checks.push_back(check("3-G estimate two-seed stability", rel <= thetaTol, rel, thetaTol));
  }

  // K bounds c_d |x-x0|^{2-d} / g(x,x0) over the compact
  const auto gr = greenRatioConstants(dom, a);
  {
    double worst = 0.0;
    for (std::uint64_t i = 0; i < samples; ++i) {
      Engine rng = stream(seed, 0x4000000ull + i);
      Point<Dim> x = uniformInBall(dom, rng, a), x0 = uniformInBall(dom, rng, a);
      if (x == x0) continue;
      worst = std::max(worst, freeSpaceGreen<Dim>(x, x0) / green(dom, x, x0));
    }
    checks.push_back(check("K bounds c_d|x-x0|^{2-d}/g on the compact", worst <= gr.K, worst, gr.K));
    checks.push_back(check("K >= 1", gr.K >= 1.0, gr.K, 1.0));
  }

  const bool ok = allPassed(checks);
  Json report = ctx.provenance();
  report["domain"] = toJson(dom);
  report["parameters"] = opt;
  report["checks"] = checks;
  report["constants"] = Json{{"d", Dim},           {"radius", R},          {"a", a},
                             {"beta", kc.beta},    {"c_d", kc.c_d},        {"omega", kc.omega},
                             {"ctilde", kc.ctilde}, {"phi", phi},          {"theta_hat", th1.thetaHat},
                             {"theta_hat_second_seed", th2.thetaHat},      {"K", gr.K},
                             {"B", gr.B},          {"seed", seed}};
  report["passed"] = ok;
  ctx.writeJson("kernels_report.json", report);
  for (const auto& c : checks)
    spdlog::info("{} {}: {:.3e} (tol {:.3e})", c["passed"].get<bool>() ? "PASS" : "FAIL",
                 c["name"].get<std::string>(), c["value"].get<double>(), c["tolerance"].get<double>());
  return ok ? kPass : kCheckFailed;
}

}  // namespace

int cmdKernelsCheck(const RunContext& ctx) {
  return withDimension(ctx.config, [&]<int Dim>() { return kernelsCheck<Dim>(ctx); });
}

}  // namespace supermoment::cli
