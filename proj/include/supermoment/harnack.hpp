#pragma once

#include "supermoment/kernels.hpp"
#include "supermoment/moments.hpp"
#include "supermoment/parallel.hpp"
#include "supermoment/random.hpp"

#include <boost/math/special_functions/trigamma.hpp>

#include <cmath>
#include <string>
#include <vector>

namespace supermoment {

/// Concentric closed balls C_0 > C_1 > ... > C of radii
///   r_n = a + s sum_{k > n} 1/k^2,  s = 3 (R - a) / pi^2,
/// so that r_0 = (a + R)/2 and r_n - r_{n+1} = s/(n+1)^2. The gap condition
/// r_n - r_{n+1} > delta/(n+1)^2 then holds with delta = s / margin.
struct CompactNest {
  double radius = 1.0;
  double a = 0.0;
  double scale = 0.0;
  double margin = 1.05;
  double delta = 0.0;
  std::vector<double> radii;
};

template <int Dim>
CompactNest buildCompactNest(const BallDomain<Dim>& dom, double a, int depth, double margin = 1.05) {
  const double R = dom.radius();
  require(std::isfinite(a) && a > 0.0, "compact nest: a must be positive");
  require(a < R, "compact nest: a must be smaller than the domain radius");
  require(depth >= 1, "compact nest: depth must be >= 1");
  require(margin > 1.0, "compact nest: margin must exceed 1");
  CompactNest nest;
  nest.radius = R;
  nest.a = a;
  nest.margin = margin;
  nest.scale = 3.0 * (R - a) / sqr(std::numbers::pi);
  nest.delta = nest.scale / margin;
  for (int n = 0; n <= depth; ++n)
    nest.radii.push_back(a + nest.scale * boost::math::trigamma(static_cast<double>(n + 1)));
  for (int n = 0; n < depth; ++n) {
    require(nest.radii[n] > nest.radii[n + 1], "compact nest: radii must decrease");
    require(nest.radii[n] - nest.radii[n + 1] > nest.delta / sqr(n + 1.0), "compact nest: gap condition fails");
  }
  require(nest.radii.front() < R, "compact nest: r_0 must lie inside the domain");
  require(nest.radii.back() >= a, "compact nest: radii must stay above a");
  return nest;
}

enum class Provenance { Computed, Estimated, SafetyInflated };

inline const char* provenanceName(Provenance p) {
  switch (p) {
    case Provenance::Computed: return "computed";
    case Provenance::Estimated: return "estimated";
    case Provenance::SafetyInflated: return "safety-inflated";
  }
  return "computed";
}

struct LedgerEntry {
  std::string name;
  double value = 0.0;
  Provenance provenance = Provenance::Computed;
};

/// Every constant of the constructive bound with its origin.
struct ConstantLedger {
  int d = 3;
  double radius = 1.0;
  double a = 0.0;
  double r0 = 0.0;
  double delta = 0.0;
  double beta = 0.0;
  double c_d = 0.0;
  double ctilde = 0.0;
  double phi = 0.0;
  double thetaHat = 0.0;
  double safety = 2.0;
  double theta = 0.0;
  double K = 0.0;
  double B = 0.0;
  double M = 0.0;
  double N = 0.0;
  double Ktilde = 0.0;
  double Btilde = 0.0;
  double lambda = 0.0;
  /// n attaining the largest (2 (Ktilde + Btilde p(n)))^{1/n}.
  int bindingN = 1;
  /// Horizon of the lambda scan and of the replay.
  int horizon = 10000;

  std::vector<LedgerEntry> entries() const {
    using P = Provenance;
    return {{"d", static_cast<double>(d), P::Computed}, {"radius", radius, P::Computed},
            {"a", a, P::Computed},                      {"r0", r0, P::Computed},
            {"delta", delta, P::Computed},              {"beta", beta, P::Computed},
            {"c_d", c_d, P::Computed},                  {"ctilde", ctilde, P::Computed},
            {"phi", phi, P::Computed},                  {"thetaHat", thetaHat, P::Estimated},
            {"theta", theta, P::SafetyInflated},        {"K", K, P::Computed},
            {"B", B, P::Computed},                      {"M", M, P::Computed},
            {"N", N, P::Computed},                      {"Ktilde", Ktilde, P::SafetyInflated},
            {"Btilde", Btilde, P::SafetyInflated},      {"lambda", lambda, P::SafetyInflated}};
  }
};

namespace detail {

// n-dependence of the condition: n^{2(d-2)} for d >= 3, log n for d = 2.
inline double lambdaGrowth(int d, int n) {
  return d == 2 ? std::log(static_cast<double>(n)) : std::pow(static_cast<double>(n), 2 * (d - 2));
}

// Smallest value >= x with three significant digits.
inline double roundUp3(double x) {
  double unit = std::pow(10.0, std::floor(std::log10(x)) - 2);
  double r = std::ceil(x / unit - 1e-9) * unit;
  while (r < x) r += unit;
  return r;
}

// (K + B (ctilde + c_2 log M)) / M^2, the d = 2 first-term factor.
inline double planarFirstTerm(double K, double B, double ctilde, double c2, double M) {
  return (K + B * (ctilde + c2 * std::log(M))) / sqr(M);
}

}  // namespace detail

/// Constructive Harnack constant for the concentric compact ball of radius a:
/// nest, phi, K and B from the kernels module, theta = safety * thetaHat, then
/// M, N = 2M, Ktilde, Btilde and the smallest three-digit lambda with
/// lambda >= phi and lambda^n / 2 >= Ktilde + Btilde p(n) for n <= horizon.
template <int Dim>
ConstantLedger constructiveLambda(const BallDomain<Dim>& dom, double a, double thetaHat, double safety = 2.0,
                                  int horizon = 10000) {
  require(std::isfinite(thetaHat) && thetaHat > 0.0, "constructive lambda: thetaHat must be positive");
  require(std::isfinite(safety) && safety >= 1.0, "constructive lambda: safety factor must be >= 1");
  require(horizon >= 1, "constructive lambda: horizon must be >= 1");
  const CompactNest nest = buildCompactNest(dom, a, 1);
  ConstantLedger L;
  L.d = Dim;
  L.radius = dom.radius();
  L.a = a;
  L.r0 = nest.radii.front();
  L.delta = nest.delta;
  const KernelConstants<Dim> kc = kernelConstants(dom, L.r0);
  const GreenRatioConstants<Dim> gr = greenRatioConstants(dom, L.r0);
  L.beta = kc.beta;
  L.c_d = kc.c_d;
  L.ctilde = kc.ctilde;
  L.phi = harnackConstant(dom, L.r0);
  L.thetaHat = thetaHat;
  L.safety = safety;
  L.theta = safety * thetaHat;
  L.K = gr.K;
  L.B = gr.B;
  L.horizon = horizon;
  if constexpr (Dim == 2) {
    // the factor is decreasing on [1, inf) because K > B c_2 / 2: double, then bisect
    auto f = [&](double M) { return detail::planarFirstTerm(L.K, L.B, L.ctilde, L.c_d, M); };
    double hi = 1.0;
    while (f(hi) > 0.5) hi *= 2.0;
    double lo = hi == 1.0 ? 1.0 : 0.5 * hi;
    if (hi > 1.0) {
      for (int it = 0; it < 200 && hi - lo > 1e-12 * hi; ++it) {
        double mid = 0.5 * (lo + hi);
        (f(mid) > 0.5 ? lo : hi) = mid;
      }
    }
    L.M = hi;
    L.N = 2.0 * L.M;
    L.Ktilde = L.theta * (L.B * (1.0 + L.ctilde + L.c_d * std::log(L.N / L.delta)) + 1.0);
    L.Btilde = 2.0 * L.theta * L.B * L.c_d;
  } else {
    L.M = std::max(std::sqrt(2.0 * L.K), 1.0);
    L.N = 2.0 * L.M;
    L.Ktilde = L.theta * L.K / L.c_d;
    L.Btilde = L.theta * L.B * std::pow(L.N, Dim - 2) / std::pow(L.delta, Dim - 2);
  }
  double logNeed = std::log(L.phi);
  for (int n = 1; n <= horizon; ++n) {
    double v = (std::log(2.0) + std::log(L.Ktilde + L.Btilde * detail::lambdaGrowth(Dim, n))) / n;
    if (v > logNeed) logNeed = v, L.bindingN = n;
  }
  L.lambda = detail::roundUp3(std::exp(logNeed));
  return L;
}

struct LedgerCheck {
  std::string name;
  bool passed = false;
  std::string detail;
};

/// Re-derives every ledger invariant from the stored fields.
inline std::vector<LedgerCheck> replayLedger(const ConstantLedger& L) {
  std::vector<LedgerCheck> out;
  auto add = [&](std::string name, bool ok, std::string detail) { out.push_back({std::move(name), ok, std::move(detail)}); };
  const double tol = 1e-12;
  add("N = 2M", std::abs(L.N - 2.0 * L.M) <= tol * L.N, "N=" + std::to_string(L.N) + " M=" + std::to_string(L.M));
  if (L.d == 2) {
    double f = detail::planarFirstTerm(L.K, L.B, L.ctilde, L.c_d, L.M);
    add("M >= 1", L.M >= 1.0, "M=" + std::to_string(L.M));
    add("(K + B(ctilde + c_2 log M))/M^2 <= 1/2", f <= 0.5 + tol, "value=" + std::to_string(f));
    double kt = L.theta * (L.B * (1.0 + L.ctilde + L.c_d * std::log(L.N / L.delta)) + 1.0);
    add("Ktilde = theta(B(1 + ctilde + c_2 log(N/delta)) + 1)", std::abs(kt - L.Ktilde) <= 1e-10 * kt, "");
    double bt = 2.0 * L.theta * L.B * L.c_d;
    add("Btilde = 2 theta B c_2", std::abs(bt - L.Btilde) <= 1e-10 * bt, "");
  } else {
    add("M >= max(sqrt(2K), 1)", L.M >= std::max(std::sqrt(2.0 * L.K), 1.0) * (1.0 - tol),
        "M=" + std::to_string(L.M) + " K=" + std::to_string(L.K));
    double kt = L.theta * L.K / L.c_d;
    add("Ktilde = theta K / c_d", std::abs(kt - L.Ktilde) <= 1e-10 * kt, "");
    double bt = L.theta * L.B * std::pow(L.N, L.d - 2) / std::pow(L.delta, L.d - 2);
    add("Btilde = theta B N^{d-2} / delta^{d-2}", std::abs(bt - L.Btilde) <= 1e-10 * bt, "");
  }
  add("theta = safety * thetaHat", std::abs(L.theta - L.safety * L.thetaHat) <= tol * L.theta, "");
  add("lambda >= phi", L.lambda >= L.phi, "lambda=" + std::to_string(L.lambda) + " phi=" + std::to_string(L.phi));
  int worst = 0;
  double worstSlack = std::numeric_limits<double>::infinity();
  for (int n = 1; n <= L.horizon; ++n) {
    double lhs = n * std::log(L.lambda) - std::log(2.0);
    double rhs = std::log(L.Ktilde + L.Btilde * detail::lambdaGrowth(L.d, n));
    if (lhs - rhs < worstSlack) worstSlack = lhs - rhs, worst = n;
  }
  add("lambda^n / 2 >= Ktilde + Btilde p(n) for n <= " + std::to_string(L.horizon), worstSlack >= 0.0,
      "tightest n=" + std::to_string(worst) + " log slack=" + std::to_string(worstSlack));
  return out;
}

template <int Dim>
struct HarnackTrial {
  Point<Dim> x = Point<Dim>::Zero();
  Point<Dim> x0 = Point<Dim>::Zero();
  std::vector<Point<Dim>> z;
  double rhoX = 0.0;
  double rhoX0 = 0.0;
  double ratio = 0.0;
  bool adversarial = false;
};

template <int Dim>
struct HarnackLevelReport {
  int n = 0;
  int trials = 0;
  double maxRatio = 0.0;
  double root = 0.0;
  HarnackTrial<Dim> argmax;
  std::vector<HarnackTrial<Dim>> all;
};

/// Coarse grid for ratio sweeps; ratios are accurate to about 1e-2 relative.
inline GridParams harnackGridParams() {
  GridParams p;
  p.radialCells = 3;
  p.angularCells = 1;
  p.order = 3;
  p.boundaryDepth = 2;
  return p;
}

template <int Dim>
struct EmpiricalOptions {
  GridParams grid = harnackGridParams();
  /// Minimum pairwise distance of the sampled boundary points.
  double minSeparation = 0.1;
  /// Adds the trials with x on the compact boundary nearest z_1, x0 antipodal.
  bool adversarial = true;
};

namespace detail {

template <int Dim>
std::vector<Point<Dim>> separatedBoundaryPoints(const BallDomain<Dim>& dom, int n, double minSep, Engine& rng) {
  std::vector<Point<Dim>> z;
  for (int attempts = 0; static_cast<int>(z.size()) < n; ++attempts) {
    if (attempts > 100000) throw InputError("cannot place boundary points with the requested separation");
    Point<Dim> p = uniformOnBoundary(dom, rng);
    bool ok = true;
    for (const auto& q : z) ok = ok && (p - q).norm() >= minSep;
    if (ok) z.push_back(p);
  }
  return z;
}

// Unit vector at angle t from u, turned toward v (v not parallel to u).
template <int Dim>
Point<Dim> rotateToward(const Point<Dim>& u, const Point<Dim>& v, double t) {
  Point<Dim> w = v - v.dot(u) * u;
  w.normalize();
  return std::cos(t) * u + std::sin(t) * w;
}

template <int Dim>
void evaluateTrial(const BallDomain<Dim>& dom, HarnackTrial<Dim>& t, const GridParams& params) {
  const int n = static_cast<int>(t.z.size());
  if (n == 1) {
    t.rhoX = poissonUnchecked(dom, t.x, t.z[0]);
    t.rhoX0 = poissonUnchecked(dom, t.x0, t.z[0]);
  } else {
    BoundaryConfig<Dim> cfg(dom, t.z);
    auto grid = std::make_shared<const VolumeGrid<Dim>>(dom, t.z, params);
    RhoOptions opts;
    opts.maxLevel = n - 1;
    RhoTable<Dim> table = computeRhoTables(dom, cfg, grid, opts);
    RhoEvaluator<Dim> rho(table, cfg.fullKey());
    t.rhoX = rho(t.x);
    t.rhoX0 = (t.x0 - t.x).norm() == 0.0 ? t.rhoX : rho(t.x0);
  }
  t.ratio = t.rhoX / t.rhoX0;
}

}  // namespace detail

/// Largest ratio rho(x, z)/rho(x0, z) over sampled x, x0 in the compact ball
/// of radius a and separated boundary points z, for every n <= nMax. Trial t
/// of level n draws from stream(seed, n * 2^32 + t); adversarial trials put x
/// on the compact boundary nearest z_1 and x0 opposite, once with the other
/// points clustered around z_1 and once with them random. Level 1 also gets
/// the forced trial x = x0.
template <int Dim>
std::vector<HarnackLevelReport<Dim>> empiricalLambda(const BallDomain<Dim>& dom, double a, int nMax, int trials,
                                                     std::uint64_t seed, const EmpiricalOptions<Dim>& opts = {}) {
  require(std::isfinite(a) && a > 0.0 && a < dom.radius(), "empirical lambda: a must lie in (0, radius)");
  require(nMax >= 1 && nMax <= kMaxConfigPoints, "empirical lambda: nMax must lie in [1, 8]");
  require(trials >= 10, "empirical lambda: at least 10 trials per n");
  opts.grid.validate();
  const Point<Dim> c = dom.center();
  std::vector<HarnackLevelReport<Dim>> out;
  for (int n = 1; n <= nMax; ++n) {
    std::vector<HarnackTrial<Dim>> list;
    for (int t = 0; t < trials; ++t) {
      Engine rng = stream(seed, (static_cast<std::uint64_t>(n) << 32) + static_cast<std::uint64_t>(t));
      HarnackTrial<Dim> tr;
      tr.x = uniformInBall(dom, rng, a);
      tr.x0 = uniformInBall(dom, rng, a);
      tr.z = detail::separatedBoundaryPoints(dom, n, opts.minSeparation, rng);
      list.push_back(tr);
    }
    if (opts.adversarial) {
      Engine rng = stream(seed, (static_cast<std::uint64_t>(n) << 32) + 0xffffffffu);
      for (int variant = 0; variant < 2; ++variant) {
        HarnackTrial<Dim> tr;
        tr.adversarial = true;
        Point<Dim> u = uniformOnUnitSphere<Dim>(rng);
        tr.z.push_back(c + dom.radius() * u);
        if (variant == 0) {
          // neighbours on a small circle around z_1, pairwise at least minSeparation apart
          Point<Dim> v = uniformOnUnitSphere<Dim>(rng);
          const double step = 1.05 * opts.minSeparation / dom.radius();
          for (int i = 1; i < n; ++i) {
            Point<Dim> w = detail::rotateToward<Dim>(u, v, step * ((i + 1) / 2));
            if (i % 2 == 0) w = detail::rotateToward<Dim>(u, -v, step * (i / 2));
            tr.z.push_back(c + dom.radius() * w);
          }
        } else {
          auto rest = detail::separatedBoundaryPoints(dom, n, opts.minSeparation, rng);
          for (int i = 1; i < n; ++i) tr.z.push_back(rest[i]);
        }
        tr.x = c + a * u;
        tr.x0 = c - a * u;
        list.push_back(tr);
      }
    }
    if (n == 1) {
      HarnackTrial<Dim> tr;
      tr.adversarial = true;
      Engine rng = stream(seed, 0xfffffffffull);
      tr.x = uniformInBall(dom, rng, a);
      tr.x0 = tr.x;
      tr.z = {uniformOnBoundary(dom, rng)};
      list.push_back(tr);
    }
    // levels above one are parallel inside the rho tables
    if (n == 1) {
      parallelFor(list.size(), [&](std::size_t i) { detail::evaluateTrial(dom, list[i], opts.grid); });
    } else {
      for (auto& tr : list) detail::evaluateTrial(dom, tr, opts.grid);
    }
    HarnackLevelReport<Dim> rep;
    rep.n = n;
    rep.trials = static_cast<int>(list.size());
    for (const auto& tr : list)
      if (tr.ratio > rep.maxRatio) rep.maxRatio = tr.ratio, rep.argmax = tr;
    rep.root = std::pow(rep.maxRatio, 1.0 / n);
    rep.all = std::move(list);
    out.push_back(std::move(rep));
  }
  return out;
}

}  // namespace supermoment
