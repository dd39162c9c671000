#pragma once

#include "supermoment/moments.hpp"
#include "supermoment/parallel.hpp"
#include "supermoment/random.hpp"

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

namespace supermoment {

// Branching Brownian particles approximating the exit measure of
// super-Brownian motion from a ball. Each unit of initial mass carries N
// particles of mass 1/N. Particles take Gaussian steps of variance h per
// coordinate; after a step that stays inside, a particle branches with
// probability gamma N h into 0 or 2 copies (probability 1/2 each). A step that
// leaves the ball freezes the particle at the point where the segment meets
// the sphere.

template <int Dim>
struct SimParams {
  BallDomain<Dim> domain;
  DiscreteMeasure<Dim> mu;
  int particlesPerUnitMass = 1000;
  double branchRate = 0.0;
  double stepSize = 1e-4;
  int replicates = 100;
  std::uint64_t seed = 0;
  /// Total particle steps allowed per replicate.
  std::uint64_t stepBudget = 100'000'000;

  double branchProbability() const { return branchRate * particlesPerUnitMass * stepSize; }

  void validate() const {
    mu.validate(domain);
    require(particlesPerUnitMass >= 1, "simulation: particlesPerUnitMass must be >= 1");
    require(std::isfinite(branchRate) && branchRate >= 0.0, "simulation: branchRate must be >= 0");
    require(std::isfinite(stepSize) && stepSize > 0.0, "simulation: stepSize must be positive");
    require(stepSize <= 1e-3 * sqr(domain.radius()), "simulation: stepSize must not exceed 1e-3 radius^2");
    require(branchProbability() <= 1.0, "simulation: branchRate * N * stepSize must not exceed 1");
    require(replicates >= 1, "simulation: replicates must be >= 1");
    require(stepBudget >= 1, "simulation: stepBudget must be >= 1");
  }
};

template <int Dim>
struct ExitMeasure {
  std::vector<Point<Dim>> atoms;
  double atomMass = 0.0;
  std::uint64_t initialParticles = 0;
  std::uint64_t splits = 0;
  std::uint64_t deaths = 0;
  std::uint64_t steps = 0;

  double totalMass() const { return atomMass * static_cast<double>(atoms.size()); }

  template <class Fn>
  double pairing(Fn&& f) const {
    double s = 0.0;
    for (const auto& z : atoms) s += f(z);
    return atomMass * s;
  }
};

struct MomentEstimate {
  double value = 0.0;
  double standardError = 0.0;
  int replicates = 0;
};

namespace detail {

// Point where the segment p -> q leaves the ball, placed on the sphere.
template <int Dim>
Point<Dim> sphereCrossing(const BallDomain<Dim>& dom, const Point<Dim>& p, const Point<Dim>& q) {
  Point<Dim> u = p - dom.center();
  Point<Dim> step = q - p;
  double a = step.squaredNorm();
  double b = 2.0 * u.dot(step);
  double c = u.squaredNorm() - sqr(dom.radius());
  double disc = std::sqrt(std::max(0.0, b * b - 4.0 * a * c));
  double t = b >= 0.0 ? -2.0 * c / (b + disc) : (disc - b) / (2.0 * a);
  t = std::clamp(t, 0.0, 1.0);
  Point<Dim> hit = u + t * step;
  double n = hit.norm();
  if (n == 0.0) return dom.center() + dom.radius() * step.normalized();
  return dom.center() + (dom.radius() / n) * hit;
}

inline MomentEstimate summarize(const std::vector<double>& values) {
  MomentEstimate e;
  e.replicates = static_cast<int>(values.size());
  if (values.empty()) return e;
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= static_cast<double>(values.size());
  e.value = mean;
  if (values.size() > 1) {
    double var = 0.0;
    for (double v : values) var += sqr(v - mean);
    var /= static_cast<double>(values.size() - 1);
    e.standardError = std::sqrt(var / static_cast<double>(values.size()));
  }
  return e;
}

}  // namespace detail

/// Offspring count after one step for a uniform draw u: 0 or 2 with
/// probability p/2 each, otherwise 1 (no event). The mean is exactly 1.
inline int offspringCount(double u, double p) {
  if (u < 0.5 * p) return 0;
  if (u < p) return 2;
  return 1;
}

/// One replicate, drawn from stream(seed, replicateIndex). Particles are run
/// one at a time in a fixed depth-first order.
template <int Dim>
ExitMeasure<Dim> sampleExitMeasure(const SimParams<Dim>& params, std::uint64_t replicateIndex) {
  params.validate();
  const auto& dom = params.domain;
  const int N = params.particlesPerUnitMass;
  const double p = params.branchProbability();
  const double sigma = std::sqrt(params.stepSize);
  Engine rng = stream(params.seed, replicateIndex);
  boost::random::normal_distribution<double> normal;

  ExitMeasure<Dim> out;
  out.atomMass = 1.0 / N;
  std::vector<Point<Dim>> stack;
  for (std::size_t a = params.mu.points.size(); a-- > 0;) {
    auto count = static_cast<std::uint64_t>(std::ceil(N * params.mu.masses[a] - 1e-9));
    for (std::uint64_t i = 0; i < count; ++i) stack.push_back(params.mu.points[a]);
    out.initialParticles += count;
  }
  const double R2 = sqr(dom.radius());
  while (!stack.empty()) {
    Point<Dim> x = stack.back();
    stack.pop_back();
    for (;;) {
      if (++out.steps > params.stepBudget)
        throw BudgetExceeded("simulation: step budget of " + std::to_string(params.stepBudget) +
                             " particle steps exceeded");
      Point<Dim> y;
      for (int k = 0; k < Dim; ++k) y[k] = x[k] + sigma * normal(rng);
      if ((y - dom.center()).squaredNorm() >= R2) {
        out.atoms.push_back(detail::sphereCrossing(dom, x, y));
        break;
      }
      x = y;
      if (p > 0.0) {
        int k = offspringCount(uniform01(rng), p);
        if (k == 0) {
          ++out.deaths;
          break;
        }
        if (k == 2) {
          ++out.splits;
          stack.push_back(x);
        }
      }
    }
  }
  return out;
}

/// Sample means of products of pairings <X, f_i> over replicates. Each entry
/// of `products` lists function indices; an empty list is the constant 1.
template <int Dim>
std::vector<MomentEstimate> estimateMoments(const SimParams<Dim>& params,
                                            const std::vector<BoundaryFunction<Dim>>& fs,
                                            const std::vector<std::vector<int>>& products) {
  params.validate();
  for (const auto& prod : products)
    for (int i : prod) require(i >= 0 && i < static_cast<int>(fs.size()), "product index out of range");
  const std::size_t reps = static_cast<std::size_t>(params.replicates);
  std::vector<std::vector<double>> values(products.size(), std::vector<double>(reps));
  parallelFor(reps, [&](std::size_t r) {
    ExitMeasure<Dim> x = sampleExitMeasure(params, r);
    std::vector<double> pair(fs.size());
    for (std::size_t i = 0; i < fs.size(); ++i) pair[i] = x.pairing(fs[i]);
    for (std::size_t k = 0; k < products.size(); ++k) {
      double v = 1.0;
      for (int i : products[k]) v *= pair[i];
      values[k][r] = v;
    }
  });
  std::vector<MomentEstimate> out;
  for (const auto& v : values) out.push_back(detail::summarize(v));
  return out;
}

/// Sample mean and standard error of prod_i <X, f_i>.
template <int Dim>
MomentEstimate estimateMoment(const SimParams<Dim>& params, const std::vector<BoundaryFunction<Dim>>& fs) {
  std::vector<int> all;
  for (std::size_t i = 0; i < fs.size(); ++i) all.push_back(static_cast<int>(i));
  return estimateMoments(params, fs, {all})[0];
}

/// Estimate of E <X,1>^2 from the genealogy of each replicate. With Z exits,
/// n0 initial particles and S splits, (Z + n0(n0 - 1) + 2S) / N^2 is unbiased
/// for E <X,1>^2: ordered pairs of exits either share a particle, descend
/// from distinct roots, or separate at a split, and under critical branching
/// the two subtrees of a split have independent unit-mean exit counts.
template <int Dim>
MomentEstimate genealogicalSecondMoment(const SimParams<Dim>& params) {
  params.validate();
  const std::size_t reps = static_cast<std::size_t>(params.replicates);
  std::vector<double> values(reps);
  const double N2 = sqr(static_cast<double>(params.particlesPerUnitMass));
  parallelFor(reps, [&](std::size_t r) {
    ExitMeasure<Dim> x = sampleExitMeasure(params, r);
    double n0 = static_cast<double>(x.initialParticles);
    values[r] = (static_cast<double>(x.atoms.size()) + n0 * (n0 - 1.0) + 2.0 * static_cast<double>(x.splits)) / N2;
  });
  return detail::summarize(values);
}

struct CalibrationResult {
  double gamma = 0.0;
  /// Quadrature value of E_{delta_0} <X,1>^2.
  double target = 0.0;
  /// Estimated second moment at gamma.
  MomentEstimate achieved;
  double lower = 0.0;
  double upper = 0.0;
  int iterations = 0;
  /// Mean number of in-ball steps per particle of the unbranched walk.
  double meanInsideSteps = 0.0;
};

/// Branch rate gamma* at which the simulated E_{delta_0} <X,1>^2 equals the
/// quadrature value 1 + 2 int g(0,y) dy, found by bisection to `relTol`
/// relative bracket width.
///
/// The second moment is estimated through the genealogical identity
/// E <X,1>^2 = (E Z + n0 (n0 - 1) + 2 E S) / N^2. Every in-ball step tests for
/// a split with probability p/2 and, because branching is critical, the
/// expected number of such tests equals n0 times the mean number of in-ball
/// steps of a single unbranched walk. Hence 2 E S = p n0 E T_0 and
///   E <X,1>^2 = 1 + gamma h E T_0  for mu = delta_0 with n0 = N,
/// which is estimated once from unbranched walks (replicate r on stream
/// (seed, r)) and reused at every bisection point.
template <int Dim>
CalibrationResult calibrateBranchRate(const BallDomain<Dim>& dom, int N, double h, int replicates,
                                      std::uint64_t seed, double relTol = 0.02) {
  require(relTol > 0.0 && relTol < 1.0, "calibration: relTol must lie in (0, 1)");
  require(replicates >= 2, "calibration: at least 2 replicates required");
  SimParams<Dim> params;
  params.domain = dom;
  params.mu.points = {dom.center()};
  params.mu.masses = {1.0};
  params.particlesPerUnitMass = N;
  params.stepSize = h;
  params.replicates = replicates;
  params.seed = seed;
  params.branchRate = 0.0;
  params.validate();

  CalibrationResult res;
  FunctionalMomentOptions fo;
  fo.grid.boundaryDepth = 0;
  auto one = [](const Point<Dim>&) { return 1.0; };
  res.target = FunctionalMoments<Dim>(dom, {one, one}, fo).moment(params.mu);

  const std::size_t reps = static_cast<std::size_t>(replicates);
  std::vector<double> inside(reps);
  parallelFor(reps, [&](std::size_t r) {
    ExitMeasure<Dim> x = sampleExitMeasure(params, r);
    inside[r] = static_cast<double>(x.steps - x.initialParticles) / static_cast<double>(x.initialParticles);
  });
  auto estimate = [&](double gamma) {
    std::vector<double> v(reps);
    for (std::size_t r = 0; r < reps; ++r) v[r] = 1.0 + gamma * h * inside[r];
    return detail::summarize(v);
  };
  res.meanInsideSteps = detail::summarize(inside).value;

  const double gammaMax = 1.0 / (N * h);
  double lo = 0.0, hi = std::min(1.0, gammaMax);
  while (estimate(hi).value < res.target) {
    if (hi >= gammaMax)
      throw std::runtime_error("calibration: no bracket, the second moment stays below the target up to gamma = " +
                               std::to_string(gammaMax));
    lo = hi;
    hi = std::min(2.0 * hi, gammaMax);
    ++res.iterations;
  }
  while (hi - lo > relTol * 0.5 * (hi + lo)) {
    double mid = 0.5 * (lo + hi);
    if (estimate(mid).value < res.target) lo = mid;
    else hi = mid;
    ++res.iterations;
  }
  res.lower = lo;
  res.upper = hi;
  res.gamma = 0.5 * (lo + hi);
  res.achieved = estimate(res.gamma);
  return res;
}

}  // namespace supermoment
