#pragma once

#include "supermoment/ball.hpp"
#include "supermoment/parallel.hpp"
#include "supermoment/random.hpp"

#include <algorithm>
#include <cstdint>
#include <limits>
#include <optional>
#include <vector>

namespace supermoment {

// Kernel conventions. g is the occupation density of Brownian motion with
// generator (1/2)Laplacian killed on leaving the ball, so (1/2) Lap_y g(x,y) =
// -delta_x and  G f(x) = E_x int_0^tau f(B_t) dt. That makes g twice the usual
// Laplacian Green's function: c_3 = 1/(2 pi), c_2 = 1/pi. k is the harmonic
// measure density, normalised so that it integrates to one over the sphere.

/// Coefficient of |x-y|^{2-d} in g (of log(1/|x-y|) when d = 2).
inline double greenCoefficient(int d) {
  return d == 2 ? 2.0 / unitSphereArea(2) : 2.0 / ((d - 2) * unitSphereArea(d));
}

template <int Dim>
struct KernelConstants {
  double c_d = greenCoefficient(Dim);
  double omega = unitSphereArea(Dim);
  /// dist(C_0, boundary) clipped to 1, for a concentric compact C_0.
  double beta = 1.0;
  /// Additive constant of the d = 2 upper bound g <= c_2 log(1/|x-y|) + ctilde.
  double ctilde = 0.0;
};

template <int Dim>
KernelConstants<Dim> kernelConstants(const BallDomain<Dim>& dom, double compactRadius) {
  require(compactRadius >= 0.0 && compactRadius < dom.radius(),
          "compact radius must lie in [0, radius)");
  KernelConstants<Dim> kc;
  kc.beta = std::min(dom.radius() - compactRadius, 1.0);
  if constexpr (Dim == 2) kc.ctilde = kc.c_d * std::max(0.0, std::log(2.0 * dom.radius()));
  return kc;
}

namespace detail {

// Unit-ball Green function from a = |u-v|^2 and b = (1-|u|^2)(1-|v|^2); the
// image term uses |u|^2|v|^2 - 2u.v + 1 = a + b.
template <int Dim>
inline double unitGreen(double a, double b) {
  constexpr double c = [] {
    if constexpr (Dim == 2) return 1.0 / std::numbers::pi;
    else if constexpr (Dim == 3) return 0.5 / std::numbers::pi;
    else return 0.0;
  }();
  if constexpr (Dim == 2) {
    return 0.5 * c * std::log1p(b / a);
  } else if constexpr (Dim == 3) {
    double sa = std::sqrt(a), sab = std::sqrt(a + b);
    return c * b / (sa * sab * (sa + sab));
  } else {
    double e = 0.5 * (2 - Dim);
    return greenCoefficient(Dim) * std::pow(a, e) * -std::expm1(e * std::log1p(b / a));
  }
}

template <int Dim>
inline double greenScale(double radius) {
  if constexpr (Dim == 2) return 1.0;
  else return std::pow(radius, 2 - Dim);
}

}  // namespace detail

/// g(x,y) without domain checks; x != y, both interior.
template <int Dim>
double greenUnchecked(const BallDomain<Dim>& dom, const Point<Dim>& x, const Point<Dim>& y) {
  Point<Dim> u = dom.toUnit(x), v = dom.toUnit(y);
  double a = (u - v).squaredNorm();
  double b = (1.0 - u.squaredNorm()) * (1.0 - v.squaredNorm());
  return detail::greenScale<Dim>(dom.radius()) * detail::unitGreen<Dim>(a, b);
}

template <int Dim>
double green(const BallDomain<Dim>& dom, const Point<Dim>& x, const Point<Dim>& y) {
  dom.requireInterior(x, "green: x");
  dom.requireInterior(y, "green: y");
  if (x == y) throw InputError("green: x and y must differ");
  return greenUnchecked(dom, x, y);
}

/// k(x,z) without domain checks.
template <int Dim>
double poissonUnchecked(const BallDomain<Dim>& dom, const Point<Dim>& x, const Point<Dim>& z) {
  double R = dom.radius();
  double num = R * R - (x - dom.center()).squaredNorm();
  return num / (unitSphereArea(Dim) * R * std::pow((x - z).norm(), Dim));
}

template <int Dim>
double poisson(const BallDomain<Dim>& dom, const Point<Dim>& x, const Point<Dim>& z) {
  dom.requireInterior(x, "poisson: x");
  dom.requireBoundary(z, "poisson: z");
  return poissonUnchecked(dom, x, z);
}

/// E_x tau = int_D g(x,y) dy = (R^2 - |x|^2) / d.
template <int Dim>
double meanExitTime(const BallDomain<Dim>& dom, const Point<Dim>& x) {
  return (sqr(dom.radius()) - (x - dom.center()).squaredNorm()) / Dim;
}

/// c_d |x-y|^{2-d}, or c_2 log(1/|x-y|) in the plane.
template <int Dim>
double freeSpaceGreen(const Point<Dim>& x, const Point<Dim>& y) {
  double r = (x - y).norm();
  if constexpr (Dim == 2) return greenCoefficient(2) * std::log(1.0 / r);
  else return greenCoefficient(Dim) * std::pow(r, 2 - Dim);
}

/// sup k(x,z)/k(x0,z) over x, x0 in the concentric closed ball of radius a and
/// z on the sphere. By rotation invariance z can be fixed and, since k(.,z) is
/// harmonic, the extremes sit on the axis through z; a 1-d grid search with
/// golden-section refinement finds them.
template <int Dim>
double harnackConstant(const BallDomain<Dim>& dom, double a) {
  const double R = dom.radius();
  require(std::isfinite(a) && a >= 0.0, "harnackConstant: compact radius must be >= 0");
  require(a < R, "harnackConstant: compact radius must be smaller than the domain radius");
  if (a == 0.0) return 1.0;

  // log k along the axis x = t * zhat, up to the constant log(omega R).
  auto logk = [&](double t) { return std::log(R * R - t * t) - Dim * std::log(R - t); };

  auto extremum = [&](double sign) {
    constexpr int cells = 256;
    int best = 0;
    double bestVal = -std::numeric_limits<double>::infinity();
    for (int i = 0; i <= cells; ++i) {
      double v = sign * logk(-a + 2.0 * a * i / cells);
      if (v > bestVal) bestVal = v, best = i;
    }
    double lo = -a + 2.0 * a * std::max(best - 1, 0) / cells;
    double hi = -a + 2.0 * a * std::min(best + 1, cells) / cells;
    const double invPhi = 0.5 * (std::sqrt(5.0) - 1.0);
    double m1 = hi - invPhi * (hi - lo), m2 = lo + invPhi * (hi - lo);
    double f1 = sign * logk(m1), f2 = sign * logk(m2);
    for (int it = 0; it < 100 && hi - lo > 1e-15 * R; ++it) {
      if (f1 < f2) {
        lo = m1, m1 = m2, f1 = f2, m2 = lo + invPhi * (hi - lo), f2 = sign * logk(m2);
      } else {
        hi = m2, m2 = m1, f2 = f1, m1 = hi - invPhi * (hi - lo), f1 = sign * logk(m1);
      }
    }
    return std::max({bestVal, f1, f2});
  };

  return std::exp(extremum(+1.0) + extremum(-1.0));
}

/// Ratio of the two sides of the 3-G inequality without theta:
///   [g(x,y)/g(x0,y)] / [(|x-y|^{2-d} + |x-x0|^{2-d}) / g(x,x0)]      (d >= 3)
///   [g(x,y)/g(x0,y)] / [(g(x,y) + g(x,x0) + 1) / g(x,x0)]            (d = 2)
/// Empty when two of the points coincide.
template <int Dim>
std::optional<double> threeGRatio(const BallDomain<Dim>& dom, const Point<Dim>& x,
                                  const Point<Dim>& x0, const Point<Dim>& y) {
  const double tiny = 1e-12 * dom.radius();
  if ((x - x0).norm() <= tiny || (x - y).norm() <= tiny || (x0 - y).norm() <= tiny)
    return std::nullopt;
  double gxy = greenUnchecked(dom, x, y);
  double gx0y = greenUnchecked(dom, x0, y);
  double gxx0 = greenUnchecked(dom, x, x0);
  double rhs;
  if constexpr (Dim == 2) rhs = (gxy + gxx0 + 1.0) / gxx0;
  else rhs = (std::pow((x - y).norm(), 2 - Dim) + std::pow((x - x0).norm(), 2 - Dim)) / gxx0;
  return (gxy / gx0y) / rhs;
}

template <int Dim>
struct ThreeGEstimate {
  double thetaHat = 0.0;
  Point<Dim> x = Point<Dim>::Zero(), x0 = Point<Dim>::Zero(), y = Point<Dim>::Zero();
  std::uint64_t samples = 0;
  std::uint64_t seed = 0;
};

/// Empirical lower bound for the 3-G constant: the largest threeGRatio over
/// uniformly drawn triples. Sample i uses stream(seed, i); coincident draws are
/// redrawn from the same stream.
template <int Dim>
ThreeGEstimate<Dim> threeGEstimate(const BallDomain<Dim>& dom, std::uint64_t sampleCount,
                                   std::uint64_t seed) {
  require(sampleCount >= 1, "threeGEstimate: sampleCount must be >= 1");
  constexpr std::uint64_t block = 4096;
  const std::uint64_t blocks = (sampleCount + block - 1) / block;
  std::vector<ThreeGEstimate<Dim>> partial(blocks);
  parallelFor(blocks, [&](std::size_t b) {
    ThreeGEstimate<Dim> best;
    best.thetaHat = -1.0;
    for (std::uint64_t i = b * block; i < std::min<std::uint64_t>(sampleCount, (b + 1) * block); ++i) {
      Engine rng = stream(seed, i);
      for (;;) {
        Point<Dim> x = uniformInBall(dom, rng), x0 = uniformInBall(dom, rng), y = uniformInBall(dom, rng);
        if (auto r = threeGRatio(dom, x, x0, y)) {
          if (*r > best.thetaHat) best.thetaHat = *r, best.x = x, best.x0 = x0, best.y = y;
          break;
        }
      }
    }
    partial[b] = best;
  });
  ThreeGEstimate<Dim> out = partial.front();
  for (const auto& p : partial)
    if (p.thetaHat > out.thetaHat) out = p;
  out.samples = sampleCount;
  out.seed = seed;
  return out;
}

template <int Dim>
struct GreenRatioConstants {
  double K = 0.0;
  double B = 0.0;
  double beta = 0.0;
  /// min g over C_0 x C_0 with |x - x0| >= beta/2.
  double farMinimum = 0.0;
  /// Lower bound for g on the diagonal strip |x - x0| < beta/2.
  double nearFloor = 0.0;
};

/// B bounds 1/g(x,x0) and K bounds c_d|x-x0|^{2-d}/g(x,x0) (c_2 log(1/|x-x0|)/g
/// in the plane) over the concentric compact ball C_0 of the given radius.
template <int Dim>
GreenRatioConstants<Dim> greenRatioConstants(const BallDomain<Dim>& dom, double compactRadius) {
  const KernelConstants<Dim> kc = kernelConstants(dom, compactRadius);
  require(compactRadius > 0.0, "greenRatioConstants: compact radius must be positive");
  const double R = dom.radius(), beta = kc.beta, cd = kc.c_d;
  GreenRatioConstants<Dim> out;
  out.beta = beta;

  // g(x,x0) depends only on |x|, |x0| and the angle between them.
  constexpr int radial = 48, angular = 96;
  double farMin = std::numeric_limits<double>::infinity();
  for (int i = 0; i <= radial; ++i) {
    double s1 = compactRadius * i / radial;
    for (int j = 0; j <= radial; ++j) {
      double s2 = compactRadius * j / radial;
      for (int k = 0; k <= angular; ++k) {
        double ang = std::numbers::pi * k / angular;
        Point<Dim> x = dom.center(), x0 = dom.center();
        x[0] += s1;
        x0[0] += s2 * std::cos(ang);
        x0[1] += s2 * std::sin(ang);
        if ((x - x0).norm() < 0.5 * beta) continue;
        farMin = std::min(farMin, greenUnchecked(dom, x, x0));
      }
    }
  }
  if constexpr (Dim == 2) {
    out.nearFloor = cd * std::log(2.0);
  } else {
    out.nearFloor = cd * (std::pow(0.5 * beta, 2 - Dim) - std::pow(beta, 2 - Dim));
  }
  out.farMinimum = farMin;
  out.B = 1.0 / std::min(farMin, out.nearFloor);
  if constexpr (Dim == 2) {
    out.K = std::max(out.B * cd * std::log(2.0 / beta), 1.0 + out.B * cd * std::log(1.0 / beta));
  } else {
    out.K = std::max(out.B * cd * std::pow(0.5 * beta, 2 - Dim),
                     1.0 + out.B * cd * std::pow(beta, 2 - Dim));
  }
  (void)R;
  return out;
}

}  // namespace supermoment
