#include <supermoment/kernels.hpp>
#include <supermoment/quadrature.hpp>

#include <gtest/gtest.h>

#include <boost/random/normal_distribution.hpp>

using namespace supermoment;

namespace {

// Green function of (1/2)Laplacian on the unit ball by the Kelvin image
// x* = x / |x|^2, written directly from the image construction.
double kelvinGreen3(const Point<3>& x, const Point<3>& y) {
  const double c = 1.0 / (2.0 * std::numbers::pi);
  if (x.norm() < 1e-14) return c * (1.0 / y.norm() - 1.0);
  Point<3> xs = x / x.squaredNorm();
  return c * (1.0 / (x - y).norm() - 1.0 / (x.norm() * (y - xs).norm()));
}

double kelvinGreen2(const Point<2>& x, const Point<2>& y) {
  const double c = 1.0 / std::numbers::pi;
  if (x.norm() < 1e-14) return c * std::log(1.0 / y.norm());
  Point<2> xs = x / x.squaredNorm();
  return c * std::log(x.norm() * (y - xs).norm() / (x - y).norm());
}

template <int Dim>
Point<Dim> pt(std::initializer_list<double> v) {
  Point<Dim> p;
  int i = 0;
  for (double c : v) p[i++] = c;
  return p;
}

}  // namespace

TEST(Green, MatchesKelvinImageUnitBall3d) {
  BallDomain<3> dom;
  Engine rng = stream(101, 0);
  for (int i = 0; i < 2000; ++i) {
    Point<3> x = uniformInBall(dom, rng), y = uniformInBall(dom, rng);
    double ref = kelvinGreen3(x, y);
    EXPECT_NEAR(green(dom, x, y), ref, 1e-11 * std::max(1.0, std::abs(ref)));
  }
  EXPECT_NEAR(green(dom, Point<3>(Point<3>::Zero()), pt<3>({0.5, 0, 0})), (2.0 - 1.0) / (2.0 * std::numbers::pi), 1e-15);
}

TEST(Green, MatchesKelvinImageUnitDisc) {
  BallDomain<2> dom;
  Engine rng = stream(102, 0);
  for (int i = 0; i < 2000; ++i) {
    Point<2> x = uniformInBall(dom, rng), y = uniformInBall(dom, rng);
    double ref = kelvinGreen2(x, y);
    EXPECT_NEAR(green(dom, x, y), ref, 1e-11 * std::max(1.0, std::abs(ref)));
  }
}

TEST(Green, ScalesWithRadiusAndTranslates) {
  const Point<3> c = pt<3>({0.3, -1.0, 2.0});
  BallDomain<3> dom(2.5, c);
  Engine rng = stream(103, 0);
  for (int i = 0; i < 200; ++i) {
    Point<3> u = uniformInBall(BallDomain<3>(), rng), v = uniformInBall(BallDomain<3>(), rng);
    Point<3> x = c + 2.5 * u, y = c + 2.5 * v;
    EXPECT_NEAR(green(dom, x, y), kelvinGreen3(u, v) / 2.5, 1e-11 * kelvinGreen3(u, v));
  }
  BallDomain<2> disc(3.0, pt<2>({1.0, 1.0}));
  Point<2> x = pt<2>({1.5, 1.0}), y = pt<2>({1.0, 2.0});
  EXPECT_NEAR(green(disc, x, y), kelvinGreen2(pt<2>({0.5 / 3, 0}), pt<2>({0, 1.0 / 3})), 1e-13);
}

TEST(Green, SymmetricAndPositive) {
  BallDomain<3> dom;
  Engine rng = stream(104, 0);
  for (int i = 0; i < 5000; ++i) {
    Point<3> x = uniformInBall(dom, rng), y = uniformInBall(dom, rng);
    double a = green(dom, x, y), b = green(dom, y, x);
    ASSERT_GT(a, 0.0);
    ASSERT_LE(std::abs(a - b), 1e-12 * a);
  }
}

TEST(Green, RejectsPointsOutsideOrCoincident) {
  BallDomain<3> dom;
  Point<3> x = pt<3>({0.1, 0, 0});
  EXPECT_THROW(green(dom, x, x), InputError);
  EXPECT_THROW(green(dom, x, pt<3>({1.0, 0, 0})), InputError);
  EXPECT_THROW(poisson(dom, x, pt<3>({0.5, 0, 0})), InputError);
  EXPECT_THROW(poisson(dom, pt<3>({1.2, 0, 0}), pt<3>({1, 0, 0})), InputError);
}

// The mean value property makes the occupation density of B(y, eps) an
// unbiased estimate of g(x, y) whenever x lies outside that ball. The walk
// has Gaussian steps of variance h per coordinate, generator (1/2)Laplacian.
TEST(Green, MatchesMonteCarloOccupationDensity) {
  BallDomain<3> dom;
  const Point<3> x = Point<3>::Zero(), y = pt<3>({0.5, 0.0, 0.0});
  const double eps = 0.15, h = 1e-4, vol = 4.0 / 3.0 * std::numbers::pi * std::pow(eps, 3);
  const int paths = 20000;
  std::vector<double> occ(paths);
  parallelFor(paths, [&](std::size_t i) {
    Engine rng = stream(105, i);
    boost::random::normal_distribution<double> normal;
    Point<3> b = x;
    double t = 0.0;
    for (;;) {
      for (int k = 0; k < 3; ++k) b[k] += std::sqrt(h) * normal(rng);
      if (b.squaredNorm() >= 1.0) break;
      if ((b - y).norm() < eps) t += h;
    }
    occ[i] = t / vol;
  });
  double mean = 0.0, var = 0.0;
  for (double v : occ) mean += v;
  mean /= paths;
  for (double v : occ) var += sqr(v - mean);
  const double se = std::sqrt(var / (paths - 1) / paths);
  const double exact = green(dom, x, y);
  // 4 standard errors plus the O(sqrt h) overshoot bias of the discrete walk
  EXPECT_NEAR(mean, exact, 4.0 * se + 0.02 * exact) << "se=" << se;
}

TEST(Green, IntegratesToMeanExitTime) {
  BallDomain<3> dom;
  VolumeGrid<3> grid(dom, {}, GridParams{});
  for (double s : {0.0, 0.3, 0.7}) {
    Point<3> x = pt<3>({s, 0.0, 0.0});
    std::vector<double> one(grid.size(), 1.0);
    EXPECT_NEAR(applyGreen(dom, grid, one, x), (1.0 - s * s) / 3.0, 1e-6);
    EXPECT_NEAR(meanExitTime(dom, x), (1.0 - s * s) / 3.0, 1e-15);
  }
}

TEST(Poisson, NormalisedOnTheSphere) {
  BallDomain<3> dom(1.7, pt<3>({0.2, 0.0, -0.4}));
  BoundaryGrid<3> bnd(dom, 10, 4);
  EXPECT_NEAR(bnd.integrate([](const Point<3>&) { return 1.0; }), dom.surfaceArea(), 1e-10);
  Engine rng = stream(106, 0);
  for (int i = 0; i < 50; ++i) {
    Point<3> x = uniformInBall(dom, rng, 0.5 * dom.radius());
    EXPECT_NEAR(bnd.integrate([&](const Point<3>& z) { return poisson(dom, x, z); }), 1.0, 1e-6);
  }
  BallDomain<2> disc;
  BoundaryGrid<2> circle(disc, 64, 8);
  Point<2> x = pt<2>({0.4, -0.3});
  EXPECT_NEAR(circle.integrate([&](const Point<2>& z) { return poisson(disc, x, z); }), 1.0, 1e-10);
}

TEST(Poisson, ReproducesHarmonicPolynomials) {
  BallDomain<3> dom;
  BoundaryGrid<3> bnd(dom, 10, 6);
  // x0^2 - x1^2 and x0 x2 are harmonic; their Poisson integrals return them
  Point<3> x = pt<3>({0.3, -0.2, 0.4});
  double a = bnd.integrate([&](const Point<3>& z) { return poisson(dom, x, z) * (z[0] * z[0] - z[1] * z[1]); });
  double b = bnd.integrate([&](const Point<3>& z) { return poisson(dom, x, z) * z[0] * z[2]; });
  EXPECT_NEAR(a, 0.09 - 0.04, 1e-8);
  EXPECT_NEAR(b, 0.12, 1e-8);
}

TEST(Poisson, HarmonicInX) {
  BallDomain<3> dom;
  Engine rng = stream(107, 0);
  const double h = 1e-3;
  for (int i = 0; i < 200; ++i) {
    Point<3> z = uniformOnBoundary(dom, rng), x;
    do x = uniformInBall(dom, rng, 0.9);
    while ((x - z).norm() < 0.3);
    double lap = 0.0, scale = 0.0;
    for (int k = 0; k < 3; ++k) {
      Point<3> e = Point<3>::Zero();
      e[k] = h;
      double d2 = (poisson(dom, Point<3>(x + e), z) + poisson(dom, Point<3>(x - e), z) - 2.0 * poisson(dom, x, z)) / (h * h);
      lap += d2;
      scale += std::abs(d2);
    }
    EXPECT_LE(std::abs(lap), 1e-4 * scale);
  }
}

TEST(Bounds, GreenBelowFreeSpaceAndAboveShiftedFreeSpace) {
  BallDomain<3> dom;
  const double a = 0.5;
  KernelConstants<3> kc = kernelConstants(dom, a);
  EXPECT_DOUBLE_EQ(kc.beta, 0.5);
  EXPECT_DOUBLE_EQ(kc.c_d, 1.0 / (2.0 * std::numbers::pi));
  Engine rng = stream(108, 0);
  for (int i = 0; i < 20000; ++i) {
    Point<3> x = uniformInBall(dom, rng, a), y = uniformInBall(dom, rng);
    double r = (x - y).norm();
    double g = green(dom, x, y);
    ASSERT_LE(g, kc.c_d / r);
    ASSERT_GE(g, kc.c_d * (1.0 / r - 1.0 / kc.beta) - 1e-12 / r);
  }
}

TEST(Bounds, PlanarBoundsWithLogCorrection) {
  BallDomain<2> dom(3.0);
  const double a = 1.0;
  KernelConstants<2> kc = kernelConstants(dom, a);
  EXPECT_DOUBLE_EQ(kc.beta, 1.0);
  EXPECT_NEAR(kc.ctilde, std::log(6.0) / std::numbers::pi, 1e-15);
  Engine rng = stream(109, 0);
  for (int i = 0; i < 20000; ++i) {
    Point<2> x = uniformInBall(dom, rng, a), y = uniformInBall(dom, rng);
    double r = (x - y).norm();
    double g = green(dom, x, y);
    ASSERT_LE(g, kc.c_d * std::log(1.0 / r) + kc.ctilde + 1e-12);
    ASSERT_GE(g, kc.c_d * std::log(kc.beta / r) - 1e-12);
  }
}

TEST(Harnack, ClosedFormAndBruteForce) {
  for (double R : {1.0, 2.0}) {
    BallDomain<3> dom(R);
    for (double frac : {0.1, 0.5, 0.8}) {
      const double a = frac * R;
      const double phi = harnackConstant(dom, a);
      EXPECT_NEAR(phi, std::pow((R + a) / (R - a), 3), 1e-9 * phi);
      Engine rng = stream(110, static_cast<std::uint64_t>(frac * 100));
      double worst = 0.0;
      for (int i = 0; i < 20000; ++i) {
        Point<3> x = uniformInBall(dom, rng, a), x0 = uniformInBall(dom, rng, a), z = uniformOnBoundary(dom, rng);
        worst = std::max(worst, poisson(dom, x, z) / poisson(dom, x0, z));
      }
      EXPECT_LE(worst, phi * (1.0 + 1e-12));
    }
  }
  BallDomain<3> unit;
  EXPECT_NEAR(harnackConstant(unit, 0.5), 27.0, 1e-9);
  EXPECT_EQ(harnackConstant(unit, 0.0), 1.0);
  BallDomain<2> disc;
  EXPECT_NEAR(harnackConstant(disc, 0.5), 9.0, 1e-9);
}

TEST(Harnack, MonotoneInCompactRadius) {
  BallDomain<3> dom;
  double prev = 1.0;
  for (int i = 1; i < 50; ++i) {
    double v = harnackConstant(dom, 0.98 * i / 50);
    EXPECT_GE(v, prev);
    prev = v;
  }
  EXPECT_THROW(harnackConstant(dom, 1.0), InputError);
  EXPECT_THROW(harnackConstant(dom, -0.1), InputError);
}

TEST(ThreeG, EstimateFiniteAndStableAcrossSeeds) {
  BallDomain<3> dom;
  auto a = threeGEstimate(dom, 100000, 1);
  auto b = threeGEstimate(dom, 100000, 2);
  ASSERT_TRUE(std::isfinite(a.thetaHat));
  ASSERT_GT(a.thetaHat, 0.0);
  EXPECT_LE(std::abs(a.thetaHat - b.thetaHat) / std::max(a.thetaHat, b.thetaHat), 0.05);
  // the reported argmax reproduces the estimate
  auto r = threeGRatio(dom, a.x, a.x0, a.y);
  ASSERT_TRUE(r.has_value());
  EXPECT_DOUBLE_EQ(*r, a.thetaHat);
}

TEST(ThreeG, DeterministicAndThreadIndependent) {
  BallDomain<2> dom;
  setMaxThreads(1);
  auto a = threeGEstimate(dom, 20000, 9);
  setMaxThreads(3);
  auto b = threeGEstimate(dom, 20000, 9);
  setMaxThreads(0);
  EXPECT_EQ(a.thetaHat, b.thetaHat);
  EXPECT_EQ(a.x, b.x);
}

TEST(ThreeG, CoincidentPointsAreSkipped) {
  BallDomain<3> dom;
  Point<3> p = pt<3>({0.1, 0.2, 0.3});
  EXPECT_FALSE(threeGRatio(dom, p, p, pt<3>({0.0, 0.0, 0.0})).has_value());
}

// For concentric compacts the far minimum of g sits at antipodal points on the
// compact boundary: B = 1 / g(r e, -r e) from the Kelvin formula.
TEST(GreenRatio, BAndKFromIndependentFormulas) {
  BallDomain<3> dom;
  const double c = 1.0 / (2.0 * std::numbers::pi);
  for (double r : {0.6, 0.75}) {
    auto gr = greenRatioConstants(dom, r);
    double gAnti = kelvinGreen3(pt<3>({r, 0, 0}), pt<3>({-r, 0, 0}));
    double beta = 1.0 - r;
    double nearFloor = c * (2.0 / beta - 1.0 / beta);
    double B = 1.0 / std::min(gAnti, nearFloor);
    double K = std::max(B * c * 2.0 / beta, 1.0 + B * c / beta);
    EXPECT_NEAR(gr.B, B, 1e-9 * B) << r;
    EXPECT_NEAR(gr.K, K, 1e-9 * K) << r;
  }
  auto g6 = greenRatioConstants(dom, 0.6);
  EXPECT_NEAR(g6.B, 64.08849013323179, 1e-9);
  auto g75 = greenRatioConstants(dom, 0.75);
  EXPECT_NEAR(g75.B, 235.619449, 1e-5);
  EXPECT_NEAR(g75.K, 300.0, 1e-9);
}

TEST(GreenRatio, KBoundsSampledRatios) {
  BallDomain<3> dom;
  const double r = 0.5;
  auto gr = greenRatioConstants(dom, r);
  Engine rng = stream(111, 0);
  for (int i = 0; i < 50000; ++i) {
    Point<3> x = uniformInBall(dom, rng, r), x0 = uniformInBall(dom, rng, r);
    ASSERT_LE(freeSpaceGreen<3>(x, x0) / green(dom, x, x0), gr.K);
    ASSERT_LE(1.0 / green(dom, x, x0), gr.B);
  }
  EXPECT_GE(gr.K, 1.0);
}
