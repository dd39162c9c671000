#include <supermoment/moments.hpp>

#include <gtest/gtest.h>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <sstream>

using namespace supermoment;

namespace {

const Point<3> kNorth(0, 0, 1), kSouth(0, 0, -1);

// rho(0; e3, -e3) = 2 int g(0,y) k(y,e3) k(y,-e3) dy in spherical coordinates,
// by nested adaptive Gauss-Kronrod.
double antipodalPairAtOrigin() {
  using boost::math::quadrature::gauss_kronrod;
  const double pi = std::numbers::pi;
  auto inner = [&](double r) {
    auto f = [&](double th) {
      double c = std::cos(th);
      double k1 = (1 - r * r) / (4 * pi * std::pow(1 + r * r - 2 * r * c, 1.5));
      double k2 = (1 - r * r) / (4 * pi * std::pow(1 + r * r + 2 * r * c, 1.5));
      return k1 * k2 * std::sin(th);
    };
    return gauss_kronrod<double, 61>::integrate(f, 0.0, pi, 15, 1e-14);
  };
  auto outer = [&](double r) { return (1.0 / r - 1.0) / (2 * pi) * r * r * 2 * pi * inner(r); };
  return 2.0 * gauss_kronrod<double, 61>::integrate(outer, 0.0, 1.0, 15, 1e-14);
}

GridParams coarseGrid() {
  GridParams p;
  p.radialCells = 4;
  p.angularCells = 2;
  p.boundaryDepth = 3;
  return p;
}

template <int Dim>
RhoTable<Dim> tables(const BallDomain<Dim>& dom, std::vector<Point<Dim>> z, const GridParams& p, int maxLevel) {
  BoundaryConfig<Dim> cfg(dom, z);
  auto grid = std::make_shared<const VolumeGrid<Dim>>(dom, cfg.points(), p);
  RhoOptions o;
  o.maxLevel = maxLevel;
  return computeRhoTables(dom, cfg, grid, o);
}

}  // namespace

TEST(BoundaryConfig, ValidatesPoints) {
  BallDomain<3> dom;
  EXPECT_THROW(BoundaryConfig<3>(dom, {}), InputError);
  EXPECT_THROW(BoundaryConfig<3>(dom, {Point<3>(0, 0, 0.5)}), InputError);
  EXPECT_THROW(BoundaryConfig<3>(dom, {kNorth, kNorth}), InputError);
  std::vector<Point<3>> many(9, kNorth);
  EXPECT_THROW(BoundaryConfig<3>(dom, many), InputError);
  BoundaryConfig<3> ok(dom, {kNorth, kSouth});
  EXPECT_EQ(ok.fullKey(), 3u);
  EXPECT_DOUBLE_EQ(ok.minSeparation(), 2.0);
}

TEST(Rho, SingletonIsPoissonKernel) {
  BallDomain<3> dom;
  auto t = tables(dom, {kNorth, kSouth}, coarseGrid(), 1);
  Point<3> x(0.2, -0.3, 0.4);
  EXPECT_EQ(rhoAt(dom, t, x, 1), poisson(dom, x, kNorth));
  EXPECT_EQ(rhoAt(dom, t, x, 2), poisson(dom, x, kSouth));
  for (std::size_t j = 0; j < t.grid().size(); ++j)
    ASSERT_EQ(t.field(1)[j], poissonUnchecked(dom, t.grid().nodes()[j], kNorth));
  EXPECT_EQ(t.completeLevel(), 1);
}

TEST(Rho, AntipodalPairMatchesAdaptiveQuadrature) {
  BallDomain<3> dom;
  const double ref = antipodalPairAtOrigin();
  EXPECT_NEAR(ref, 0.002093044451609676, 1e-12);
  auto t = tables(dom, {kNorth, kSouth}, GridParams{}, 1);
  EXPECT_NEAR(rhoAt(dom, t, Point<3>(Point<3>::Zero()), SubsetKey{3}), ref, 1e-4 * ref);
}

TEST(Rho, SymmetricUnderSwap) {
  BallDomain<3> dom;
  Point<3> z1 = Point<3>(1, 2, 2) / 3.0, z2 = Point<3>(0, -0.6, 0.8);
  auto a = tables(dom, {z1, z2}, coarseGrid(), 1);
  auto b = tables(dom, {z2, z1}, coarseGrid(), 1);
  Point<3> x(0.3, 0.1, -0.2);
  double va = rhoAt(dom, a, x, 3), vb = rhoAt(dom, b, x, 3);
  EXPECT_NEAR(va, vb, 1e-12 * va);
}

TEST(Rho, SymmetricUnderPermutationThreePoints) {
  BallDomain<3> dom;
  std::vector<Point<3>> z = {kNorth, Point<3>(1, 0, 0), Point<3>(0, -0.6, -0.8)};
  Point<3> x(0.1, 0.2, 0.3);
  std::vector<int> perm = {0, 1, 2};
  std::vector<double> vals;
  do {
    std::vector<Point<3>> zp;
    for (int i : perm) zp.push_back(z[i]);
    auto t = tables(dom, zp, coarseGrid(), 2);
    vals.push_back(rhoAt(dom, t, x, 7));
  } while (std::next_permutation(perm.begin(), perm.end()));
  for (double v : vals) EXPECT_NEAR(v, vals.front(), 1e-9 * vals.front());
}

TEST(Rho, NodeTableAgreesWithOffGridEvaluation) {
  BallDomain<3> dom;
  auto t = tables(dom, {kNorth, Point<3>(1, 0, 0)}, coarseGrid(), 0);
  ASSERT_EQ(t.completeLevel(), 2);
  const auto& nodes = t.grid().nodes();
  for (std::size_t j = 0; j < nodes.size(); j += nodes.size() / 25) {
    if (nodes[j].norm() > 0.9) continue;
    double off = rhoAt(dom, t, nodes[j], 3);
    EXPECT_NEAR(t.field(3)[j], off, 2e-3 * off) << j;
  }
}

TEST(Rho, MatchesMonteCarloOracle) {
  BallDomain<3> dom;
  const Point<3> x(0.3, 0.0, 0.0);
  std::vector<Point<3>> z = {kNorth, kSouth, Point<3>(1, 0, 0)};
  auto t = tables(dom, z, coarseGrid(), 2);
  BoundaryConfig<3> cfg(dom, z);
  for (SubsetKey A : {SubsetKey{3}, SubsetKey{5}, SubsetKey{7}}) {
    auto mc = rhoMonteCarlo(dom, cfg, x, A, 100000, 17);
    double q = rhoAt(dom, t, x, A);
    EXPECT_NEAR(q, mc.estimate, 3.0 * mc.standardError) << "subset " << A << " se " << mc.standardError;
  }
}

TEST(Rho, MonteCarloDeterministicAcrossThreads) {
  BallDomain<3> dom;
  BoundaryConfig<3> cfg(dom, {kNorth, kSouth});
  setMaxThreads(1);
  auto a = rhoMonteCarlo(dom, cfg, Point<3>(0.1, 0, 0), 3, 5000, 4);
  setMaxThreads(3);
  auto b = rhoMonteCarlo(dom, cfg, Point<3>(0.1, 0, 0), 3, 5000, 4);
  setMaxThreads(0);
  EXPECT_EQ(a.estimate, b.estimate);
  EXPECT_EQ(a.standardError, b.standardError);
  EXPECT_THROW(rhoMonteCarlo(dom, cfg, Point<3>(0.1, 0, 0), 3, 10, 4), InputError);
}

// (1/2)Lap rho_{12} = -2 k_1 k_2 away from the sphere.
TEST(Rho, SatisfiesRecursivePoissonEquation) {
  BallDomain<3> dom;
  Point<3> z1 = kNorth, z2(1, 0, 0);
  auto t = tables(dom, {z1, z2}, GridParams{}, 1);
  RhoEvaluator<3> rho(t, 3);
  const double h = 0.01;
  for (const Point<3>& x : {Point<3>(0, 0, 0), Point<3>(0.2, 0.3, -0.1), Point<3>(-0.4, 0.1, 0.2)}) {
    double lap = 0.0;
    for (int k = 0; k < 3; ++k) {
      Point<3> e = Point<3>::Zero();
      e[k] = h;
      lap += (rho(Point<3>(x + e)) + rho(Point<3>(x - e)) - 2.0 * rho(x)) / (h * h);
    }
    double rhs = -2.0 * 2.0 * poisson(dom, x, z1) * poisson(dom, x, z2);
    EXPECT_NEAR(lap, rhs, 1e-2 * std::abs(rhs));
  }
}

// rho vanishes on the sphere away from the configuration points.
TEST(Rho, PositiveAndVanishesOnTheSphere) {
  BallDomain<3> dom;
  Point<3> z2(1, 0, 0);
  auto t = tables(dom, {kNorth, z2}, coarseGrid(), 1);
  const double centre = rhoAt(dom, t, Point<3>::Zero().eval(), 3);
  EXPECT_GT(centre, 0.0);
  double prev = centre;
  for (double s : {0.5, 0.8, 0.9, 0.99}) {
    double v = rhoAt(dom, t, Point<3>(0, -s, 0), 3);
    EXPECT_GT(v, 0.0) << s;
    EXPECT_LT(v, prev) << s;
    prev = v;
  }
  EXPECT_LT(prev, 0.05 * centre);
  EXPECT_THROW(rhoAt(dom, t, Point<3>(0, 0, 1), 3), InputError);
}

TEST(Rho, PlanarPairMatchesMonteCarlo) {
  BallDomain<2> dom;
  std::vector<Point<2>> z = {Point<2>(1, 0), Point<2>(0, 1)};
  auto t = tables(dom, z, GridParams{}, 1);
  BoundaryConfig<2> cfg(dom, z);
  Point<2> x(0.2, -0.1);
  auto mc = rhoMonteCarlo(dom, cfg, x, 3, 200000, 5);
  EXPECT_NEAR(rhoAt(dom, t, x, 3), mc.estimate, 3.0 * mc.standardError);
}

TEST(MomentDensity, SumsOverPartitions) {
  BallDomain<3> dom;
  std::vector<Point<3>> z = {kNorth, kSouth, Point<3>(1, 0, 0)};
  auto t = tables(dom, z, coarseGrid(), 2);
  Point<3> x(0.1, 0.2, 0.0);
  DiscreteMeasure<3> mu{{x}, {0.7}};
  auto r = [&](SubsetKey A) { return rhoAt(dom, t, x, A); };
  const double m = 0.7;
  double expect = m * r(7) + m * m * (r(1) * r(6) + r(2) * r(5) + r(4) * r(3)) + m * m * m * r(1) * r(2) * r(4);
  EXPECT_NEAR(momentDensity(dom, t, mu), expect, 1e-12 * expect);

  DiscreteMeasure<3> bad{{Point<3>(2, 0, 0)}, {1.0}};
  EXPECT_THROW(momentDensity(dom, t, bad), InputError);
  DiscreteMeasure<3> neg{{x}, {-1.0}};
  EXPECT_THROW(momentDensity(dom, t, neg), InputError);
}

TEST(FunctionalMoments, ConstantPairIsOnePlusTwiceExitTime) {
  BallDomain<3> dom;
  auto one = [](const Point<3>&) { return 1.0; };
  FunctionalMoments<3> fm(dom, {one, one});
  DiscreteMeasure<3> mu{{Point<3>::Zero()}, {1.0}};
  EXPECT_NEAR(fm.moment(mu), 5.0 / 3.0, 1e-6);
  Point<3> x(0.5, 0.2, 0.0);
  EXPECT_NEAR(fm.at(x, 3), 2.0 * meanExitTime(dom, x), 1e-6);

  BallDomain<2> disc;
  auto one2 = [](const Point<2>&) { return 1.0; };
  FunctionalMoments<2> f2(disc, {one2, one2});
  EXPECT_NEAR(f2.moment(DiscreteMeasure<2>{{Point<2>::Zero()}, {1.0}}), 2.0, 2e-5);
}

// E <X, z3>^2 under delta_0: (K z3)(0)^2 = 0 plus 2 int g(0,y) y3^2 dy = 1/15.
TEST(FunctionalMoments, CoordinatePairClosedForm) {
  BallDomain<3> dom;
  auto z3 = [](const Point<3>& z) { return z[2]; };
  FunctionalMoments<3> fm(dom, {z3, z3});
  EXPECT_NEAR(fm.moment(DiscreteMeasure<3>{{Point<3>::Zero()}, {1.0}}), 1.0 / 15.0, 1e-6);
}

// E <X,1>^3 under delta_0: u_123(0) = G(4(1 - |y|^2))(0) = 14/15, three
// pair-singleton terms 2/3 each, and the product of singletons 1.
TEST(FunctionalMoments, ConstantTripleClosedForm) {
  BallDomain<3> dom;
  auto one = [](const Point<3>&) { return 1.0; };
  FunctionalMoments<3> fm(dom, {one, one, one});
  EXPECT_NEAR(fm.at(Point<3>::Zero(), 7), 14.0 / 15.0, 5e-6);
  EXPECT_NEAR(fm.moment(DiscreteMeasure<3>{{Point<3>::Zero()}, {1.0}}), 14.0 / 15.0 + 2.0 + 1.0, 5e-6);
}

// A pole outside the ball gives a harmonic function with structure on the
// scale of its distance to the sphere; points run right up to the boundary.
TEST(FunctionalMoments, HarmonicExtensionReproducesHarmonicFunctions) {
  BallDomain<3> dom;
  BoundaryGrid<3> bnd(dom, 12, 6);
  const Point<3> pole(1.3, 0.4, -0.2);
  BoundaryFunction<3> f = [&](const Point<3>& z) { return 1.0 / (z - pole).norm(); };
  std::vector<double> fz;
  for (const auto& z : bnd.nodes()) fz.push_back(f(z));
  Engine rng = stream(301, 0);
  for (double r : {0.0, 0.3, 0.79, 0.81, 0.95, 0.999, 0.99999}) {
    for (int i = 0; i < 20; ++i) {
      Point<3> y = r * uniformOnUnitSphere<3>(rng);
      EXPECT_NEAR(harmonicExtension(dom, bnd, f, fz, y), 1.0 / (y - pole).norm(), 1e-6) << r;
    }
  }

  BallDomain<2> disc;
  BoundaryGrid<2> b2(disc, 64, 6);
  const Point<2> p2(0.9, 0.8);
  BoundaryFunction<2> f2 = [&](const Point<2>& z) { return std::log((z - p2).norm()); };
  std::vector<double> fz2;
  for (const auto& z : b2.nodes()) fz2.push_back(f2(z));
  for (double r : {0.0, 0.5, 0.9, 0.999}) {
    for (int i = 0; i < 20; ++i) {
      Point<2> y = r * uniformOnUnitSphere<2>(rng);
      EXPECT_NEAR(harmonicExtension(disc, b2, f2, fz2, y), std::log((y - p2).norm()), 1e-6) << r;
    }
  }
}

TEST(FunctionalMoments, RejectsBadInput) {
  BallDomain<3> dom;
  EXPECT_THROW(FunctionalMoments<3>(dom, {}), InputError);
  auto bad = [](const Point<3>&) { return std::nan(""); };
  EXPECT_THROW(FunctionalMoments<3>(dom, {bad}), InputError);
}

TEST(RhoTableCsv, HeaderAndRowCount) {
  BallDomain<2> dom;
  GridParams p;
  p.radialCells = 2;
  p.angularCells = 1;
  p.boundaryDepth = 1;
  auto t = tables<2>(dom, {Point<2>(1, 0), Point<2>(-1, 0)}, p, 0);
  std::ostringstream os;
  writeRhoTableCsv(os, t);
  std::istringstream in(os.str());
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "subset,node,x0,x1,rho");
  std::size_t rows = 0;
  while (std::getline(in, line)) ++rows;
  EXPECT_EQ(rows, 3 * t.grid().size());
}
