#include <supermoment/quadrature.hpp>
#include <supermoment/star.hpp>

#include <gtest/gtest.h>

#include <sstream>

using namespace supermoment;

namespace {

template <int Dim>
std::vector<double> nodeValues(const VolumeGrid<Dim>& grid, auto&& f) {
  std::vector<double> v;
  for (const auto& y : grid.nodes()) v.push_back(f(y));
  return v;
}

// G(|y|^2) on the unit ball solves (1/2)Lap u = -|x|^2, u = 0 on the sphere:
// u = (1 - |x|^4) / (2 (d + 2)).
double greenOfRadiusSquared(int d, double r) { return (1.0 - std::pow(r, 4)) / (2.0 * (d + 2)); }

}  // namespace

TEST(VolumeGrid, TotalWeightIsVolume) {
  BallDomain<3> dom(1.3, Point<3>(0.1, 0.2, 0.3));
  VolumeGrid<3> grid(dom, {}, GridParams{});
  EXPECT_NEAR(grid.totalWeight(), dom.volume(), 1e-10 * dom.volume());
  BallDomain<2> disc;
  VolumeGrid<2> g2(disc, {}, GridParams{});
  EXPECT_NEAR(g2.totalWeight(), std::numbers::pi, 1e-12);
  for (double w : grid.weights()) ASSERT_GT(w, 0.0);
}

TEST(VolumeGrid, IntegratesRadialMoments) {
  BallDomain<3> dom;
  VolumeGrid<3> grid(dom, {}, GridParams{});
  EXPECT_NEAR(grid.integrateFunction([](const Point<3>& y) { return y.squaredNorm(); }), 4.0 * std::numbers::pi / 5.0,
              1e-10);
  EXPECT_NEAR(grid.integrateFunction([](const Point<3>& y) { return y[0] * y[0]; }), 4.0 * std::numbers::pi / 15.0,
              1e-6);
  BallDomain<2> disc;
  VolumeGrid<2> g2(disc, {}, GridParams{});
  EXPECT_NEAR(g2.integrateFunction([](const Point<2>& y) { return y.squaredNorm(); }), std::numbers::pi / 2.0, 1e-12);
}

TEST(VolumeGrid, MarkedPointsRefine) {
  BallDomain<3> dom;
  VolumeGrid<3> plain(dom, {}, GridParams{});
  VolumeGrid<3> marked(dom, {Point<3>(0, 0, 1)}, GridParams{});
  EXPECT_GT(marked.size(), plain.size());
  EXPECT_NEAR(marked.totalWeight(), dom.volume(), 1e-10);
  EXPECT_THROW(VolumeGrid<3>(dom, {Point<3>(0, 0, 2)}, GridParams{}), InputError);
}

TEST(VolumeGrid, RejectsBadParameters) {
  BallDomain<3> dom;
  GridParams p;
  p.order = 1;
  EXPECT_THROW(VolumeGrid<3>(dom, {}, p), InputError);
  p = GridParams{};
  p.patchFraction = 1.0;
  EXPECT_THROW(VolumeGrid<3>(dom, {}, p), InputError);
}

TEST(VolumeGrid, LocateAndInterpolate) {
  BallDomain<3> dom;
  VolumeGrid<3> grid(dom, {}, GridParams{});
  EXPECT_EQ(grid.locate(Point<3>(1.0, 0, 0)), -1);
  EXPECT_GE(grid.locate(Point<3>(0.3, 0.2, -0.1)), 0);
  // r^2 is a polynomial in the radial coordinate and constant in angle
  auto r2 = nodeValues(grid, [](const Point<3>& y) { return y.squaredNorm(); });
  const double* fields[1] = {r2.data()};
  Engine rng = stream(201, 0);
  for (int i = 0; i < 500; ++i) {
    Point<3> y = uniformInBall(dom, rng);
    double v = 0.0;
    ASSERT_TRUE(grid.interpolate(y, fields, 1, &v));
    EXPECT_NEAR(v, y.squaredNorm(), 1e-12);
  }
}

TEST(ApplyGreen, ExitTimeAndRadiusSquared3d) {
  BallDomain<3> dom;
  VolumeGrid<3> grid(dom, {}, GridParams{});
  auto one = nodeValues(grid, [](const Point<3>&) { return 1.0; });
  auto r2 = nodeValues(grid, [](const Point<3>& y) { return y.squaredNorm(); });
  Engine rng = stream(202, 0);
  for (int i = 0; i < 40; ++i) {
    Point<3> x = uniformInBall(dom, rng, 0.95);
    EXPECT_NEAR(applyGreen(dom, grid, one, x), meanExitTime(dom, x), 1e-6);
    EXPECT_NEAR(applyGreen(dom, grid, r2, x), greenOfRadiusSquared(3, x.norm()), 6e-5);
  }
}

TEST(ApplyGreen, RadiusSquared2d) {
  BallDomain<2> dom;
  VolumeGrid<2> grid(dom, {}, GridParams{});
  auto r2 = nodeValues(grid, [](const Point<2>& y) { return y.squaredNorm(); });
  for (double s : {0.0, 0.4, 0.8, 0.97}) {
    Point<2> x(s, 0.0);
    EXPECT_NEAR(applyGreen(dom, grid, r2, x), greenOfRadiusSquared(2, s), 1e-5) << s;
  }
}

TEST(ApplyGreen, AtNodesMatchesClosedForm) {
  BallDomain<3> dom;
  GridParams p;
  p.radialCells = 4;
  p.angularCells = 2;
  VolumeGrid<3> grid(dom, {}, p);
  auto r2 = nodeValues(grid, [](const Point<3>& y) { return y.squaredNorm(); });
  auto u = applyGreenAtNodes(grid, r2);
  double worst = 0.0;
  for (std::size_t j = 0; j < grid.size(); ++j)
    worst = std::max(worst, std::abs(u[j] - greenOfRadiusSquared(3, grid.nodes()[j].norm())));
  // coarse grid; the worst nodes sit in the outermost shell
  EXPECT_LT(worst, 1e-3);
}

TEST(ApplyGreen, LinearAndPositive) {
  BallDomain<3> dom;
  VolumeGrid<3> grid(dom, {}, GridParams{});
  auto f = nodeValues(grid, [](const Point<3>& y) { return std::exp(y[0]) + y[1] * y[1]; });
  auto g = nodeValues(grid, [](const Point<3>& y) { return 1.0 + std::cos(3.0 * y[2]); });
  std::vector<double> h(f.size());
  for (std::size_t j = 0; j < f.size(); ++j) h[j] = 2.0 * f[j] - 0.5 * g[j];
  Point<3> x(0.2, -0.4, 0.1);
  double Gf = applyGreen(dom, grid, f, x), Gg = applyGreen(dom, grid, g, x), Gh = applyGreen(dom, grid, h, x);
  EXPECT_NEAR(Gh, 2.0 * Gf - 0.5 * Gg, 1e-12 * (std::abs(Gf) + std::abs(Gg)));
  EXPECT_GT(Gf, 0.0);
  EXPECT_GT(Gg, 0.0);
}

TEST(ApplyGreen, ConvergesUnderRefinement) {
  BallDomain<3> dom;
  GridParams coarse;
  coarse.radialCells = 3;
  coarse.angularCells = 1;
  coarse.order = 3;
  const Point<3> x(0.3, 0.1, -0.2);
  auto f = [](const Point<3>& y) { return std::exp(y[0] - y[2]) * (1.0 + y[1] * y[1]); };
  auto run = [&](const GridParams& p) {
    VolumeGrid<3> grid(dom, {}, p);
    auto v = nodeValues(grid, f);
    return applyGreen(dom, grid, v, x);
  };
  GridParams fine = coarse.refined().refined();
  fine.order = 6;
  const double ref = run(fine);
  const double e0 = std::abs(run(coarse) - ref), e1 = std::abs(run(coarse.refined()) - ref);
  EXPECT_LT(e1, e0);
  EXPECT_LT(e1, 1e-4);
}

TEST(ApplyGreen, RejectsWrongDomainOrSize) {
  BallDomain<3> dom, other(2.0);
  VolumeGrid<3> grid(dom, {}, GridParams{});
  std::vector<double> v(grid.size(), 1.0), shortV(3, 1.0);
  EXPECT_THROW(applyGreen(other, grid, v, Point<3>(0.1, 0, 0)), InputError);
  EXPECT_THROW(applyGreen(dom, grid, shortV, Point<3>(0.1, 0, 0)), InputError);
  EXPECT_THROW(applyGreen(dom, grid, v, Point<3>(1.1, 0, 0)), InputError);
}

TEST(StarRule, ExitTimeAndRadiusSquared) {
  BallDomain<3> dom;
  Engine rng = stream(203, 0);
  for (int i = 0; i < 20; ++i) {
    Point<3> x = uniformInBall(dom, rng, 0.98);
    StarRule<3> rule(dom, x, {}, GridParams{});
    EXPECT_NEAR(rule.greenIntegral([](const Point<3>&) { return 1.0; }), meanExitTime(dom, x), 6e-6);
    EXPECT_NEAR(rule.greenIntegral([](const Point<3>& y) { return y.squaredNorm(); }),
                greenOfRadiusSquared(3, x.norm()), 6e-6);
    double vol = 0.0;
    for (double w : rule.weights()) vol += w;
    EXPECT_NEAR(vol, dom.volume(), 2e-6);
  }
  BallDomain<2> disc;
  StarRule<2> r2(disc, Point<2>(0.5, 0.5), {}, GridParams{});
  EXPECT_NEAR(r2.greenIntegral([](const Point<2>& y) { return y.squaredNorm(); }), greenOfRadiusSquared(2, std::sqrt(0.5)),
              2e-6);
}

TEST(StarRule, RejectsExteriorCentre) {
  BallDomain<3> dom;
  EXPECT_THROW(StarRule<3>(dom, Point<3>(1, 0, 0), {}, GridParams{}), InputError);
}

TEST(BoundaryGrid, AreaAndMoments) {
  BallDomain<3> dom(2.0);
  BoundaryGrid<3> bnd(dom, 6, 5);
  EXPECT_NEAR(bnd.integrate([](const Point<3>&) { return 1.0; }), 16.0 * std::numbers::pi, 1e-11);
  // int z0^2 dsigma = R^2 area / 3
  EXPECT_NEAR(bnd.integrate([](const Point<3>& z) { return z[0] * z[0]; }), 4.0 * 16.0 * std::numbers::pi / 3.0, 1e-6);
  for (const auto& z : bnd.nodes()) ASSERT_TRUE(dom.isOnBoundary(z));
  BallDomain<2> disc;
  BoundaryGrid<2> circle(disc, 4, 6);
  EXPECT_NEAR(circle.integrate([](const Point<2>& z) { return z[0] * z[0]; }), std::numbers::pi, 1e-12);
}

TEST(NodeTable, BinaryRoundTripAndCsv) {
  BallDomain<3> dom;
  GridParams p;
  p.radialCells = 2;
  p.angularCells = 1;
  VolumeGrid<3> grid(dom, {}, p);
  std::stringstream bin;
  writeNodeTableBinary(bin, grid.nodes(), grid.weights());
  auto t = readNodeTableBinary<3>(bin);
  ASSERT_EQ(t.nodes.size(), grid.size());
  for (std::size_t j = 0; j < grid.size(); ++j) {
    ASSERT_EQ(t.nodes[j], grid.nodes()[j]);
    ASSERT_EQ(t.weights[j], grid.weights()[j]);
  }
  std::stringstream wrongDim(bin.str());
  EXPECT_THROW(readNodeTableBinary<2>(wrongDim), InputError);
  std::stringstream junk("not a table");
  EXPECT_THROW(readNodeTableBinary<3>(junk), InputError);

  std::ostringstream csv;
  writeNodeTableCsv(csv, grid.nodes(), grid.weights());
  std::istringstream in(csv.str());
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "x0,x1,x2,weight");
  std::size_t rows = 0;
  while (std::getline(in, line)) ++rows;
  EXPECT_EQ(rows, grid.size());
}
