// Pair moment density rho(x; z1, z2) along a diameter of the unit ball, next
// to a Monte Carlo estimate at a few of the points.
#include <supermoment/supermoment.hpp>

#include <cstdio>

using namespace supermoment;

int main() {
  BallDomain<3> dom;
  BoundaryConfig<3> cfg(dom, {Point<3>(0, 0, 1), Point<3>(1, 0, 0)});
  GridParams p;
  p.radialCells = 4;
  p.angularCells = 2;
  auto grid = std::make_shared<const VolumeGrid<3>>(dom, cfg.points(), p);
  RhoTable<3> table = computeRhoTables(dom, cfg, grid);

  std::printf("%6s %14s %14s %10s\n", "s", "quadrature", "monte carlo", "stderr");
  for (double s : {-0.9, -0.6, -0.3, 0.0, 0.3, 0.6, 0.9}) {
    Point<3> x(s / std::sqrt(2.0), 0.0, s / std::sqrt(2.0));
    const double q = rhoAt(dom, table, x, 3);
    if (std::abs(s) < 0.65) {
      auto mc = rhoMonteCarlo(dom, cfg, x, 3, 20000, 17);
      std::printf("%6.2f %14.6e %14.6e %10.1e\n", s, q, mc.estimate, mc.standardError);
    } else {
      std::printf("%6.2f %14.6e\n", s, q);
    }
  }
}
