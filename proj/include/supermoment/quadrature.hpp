#pragma once

#include "supermoment/ball.hpp"
#include "supermoment/gauss.hpp"
#include "supermoment/kernels.hpp"
#include "supermoment/parallel.hpp"

#include <algorithm>
#include <array>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <istream>
#include <ostream>
#include <span>
#include <vector>

namespace supermoment {

// Volume quadrature on a ball. The ball is cut into cells that are boxes in
// (radius, angle) coordinates: radial shells graded toward the sphere times an
// equiangular cubed sphere (d = 3) or equal arcs (d = 2). Cells near marked
// points are split into 2^d children. Each leaf carries a tensor Gauss-Legendre
// rule of order q per coordinate, which also gives an in-cell polynomial
// interpolant for node values.
//
// The singular Green integral around a target x uses a polar patch of radius r
// centred at x, blended with the grid through a smooth partition of unity
// psi(|y-x|/r); the patch side integrates g(x,y) rho^{d-1} in polar form where
// it is bounded. When the patch would be smaller than the local cells (close to
// the sphere) the integral falls back to singularity subtraction
//   int g(x,y) F(y) dy = int g(x,y) (F(y) - F(x)) dy + F(x) E_x tau.

struct GridParams {
  /// Radial shells of the root mesh.
  int radialCells = 8;
  /// Cells per cube-face edge (d = 3) or per quarter circle (d = 2).
  int angularCells = 3;
  /// Gauss-Legendre points per coordinate and cell.
  int order = 4;
  /// Radial breakpoints r_i = R (1 - (1 - i/m)^p).
  double grading = 2.0;
  /// A cell is split when its distance to a boundary marked point is below eta * diameter.
  double eta = 0.5;
  int boundaryDepth = 4;
  int interiorDepth = 3;
  /// Boundary refinement stops at cells with diameter below minCellSize * R.
  double minCellSize = 0.0;
  int patchRadialOrder = 10;
  int patchAngularOrder = 10;
  /// Patch radius is min(patchCap * R, patchFraction * dist(x, sphere)).
  double patchCap = 0.25;
  double patchFraction = 0.5;
  /// The patch is used when its radius is at least patchCellRatio * local cell diameter.
  double patchCellRatio = 1.0;

  void validate() const {
    require(radialCells >= 1 && radialCells <= 4096, "grid: radialCells must lie in [1, 4096]");
    require(angularCells >= 1 && angularCells <= 1024, "grid: angularCells must lie in [1, 1024]");
    require(order >= 2 && order <= 16, "grid: order must lie in [2, 16]");
    require(grading >= 1.0 && grading <= 8.0, "grid: grading must lie in [1, 8]");
    require(eta > 0.0, "grid: eta must be positive");
    require(boundaryDepth >= 0 && boundaryDepth <= 30, "grid: boundaryDepth must lie in [0, 30]");
    require(interiorDepth >= 0 && interiorDepth <= 30, "grid: interiorDepth must lie in [0, 30]");
    require(minCellSize >= 0.0, "grid: minCellSize must be >= 0");
    require(patchRadialOrder >= 2 && patchRadialOrder <= 64, "grid: patchRadialOrder must lie in [2, 64]");
    require(patchAngularOrder >= 2 && patchAngularOrder <= 64, "grid: patchAngularOrder must lie in [2, 64]");
    require(patchCap > 0.0 && patchCap <= 1.0, "grid: patchCap must lie in (0, 1]");
    require(patchFraction > 0.0 && patchFraction < 1.0, "grid: patchFraction must lie in (0, 1)");
    require(patchCellRatio > 0.0, "grid: patchCellRatio must be positive");
  }

  /// Twice the resolution in every direction.
  GridParams refined() const {
    GridParams p = *this;
    p.radialCells *= 2;
    p.angularCells *= 2;
    p.minCellSize *= 0.5;
    return p;
  }
};

namespace detail {

// Angular charts. Coordinates a live in [-1,1]^2 per cube face (d = 3) or in
// [0, 2 pi) (d = 2).
template <int Dim>
struct SphereChart;

template <>
struct SphereChart<2> {
  static constexpr int faces = 1;
  static constexpr int adim = 1;
  using Coord = std::array<double, 1>;

  static Point<2> direction(int, const Coord& a) { return Point<2>(std::cos(a[0]), std::sin(a[0])); }
  static double jacobian(const Coord&) { return 1.0; }
  static double measure(int, const Coord& lo, const Coord& hi) { return hi[0] - lo[0]; }
  static void coords(const Point<2>& dir, int& face, Coord& a) {
    face = 0;
    double t = std::atan2(dir[1], dir[0]);
    if (t < 0.0) t += 2.0 * std::numbers::pi;
    if (t >= 2.0 * std::numbers::pi) t = 0.0;
    a[0] = t;
  }
  static double rootLow(int k, int m) { return 2.0 * std::numbers::pi * k / (4 * m); }
  static int rootCount(int m) { return 4 * m; }
  static int rootIndex(double a, int m) {
    int k = static_cast<int>(a / (2.0 * std::numbers::pi) * (4 * m));
    return std::clamp(k, 0, 4 * m - 1);
  }
};

template <>
struct SphereChart<3> {
  static constexpr int faces = 6;
  static constexpr int adim = 2;
  using Coord = std::array<double, 2>;

  static Point<3> direction(int face, const Coord& a) {
    int axis = face / 2;
    double sign = face % 2 == 0 ? 1.0 : -1.0;
    Point<3> d;
    d[axis] = sign;
    d[(axis + 1) % 3] = std::tan(0.25 * std::numbers::pi * a[0]);
    d[(axis + 2) % 3] = std::tan(0.25 * std::numbers::pi * a[1]);
    return d.normalized();
  }
  static double jacobian(const Coord& a) {
    double x = std::tan(0.25 * std::numbers::pi * a[0]), y = std::tan(0.25 * std::numbers::pi * a[1]);
    double s = 1.0 + x * x + y * y;
    return sqr(0.25 * std::numbers::pi) * (1.0 + x * x) * (1.0 + y * y) / (s * std::sqrt(s));
  }
  static double measure(int, const Coord& lo, const Coord& hi) {
    auto F = [](double u, double v) {
      double x = std::tan(0.25 * std::numbers::pi * u), y = std::tan(0.25 * std::numbers::pi * v);
      return std::atan(x * y / std::sqrt(1.0 + x * x + y * y));
    };
    return F(hi[0], hi[1]) - F(lo[0], hi[1]) - F(hi[0], lo[1]) + F(lo[0], lo[1]);
  }
  static void coords(const Point<3>& dir, int& face, Coord& a) {
    int axis = 0;
    for (int k = 1; k < 3; ++k)
      if (std::abs(dir[k]) > std::abs(dir[axis])) axis = k;
    face = 2 * axis + (dir[axis] < 0.0 ? 1 : 0);
    double m = std::abs(dir[axis]);
    a[0] = std::atan(dir[(axis + 1) % 3] / m) / (0.25 * std::numbers::pi);
    a[1] = std::atan(dir[(axis + 2) % 3] / m) / (0.25 * std::numbers::pi);
  }
  static double rootLow(int k, int m) { return -1.0 + 2.0 * k / m; }
  static int rootCount(int m) { return m; }
  static int rootIndex(double a, int m) {
    int k = static_cast<int>((a + 1.0) * 0.5 * m);
    return std::clamp(k, 0, m - 1);
  }
};

// Patch blending weight as a function of s = |y - x| / r: C2 quintic step in s^2,
// equal to 1 at the centre and vanishing at the rim.
inline double patchBlend(double s) {
  if (s >= 1.0) return 0.0;
  double u = s * s;
  return 1.0 - u * u * u * (10.0 - 15.0 * u + 6.0 * u * u);
}

}  // namespace detail

template <int Dim>
struct GridCell {
  using Coord = typename detail::SphereChart<Dim>::Coord;
  int face = 0;
  double r0 = 0.0, r1 = 0.0;
  Coord a0{}, a1{};
  int depth = 0;
  /// Index of the first child, or -1 for a leaf. Children split the
  /// coordinates flagged in splitMask (bit 0 radius, bit k angle k-1) in half.
  int firstChild = -1;
  int splitMask = 0;
  /// Index of the first node of a leaf, or -1.
  int firstNode = -1;
  Point<Dim> centre = Point<Dim>::Zero();
  /// Radius of a ball around centre that covers the cell.
  double halfDiameter = 0.0;
};

/// Nodes and weights only, as stored on disk.
template <int Dim>
struct NodeTable {
  std::vector<Point<Dim>> nodes;
  std::vector<double> weights;
};

template <int Dim>
class VolumeGrid {
  using Chart = detail::SphereChart<Dim>;
  using Coord = typename Chart::Coord;

public:
  static constexpr int dim = Dim;

  VolumeGrid(const BallDomain<Dim>& dom, std::vector<Point<Dim>> marked, const GridParams& params)
      : dom_(dom), params_(params), marked_(std::move(marked)), rule_(gaussLegendre(params.order)) {
    params_.validate();
    classifyMarked();
    buildCells();
    buildNodes();
    buildPatchRule();
    checkMarkedDistance();
  }

  const BallDomain<Dim>& domain() const { return dom_; }
  const GridParams& params() const { return params_; }
  const std::vector<Point<Dim>>& markedPoints() const { return marked_; }
  const std::vector<Point<Dim>>& nodes() const { return nodes_; }
  const std::vector<double>& weights() const { return weights_; }
  const std::vector<GridCell<Dim>>& cells() const { return cells_; }
  std::size_t size() const { return nodes_.size(); }
  int nodesPerCell() const { return nodesPerCell_; }

  double totalWeight() const {
    double s = 0.0;
    for (double w : weights_) s += w;
    return s;
  }

  /// Quadrature of f given at the nodes.
  double integrate(std::span<const double> f) const {
    require(f.size() == nodes_.size(), "integrate: one value per node expected");
    double s = 0.0;
    for (std::size_t j = 0; j < f.size(); ++j) s += weights_[j] * f[j];
    return s;
  }

  template <class Fn>
  double integrateFunction(Fn&& f) const {
    double s = 0.0;
    for (std::size_t j = 0; j < nodes_.size(); ++j) s += weights_[j] * f(nodes_[j]);
    return s;
  }

  /// Leaf cell containing y, or -1 outside the open ball.
  int locate(const Point<Dim>& y) const {
    Point<Dim> v = y - dom_.center();
    double r = v.norm();
    if (!(r < dom_.radius())) return -1;
    int face = 0;
    Coord a{};
    if (r > 0.0) Chart::coords(v / r, face, a);
    else Chart::coords(Point<Dim>::UnitX(), face, a);
    int ir = static_cast<int>(std::upper_bound(breaks_.begin(), breaks_.end(), r) - breaks_.begin()) - 1;
    ir = std::clamp(ir, 0, params_.radialCells - 1);
    int idx = rootId(ir, face, a);
    while (cells_[idx].firstChild >= 0) {
      const auto& c = cells_[idx];
      int child = 0, pos = 0;
      if (c.splitMask & 1) child |= (r >= 0.5 * (c.r0 + c.r1) ? 1 : 0) << pos++;
      for (int k = 0; k < Chart::adim; ++k)
        if (c.splitMask & (2 << k)) child |= (a[k] >= 0.5 * (c.a0[k] + c.a1[k]) ? 1 : 0) << pos++;
      idx = c.firstChild + child;
    }
    return idx;
  }

  /// Diameter of the leaf holding node j.
  double nodeCellDiameter(std::size_t j) const { return 2.0 * cells_[leafOfNode(j)].halfDiameter; }

  int leafOfNode(std::size_t j) const { return leaves_[j / nodesPerCell_]; }

  /// Patch radius used for the singular integral at x.
  double patchRadius(const Point<Dim>& x) const {
    return std::min(params_.patchCap * dom_.radius(), params_.patchFraction * dom_.distanceToBoundary(x));
  }

  /// In-cell Lagrange interpolation of m node fields. Returns false outside
  /// the ball.
  bool interpolate(const Point<Dim>& y, const double* const* fields, int m, double* out) const {
    int leaf = locate(y);
    if (leaf < 0) return false;
    const auto& c = cells_[leaf];
    const int q = rule_.size();
    Point<Dim> v = y - dom_.center();
    double r = v.norm();
    int face = c.face;
    Coord a{};
    if (r > 0.0) Chart::coords(v / r, face, a);
    std::array<std::array<double, 16>, Dim> basis;
    lagrangeBasis(rule_, (2.0 * r - c.r0 - c.r1) / (c.r1 - c.r0), basis[0].data());
    for (int k = 0; k < Chart::adim; ++k)
      lagrangeBasis(rule_, (2.0 * a[k] - c.a0[k] - c.a1[k]) / (c.a1[k] - c.a0[k]), basis[k + 1].data());
    std::array<double, 4096> w;
    int node = 0;
    if constexpr (Dim == 2) {
      for (int i = 0; i < q; ++i)
        for (int j = 0; j < q; ++j) w[node++] = basis[0][i] * basis[1][j];
    } else {
      for (int i = 0; i < q; ++i)
        for (int j = 0; j < q; ++j) {
          double wij = basis[0][i] * basis[1][j];
          for (int k = 0; k < q; ++k) w[node++] = wij * basis[2][k];
        }
    }
    for (int f = 0; f < m; ++f) out[f] = dot(w.data(), fields[f] + c.firstNode, node);
    return true;
  }

  /// out[f] = int_D g(x,y) F_f(y) dy for m fields. fields[f] holds F_f at the
  /// nodes; pointFn(y, buf) evaluates all m fields at an interior point y.
  /// selfNode >= 0 marks x as that node; allowPatch = false forces subtraction.
  template <class PointFn>
  void greenIntegral(const Point<Dim>& x, const double* const* fields, int m, PointFn&& pointFn,
                     double* out, long selfNode = -1, bool allowPatch = true) const {
    const double R = dom_.radius();
    const double r = patchRadius(x);
    double diam = 0.0;
    if (selfNode >= 0) {
      diam = nodeCellDiameter(static_cast<std::size_t>(selfNode));
    } else if (allowPatch) {
      int leaf = locate(x);
      diam = leaf >= 0 ? 2.0 * cells_[leaf].halfDiameter : 0.0;
    }
    const bool usePatch = allowPatch && r > 0.0 && r >= params_.patchCellRatio * diam;
    const Point<Dim> ux = dom_.toUnit(x);
    const double slackX = 1.0 - ux.squaredNorm();
    const std::size_t G = nodes_.size();

    thread_local std::vector<double> coef;
    coef.resize(G);
    kernelRow(ux, slackX, coef.data());
    if (selfNode >= 0) coef[selfNode] = 0.0;

    if (usePatch) {
      // nodes inside the patch only see the (1 - psi) share
      const double r2 = sqr(r / R);
      for (std::size_t j = 0; j < G; ++j) {
        double d2 = 0.0;
        for (int k = 0; k < Dim; ++k) d2 += sqr(ux[k] - unitCoord_[k][j]);
        if (d2 < r2) {
          double blend = 1.0 - detail::patchBlend(std::sqrt(d2) * R / r);
          coef[j] = blend > 0.0 && d2 > 0.0 ? coef[j] * blend : 0.0;
        }
      }
      for (int f = 0; f < m; ++f) out[f] = dot(coef.data(), fields[f], G);
      thread_local std::vector<double> buf;
      buf.resize(m);
      const double rd = std::pow(r, Dim);
      const double scale = detail::greenScale<Dim>(R);
      for (const auto& p : patch_) {
        Point<Dim> y = x + (r * p.s) * p.dir;
        pointFn(y, buf.data());
        Point<Dim> uy = dom_.toUnit(y);
        double g = scale * detail::unitGreen<Dim>(sqr(r * p.s / R), slackX * (1.0 - uy.squaredNorm()));
        double c = rd * p.w * g;
        for (int f = 0; f < m; ++f) out[f] += c * buf[f];
      }
      return;
    }

    if (selfNode < 0)
      for (std::size_t j = 0; j < G; ++j)
        if (!std::isfinite(coef[j])) coef[j] = 0.0;
    thread_local std::vector<double> fx;
    fx.resize(m);
    if (selfNode >= 0) {
      for (int f = 0; f < m; ++f) fx[f] = fields[f][selfNode];
    } else {
      pointFn(x, fx.data());
    }
    double total = 0.0;
    for (std::size_t j = 0; j < G; ++j) total += coef[j];
    const double tau = meanExitTime(dom_, x);
    for (int f = 0; f < m; ++f) out[f] = dot(coef.data(), fields[f], G) + fx[f] * (tau - total);
  }

  /// Single-field convenience form with node values in one array.
  template <class PointFn>
  double greenIntegral(const Point<Dim>& x, const double* values, PointFn&& pointFn, long selfNode = -1) const {
    double out = 0.0;
    const double* fields[1] = {values};
    greenIntegral(x, fields, 1, std::forward<PointFn>(pointFn), &out, selfNode);
    return out;
  }

private:
  // coef[j] = w_j g(x, y_j) for all nodes; x given in unit coordinates.
  void kernelRow(const Point<Dim>& ux, double slackX, double* coef) const {
    const std::size_t G = nodes_.size();
    const double* s = slack_.data();
    const double* w = scaledWeight_.data();
    if constexpr (Dim == 3) {
      const double c = 0.5 / std::numbers::pi;
      const double *X = unitCoord_[0].data(), *Y = unitCoord_[1].data(), *Z = unitCoord_[2].data();
      const double x0 = ux[0], x1 = ux[1], x2 = ux[2];
      for (std::size_t j = 0; j < G; ++j) {
        double a = (x0 - X[j]) * (x0 - X[j]) + (x1 - Y[j]) * (x1 - Y[j]) + (x2 - Z[j]) * (x2 - Z[j]);
        double b = slackX * s[j];
        double sa = std::sqrt(a), sab = std::sqrt(a + b);
        coef[j] = w[j] * (c * b / (sa * sab * (sa + sab)));
      }
    } else {
      for (std::size_t j = 0; j < G; ++j) {
        double a = 0.0;
        for (int k = 0; k < Dim; ++k) a += sqr(ux[k] - unitCoord_[k][j]);
        coef[j] = w[j] * detail::unitGreen<Dim>(a, slackX * s[j]);
      }
    }
  }

  // Fixed-order dot product with four partial sums.
  static double dot(const double* a, const double* b, std::size_t n) {
    double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0;
    std::size_t j = 0;
    for (; j + 4 <= n; j += 4) {
      s0 += a[j] * b[j];
      s1 += a[j + 1] * b[j + 1];
      s2 += a[j + 2] * b[j + 2];
      s3 += a[j + 3] * b[j + 3];
    }
    for (; j < n; ++j) s0 += a[j] * b[j];
    return (s0 + s1) + (s2 + s3);
  }

  struct PatchPoint {
    double s;  // |y - x| / r
    double w;  // weight / r^d, blend included
    Point<Dim> dir;
  };

  void classifyMarked() {
    const double R = dom_.radius();
    for (std::size_t i = 0; i < marked_.size(); ++i) {
      const auto& p = marked_[i];
      require(p.allFinite(), "marked points must be finite");
      double d = dom_.distanceToBoundary(p);
      bool onSphere = dom_.isOnBoundary(p);
      require(onSphere || d > 0.0, "marked points must lie in the closed ball");
      boundary_.push_back(onSphere);
      for (std::size_t k = 0; k < i; ++k)
        if ((marked_[k] - p).norm() <= 1e-12 * R) throw InputError("duplicate marked points");
    }
  }

  int rootId(int ir, int face, const Coord& a) const {
    const int m = params_.angularCells;
    int id = ir * Chart::faces + face;
    for (int k = 0; k < Chart::adim; ++k) id = id * Chart::rootCount(m) + Chart::rootIndex(a[k], m);
    return id;
  }

  void finishCell(GridCell<Dim>& c) const {
    Coord mid;
    for (int k = 0; k < Chart::adim; ++k) mid[k] = 0.5 * (c.a0[k] + c.a1[k]);
    double rm = 0.5 * (c.r0 + c.r1);
    c.centre = dom_.center() + rm * Chart::direction(c.face, mid);
    double h = 0.0;
    const int s = 4;
    std::array<int, Dim> idx{};
    for (;;) {
      Coord a;
      for (int k = 0; k < Chart::adim; ++k)
        a[k] = c.a0[k] + (c.a1[k] - c.a0[k]) * idx[k + 1] / s;
      double r = c.r0 + (c.r1 - c.r0) * idx[0] / s;
      h = std::max(h, (dom_.center() + r * Chart::direction(c.face, a) - c.centre).norm());
      int k = 0;
      while (k < Dim && ++idx[k] > s) idx[k++] = 0;
      if (k == Dim) break;
    }
    c.halfDiameter = h;
  }

  bool shouldSplit(const GridCell<Dim>& c) const {
    const double R = dom_.radius();
    const double diam = 2.0 * c.halfDiameter;
    for (std::size_t i = 0; i < marked_.size(); ++i) {
      double dist = std::max(0.0, (marked_[i] - c.centre).norm() - c.halfDiameter);
      if (boundary_[i]) {
        if (c.depth < params_.boundaryDepth && diam > params_.minCellSize * R &&
            dist < params_.eta * diam)
          return true;
      } else {
        double rp = patchRadius(marked_[i]);
        if (c.depth < params_.interiorDepth && rp < params_.patchCellRatio * diam &&
            dist < std::max(rp, params_.eta * diam))
          return true;
      }
    }
    return false;
  }

  void buildCells() {
    const int mr = params_.radialCells, ma = params_.angularCells;
    const double R = dom_.radius();
    breaks_.resize(mr + 1);
    for (int i = 0; i <= mr; ++i)
      breaks_[i] = R * (1.0 - std::pow(1.0 - static_cast<double>(i) / mr, params_.grading));
    breaks_[mr] = R;
    const int per = Chart::rootCount(ma);
    for (int ir = 0; ir < mr; ++ir)
      for (int face = 0; face < Chart::faces; ++face) {
        std::array<int, Chart::adim> k{};
        for (;;) {
          GridCell<Dim> c;
          c.face = face;
          c.r0 = breaks_[ir];
          c.r1 = breaks_[ir + 1];
          for (int d = 0; d < Chart::adim; ++d) {
            c.a0[d] = Chart::rootLow(k[d], ma);
            c.a1[d] = Chart::rootLow(k[d] + 1, ma);
          }
          finishCell(c);
          cells_.push_back(c);
          int d = Chart::adim - 1;
          while (d >= 0 && ++k[d] == per) k[d--] = 0;
          if (d < 0) break;
        }
      }
    for (std::size_t idx = 0; idx < cells_.size(); ++idx) {
      if (!shouldSplit(cells_[idx])) continue;
      GridCell<Dim> parent = cells_[idx];
      // split only the long sides so flat cells near the sphere stay flat
      std::array<double, Dim> extent;
      extent[0] = parent.r1 - parent.r0;
      for (int d = 0; d < Chart::adim; ++d)
        extent[d + 1] = parent.r1 * (parent.a1[d] - parent.a0[d]) * (Dim == 3 ? 0.25 * std::numbers::pi : 1.0);
      double longest = *std::max_element(extent.begin(), extent.end());
      int mask = 0, count = 0;
      for (int d = 0; d < Dim; ++d)
        if (extent[d] >= 0.5 * longest) mask |= 1 << d, ++count;
      cells_[idx].firstChild = static_cast<int>(cells_.size());
      cells_[idx].splitMask = mask;
      for (int child = 0; child < (1 << count); ++child) {
        GridCell<Dim> c;
        c.face = parent.face;
        c.depth = parent.depth + 1;
        c.r0 = parent.r0, c.r1 = parent.r1, c.a0 = parent.a0, c.a1 = parent.a1;
        int pos = 0;
        for (int d = 0; d < Dim; ++d) {
          if (!(mask & (1 << d))) continue;
          bool hi = child & (1 << pos++);
          double& lo = d == 0 ? c.r0 : c.a0[d - 1];
          double& up = d == 0 ? c.r1 : c.a1[d - 1];
          double mid = 0.5 * (lo + up);
          (hi ? lo : up) = mid;
        }
        finishCell(c);
        cells_.push_back(c);
      }
    }
  }

  void buildNodes() {
    const int q = rule_.size();
    nodesPerCell_ = 1;
    for (int k = 0; k < Dim; ++k) nodesPerCell_ *= q;
    for (std::size_t idx = 0; idx < cells_.size(); ++idx) {
      auto& c = cells_[idx];
      if (c.firstChild >= 0) continue;
      c.firstNode = static_cast<int>(nodes_.size());
      leaves_.push_back(static_cast<int>(idx));
      const double hr = 0.5 * (c.r1 - c.r0), mr = 0.5 * (c.r1 + c.r0);
      // angular tensor rule, rescaled to the exact cell measure
      std::vector<Coord> ang;
      std::vector<double> wa;
      std::array<int, Chart::adim> k{};
      for (;;) {
        Coord a;
        double w = 1.0;
        for (int d = 0; d < Chart::adim; ++d) {
          double h = 0.5 * (c.a1[d] - c.a0[d]);
          a[d] = 0.5 * (c.a1[d] + c.a0[d]) + h * rule_.nodes[k[d]];
          w *= h * rule_.weights[k[d]];
        }
        ang.push_back(a);
        wa.push_back(w * Chart::jacobian(a));
        int d = Chart::adim - 1;
        while (d >= 0 && ++k[d] == q) k[d--] = 0;
        if (d < 0) break;
      }
      double sum = 0.0;
      for (double w : wa) sum += w;
      double fix = Chart::measure(c.face, c.a0, c.a1) / sum;
      for (int i = 0; i < q; ++i) {
        double r = mr + hr * rule_.nodes[i];
        double wr = hr * rule_.weights[i] * std::pow(r, Dim - 1);
        for (std::size_t j = 0; j < ang.size(); ++j) {
          nodes_.push_back(dom_.center() + r * Chart::direction(c.face, ang[j]));
          weights_.push_back(wr * wa[j] * fix);
        }
      }
    }
    const double scale = detail::greenScale<Dim>(dom_.radius());
    for (std::size_t j = 0; j < nodes_.size(); ++j) {
      Point<Dim> u = dom_.toUnit(nodes_[j]);
      for (int k = 0; k < Dim; ++k) unitCoord_[k].push_back(u[k]);
      slack_.push_back(1.0 - u.squaredNorm());
      scaledWeight_.push_back(scale * weights_[j]);
    }
  }

  void buildPatchRule() {
    // Radial panels in t on either side of the blend onset; rho = r t for
    // d >= 3, rho = r t^2 for d = 2 to smooth the logarithm.
    GaussRule gr = gaussLegendre(params_.patchRadialOrder);
    const bool quadratic = Dim == 2;
    const double tMid = quadratic ? std::sqrt(0.5) : 0.5;
    std::vector<std::pair<double, double>> radial;  // (s, weight including Jacobian s^{d-1} ds/dt)
    for (auto [lo, hi] : {std::pair{0.0, tMid}, std::pair{tMid, 1.0}}) {
      for (int i = 0; i < gr.size(); ++i) {
        double t = 0.5 * (lo + hi) + 0.5 * (hi - lo) * gr.nodes[i];
        double wt = 0.5 * (hi - lo) * gr.weights[i];
        double s = quadratic ? t * t : t;
        double ds = quadratic ? 2.0 * t : 1.0;
        radial.emplace_back(s, wt * ds * std::pow(s, Dim - 1) * detail::patchBlend(s));
      }
    }
    const int pa = params_.patchAngularOrder;
    std::vector<std::pair<Point<Dim>, double>> sphere;
    if constexpr (Dim == 2) {
      const int nphi = 4 * pa;
      for (int k = 0; k < nphi; ++k) {
        double phi = 2.0 * std::numbers::pi * (k + 0.5) / nphi;
        sphere.emplace_back(Point<2>(std::cos(phi), std::sin(phi)), 2.0 * std::numbers::pi / nphi);
      }
    } else {
      GaussRule gt = gaussLegendre(pa);
      const int nphi = 2 * pa;
      for (int i = 0; i < pa; ++i) {
        double ct = gt.nodes[i], st = std::sqrt(1.0 - ct * ct);
        for (int k = 0; k < nphi; ++k) {
          double phi = 2.0 * std::numbers::pi * (k + 0.5) / nphi;
          sphere.emplace_back(Point<3>(st * std::cos(phi), st * std::sin(phi), ct),
                              gt.weights[i] * 2.0 * std::numbers::pi / nphi);
        }
      }
    }
    for (const auto& [s, w] : radial) {
      if (w == 0.0) continue;
      for (const auto& [dir, ws] : sphere) patch_.push_back({s, w * ws, dir});
    }
  }

  void checkMarkedDistance() {
    const double tol = 1e-12 * dom_.radius();
    for (const auto& p : marked_)
      for (const auto& y : nodes_)
        if ((p - y).norm() <= tol) throw InputError("a marked point coincides with a quadrature node");
  }

  BallDomain<Dim> dom_;
  GridParams params_;
  std::vector<Point<Dim>> marked_;
  std::vector<bool> boundary_;
  GaussRule rule_;
  std::vector<double> breaks_;
  std::vector<GridCell<Dim>> cells_;
  std::vector<int> leaves_;
  int nodesPerCell_ = 0;
  std::vector<Point<Dim>> nodes_;
  std::vector<double> weights_;
  std::array<std::vector<double>, Dim> unitCoord_;
  std::vector<double> slack_;
  std::vector<double> scaledWeight_;
  std::vector<PatchPoint> patch_;
};

template <int Dim>
VolumeGrid<Dim> buildVolumeGrid(const BallDomain<Dim>& dom, std::vector<Point<Dim>> marked,
                                const GridParams& params) {
  return VolumeGrid<Dim>(dom, std::move(marked), params);
}

namespace detail {
template <int Dim>
void requireSameDomain(const BallDomain<Dim>& dom, const VolumeGrid<Dim>& grid) {
  require(dom.radius() == grid.domain().radius() && dom.center() == grid.domain().center(),
          "grid was built for a different domain");
}
}  // namespace detail

/// int g(x,y) f(y) dy for f given at the grid nodes; patch points take the
/// in-cell interpolant of f.
template <int Dim>
double applyGreen(const BallDomain<Dim>& dom, const VolumeGrid<Dim>& grid, std::span<const double> f,
                  const Point<Dim>& x) {
  detail::requireSameDomain(dom, grid);
  dom.requireInterior(x, "applyGreen: x");
  require(f.size() == grid.size(), "applyGreen: one value per node expected");
  const double* fields[1] = {f.data()};
  return grid.greenIntegral(x, f.data(), [&](const Point<Dim>& y, double* v) { grid.interpolate(y, fields, 1, v); });
}

/// applyGreen at every node.
template <int Dim>
std::vector<double> applyGreenAtNodes(const VolumeGrid<Dim>& grid, std::span<const double> f) {
  require(f.size() == grid.size(), "applyGreenAtNodes: one value per node expected");
  std::vector<double> out(grid.size());
  parallelFor(grid.size(), [&](std::size_t i) {
    const double* fields[1] = {f.data()};
    out[i] = grid.greenIntegral(
        grid.nodes()[i], f.data(), [&](const Point<Dim>& y, double* v) { grid.interpolate(y, fields, 1, v); },
        static_cast<long>(i));
  });
  return out;
}

/// Surface quadrature: cubed-sphere cells (d = 3) or arcs (d = 2) with a
/// Gauss-Legendre rule per cell; cell weights are rescaled to the exact area.
template <int Dim>
class BoundaryGrid {
  using Chart = detail::SphereChart<Dim>;
  using Coord = typename Chart::Coord;

public:
  BoundaryGrid(const BallDomain<Dim>& dom, int cellsPerEdge, int order) : dom_(dom) {
    require(cellsPerEdge >= 1 && cellsPerEdge <= 4096, "boundary grid: cellsPerEdge must lie in [1, 4096]");
    GaussRule g = gaussLegendre(order);
    const int q = g.size();
    const int per = Chart::rootCount(cellsPerEdge);
    const double area = std::pow(dom.radius(), Dim - 1);
    for (int face = 0; face < Chart::faces; ++face) {
      std::array<int, Chart::adim> k{};
      for (;;) {
        Coord lo, hi;
        for (int d = 0; d < Chart::adim; ++d) {
          lo[d] = Chart::rootLow(k[d], cellsPerEdge);
          hi[d] = Chart::rootLow(k[d] + 1, cellsPerEdge);
        }
        std::array<int, Chart::adim> j{};
        std::size_t first = nodes_.size();
        double sum = 0.0;
        for (;;) {
          Coord a;
          double w = 1.0;
          for (int d = 0; d < Chart::adim; ++d) {
            double h = 0.5 * (hi[d] - lo[d]);
            a[d] = 0.5 * (hi[d] + lo[d]) + h * g.nodes[j[d]];
            w *= h * g.weights[j[d]];
          }
          w *= Chart::jacobian(a);
          nodes_.push_back(dom.center() + dom.radius() * Chart::direction(face, a));
          weights_.push_back(w);
          sum += w;
          int d = Chart::adim - 1;
          while (d >= 0 && ++j[d] == q) j[d--] = 0;
          if (d < 0) break;
        }
        double fix = area * Chart::measure(face, lo, hi) / sum;
        for (std::size_t i = first; i < nodes_.size(); ++i) weights_[i] *= fix;
        int d = Chart::adim - 1;
        while (d >= 0 && ++k[d] == per) k[d--] = 0;
        if (d < 0) break;
      }
    }
  }

  const BallDomain<Dim>& domain() const { return dom_; }
  const std::vector<Point<Dim>>& nodes() const { return nodes_; }
  const std::vector<double>& weights() const { return weights_; }
  std::size_t size() const { return nodes_.size(); }

  template <class Fn>
  double integrate(Fn&& f) const {
    double s = 0.0;
    for (std::size_t j = 0; j < nodes_.size(); ++j) s += weights_[j] * f(nodes_[j]);
    return s;
  }

private:
  BallDomain<Dim> dom_;
  std::vector<Point<Dim>> nodes_;
  std::vector<double> weights_;
};

// Node tables on disk.
//   CSV:    header "x0,...,x{d-1},weight", one node per line, %.17g.
//   Binary: "SMGRID01", int32 dimension, uint64 count, then count records of
//           d+1 little-endian doubles (coordinates, weight).

template <int Dim>
void writeNodeTableCsv(std::ostream& os, const std::vector<Point<Dim>>& nodes, const std::vector<double>& weights) {
  for (int k = 0; k < Dim; ++k) os << 'x' << k << ',';
  os << "weight\n";
  char buf[64];
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    for (int k = 0; k < Dim; ++k) {
      std::snprintf(buf, sizeof buf, "%.17g,", nodes[i][k]);
      os << buf;
    }
    std::snprintf(buf, sizeof buf, "%.17g\n", weights[i]);
    os << buf;
  }
}

template <int Dim>
void writeNodeTableBinary(std::ostream& os, const std::vector<Point<Dim>>& nodes, const std::vector<double>& weights) {
  os.write("SMGRID01", 8);
  std::int32_t d = Dim;
  std::uint64_t n = nodes.size();
  os.write(reinterpret_cast<const char*>(&d), sizeof d);
  os.write(reinterpret_cast<const char*>(&n), sizeof n);
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    double rec[Dim + 1];
    for (int k = 0; k < Dim; ++k) rec[k] = nodes[i][k];
    rec[Dim] = weights[i];
    os.write(reinterpret_cast<const char*>(rec), sizeof rec);
  }
}

template <int Dim>
NodeTable<Dim> readNodeTableBinary(std::istream& is) {
  char magic[8];
  is.read(magic, 8);
  require(is && std::memcmp(magic, "SMGRID01", 8) == 0, "node table: bad magic");
  std::int32_t d = 0;
  std::uint64_t n = 0;
  is.read(reinterpret_cast<char*>(&d), sizeof d);
  is.read(reinterpret_cast<char*>(&n), sizeof n);
  require(is && d == Dim, "node table: dimension mismatch");
  NodeTable<Dim> t;
  t.nodes.resize(n);
  t.weights.resize(n);
  for (std::uint64_t i = 0; i < n; ++i) {
    double rec[Dim + 1];
    is.read(reinterpret_cast<char*>(rec), sizeof rec);
    require(static_cast<bool>(is), "node table: truncated");
    for (int k = 0; k < Dim; ++k) t.nodes[i][k] = rec[k];
    t.weights[i] = rec[Dim];
  }
  return t;
}

}  // namespace supermoment
