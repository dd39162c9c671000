#pragma once

#include "supermoment/quadrature.hpp"

#include <vector>

namespace supermoment {

// Volume rule in coordinates star-shaped about an interior point x:
//   y = x + t L(w) w,  t in [0, 1],  w on the unit sphere,
// where L(w) is the distance from x to the sphere along w. The volume element
// is t^{d-1} L^d dt dw, so g(x, y) dy stays bounded at y = x and the rule
// integrates the Green potential at x with no singular correction. The
// cells reuse the cubed-sphere chart and split toward marked boundary points,
// where sources built from Poisson kernels peak. The rule is built afresh for
// every x; its node layout moves continuously with x, so quadrature errors are
// smooth functions of the target.
template <int Dim>
class StarRule {
  using Chart = detail::SphereChart<Dim>;
  using Coord = typename Chart::Coord;

public:
  StarRule(const BallDomain<Dim>& dom, const Point<Dim>& x, const std::vector<Point<Dim>>& boundaryPoints,
           const GridParams& params)
      : dom_(dom), x_(x), params_(params), rule_(gaussLegendre(params.order)) {
    params_.validate();
    dom_.requireInterior(x, "star rule centre");
    for (const auto& z : boundaryPoints)
      if (dom_.isOnBoundary(z)) marked_.push_back(z);
    v_ = x_ - dom_.center();
    slackX_ = 1.0 - v_.squaredNorm() / sqr(dom_.radius());
    build();
  }

  const std::vector<Point<Dim>>& nodes() const { return nodes_; }
  /// Plain volume weights.
  const std::vector<double>& weights() const { return weights_; }
  /// weights()[j] * g(x, y_j).
  const std::vector<double>& greenWeights() const { return greenWeights_; }
  std::size_t size() const { return nodes_.size(); }

  /// Sum of greenWeights()[j] * f(y_j), i.e. int_D g(x,y) f(y) dy.
  template <class Fn>
  double greenIntegral(Fn&& f) const {
    double s = 0.0;
    for (std::size_t j = 0; j < nodes_.size(); ++j) s += greenWeights_[j] * f(nodes_[j]);
    return s;
  }

private:
  struct Cell {
    int face = 0;
    double t0 = 0.0, t1 = 1.0;
    Coord a0{}, a1{};
    int depth = 0;
    Point<Dim> centre = Point<Dim>::Zero();
    double halfDiameter = 0.0;
  };

  double rayLength(const Point<Dim>& w) const {
    double b = v_.dot(w);
    double c = sqr(dom_.radius()) - v_.squaredNorm();
    // -b + sqrt(b^2 + c), written without cancellation
    double s = std::sqrt(b * b + c);
    return b <= 0.0 ? s - b : c / (s + b);
  }

  Point<Dim> map(int face, double t, const Coord& a) const {
    Point<Dim> w = Chart::direction(face, a);
    return x_ + (t * rayLength(w)) * w;
  }

  void finish(Cell& c) const {
    Coord mid;
    for (int k = 0; k < Chart::adim; ++k) mid[k] = 0.5 * (c.a0[k] + c.a1[k]);
    c.centre = map(c.face, 0.5 * (c.t0 + c.t1), mid);
    double h = 0.0;
    const int s = 4;
    std::array<int, Dim> idx{};
    for (;;) {
      Coord a;
      for (int k = 0; k < Chart::adim; ++k) a[k] = c.a0[k] + (c.a1[k] - c.a0[k]) * idx[k + 1] / s;
      double t = c.t0 + (c.t1 - c.t0) * idx[0] / s;
      h = std::max(h, (map(c.face, t, a) - c.centre).norm());
      int k = 0;
      while (k < Dim && ++idx[k] > s) idx[k++] = 0;
      if (k == Dim) break;
    }
    c.halfDiameter = h;
  }

  bool shouldSplit(const Cell& c) const {
    if (c.depth >= params_.boundaryDepth) return false;
    const double diam = 2.0 * c.halfDiameter;
    if (diam <= params_.minCellSize * dom_.radius()) return false;
    for (const auto& z : marked_) {
      double dist = std::max(0.0, (z - c.centre).norm() - c.halfDiameter);
      if (dist < params_.eta * diam) return true;
    }
    return false;
  }

  void build() {
    const int mr = params_.radialCells, ma = params_.angularCells;
    std::vector<double> breaks(mr + 1);
    for (int i = 0; i <= mr; ++i) breaks[i] = 1.0 - std::pow(1.0 - static_cast<double>(i) / mr, params_.grading);
    breaks[mr] = 1.0;
    std::vector<Cell> work;
    const int per = Chart::rootCount(ma);
    for (int ir = mr - 1; ir >= 0; --ir)
      for (int face = Chart::faces - 1; face >= 0; --face) {
        std::array<int, Chart::adim> k{};
        for (;;) {
          Cell c;
          c.face = face;
          c.t0 = breaks[ir];
          c.t1 = breaks[ir + 1];
          for (int d = 0; d < Chart::adim; ++d) {
            c.a0[d] = Chart::rootLow(k[d], ma);
            c.a1[d] = Chart::rootLow(k[d] + 1, ma);
          }
          finish(c);
          work.push_back(c);
          int d = Chart::adim - 1;
          while (d >= 0 && ++k[d] == per) k[d--] = 0;
          if (d < 0) break;
        }
      }
    while (!work.empty()) {
      Cell c = work.back();
      work.pop_back();
      if (!shouldSplit(c)) {
        emit(c);
        continue;
      }
      Coord mid;
      for (int k = 0; k < Chart::adim; ++k) mid[k] = 0.5 * (c.a0[k] + c.a1[k]);
      const double L = rayLength(Chart::direction(c.face, mid));
      std::array<double, Dim> extent;
      extent[0] = (c.t1 - c.t0) * L;
      for (int d = 0; d < Chart::adim; ++d)
        extent[d + 1] = c.t1 * L * (c.a1[d] - c.a0[d]) * (Dim == 3 ? 0.25 * std::numbers::pi : 1.0);
      double longest = *std::max_element(extent.begin(), extent.end());
      int mask = 0, count = 0;
      for (int d = 0; d < Dim; ++d)
        if (extent[d] >= 0.5 * longest) mask |= 1 << d, ++count;
      for (int child = (1 << count) - 1; child >= 0; --child) {
        Cell k = c;
        k.depth = c.depth + 1;
        int pos = 0;
        for (int d = 0; d < Dim; ++d) {
          if (!(mask & (1 << d))) continue;
          bool hi = child & (1 << pos++);
          double& lo = d == 0 ? k.t0 : k.a0[d - 1];
          double& up = d == 0 ? k.t1 : k.a1[d - 1];
          double m = 0.5 * (lo + up);
          (hi ? lo : up) = m;
        }
        finish(k);
        work.push_back(k);
      }
    }
  }

  void emit(const Cell& c) {
    const int q = rule_.size();
    const double R = dom_.radius();
    const double scale = detail::greenScale<Dim>(R);
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
    const double fix = Chart::measure(c.face, c.a0, c.a1) / sum;
    // quadratic substitution t = t1 s^2 in the innermost shell absorbs the
    // t log t behaviour of the planar kernel
    const bool inner = c.t0 == 0.0;
    for (int i = 0; i < q; ++i) {
      double t, wt;
      if (inner) {
        double s = 0.5 * (1.0 + rule_.nodes[i]);
        t = c.t1 * s * s;
        wt = c.t1 * s * rule_.weights[i];
      } else {
        t = 0.5 * (c.t0 + c.t1) + 0.5 * (c.t1 - c.t0) * rule_.nodes[i];
        wt = 0.5 * (c.t1 - c.t0) * rule_.weights[i];
      }
      for (std::size_t j = 0; j < ang.size(); ++j) {
        Point<Dim> w = Chart::direction(c.face, ang[j]);
        double L = rayLength(w);
        double rho = t * L;
        Point<Dim> y = x_ + rho * w;
        double vol = wt * wa[j] * fix * std::pow(t, Dim - 1) * std::pow(L, Dim);
        // R^2 - |y - c|^2 = (L - rho)(L + rho + 2 v.w), free of cancellation
        double slackY = (1.0 - t) * L * (L + rho + 2.0 * v_.dot(w)) / sqr(R);
        double g = scale * detail::unitGreen<Dim>(sqr(rho / R), slackX_ * slackY);
        nodes_.push_back(y);
        weights_.push_back(vol);
        greenWeights_.push_back(vol * g);
      }
    }
  }

  BallDomain<Dim> dom_;
  Point<Dim> x_;
  GridParams params_;
  GaussRule rule_;
  std::vector<Point<Dim>> marked_;
  Point<Dim> v_;
  double slackX_ = 0.0;
  std::vector<Point<Dim>> nodes_;
  std::vector<double> weights_;
  std::vector<double> greenWeights_;
};

}  // namespace supermoment
