#pragma once

#include "supermoment/core.hpp"

namespace supermoment {

/// Open ball in R^Dim. The default instance is the unit ball at the origin.
template <int Dim>
class BallDomain {
  static_assert(Dim >= 2, "ball domains need dimension >= 2");

public:
  static constexpr int dim = Dim;

  BallDomain() = default;
  explicit BallDomain(double radius, Point<Dim> center = Point<Dim>::Zero())
      : radius_(radius), center_(std::move(center)) {
    require(std::isfinite(radius) && radius > 0.0, "ball radius must be positive");
    require(center_.allFinite(), "ball center must be finite");
  }

  double radius() const { return radius_; }
  const Point<Dim>& center() const { return center_; }

  double volume() const { return unitSphereArea(Dim) * std::pow(radius_, Dim) / Dim; }
  double surfaceArea() const { return unitSphereArea(Dim) * std::pow(radius_, Dim - 1); }

  /// Signed distance to the sphere, positive inside.
  double distanceToBoundary(const Point<Dim>& p) const { return radius_ - (p - center_).norm(); }

  bool isInterior(const Point<Dim>& p) const { return distanceToBoundary(p) > 0.0; }

  bool isOnBoundary(const Point<Dim>& p, double relTol = 1e-9) const {
    return std::abs(distanceToBoundary(p)) <= relTol * radius_;
  }

  /// Radial projection onto the sphere; p must differ from the center.
  Point<Dim> projectToBoundary(const Point<Dim>& p) const {
    Point<Dim> v = p - center_;
    return center_ + (radius_ / v.norm()) * v;
  }

  /// Coordinates in the unit ball frame.
  Point<Dim> toUnit(const Point<Dim>& p) const { return (p - center_) / radius_; }
  Point<Dim> fromUnit(const Point<Dim>& u) const { return center_ + radius_ * u; }

  void requireInterior(const Point<Dim>& p, const char* what) const {
    if (!p.allFinite() || !isInterior(p))
      throw InputError(std::string(what) + " must lie strictly inside the ball");
  }

  void requireBoundary(const Point<Dim>& p, const char* what) const {
    if (!p.allFinite() || !isOnBoundary(p))
      throw InputError(std::string(what) + " must lie on the boundary sphere");
  }

private:
  double radius_ = 1.0;
  Point<Dim> center_ = Point<Dim>::Zero();
};

}  // namespace supermoment
