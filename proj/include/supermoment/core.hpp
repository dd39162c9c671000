#pragma once

#include <Eigen/Core>

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace supermoment {

template <int Dim>
using Point = Eigen::Matrix<double, Dim, 1>;

/// Rejected input: domain violations, malformed configurations, bad parameters.
class InputError : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

/// A stochastic run hit its configured work budget.
class BudgetExceeded : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Surface area of the unit (d-1)-sphere, 2 pi^{d/2} / Gamma(d/2).
inline double unitSphereArea(int d) {
  return 2.0 * std::pow(std::numbers::pi, 0.5 * d) / std::tgamma(0.5 * d);
}

template <class T>
constexpr T sqr(T v) {
  return v * v;
}

inline void require(bool ok, const std::string& what) {
  if (!ok) throw InputError(what);
}

}  // namespace supermoment
