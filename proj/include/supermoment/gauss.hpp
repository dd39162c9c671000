#pragma once

#include "supermoment/core.hpp"

#include <boost/math/special_functions/legendre.hpp>

#include <vector>

namespace supermoment {

/// Gauss-Legendre rule on [-1, 1], nodes ascending.
struct GaussRule {
  std::vector<double> nodes;
  std::vector<double> weights;
  /// Barycentric weights for Lagrange interpolation through the nodes.
  std::vector<double> bary;

  int size() const { return static_cast<int>(nodes.size()); }
};

inline GaussRule gaussLegendre(int q) {
  require(q >= 1 && q <= 64, "Gauss-Legendre order must lie in [1, 64]");
  GaussRule g;
  std::vector<double> zeros = boost::math::legendre_p_zeros<double>(q);
  std::vector<double> pos;
  for (double z : zeros) pos.push_back(z);
  for (auto it = pos.rbegin(); it != pos.rend(); ++it)
    if (*it > 0.0) g.nodes.push_back(-*it);
  for (double z : pos) g.nodes.push_back(z);
  for (double x : g.nodes) {
    double dp = boost::math::legendre_p_prime(q, x);
    g.weights.push_back(2.0 / ((1.0 - x * x) * dp * dp));
  }
  g.bary.resize(q);
  for (int j = 0; j < q; ++j) {
    double p = 1.0;
    for (int k = 0; k < q; ++k)
      if (k != j) p *= g.nodes[j] - g.nodes[k];
    g.bary[j] = 1.0 / p;
  }
  return g;
}

/// Lagrange basis values at t for the rule's nodes (barycentric form).
inline void lagrangeBasis(const GaussRule& g, double t, double* out) {
  const int q = g.size();
  double denom = 0.0;
  for (int j = 0; j < q; ++j) {
    double diff = t - g.nodes[j];
    if (diff == 0.0) {
      for (int k = 0; k < q; ++k) out[k] = k == j ? 1.0 : 0.0;
      return;
    }
    out[j] = g.bary[j] / diff;
    denom += out[j];
  }
  for (int j = 0; j < q; ++j) out[j] /= denom;
}

}  // namespace supermoment
