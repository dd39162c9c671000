#pragma once

#include "supermoment/ball.hpp"

#include <boost/random/normal_distribution.hpp>

#include <cstdint>
#include <random>

namespace supermoment {

using Engine = std::mt19937_64;

/// Independent generator for substream `index` of `seed`. Every stochastic
/// operation draws sample i (or replicate i) from stream(seed, i), so results
/// do not depend on how work is split across threads.
inline Engine stream(std::uint64_t seed, std::uint64_t index) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32),
                    0x5eedu};
  return Engine(seq);
}

/// Uniform on [0, 1) from the top 53 bits of one draw.
inline double uniform01(Engine& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

template <int Dim>
Point<Dim> standardNormal(Engine& rng) {
  boost::random::normal_distribution<double> normal;
  Point<Dim> v;
  for (int k = 0; k < Dim; ++k) v[k] = normal(rng);
  return v;
}

template <int Dim>
Point<Dim> uniformOnUnitSphere(Engine& rng) {
  for (;;) {
    Point<Dim> v = standardNormal<Dim>(rng);
    double n = v.norm();
    if (n > 1e-12) return v / n;
  }
}

template <int Dim>
Point<Dim> uniformInBall(const BallDomain<Dim>& dom, Engine& rng, double radius) {
  for (;;) {
    double r = radius * std::pow(uniform01(rng), 1.0 / Dim);
    if (r < radius) return dom.center() + r * uniformOnUnitSphere<Dim>(rng);
  }
}

template <int Dim>
Point<Dim> uniformInBall(const BallDomain<Dim>& dom, Engine& rng) {
  return uniformInBall(dom, rng, dom.radius());
}

template <int Dim>
Point<Dim> uniformOnBoundary(const BallDomain<Dim>& dom, Engine& rng) {
  return dom.center() + dom.radius() * uniformOnUnitSphere<Dim>(rng);
}

}  // namespace supermoment
