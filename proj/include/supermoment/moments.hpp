#pragma once

#include "supermoment/kernels.hpp"
#include "supermoment/partitions.hpp"
#include "supermoment/quadrature.hpp"
#include "supermoment/random.hpp"
#include "supermoment/star.hpp"

#include <array>
#include <functional>
#include <memory>
#include <numbers>
#include <ostream>
#include <vector>

namespace supermoment {

// Moment densities of the exit measure:
//   rho(x, z_i) = k(x, z_i)
//   rho(x, z_A) = sum over ordered splits (B, A\B), B != {}, A, of
//                 int_D g(x,y) rho(y, z_B) rho(y, z_{A\B}) dy.
// Ordered splits count (B, A\B) and (A\B, B) separately, so for two points
// rho(x, z_1, z_2) = 2 int g(x,y) k(y,z_1) k(y,z_2) dy.

inline constexpr int kMaxConfigPoints = 8;

template <int Dim>
class BoundaryConfig {
public:
  BoundaryConfig(const BallDomain<Dim>& dom, std::vector<Point<Dim>> points, int maxPoints = kMaxConfigPoints)
      : points_(std::move(points)) {
    require(maxPoints >= 1 && maxPoints <= 16, "boundary configuration: maxPoints must lie in [1, 16]");
    require(!points_.empty(), "boundary configuration needs at least one point");
    require(static_cast<int>(points_.size()) <= maxPoints,
            "boundary configuration has more points than the configured maximum");
    for (const auto& z : points_) dom.requireBoundary(z, "configuration point");
    minSeparation_ = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < points_.size(); ++i)
      for (std::size_t j = 0; j < i; ++j) minSeparation_ = std::min(minSeparation_, (points_[i] - points_[j]).norm());
    require(points_.size() == 1 || minSeparation_ > 1e-9 * dom.radius(),
            "configuration points must be pairwise distinct");
  }

  int size() const { return static_cast<int>(points_.size()); }
  const std::vector<Point<Dim>>& points() const { return points_; }
  const Point<Dim>& operator[](int i) const { return points_[i]; }
  double minSeparation() const { return minSeparation_; }
  SubsetKey fullKey() const { return (SubsetKey{1} << size()) - 1; }

private:
  std::vector<Point<Dim>> points_;
  double minSeparation_ = 0.0;
};

struct RhoOptions {
  /// Largest subset size tabulated at the nodes; 0 means the full configuration.
  int maxLevel = 0;
  /// Levels up to this size use the polar patch at the nodes, higher levels
  /// use singularity subtraction.
  int nodePatchMaxLevel = 2;
};

/// rho(., z_B) at the grid nodes for every tabulated subset B.
template <int Dim>
class RhoTable {
public:
  RhoTable(std::shared_ptr<const VolumeGrid<Dim>> grid, BoundaryConfig<Dim> config)
      : grid_(std::move(grid)), config_(std::move(config)), fields_(std::size_t{1} << config_.size()) {}

  const VolumeGrid<Dim>& grid() const { return *grid_; }
  std::shared_ptr<const VolumeGrid<Dim>> gridPtr() const { return grid_; }
  const BoundaryConfig<Dim>& config() const { return config_; }
  const BallDomain<Dim>& domain() const { return grid_->domain(); }

  bool has(SubsetKey key) const { return key > 0 && key < fields_.size() && !fields_[key].empty(); }

  const std::vector<double>& field(SubsetKey key) const {
    require(has(key), "rho table has no field for this subset");
    return fields_[key];
  }

  void setField(SubsetKey key, std::vector<double> values) {
    require(key > 0 && key < fields_.size(), "subset key out of range");
    require(values.size() == grid_->size(), "rho field must hold one value per node");
    fields_[key] = std::move(values);
  }

  /// Largest L such that every subset of size <= L is present.
  int completeLevel() const {
    int n = config_.size();
    for (int L = 1; L <= n; ++L)
      for (SubsetKey k = 1; k < fields_.size(); ++k)
        if (subsetSize(k) == L && fields_[k].empty()) return L - 1;
    return n;
  }

private:
  std::shared_ptr<const VolumeGrid<Dim>> grid_;
  BoundaryConfig<Dim> config_;
  std::vector<std::vector<double>> fields_;
};

namespace detail {

// Evaluates F_A(y) = sum over ordered splits rho_B(y) rho_{A\B}(y) for a list
// of target subsets at arbitrary interior points: singletons in closed form,
// larger subsets by in-cell interpolation of the tabulated fields.
template <int Dim>
class SourceEvaluator {
public:
  SourceEvaluator(const RhoTable<Dim>& table, std::vector<SubsetKey> targets)
      : table_(table), targets_(std::move(targets)) {
    const int n = table.config().size();
    std::vector<bool> need(std::size_t{1} << n, false);
    for (SubsetKey A : targets_) {
      for (SubsetKey B = (A - 1) & A; B != 0; B = (B - 1) & A) need[B] = true;
    }
    for (SubsetKey B = 1; B < need.size(); ++B) {
      if (!need[B] || subsetSize(B) == 1) continue;
      require(table.has(B), "rho table is missing a lower-level subset");
      interpKeys_.push_back(B);
      interpFields_.push_back(table.field(B).data());
    }
  }

  int size() const { return static_cast<int>(targets_.size()); }

  void operator()(const Point<Dim>& y, double* out) const {
    const auto& cfg = table_.config();
    const auto& dom = table_.domain();
    std::array<double, std::size_t{1} << kMaxConfigPoints> val{};
    thread_local std::vector<double> buf;
    if (!interpKeys_.empty()) {
      buf.resize(interpKeys_.size());
      table_.grid().interpolate(y, interpFields_.data(), static_cast<int>(interpKeys_.size()), buf.data());
      for (std::size_t k = 0; k < interpKeys_.size(); ++k) val[interpKeys_[k]] = buf[k];
    }
    for (int i = 0; i < cfg.size(); ++i) val[SubsetKey{1} << i] = poissonUnchecked(dom, y, cfg[i]);
    for (std::size_t t = 0; t < targets_.size(); ++t) {
      SubsetKey A = targets_[t];
      double s = 0.0;
      for (SubsetKey B = (A - 1) & A; B != 0; B = (B - 1) & A) s += val[B] * val[A & ~B];
      out[t] = s;
    }
  }

  /// F at every node from the tabulated fields.
  std::vector<double> nodeSource(SubsetKey A) const {
    const std::size_t G = table_.grid().size();
    std::vector<double> s(G, 0.0);
    for (SubsetKey B = (A - 1) & A; B != 0; B = (B - 1) & A) {
      const auto& f1 = table_.field(B);
      const auto& f2 = table_.field(A & ~B);
      for (std::size_t j = 0; j < G; ++j) s[j] += f1[j] * f2[j];
    }
    return s;
  }

private:
  const RhoTable<Dim>& table_;
  std::vector<SubsetKey> targets_;
  std::vector<SubsetKey> interpKeys_;
  std::vector<const double*> interpFields_;
};

}  // namespace detail

/// Fills rho fields level by level: singletons from the Poisson kernel, then
/// each level from the previous ones. All subsets of one level share one
/// kernel pass per node.
template <int Dim>
RhoTable<Dim> computeRhoTables(const BallDomain<Dim>& dom, const BoundaryConfig<Dim>& config,
                               std::shared_ptr<const VolumeGrid<Dim>> grid, const RhoOptions& opts = {}) {
  require(grid != nullptr, "computeRhoTables: grid is required");
  detail::requireSameDomain(dom, *grid);
  const int n = config.size();
  require(n <= kMaxConfigPoints, "computeRhoTables: configuration exceeds the maximum size");
  const int top = opts.maxLevel <= 0 ? n : std::min(opts.maxLevel, n);
  RhoTable<Dim> table(grid, config);
  const std::size_t G = grid->size();
  for (int i = 0; i < n; ++i) {
    std::vector<double> k(G);
    for (std::size_t j = 0; j < G; ++j) k[j] = poissonUnchecked(dom, grid->nodes()[j], config[i]);
    table.setField(SubsetKey{1} << i, std::move(k));
  }
  for (int L = 2; L <= top; ++L) {
    std::vector<SubsetKey> level;
    for (SubsetKey A = 1; A <= config.fullKey(); ++A)
      if (subsetSize(A) == L) level.push_back(A);
    detail::SourceEvaluator<Dim> src(table, level);
    std::vector<std::vector<double>> sources;
    std::vector<const double*> ptrs;
    for (SubsetKey A : level) sources.push_back(src.nodeSource(A));
    for (const auto& s : sources) ptrs.push_back(s.data());
    std::vector<std::vector<double>> result(level.size(), std::vector<double>(G));
    const bool patch = L <= opts.nodePatchMaxLevel;
    const int m = static_cast<int>(level.size());
    parallelFor(G, [&](std::size_t i) {
      thread_local std::vector<double> out;
      out.resize(m);
      grid->greenIntegral(grid->nodes()[i], ptrs.data(), m, src, out.data(), static_cast<long>(i), patch);
      for (int f = 0; f < m; ++f) result[f][i] = out[f];
    });
    for (std::size_t f = 0; f < level.size(); ++f) table.setField(level[f], std::move(result[f]));
  }
  return table;
}

/// Evaluates rho(., z_A) off the grid for a fixed subset. The final-level
/// integral is recomputed at each x with a star rule centred at x, using
/// the tabulated lower levels for the source.
template <int Dim>
class RhoEvaluator {
public:
  RhoEvaluator(const RhoTable<Dim>& table, SubsetKey A)
      : table_(table), key_(A), src_(table, {A}) {
    require(A > 0 && A <= table.config().fullKey(), "subset key out of range");
    if (subsetSize(A) >= 2) {
      for (SubsetKey B = (A - 1) & A; B != 0; B = (B - 1) & A)
        require(table.has(B), "rho table is missing a lower-level subset");
    }
  }

  double operator()(const Point<Dim>& x) const {
    const auto& dom = table_.domain();
    dom.requireInterior(x, "rhoAt: x");
    if (subsetSize(key_) == 1) return poissonUnchecked(dom, x, table_.config()[std::countr_zero(key_)]);
    StarRule<Dim> rule(dom, x, table_.config().points(), table_.grid().params());
    return rule.greenIntegral([this](const Point<Dim>& y) {
      double f = 0.0;
      src_(y, &f);
      return f;
    });
  }

private:
  const RhoTable<Dim>& table_;
  SubsetKey key_;
  detail::SourceEvaluator<Dim> src_;
};

template <int Dim>
double rhoAt(const BallDomain<Dim>& dom, const RhoTable<Dim>& table, const Point<Dim>& x, SubsetKey A) {
  detail::requireSameDomain(dom, table.grid());
  return RhoEvaluator<Dim>(table, A)(x);
}

struct MonteCarloEstimate {
  double estimate = 0.0;
  double standardError = 0.0;
  std::uint64_t samples = 0;
};

namespace detail {
template <int Dim>
double rhoSample(const BallDomain<Dim>& dom, const BoundaryConfig<Dim>& cfg, const Point<Dim>& x, SubsetKey A,
                 Engine& rng) {
  const int size = subsetSize(A);
  if (size == 1) return poissonUnchecked(dom, x, cfg[std::countr_zero(A)]);
  // uniform ordered proper split: the j-th proper nonempty submask of A
  const std::uint64_t splits = (std::uint64_t{1} << size) - 2;
  std::uint64_t pick = 1 + static_cast<std::uint64_t>(uniform01(rng) * splits);
  if (pick > splits) pick = splits;
  SubsetKey B = 0;
  int bit = 0;
  for (SubsetKey rest = A; rest; rest &= rest - 1, ++bit)
    if (pick & (std::uint64_t{1} << bit)) B |= rest & (~rest + 1);
  Point<Dim> y;
  do y = uniformInBall(dom, rng);
  while (y == x);
  double w = static_cast<double>(splits) * dom.volume() * greenUnchecked(dom, x, y);
  double left = rhoSample(dom, cfg, y, B, rng);
  double right = rhoSample(dom, cfg, y, A & ~B, rng);
  return w * left * right;
}
}  // namespace detail

/// Unbiased recursive estimator of rho(x, z_A); sample i draws from stream(seed, i).
template <int Dim>
MonteCarloEstimate rhoMonteCarlo(const BallDomain<Dim>& dom, const BoundaryConfig<Dim>& cfg, const Point<Dim>& x,
                                 SubsetKey A, std::uint64_t samples, std::uint64_t seed) {
  dom.requireInterior(x, "rhoMonteCarlo: x");
  require(A > 0 && A <= cfg.fullKey(), "rhoMonteCarlo: subset key out of range");
  require(samples >= 1000, "rhoMonteCarlo: at least 1000 samples required");
  MonteCarloEstimate est;
  est.samples = samples;
  if (subsetSize(A) == 1) {
    est.estimate = poissonUnchecked(dom, x, cfg[std::countr_zero(A)]);
    return est;
  }
  std::vector<double> values(samples);
  parallelFor(samples, [&](std::size_t i) {
    Engine rng = stream(seed, i);
    values[i] = detail::rhoSample(dom, cfg, x, A, rng);
  });
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= static_cast<double>(samples);
  double var = 0.0;
  for (double v : values) var += sqr(v - mean);
  var /= static_cast<double>(samples - 1);
  est.estimate = mean;
  est.standardError = std::sqrt(var / static_cast<double>(samples));
  return est;
}

template <int Dim>
struct DiscreteMeasure {
  std::vector<Point<Dim>> points;
  std::vector<double> masses;

  void validate(const BallDomain<Dim>& dom) const {
    require(!points.empty() && points.size() == masses.size(), "measure needs matching atoms and masses");
    double total = 0.0;
    for (std::size_t i = 0; i < points.size(); ++i) {
      dom.requireInterior(points[i], "measure atom");
      require(std::isfinite(masses[i]) && masses[i] > 0.0, "measure masses must be positive");
      total += masses[i];
    }
    require(total > 0.0, "measure total mass must be positive");
  }

  double totalMass() const {
    double s = 0.0;
    for (double m : masses) s += m;
    return s;
  }
};

/// Density of the n-th moment measure of the exit measure under P_mu at
/// (z_1..z_n): the sum over set partitions of products of <mu, rho(., z_C)>.
template <int Dim>
double momentDensity(const BallDomain<Dim>& dom, const RhoTable<Dim>& table, const DiscreteMeasure<Dim>& mu) {
  detail::requireSameDomain(dom, table.grid());
  mu.validate(dom);
  const int n = table.config().size();
  std::vector<double> pairing(std::size_t{1} << n, -1.0);
  auto pair = [&](SubsetKey C) {
    if (pairing[C] < 0.0) {
      RhoEvaluator<Dim> rho(table, C);
      double s = 0.0;
      for (std::size_t a = 0; a < mu.points.size(); ++a) s += mu.masses[a] * rho(mu.points[a]);
      pairing[C] = s;
    }
    return pairing[C];
  };
  double total = 0.0;
  forEachPartition(n, [&](const std::vector<SubsetKey>& blocks) {
    double prod = 1.0;
    for (SubsetKey C : blocks) prod *= pair(C);
    total += prod;
  });
  return total;
}

template <int Dim>
using BoundaryFunction = std::function<double(const Point<Dim>&)>;

struct FunctionalMomentOptions {
  GridParams grid;
  /// Resolution of the boundary rule used for harmonic extensions.
  int boundaryCells = 12;
  int boundaryOrder = 6;
};

namespace detail {

// Poisson integral in polar coordinates about the nearest boundary point z*:
// the kernel depends only on the angle psi from z*, so psi gets Gauss panels
// graded geometrically from the scale 1 - |y|/R, and the azimuth a periodic
// trapezoid rule.
template <int Dim>
double polarPoissonIntegral(const BallDomain<Dim>& dom, const BoundaryFunction<Dim>& f, const Point<Dim>& y,
                            const Point<Dim>& n, double anchor) {
  static const GaussRule gl = gaussLegendre(12);
  constexpr int azimuth = 48;
  const double R = dom.radius();
  const double delta = std::max(1.0 - (y - dom.center()).norm() / R, 1e-12);
  Point<Dim> e1 = Point<Dim>::Zero(), e2 = Point<Dim>::Zero();
  if constexpr (Dim == 2) {
    e1 << -n[1], n[0];
  } else {
    int k = std::abs(n[0]) < 0.6 ? 0 : (std::abs(n[1]) < 0.6 ? 1 : 2);
    Point<Dim> a = Point<Dim>::Zero();
    a[k] = 1.0;
    e1 = (a - a.dot(n) * n).normalized();
    e2 << n[1] * e1[2] - n[2] * e1[1], n[2] * e1[0] - n[0] * e1[2], n[0] * e1[1] - n[1] * e1[0];
  }
  std::vector<double> edges{0.0};
  for (double b = delta; b < std::numbers::pi; b = std::min(2.0 * b, b + 0.25)) edges.push_back(b);
  edges.push_back(std::numbers::pi);
  double s = 0.0;
  for (std::size_t p = 0; p + 1 < edges.size(); ++p) {
    const double h = 0.5 * (edges[p + 1] - edges[p]), mid = 0.5 * (edges[p + 1] + edges[p]);
    for (int q = 0; q < gl.size(); ++q) {
      const double psi = mid + h * gl.nodes[q];
      const double c = std::cos(psi), sn = std::sin(psi);
      double ring = 0.0, jac = 0.0;
      if constexpr (Dim == 2) {
        for (double sign : {-1.0, 1.0}) {
          Point<Dim> z = dom.center() + R * (c * n + sign * sn * e1);
          ring += poissonUnchecked(dom, y, z) * (f(z) - anchor);
        }
        jac = R;
      } else {
        for (int m = 0; m < azimuth; ++m) {
          const double phi = 2.0 * std::numbers::pi * m / azimuth;
          Point<Dim> z = dom.center() + R * (c * n + sn * (std::cos(phi) * e1 + std::sin(phi) * e2));
          ring += poissonUnchecked(dom, y, z) * (f(z) - anchor);
        }
        jac = R * R * sn * 2.0 * std::numbers::pi / azimuth;
      }
      s += h * gl.weights[q] * jac * ring;
    }
  }
  return s;
}

}  // namespace detail

/// Poisson integral K f(y) = int k(y,z) f(z) sigma(dz). The value f(y/|y|) is
/// subtracted under the integral, which makes the rule exact for constants.
/// Away from the sphere the fixed boundary rule is used; within 0.2 R of it a
/// polar rule about y/|y| resolves the peaked kernel.
template <int Dim>
double harmonicExtension(const BallDomain<Dim>& dom, const BoundaryGrid<Dim>& bnd, const BoundaryFunction<Dim>& f,
                         const std::vector<double>& fz, const Point<Dim>& y) {
  Point<Dim> v = y - dom.center();
  double r = v.norm();
  if (r == 0.0) {
    double s = 0.0;
    for (std::size_t j = 0; j < fz.size(); ++j) s += bnd.weights()[j] * poissonUnchecked(dom, y, bnd.nodes()[j]) * fz[j];
    return s;
  }
  const Point<Dim> n = v / r;
  const double anchor = f(dom.center() + dom.radius() * n);
  if (r > 0.8 * dom.radius()) return anchor + detail::polarPoissonIntegral(dom, f, y, n, anchor);
  double s = 0.0;
  const auto& z = bnd.nodes();
  const auto& w = bnd.weights();
  for (std::size_t j = 0; j < z.size(); ++j)
    if (fz[j] != anchor) s += w[j] * poissonUnchecked(dom, y, z[j]) * (fz[j] - anchor);
  return s + anchor;
}

/// Integrated moment densities for boundary test functions f_1..f_n:
///   u_i = K f_i,  u_A(x) = int g(x,y) sum_{B ordered split of A} u_B u_{A-B} dy,
/// so that P_mu(<X,f_1>...<X,f_n>) = sum over partitions of prod <mu, u_C>.
/// Levels below n live on a volume grid; the top level is integrated at the
/// atoms of mu with a star rule.
template <int Dim>
class FunctionalMoments {
public:
  FunctionalMoments(const BallDomain<Dim>& dom, std::vector<BoundaryFunction<Dim>> fs,
                    const FunctionalMomentOptions& opts = {})
      : dom_(dom), fs_(std::move(fs)), opts_(opts), bnd_(dom, opts.boundaryCells, opts.boundaryOrder) {
    const int n = static_cast<int>(fs_.size());
    require(n >= 1 && n <= kMaxConfigPoints, "functional moments: between 1 and 8 test functions");
    for (const auto& f : fs_) {
      std::vector<double> v;
      for (const auto& z : bnd_.nodes()) {
        double fz = f(z);
        require(std::isfinite(fz), "test functions must be finite on the sphere");
        v.push_back(fz);
      }
      boundaryValues_.push_back(std::move(v));
    }
    fields_.resize(std::size_t{1} << n);
    if (n == 1) return;
    grid_ = std::make_unique<VolumeGrid<Dim>>(dom, std::vector<Point<Dim>>{}, opts.grid);
    const std::size_t G = grid_->size();
    for (int i = 0; i < n; ++i) {
      std::vector<double> u(G);
      parallelFor(G, [&](std::size_t j) { u[j] = extension(i, grid_->nodes()[j]); });
      fields_[SubsetKey{1} << i] = std::move(u);
    }
    const SubsetKey full = (SubsetKey{1} << n) - 1;
    for (int level = 2; level < n; ++level) {
      std::vector<SubsetKey> keys;
      for (SubsetKey A = 1; A < full; ++A)
        if (subsetSize(A) == level) keys.push_back(A);
      std::vector<std::vector<double>> sources;
      for (SubsetKey A : keys) sources.push_back(nodeSource(A));
      std::vector<const double*> ptrs;
      for (const auto& v : sources) ptrs.push_back(v.data());
      std::vector<std::vector<double>> result(keys.size(), std::vector<double>(G));
      const int m = static_cast<int>(keys.size());
      auto pointFn = [&](const Point<Dim>& y, double* out) {
        for (int k = 0; k < m; ++k) out[k] = source(keys[k], y);
      };
      parallelFor(G, [&](std::size_t j) {
        thread_local std::vector<double> out;
        out.resize(m);
        grid_->greenIntegral(grid_->nodes()[j], ptrs.data(), m, pointFn, out.data(), static_cast<long>(j));
        for (int k = 0; k < m; ++k) result[k][j] = out[k];
      });
      for (std::size_t k = 0; k < keys.size(); ++k) fields_[keys[k]] = std::move(result[k]);
    }
  }

  int size() const { return static_cast<int>(fs_.size()); }

  /// u_A(x) for any nonempty subset A.
  double at(const Point<Dim>& x, SubsetKey A) const {
    dom_.requireInterior(x, "functional moment: x");
    require(A > 0 && A < (SubsetKey{1} << size()), "subset key out of range");
    if (subsetSize(A) == 1) return extension(std::countr_zero(A), x);
    StarRule<Dim> rule(dom_, x, {}, opts_.grid);
    return rule.greenIntegral([&](const Point<Dim>& y) { return source(A, y); });
  }

  /// P_mu(<X,f_1>...<X,f_n>) by the partition formula.
  double moment(const DiscreteMeasure<Dim>& mu) const {
    mu.validate(dom_);
    std::vector<double> pairing(std::size_t{1} << size(), -1.0);
    double total = 0.0;
    forEachPartition(size(), [&](const std::vector<SubsetKey>& blocks) {
      double prod = 1.0;
      for (SubsetKey C : blocks) {
        if (pairing[C] < 0.0) {
          double s = 0.0;
          for (std::size_t a = 0; a < mu.points.size(); ++a) s += mu.masses[a] * at(mu.points[a], C);
          pairing[C] = s;
        }
        prod *= pairing[C];
      }
      total += prod;
    });
    return total;
  }

private:
  double extension(int i, const Point<Dim>& y) const {
    return harmonicExtension(dom_, bnd_, fs_[i], boundaryValues_[i], y);
  }

  // lower-level value at an off-grid point by in-cell interpolation
  double field(SubsetKey B, const Point<Dim>& y) const {
    const double* f[1] = {fields_[B].data()};
    double out = 0.0;
    if (!grid_->interpolate(y, f, 1, &out)) return 0.0;
    return out;
  }

  double source(SubsetKey A, const Point<Dim>& y) const {
    double s = 0.0;
    for (SubsetKey B = (A - 1) & A; B != 0; B = (B - 1) & A) s += field(B, y) * field(A & ~B, y);
    return s;
  }

  std::vector<double> nodeSource(SubsetKey A) const {
    std::vector<double> s(grid_->size(), 0.0);
    for (SubsetKey B = (A - 1) & A; B != 0; B = (B - 1) & A) {
      const auto& f1 = fields_[B];
      const auto& f2 = fields_[A & ~B];
      for (std::size_t j = 0; j < s.size(); ++j) s[j] += f1[j] * f2[j];
    }
    return s;
  }

  BallDomain<Dim> dom_;
  std::vector<BoundaryFunction<Dim>> fs_;
  FunctionalMomentOptions opts_;
  BoundaryGrid<Dim> bnd_;
  std::vector<std::vector<double>> boundaryValues_;
  std::unique_ptr<VolumeGrid<Dim>> grid_;
  std::vector<std::vector<double>> fields_;
};

/// CSV rows "subset,node,x0..x{d-1},rho" for every tabulated subset.
template <int Dim>
void writeRhoTableCsv(std::ostream& os, const RhoTable<Dim>& table) {
  os << "subset,node";
  for (int k = 0; k < Dim; ++k) os << ",x" << k;
  os << ",rho\n";
  const auto& nodes = table.grid().nodes();
  char buf[64];
  for (SubsetKey A = 1; A <= table.config().fullKey(); ++A) {
    if (!table.has(A)) continue;
    const auto& f = table.field(A);
    for (std::size_t j = 0; j < nodes.size(); ++j) {
      os << A << ',' << j;
      for (int k = 0; k < Dim; ++k) {
        std::snprintf(buf, sizeof buf, ",%.17g", nodes[j][k]);
        os << buf;
      }
      std::snprintf(buf, sizeof buf, ",%.17g\n", f[j]);
      os << buf;
    }
  }
}

}  // namespace supermoment
