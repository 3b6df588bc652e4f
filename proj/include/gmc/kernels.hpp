#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <limits>
#include <memory>
#include <numbers>
#include <sstream>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "gmc/errors.hpp"
#include "gmc/fft.hpp"
#include "gmc/geometry.hpp"
#include "gmc/io.hpp"
#include "gmc/mollifier.hpp"
#include "gmc/quadrature.hpp"

namespace gmc {

/// Normalized overlap volume of two unit balls at distance 2r:
/// |B(0,1) ∩ B(2r e1, 1)| / |B(0,1)|.
inline double kappa(double r, int d) {
  check_dimension(d);
  if (!(r >= 0.0)) throw ArgumentError("kappa: r must be nonnegative");
  if (r >= 1.0) return 0.0;
  if (d == 1) return 1.0 - r;
  return (2.0 * std::acos(r) - 2.0 * r * std::sqrt(1.0 - r * r)) / std::numbers::pi;
}

namespace detail {

/// Single-level profile F(s) = ∫_0^1 kappa(e^u s) du on s in [0, 1];
/// every increment kernel is Q_n(r) = F(e^{t0 + n} r).
inline double level_profile_exact(double s, int d) {
  if (s <= 0.0) return 1.0;
  if (s >= 1.0) return 0.0;
  const double upper = std::min(1.0, -std::log(s));
  if (d == 1) return upper - s * (std::exp(upper) - 1.0);
  // kappa(e^u s) is smooth on [0, upper]; its only kink sits at the endpoint.
  return quad::gauss_legendre_64().integrate([&](double u) { return kappa(std::exp(u) * s, d); }, 0.0, upper);
}

/// Tabulated F for d = 2 (linear interpolation on 2^14 intervals,
/// max error ~1e-9); d = 1 bypasses the table.
class LevelProfileTable {
 public:
  static constexpr std::size_t kIntervals = 1u << 14;

  explicit LevelProfileTable(int d) : d_(d) {
    if (d_ == 1) return;
    values_.resize(kIntervals + 1);
    for (std::size_t i = 0; i <= kIntervals; ++i)
      values_[i] = level_profile_exact(static_cast<double>(i) / kIntervals, d_);
  }

  double operator()(double s) const {
    if (d_ == 1) return level_profile_exact(s, 1);
    if (s <= 0.0) return 1.0;
    if (s >= 1.0) return 0.0;
    const double u = s * kIntervals;
    const auto i = static_cast<std::size_t>(u);
    const double t = u - static_cast<double>(i);
    return (1.0 - t) * values_[i] + t * values_[i + 1];
  }

 private:
  int d_;
  std::vector<double> values_;
};

}  // namespace detail

enum class Q0Kind { Zero, Constant };

/// A log-correlated covariance in decomposed form
///   K = Q_0 + sum_{n >= 1} Q_n,  Q_n(r) = ∫_{t0+n}^{t0+n+1} kappa(e^t r) dt,
/// on a box domain. Q_0 is zero or a nonnegative constant. With
/// increments disabled the kernel degenerates to K ≡ Q_0.
class KernelSpec {
 public:
  static KernelSpec reference(int d, double t0 = 0.0) { return KernelSpec(d, t0, Q0Kind::Zero, 0.0, true, Box::unit(d)); }

  static KernelSpec constant(int d, double c) {
    if (!(c >= 0.0)) throw ArgumentError("constant kernel must be nonnegative");
    return KernelSpec(d, 0.0, Q0Kind::Constant, c, false, Box::unit(d));
  }

  KernelSpec with_q0(double c) const {
    if (!(c >= 0.0)) throw ArgumentError("Q_0 constant must be nonnegative");
    KernelSpec k = *this;
    k.q0_kind_ = c == 0.0 ? Q0Kind::Zero : Q0Kind::Constant;
    k.q0_ = c;
    return k;
  }

  KernelSpec with_domain(const Box& box) const {
    if (box.d != d_) throw ArgumentError("domain dimension differs from kernel dimension");
    KernelSpec k = *this;
    k.domain_ = box;
    return k;
  }

  int dim() const { return d_; }
  double t0() const { return t0_; }
  Q0Kind q0_kind() const { return q0_kind_; }
  double q0() const { return q0_; }
  bool has_increments() const { return increments_; }
  const Box& domain() const { return domain_; }

  /// Q_n(r) through the (tabulated in d = 2) level profile.
  double level(int n, double r) const {
    if (!increments_) return 0.0;
    return (*profile_)(std::exp(t0_ + n) * r);
  }

  /// Last level that can be nonzero at separation r > 0.
  int last_active_level(double r) const {
    if (!increments_) return 0;
    return std::max(0, static_cast<int>(std::ceil(std::log(1.0 / r) - t0_)));
  }

  std::string q0_name() const { return q0_kind_ == Q0Kind::Zero ? "zero" : "constant"; }

 private:
  KernelSpec(int d, double t0, Q0Kind kind, double c, bool increments, Box domain)
      : d_(d), t0_(t0), q0_kind_(kind), q0_(c), increments_(increments), domain_(domain) {
    check_dimension(d);
    if (!(t0 >= 0.0)) throw ArgumentError("t0 must be nonnegative");
    profile_ = std::make_shared<const detail::LevelProfileTable>(d);
  }

  int d_;
  double t0_;
  Q0Kind q0_kind_;
  double q0_;
  bool increments_;
  Box domain_;
  std::shared_ptr<const detail::LevelProfileTable> profile_;
};

/// Q_n(r) by closed form (d = 1) or 64-point Gauss–Legendre (d = 2).
inline double q_n(const KernelSpec& spec, int n, double r) {
  if (n <= 0) throw ArgumentError("q_n: n must be >= 1");
  if (!(r >= 0.0)) throw ArgumentError("q_n: r must be nonnegative");
  if (!spec.has_increments()) return 0.0;
  return detail::level_profile_exact(std::exp(spec.t0() + n) * r, spec.dim());
}

/// K_n(r) = Q_0 + sum_{k=1}^n Q_k(r).
inline double k_partial(const KernelSpec& spec, int n, double r) {
  if (n < 0) throw ArgumentError("k_partial: n must be >= 0");
  if (!(r >= 0.0)) throw ArgumentError("k_partial: r must be nonnegative");
  double s = spec.q0();
  if (!spec.has_increments()) return s;
  const int top = r > 0.0 ? std::min(n, spec.last_active_level(r)) : n;
  for (int k = 1; k <= top; ++k) s += spec.level(k, r);
  return s;
}

/// Truncation index at which K_n(r) = K(r) exactly.
inline int exact_truncation(double r) { return std::max(0, static_cast<int>(std::ceil(std::log(1.0 / r)))) + 2; }

/// K(r) for r > 0; the diagonal is a hard error.
inline double k_exact(const KernelSpec& spec, double r) {
  if (!(r > 0.0)) throw DomainError("k_exact: kernel diverges on the diagonal (r = 0)");
  return k_partial(spec, exact_truncation(r), r);
}

// ---------------------------------------------------------------------------
// Mollified covariances.

enum class QuadRule { TensorMidpoint, GridLattice };

inline std::string to_string(QuadRule r) { return r == QuadRule::TensorMidpoint ? "tensor_midpoint" : "grid_lattice"; }

namespace detail {

/// Midpoint nodes of theta_eps on [-eps, eps]^d, weights renormalized.
struct MollifierNodes {
  std::vector<Point> offsets;
  std::vector<double> weights;
};

inline MollifierNodes mollifier_nodes(const MollifierSpec& m, double eps, int per_axis) {
  MollifierNodes out;
  const double h = 2.0 * eps / per_axis;
  double total = 0.0;
  const int ny = m.dim() == 2 ? per_axis : 1;
  for (int j = 0; j < ny; ++j) {
    for (int i = 0; i < per_axis; ++i) {
      const Point off{-eps + (i + 0.5) * h, m.dim() == 2 ? -eps + (j + 0.5) * h : 0.0};
      const double w = theta_eps(m, eps, off);
      if (w > 0.0) {
        out.offsets.push_back(off);
        out.weights.push_back(w);
        total += w;
      }
    }
  }
  for (double& w : out.weights) w /= total;
  return out;
}

inline void check_in_domain(const KernelSpec& spec, double eps, const Point& p, const char* what) {
  if (!shrink_domain(spec.domain(), eps).contains(p))
    throw DomainError(std::string("k_mollified: ") + what + " lies outside the shrunken domain");
}

}  // namespace detail

struct MidpointOptions {
  int nodes_per_axis = 32;
};

namespace detail {

inline double double_convolution(const KernelSpec& spec, const MollifierSpec& moll, int n, double eps, double eps2,
                                 const Point& x, const Point& y, int per_axis) {
  const auto a = mollifier_nodes(moll, eps, per_axis);
  const auto b = mollifier_nodes(moll, eps2, per_axis);
  double s = 0.0;
  for (std::size_t i = 0; i < a.weights.size(); ++i) {
    const Point zi{x[0] + a.offsets[i][0], x[1] + a.offsets[i][1]};
    double inner = 0.0;
    for (std::size_t j = 0; j < b.weights.size(); ++j) {
      const Point zj{y[0] + b.offsets[j][0], y[1] + b.offsets[j][1]};
      inner += b.weights[j] * k_partial(spec, n, distance(zi, zj));
    }
    s += a.weights[i] * inner;
  }
  return s;
}

inline void check_mollified_args(const KernelSpec& spec, const MollifierSpec& moll, double eps, double eps2,
                                 const Point& x, const Point& y) {
  if (!(eps2 > 0.0 && eps2 <= eps && eps <= 1.0))
    throw ArgumentError("k_mollified: need 0 < eps' <= eps <= 1");
  if (moll.dim() != spec.dim()) throw ConsistencyError("k_mollified: mollifier dimension differs");
  check_in_domain(spec, eps, x, "x");
  check_in_domain(spec, eps2, y, "y");
}

}  // namespace detail

/// K_{eps,eps'}(x, y): double convolution of K with theta_eps, theta_eps'
/// by tensor midpoint quadrature. K is summed to n = ceil(log 1/eps') + 2
/// levels, each of which is bounded, so the result is finite at x = y.
inline double k_mollified(const KernelSpec& spec, const MollifierSpec& moll, double eps, double eps2, const Point& x,
                          const Point& y, MidpointOptions opt = {}) {
  detail::check_mollified_args(spec, moll, eps, eps2, x, y);
  if (!spec.has_increments()) return spec.q0();
  return detail::double_convolution(spec, moll, exact_truncation(eps2), eps, eps2, x, y, opt.nodes_per_axis);
}

/// K_{n,eps,eps'}(x, y): the same double convolution applied to K_n.
inline double k_partial_mollified2(const KernelSpec& spec, const MollifierSpec& moll, int n, double eps, double eps2,
                                   const Point& x, const Point& y, MidpointOptions opt = {}) {
  if (n < 0) throw ArgumentError("k_partial_mollified2: n must be >= 0");
  detail::check_mollified_args(spec, moll, eps, eps2, x, y);
  if (!spec.has_increments()) return spec.q0();
  return detail::double_convolution(spec, moll, n, eps, eps2, x, y, opt.nodes_per_axis);
}

/// K_{n,eps}(z, x) = ∫ K_n(z, z1) theta_eps(x - z1) dz1 (single convolution).
inline double k_partial_mollified(const KernelSpec& spec, const MollifierSpec& moll, int n, double eps, const Point& z,
                                  const Point& x, MidpointOptions opt = {256}) {
  if (!(eps > 0.0 && eps <= 1.0)) throw ArgumentError("k_partial_mollified: eps must lie in (0, 1]");
  detail::check_in_domain(spec, eps, x, "x");
  const auto a = detail::mollifier_nodes(moll, eps, spec.dim() == 2 ? std::min(opt.nodes_per_axis, 64) : opt.nodes_per_axis);
  double s = 0.0;
  for (std::size_t i = 0; i < a.weights.size(); ++i) {
    const Point zi{x[0] + a.offsets[i][0], x[1] + a.offsets[i][1]};
    s += a.weights[i] * k_partial(spec, n, distance(zi, z));
  }
  return s;
}

/// Covariance of a stationary field pair on a lattice, stored by lattice
/// offset (b - a). Entries are defined for a in D_eps and b in D_eps'.
class MollifiedKernelTable {
 public:
  MollifiedKernelTable(Grid grid, double eps, double eps2, QuadRule rule, std::vector<double> by_offset)
      : grid_(std::move(grid)),
        eps_(eps),
        eps2_(eps2),
        rule_(rule),
        by_offset_(std::move(by_offset)),
        dom_a_(shrink_domain(grid_.box(), eps)),
        dom_b_(shrink_domain(grid_.box(), eps2)) {
    if (by_offset_.size() != offset_count()) throw ConsistencyError("kernel table size mismatch");
  }

  const Grid& grid() const { return grid_; }
  double eps() const { return eps_; }
  double eps2() const { return eps2_; }
  QuadRule rule() const { return rule_; }

  std::size_t offset_count() const {
    return (2 * grid_.cells(0) - 1) * (grid_.dim() == 2 ? 2 * grid_.cells(1) - 1 : 1);
  }

  std::size_t offset_index(long dx, long dy) const {
    const long n0 = static_cast<long>(grid_.cells(0)), n1 = static_cast<long>(grid_.cells(1));
    return static_cast<std::size_t>((dx + n0 - 1) + (2 * n0 - 1) * (grid_.dim() == 2 ? dy + n1 - 1 : 0));
  }

  double at_offset(long dx, long dy = 0) const { return by_offset_[offset_index(dx, dy)]; }

  bool in_a(std::size_t i) const { return dom_a_.contains(grid_.point(i)); }
  bool in_b(std::size_t j) const { return dom_b_.contains(grid_.point(j)); }

  /// K_{eps,eps'}(x_i, x_j).
  double operator()(std::size_t i, std::size_t j) const {
    if (!in_a(i) || !in_b(j)) throw DomainError("kernel table entry outside the shrunken domains");
    return at_offset(static_cast<long>(grid_.ix(j)) - static_cast<long>(grid_.ix(i)),
                     static_cast<long>(grid_.iy(j)) - static_cast<long>(grid_.iy(i)));
  }

  /// sup over tabulated pairs of |K - log 1/(|x-y| ∨ eps ∨ eps')|.
  double max_log_deviation() const {
    double worst = 0.0;
    for (std::size_t i = 0; i < grid_.size(); ++i) {
      if (!in_a(i)) continue;
      for (std::size_t j = 0; j < grid_.size(); ++j) {
        if (!in_b(j)) continue;
        const double scale = std::max({distance(grid_.point(i), grid_.point(j)), eps_, eps2_});
        worst = std::max(worst, std::abs((*this)(i, j) - std::log(1.0 / scale)));
      }
    }
    return worst;
  }

  io::CsvWriter to_csv() const {
    io::CsvWriter w({"x_index", "y_index", "value"});
    for (std::size_t i = 0; i < grid_.size(); ++i) {
      if (!in_a(i)) continue;
      for (std::size_t j = 0; j < grid_.size(); ++j)
        if (in_b(j)) w.row(i, j, (*this)(i, j));
    }
    return w;
  }

 private:
  Grid grid_;
  double eps_, eps2_;
  QuadRule rule_;
  std::vector<double> by_offset_;
  ShrunkenDomain dom_a_, dom_b_;
};

/// Table by continuum tensor midpoint quadrature (stationary kernels make
/// one evaluation per realized lattice offset sufficient).
inline MollifiedKernelTable mollified_table_midpoint(const KernelSpec& spec, const MollifierSpec& moll, const Grid& grid,
                                                     double eps, double eps2, MidpointOptions opt = {}) {
  if (!(spec.domain() == grid.box())) throw ConsistencyError("kernel domain and grid box differ");
  const auto da = shrink_domain(grid.box(), eps), db = shrink_domain(grid.box(), eps2);
  if (da.empty || db.empty) throw DomainError("mollified table: shrunken domain is empty");
  const int d = grid.dim();
  const long n0 = static_cast<long>(grid.cells(0)), n1 = static_cast<long>(grid.cells(1));
  std::vector<double> values((2 * n0 - 1) * (d == 2 ? 2 * n1 - 1 : 1), std::numeric_limits<double>::quiet_NaN());
  const MollifiedKernelTable layout(grid, eps, eps2, QuadRule::TensorMidpoint, values);

  // Per axis: a lattice coordinate i inside D_eps with i + o inside D_eps'.
  auto anchor = [&](int axis, long o) -> long {
    const long n = axis == 0 ? n0 : n1;
    for (long i = 0; i < n; ++i) {
      const long j = i + o;
      if (j < 0 || j >= n) continue;
      const double xi = grid.box().lo[axis] + (i + 0.5) * grid.spacing(axis);
      const double xj = grid.box().lo[axis] + (j + 0.5) * grid.spacing(axis);
      if (xi > da.inner.lo[axis] && xi < da.inner.hi[axis] && xj > db.inner.lo[axis] && xj < db.inner.hi[axis])
        return i;
    }
    return -1;
  };
  for (long dy = (d == 2 ? -(n1 - 1) : 0); dy <= (d == 2 ? n1 - 1 : 0); ++dy) {
    const long iy = d == 2 ? anchor(1, dy) : 0;
    if (iy < 0) continue;
    for (long dx = -(n0 - 1); dx <= n0 - 1; ++dx) {
      const long ix = anchor(0, dx);
      if (ix < 0) continue;
      const auto a = grid.index(static_cast<std::size_t>(ix), static_cast<std::size_t>(iy));
      const auto b = grid.index(static_cast<std::size_t>(ix + dx), static_cast<std::size_t>(iy + dy));
      values[layout.offset_index(dx, dy)] = k_mollified(spec, moll, eps, eps2, grid.point(a), grid.point(b), opt);
    }
  }
  return MollifiedKernelTable(grid, eps, eps2, QuadRule::TensorMidpoint, std::move(values));
}

// ---------------------------------------------------------------------------
// Lattice covariances: exact second moments of the grid-sampled fields.

/// Covariances of the lattice fields Y_n(x_i) and X_eps = w_eps * Y_{n_max}
/// as produced by the sampler. Stationarity reduces every quantity to a
/// function of the lattice offset.
class LatticeCovariance {
 public:
  LatticeCovariance(const KernelSpec& spec, const Grid& grid, int n_max) : spec_(spec), grid_(grid), n_max_(n_max) {
    if (spec.dim() != grid.dim()) throw ConsistencyError("LatticeCovariance: dimension mismatch");
    if (n_max < 0) throw ArgumentError("LatticeCovariance: n_max must be >= 0");
    n0_ = static_cast<long>(grid.cells(0));
    n1_ = static_cast<long>(grid.cells(1));
    const std::size_t count = (2 * n0_ - 1) * (grid.dim() == 2 ? 2 * n1_ - 1 : 1);
    partial_.assign(static_cast<std::size_t>(n_max + 1), std::vector<double>(count));
    for (long dy = -(n1_ - 1); dy <= n1_ - 1; ++dy) {
      for (long dx = -(n0_ - 1); dx <= n0_ - 1; ++dx) {
        const double r = std::hypot(dx * grid.spacing(0), grid.dim() == 2 ? dy * grid.spacing(1) : 0.0);
        double s = spec.q0();
        partial_[0][idx(dx, dy)] = s;
        for (int n = 1; n <= n_max; ++n) {
          s += spec.level(n, r);
          partial_[static_cast<std::size_t>(n)][idx(dx, dy)] = s;
        }
      }
    }
  }

  const KernelSpec& spec() const { return spec_; }
  const Grid& grid() const { return grid_; }
  int n_max() const { return n_max_; }

  /// Cov(Y_n(x_a), Y_m(x_b)) = K_{n ∧ m}(x_a - x_b).
  double partial(int n, long dx, long dy = 0) const { return partial_.at(static_cast<std::size_t>(n))[idx(dx, dy)]; }

  /// Cov(Y_n(z), X_eps(x)) for z - x = (dx, dy) lattice steps.
  double partial_mollified(int n, const DiscreteKernel& k, long dx, long dy = 0) const {
    double s = 0.0;
    for (std::size_t m = 0; m < k.weights.size(); ++m)
      s += k.weights[m] * partial(n, dx - k.offsets[m][0], dy - k.offsets[m][1]);
    return s;
  }

  /// Offset table of Cov(X_a(x), X_b(x + offset)).
  MollifiedKernelTable table(const DiscreteKernel& a, const DiscreteKernel& b) const {
    // Cross-correlation of the two weight stencils.
    struct Term {
      long dx, dy;
      double w;
    };
    std::vector<Term> cross;
    {
      std::vector<double> acc;
      long rx = 0, ry = 0;
      for (const auto& o : a.offsets) rx = std::max({rx, long(std::abs(o[0])), long(std::abs(o[1]))});
      for (const auto& o : b.offsets) ry = std::max({ry, long(std::abs(o[0])), long(std::abs(o[1]))});
      const long R = rx + ry, W = 2 * R + 1;
      acc.assign(static_cast<std::size_t>(W * (grid_.dim() == 2 ? W : 1)), 0.0);
      for (std::size_t i = 0; i < a.weights.size(); ++i)
        for (std::size_t j = 0; j < b.weights.size(); ++j) {
          // Cov(X_a(x), X_b(y)) = sum w_i w_j K(y + o_j - x - o_i)
          const long ex = b.offsets[j][0] - a.offsets[i][0], ey = b.offsets[j][1] - a.offsets[i][1];
          acc[static_cast<std::size_t>((ex + R) + W * (grid_.dim() == 2 ? ey + R : 0))] += a.weights[i] * b.weights[j];
        }
      for (long ey = (grid_.dim() == 2 ? -R : 0); ey <= (grid_.dim() == 2 ? R : 0); ++ey)
        for (long ex = -R; ex <= R; ++ex) {
          const double w = acc[static_cast<std::size_t>((ex + R) + W * (grid_.dim() == 2 ? ey + R : 0))];
          if (w != 0.0) cross.push_back({ex, ey, w});
        }
    }
    std::vector<double> values(partial_[0].size(), std::numeric_limits<double>::quiet_NaN());
    const auto& kn = partial_.back();
    for (long dy = -(n1_ - 1); dy <= n1_ - 1; ++dy) {
      for (long dx = -(n0_ - 1); dx <= n0_ - 1; ++dx) {
        double s = 0.0;
        bool ok = true;
        for (const auto& t : cross) {
          const long ox = dx + t.dx, oy = dy + t.dy;
          if (std::abs(ox) > n0_ - 1 || std::abs(oy) > n1_ - 1) {
            ok = false;
            break;
          }
          s += t.w * kn[idx(ox, oy)];
        }
        if (ok) values[idx(dx, dy)] = s;
      }
    }
    return MollifiedKernelTable(grid_, a.eps, b.eps, QuadRule::GridLattice, std::move(values));
  }

  /// Var(X_eps(x)) on the lattice (independent of x by stationarity).
  double variance(const DiscreteKernel& k) const { return table(k, k).at_offset(0, 0); }

 private:
  std::size_t idx(long dx, long dy) const {
    return static_cast<std::size_t>((dx + n0_ - 1) + (2 * n0_ - 1) * (grid_.dim() == 2 ? dy + n1_ - 1 : 0));
  }

  KernelSpec spec_;
  Grid grid_;
  int n_max_;
  long n0_ = 1, n1_ = 1;
  std::vector<std::vector<double>> partial_;
};

// ---------------------------------------------------------------------------
// Positive-definiteness diagnostics.

struct GramSpec {
  enum class Kind { PartialSum, Increment } kind = Kind::PartialSum;
  int n = 1;
};

struct PdReport {
  double min_eigenvalue = 0.0;
  double trace = 0.0;
  double fourier_min = 0.0;
  double fourier_max_imag = 0.0;
};

inline Eigen::MatrixXd gram_matrix(const KernelSpec& spec, const std::vector<Point>& pts, GramSpec g) {
  const auto n = static_cast<Eigen::Index>(pts.size());
  Eigen::MatrixXd m(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j <= i; ++j) {
      const double r = distance(pts[static_cast<std::size_t>(i)], pts[static_cast<std::size_t>(j)]);
      const double v = g.kind == GramSpec::Kind::PartialSum ? k_partial(spec, g.n, r)
                                                            : (spec.has_increments() ? spec.level(g.n, r) : 0.0);
      m(i, j) = m(j, i) = v;
    }
  if (!m.allFinite()) throw NumericError("gram matrix has non-finite entries");
  return m;
}

/// DFT of kappa(|x|) sampled on an n^d periodic lattice of period 4
/// (support radius 1 fits without wrap-around). Returns {min real, max |imag|}.
inline std::pair<double, double> kappa_spectrum_min(int d, std::size_t n) {
  check_dimension(d);
  const double period = 4.0, h = period / static_cast<double>(n);
  const std::size_t total = d == 1 ? n : n * n;
  std::vector<std::complex<double>> buf(total);
  auto wrapped = [&](std::size_t i) {
    const double k = static_cast<double>(i <= n / 2 ? i : n - i);
    return k * h;
  };
  for (std::size_t j = 0; j < (d == 2 ? n : 1); ++j)
    for (std::size_t i = 0; i < n; ++i) {
      const double r = d == 1 ? wrapped(i) : std::hypot(wrapped(i), wrapped(j));
      buf[i + n * j] = kappa(r, d);
    }
  fft_forward(buf, n, d == 2 ? n : 1);
  double mn = std::numeric_limits<double>::infinity(), mi = 0.0;
  for (const auto& c : buf) {
    if (!std::isfinite(c.real()) || !std::isfinite(c.imag())) throw NumericError("non-finite spectrum");
    mn = std::min(mn, c.real());
    mi = std::max(mi, std::abs(c.imag()));
  }
  return {mn, mi};
}

inline PdReport pd_check(const KernelSpec& spec, const Grid& grid, GramSpec g = {}) {
  if (grid.size() < 2) throw ArgumentError("pd_check: grid needs at least two points");
  PdReport rep;
  const auto m = gram_matrix(spec, grid.points(), g);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m, Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) throw NumericError("pd_check: eigen-solve failed");
  rep.min_eigenvalue = es.eigenvalues().minCoeff();
  rep.trace = m.trace();
  std::tie(rep.fourier_min, rep.fourier_max_imag) = kappa_spectrum_min(spec.dim(), grid.cells(0));
  return rep;
}

/// JSON sidecar describing a kernel table export.
inline std::string table_sidecar(const KernelSpec& spec, const MollifiedKernelTable& t) {
  std::ostringstream os;
  os << "{\"d\":" << spec.dim() << ",\"t0\":" << io::format_double(spec.t0()) << ",\"q0_kind\":\"" << spec.q0_name()
     << "\",\"eps\":" << io::format_double(t.eps()) << ",\"eps2\":" << io::format_double(t.eps2())
     << ",\"quadrature\":\"" << to_string(t.rule()) << "\",\"grid_hash\":\"" << io::grid_hash(t.grid()) << "\"}";
  return os.str();
}

}  // namespace gmc
