#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <map>
#include <random>
#include <span>
#include <string>
#include <tuple>
#include <vector>

#include <Eigen/Dense>

#include "gmc/errors.hpp"
#include "gmc/geometry.hpp"
#include "gmc/io.hpp"
#include "gmc/kernels.hpp"
#include "gmc/mollifier.hpp"
#include "gmc/rng.hpp"

namespace gmc {

/// Cameron–Martin tilt by exp(alpha X_eps(x) + alpha X_eps'(y) - ...):
/// under the tilted law every Gaussian variable V is shifted by
/// alpha (Cov(V, X_eps(x)) + Cov(V, X_eps'(y))); covariances are unchanged.
/// The mean functions are materialized once and added to each replica.
struct TiltShift {
  Point x{}, y{};
  double eps = 0.0, eps2 = 0.0;
  double alpha = 0.0;
  /// y_means[n][i]: shift of Y_n at point i, n = 0..n_max.
  std::vector<std::vector<double>> y_means;
  /// x_means[l][i]: shift of the l-th mollified level (NaN outside D_eta).
  std::vector<double> x_levels;
  std::vector<MollifierProfile> x_profiles;
  std::vector<std::vector<double>> x_means;
};

/// One joint realization on a point set: increments Z_0..Z_nmax (Z_0
/// carries Q_0 and is zero for Q_0 = 0), partial sums Y_n = sum_{k<=n} Z_k,
/// and any number of mollified levels X_eps = w_eps * Y_nmax on a lattice.
struct FieldSample {
  std::string points_hash;
  std::uint64_t seed = 0;
  std::uint64_t replica = 0;
  std::uint64_t stream = 0;
  int n_max = 0;
  std::vector<std::vector<double>> increments;
  std::vector<std::vector<double>> partial_sums;
  std::vector<MollifiedField> mollified;
  bool tilted = false;
  Point tilt_x{}, tilt_y{};
  double tilt_alpha = 0.0;

  std::size_t size() const { return partial_sums.empty() ? 0 : partial_sums[0].size(); }

  const std::vector<double>& y(int n) const {
    if (n < 0 || n > n_max) throw ArgumentError("FieldSample: level " + std::to_string(n) + " not sampled");
    return partial_sums[static_cast<std::size_t>(n)];
  }

  const MollifiedField* find_level(double eps, MollifierProfile p = MollifierProfile::StandardBump) const {
    for (const auto& m : mollified)
      if (m.profile == p && std::abs(m.eps - eps) <= 1e-12 * eps) return &m;
    return nullptr;
  }

  const MollifiedField& x(double eps, MollifierProfile p = MollifierProfile::StandardBump) const {
    if (const auto* m = find_level(eps, p)) return *m;
    throw ConsistencyError("FieldSample: mollified level eps=" + io::format_double(eps) + " (" + to_string(p) +
                           ") not present");
  }
};

inline std::string points_hash(const std::vector<Point>& pts) {
  std::string buf;
  for (const auto& p : pts) buf += io::format_double(p[0]) + "," + io::format_double(p[1]) + ";";
  return io::sha256_hex(buf).substr(0, 16);
}

struct FactorInfo {
  enum class Kind { Zero, Identity, Dense } kind = Kind::Zero;
  double jitter = 0.0;  // absolute diagonal jitter used
  Eigen::Index bandwidth = 0;
};

/// Factorizes Gram matrices of every increment Q_k on a fixed point set
/// and draws joint samples replica by replica. Replicas are generated in
/// fixed blocks so each replica's numbers depend only on
/// (seed, replica, points, kernel), never on scheduling.
class IncrementSampler {
 public:
  static constexpr std::size_t kBlock = 64;

  IncrementSampler(const KernelSpec& spec, std::vector<Point> points, int n_max)
      : spec_(spec), points_(std::move(points)), n_max_(n_max) {
    if (n_max < 1) throw ArgumentError("sampler: n_max must be >= 1");
    if (points_.empty()) throw ArgumentError("sampler: empty point set");
    hash_ = points_hash(points_);
    double min_sep = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < points_.size(); ++i)
      for (std::size_t j = 0; j < i; ++j) min_sep = std::min(min_sep, distance(points_[i], points_[j]));
    factors_.resize(static_cast<std::size_t>(n_max + 1));
    info_.resize(static_cast<std::size_t>(n_max + 1));
    info_[0].kind = spec.q0() > 0.0 ? FactorInfo::Kind::Dense : FactorInfo::Kind::Zero;
    for (int k = 1; k <= n_max; ++k) {
      auto& inf = info_[static_cast<std::size_t>(k)];
      if (!spec.has_increments()) {
        inf.kind = FactorInfo::Kind::Zero;
      } else if (std::exp(-(spec.t0() + k)) <= min_sep) {
        // Support of Q_k below the smallest separation: Gram = identity.
        inf.kind = FactorInfo::Kind::Identity;
      } else {
        inf.kind = FactorInfo::Kind::Dense;
        factors_[static_cast<std::size_t>(k)] = factorize(gram_matrix(spec, points_, {GramSpec::Kind::Increment, k}), k, inf);
      }
    }
  }

  static IncrementSampler on_grid(const KernelSpec& spec, const Grid& grid, int n_max) {
    if (!(spec.domain() == grid.box())) throw ConsistencyError("sampler: kernel domain and grid box differ");
    return IncrementSampler(spec, grid.points(), n_max);
  }

  int n_max() const { return n_max_; }
  std::size_t size() const { return points_.size(); }
  const std::vector<Point>& points() const { return points_; }
  const KernelSpec& spec() const { return spec_; }
  const FactorInfo& factor_info(int k) const { return info_.at(static_cast<std::size_t>(k)); }
  const std::string& hash() const { return hash_; }

  /// Replicas [block*kBlock, (block+1)*kBlock).
  std::vector<FieldSample> draw_block(std::uint64_t seed, std::size_t block, std::uint64_t stream = 0) const {
    const auto n = static_cast<Eigen::Index>(points_.size());
    const auto B = static_cast<Eigen::Index>(kBlock);
    const std::size_t first = block * kBlock;
    std::vector<FieldSample> out(kBlock);
    for (std::size_t r = 0; r < kBlock; ++r) {
      auto& s = out[r];
      s.points_hash = hash_;
      s.seed = seed;
      s.replica = first + r;
      s.stream = stream;
      s.n_max = n_max_;
      s.increments.assign(static_cast<std::size_t>(n_max_ + 1), std::vector<double>(points_.size(), 0.0));
    }
    Eigen::MatrixXd xi(n, B), z(n, B);
    for (int k = 0; k <= n_max_; ++k) {
      const auto& inf = info_[static_cast<std::size_t>(k)];
      if (inf.kind == FactorInfo::Kind::Zero) continue;
      // Z_0 is one standard normal scaled by sqrt(Q_0), shared by all points.
      const Eigen::Index rows = k == 0 ? 1 : n;
      for (Eigen::Index c = 0; c < B; ++c) {
        KeyedStream rng(seed, first + static_cast<std::size_t>(c), static_cast<std::uint64_t>(k), stream);
        std::normal_distribution<double> normal;
        for (Eigen::Index i = 0; i < rows; ++i) xi(i, c) = normal(rng);
      }
      if (k == 0) {
        const double sd = std::sqrt(spec_.q0());
        for (Eigen::Index c = 0; c < B; ++c)
          std::fill(out[static_cast<std::size_t>(c)].increments[0].begin(), out[static_cast<std::size_t>(c)].increments[0].end(),
                    sd * xi(0, c));
        continue;
      }
      if (inf.kind == FactorInfo::Kind::Identity) {
        z = xi;
      } else {
        banded_product(factors_[static_cast<std::size_t>(k)], inf.bandwidth, xi, z);
      }
      for (Eigen::Index c = 0; c < B; ++c) {
        auto& dst = out[static_cast<std::size_t>(c)].increments[static_cast<std::size_t>(k)];
        for (Eigen::Index i = 0; i < n; ++i) dst[static_cast<std::size_t>(i)] = z(i, c);
      }
    }
    for (auto& s : out) {
      s.partial_sums.resize(s.increments.size());
      s.partial_sums[0] = s.increments[0];
      for (std::size_t k = 1; k < s.increments.size(); ++k) {
        s.partial_sums[k] = s.partial_sums[k - 1];
        for (std::size_t i = 0; i < points_.size(); ++i) s.partial_sums[k][i] += s.increments[k][i];
      }
    }
    return out;
  }

  FieldSample draw(std::uint64_t seed, std::size_t replica, std::uint64_t stream = 0) const {
    auto block = draw_block(seed, replica / kBlock, stream);
    return std::move(block[replica % kBlock]);
  }

 private:
  /// z = L xi for lower-triangular L with L(i, j) = 0 when i - j > bw,
  /// in row panels so that only the band is touched.
  static void banded_product(const Eigen::MatrixXd& l, Eigen::Index bw, const Eigen::MatrixXd& xi, Eigen::MatrixXd& z) {
    const Eigen::Index n = l.rows(), panel = 64;
    for (Eigen::Index r0 = 0; r0 < n; r0 += panel) {
      const Eigen::Index rows = std::min(panel, n - r0);
      const Eigen::Index c0 = std::max<Eigen::Index>(0, r0 - bw);
      const Eigen::Index cols = r0 + rows - c0;
      z.middleRows(r0, rows).noalias() = l.block(r0, c0, rows, cols) * xi.middleRows(c0, cols);
    }
  }

  static Eigen::MatrixXd factorize(Eigen::MatrixXd gram, int k, FactorInfo& inf) {
    const double base = 1e-10 * gram.trace() / static_cast<double>(gram.rows());
    double jitter = 0.0;
    for (int attempt = 0; attempt <= 4; ++attempt) {
      if (attempt > 0) {
        const double next = attempt == 1 ? base : jitter * 10.0;
        gram.diagonal().array() += next - jitter;
        jitter = next;
      }
      Eigen::LLT<Eigen::MatrixXd> llt(gram);
      if (llt.info() == Eigen::Success) {
        Eigen::MatrixXd l = llt.matrixL();
        if (l.allFinite()) {
          inf.jitter = jitter;
          inf.bandwidth = 0;
          for (Eigen::Index i = 0; i < l.rows(); ++i) {
            Eigen::Index j = 0;
            while (j < i && l(i, j) == 0.0) ++j;
            inf.bandwidth = std::max(inf.bandwidth, i - j);
          }
          return l;
        }
      }
    }
    throw NumericError("sampler: factorization of the Q_" + std::to_string(k) +
                       " Gram matrix failed after jitter escalation");
  }

  KernelSpec spec_;
  std::vector<Point> points_;
  int n_max_;
  std::string hash_;
  std::vector<Eigen::MatrixXd> factors_;
  std::vector<FactorInfo> info_;
};

/// Smallest admissible n_max for mollified levels down to eps_min.
inline int required_n_max(double eps_min) { return exact_truncation(eps_min); }

/// Adds X_eps = w_eps * Y_nmax for each prepared kernel.
inline void sample_mollified(FieldSample& s, const Grid& grid, std::span<const DiscreteKernel> levels) {
  if (s.size() != grid.size()) throw ConsistencyError("sample_mollified: sample is not on this grid");
  for (const auto& k : levels) {
    if (s.n_max < required_n_max(k.eps))
      throw ArgumentError("sample_mollified: n_max=" + std::to_string(s.n_max) + " too small for eps=" +
                          io::format_double(k.eps));
    if (s.find_level(k.eps, k.profile)) continue;
    s.mollified.push_back(convolve(s.y(s.n_max), k, grid));
  }
}

/// Covariances the tilt needs, computed on the sampling lattice so that
/// shifted fields match the sampled model exactly.
class LatticeTiltCovariance {
 public:
  LatticeTiltCovariance(const LatticeCovariance& cov, std::vector<DiscreteKernel> levels)
      : cov_(cov), levels_(std::move(levels)) {}

  const DiscreteKernel& level(double eps, MollifierProfile p = MollifierProfile::StandardBump) const {
    for (const auto& k : levels_)
      if (k.profile == p && std::abs(k.eps - eps) <= 1e-12 * eps) return k;
    throw ConsistencyError("tilt: no lattice kernel for eps=" + io::format_double(eps));
  }

  std::array<long, 2> steps(const Point& from, const Point& to) const {
    const auto a = cov_.grid().find(from), b = cov_.grid().find(to);
    if (!a || !b) throw ConsistencyError("tilt: points must be lattice points of the sampling grid");
    const auto& g = cov_.grid();
    return {static_cast<long>(g.ix(*b)) - static_cast<long>(g.ix(*a)),
            static_cast<long>(g.iy(*b)) - static_cast<long>(g.iy(*a))};
  }

  /// Cov(Y_n(z), X_eps(x)).
  double partial_mollified(int n, double eps, const Point& z, const Point& x) const {
    const auto st = steps(x, z);
    return cov_.partial_mollified(n, level(eps), st[0], st[1]);
  }

  /// Cov(X_eps_a(a), X_eps_b(b)) for the given profile of the b-level.
  double mollified(double eps_a, double eps_b, MollifierProfile pb, const Point& a, const Point& b) const {
    const auto st = steps(a, b);
    const auto key = std::make_tuple(eps_a, eps_b, static_cast<int>(pb));
    auto it = tables_.find(key);
    if (it == tables_.end()) it = tables_.emplace(key, cov_.table(level(eps_a), level(eps_b, pb))).first;
    return it->second.at_offset(st[0], st[1]);
  }

 private:
  const LatticeCovariance& cov_;
  std::vector<DiscreteKernel> levels_;
  mutable std::map<std::tuple<double, double, int>, MollifiedKernelTable> tables_;
};

/// Continuum covariances (for point-set samples that carry only Y levels).
class ContinuumTiltCovariance {
 public:
  ContinuumTiltCovariance(const KernelSpec& spec, const MollifierSpec& moll) : spec_(spec), moll_(moll) {}

  double partial_mollified(int n, double eps, const Point& z, const Point& x) const {
    return k_partial_mollified(spec_, moll_, n, eps, z, x);
  }

  double mollified(double eps_a, double eps_b, MollifierProfile, const Point& a, const Point& b) const {
    return eps_b <= eps_a ? k_mollified(spec_, moll_, eps_a, eps_b, a, b) : k_mollified(spec_, moll_, eps_b, eps_a, b, a);
  }

 private:
  KernelSpec spec_;
  MollifierSpec moll_;
};

/// Materializes the mean functions of the tilt for a sample layout
/// (points, n_max and the mollified levels present in `layout`).
template <class Cov>
TiltShift make_tilt(const Point& x, const Point& y, double eps, double eps2, double alpha, const Cov& cov,
                    const std::vector<Point>& points, const FieldSample& layout) {
  TiltShift t;
  t.x = x;
  t.y = y;
  t.eps = eps;
  t.eps2 = eps2;
  t.alpha = alpha;
  t.y_means.assign(static_cast<std::size_t>(layout.n_max + 1), std::vector<double>(points.size(), 0.0));
  if (alpha != 0.0) {
    for (int n = 0; n <= layout.n_max; ++n)
      for (std::size_t i = 0; i < points.size(); ++i)
        t.y_means[static_cast<std::size_t>(n)][i] =
            alpha * (cov.partial_mollified(n, eps, points[i], x) + cov.partial_mollified(n, eps2, points[i], y));
  }
  for (const auto& lvl : layout.mollified) {
    t.x_levels.push_back(lvl.eps);
    t.x_profiles.push_back(lvl.profile);
    std::vector<double> m(points.size(), std::numeric_limits<double>::quiet_NaN());
    for (std::size_t i = 0; i < points.size(); ++i) {
      if (!lvl.defined(i)) continue;
      m[i] = alpha == 0.0 ? 0.0
                          : alpha * (cov.mollified(eps, lvl.eps, lvl.profile, x, points[i]) +
                                     cov.mollified(eps2, lvl.eps, lvl.profile, y, points[i]));
    }
    t.x_means.push_back(std::move(m));
  }
  return t;
}

/// Adds the tilt mean functions to a sample. Tilt points must lie in the
/// shrunken domain of every level present.
inline FieldSample apply_tilt(FieldSample s, const TiltShift& t, const Box& domain) {
  if (!shrink_domain(domain, t.eps).contains(t.x) || !shrink_domain(domain, t.eps2).contains(t.y))
    throw DomainError("apply_tilt: tilt points must lie in D_eps and D_eps'");
  for (const auto& lvl : s.mollified)
    if (!lvl.domain.contains(t.x) || !lvl.domain.contains(t.y))
      throw DomainError("apply_tilt: tilt point outside D_eta of a present level");
  if (t.y_means.size() != static_cast<std::size_t>(s.n_max + 1))
    throw ConsistencyError("apply_tilt: tilt was built for a different n_max");
  s.tilted = true;
  s.tilt_x = t.x;
  s.tilt_y = t.y;
  s.tilt_alpha = t.alpha;
  if (t.alpha == 0.0) return s;
  for (std::size_t n = 0; n < s.partial_sums.size(); ++n) {
    for (std::size_t i = 0; i < s.size(); ++i) {
      s.partial_sums[n][i] += t.y_means[n][i];
      s.increments[n][i] += t.y_means[n][i] - (n ? t.y_means[n - 1][i] : 0.0);
    }
  }
  for (auto& lvl : s.mollified) {
    bool found = false;
    for (std::size_t l = 0; l < t.x_levels.size(); ++l) {
      if (t.x_profiles[l] != lvl.profile || std::abs(t.x_levels[l] - lvl.eps) > 1e-12 * lvl.eps) continue;
      for (std::size_t i = 0; i < lvl.values.size(); ++i)
        if (lvl.defined(i)) lvl.values[i] += t.x_means[l][i];
      found = true;
    }
    if (!found) throw ConsistencyError("apply_tilt: missing mean function for level eps=" + io::format_double(lvl.eps));
  }
  return s;
}

}  // namespace gmc
