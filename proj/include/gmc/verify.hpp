#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <map>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <tuple>
#include <type_traits>
#include <utility>
#include <vector>

#include "gmc/chaos.hpp"
#include "gmc/errors.hpp"
#include "gmc/geometry.hpp"
#include "gmc/kernels.hpp"
#include "gmc/mollifier.hpp"
#include "gmc/parallel.hpp"
#include "gmc/phase.hpp"
#include "gmc/sampler.hpp"

namespace gmc {

// ---------------------------------------------------------------------------
// Summary statistics.

struct MomentEstimate {
  std::string id;
  std::size_t replicas = 0;
  cplx estimate;
  double se_re = 0.0, se_im = 0.0;
  std::optional<cplx> oracle;
  double z_re = 0.0, z_im = 0.0;
  std::size_t overflow_excluded = 0;

  bool within(double zmax = 4.0) const { return std::abs(z_re) <= zmax && std::abs(z_im) <= zmax; }
};

namespace detail {

inline double z_score(double est, double oracle, double se) {
  // Round-off differences count as exact agreement.
  const double diff = est - oracle;
  if (std::abs(diff) <= 1e-12 * std::max({std::abs(est), std::abs(oracle), 1e-300})) return 0.0;
  if (se > 0.0) return diff / se;
  return diff == 0.0 ? 0.0 : std::copysign(std::numeric_limits<double>::infinity(), diff);
}

}  // namespace detail

/// Mean and unbiased standard error per component, in replica order.
/// Excluded replicas (overflow) are dropped and counted.
inline MomentEstimate make_estimate(std::string id, std::span<const cplx> values, std::span<const char> excluded = {},
                                    std::optional<cplx> oracle = std::nullopt) {
  MomentEstimate m;
  m.id = std::move(id);
  cplx sum{};
  std::size_t n = 0;
  for (std::size_t r = 0; r < values.size(); ++r) {
    if (!excluded.empty() && excluded[r]) {
      ++m.overflow_excluded;
      continue;
    }
    sum += values[r];
    ++n;
  }
  m.replicas = n;
  if (n == 0) throw NumericError("estimate '" + m.id + "': no replicas left");
  m.estimate = sum / double(n);
  double ss_re = 0.0, ss_im = 0.0;
  for (std::size_t r = 0; r < values.size(); ++r) {
    if (!excluded.empty() && excluded[r]) continue;
    const cplx d = values[r] - m.estimate;
    ss_re += d.real() * d.real();
    ss_im += d.imag() * d.imag();
  }
  if (n > 1) {
    m.se_re = std::sqrt(ss_re / double(n - 1) / double(n));
    m.se_im = std::sqrt(ss_im / double(n - 1) / double(n));
  }
  if (oracle) {
    m.oracle = oracle;
    m.z_re = detail::z_score(m.estimate.real(), oracle->real(), m.se_re);
    m.z_im = detail::z_score(m.estimate.imag(), oracle->imag(), m.se_im);
  }
  return m;
}

inline MomentEstimate make_estimate(std::string id, std::span<const double> values, std::span<const char> excluded = {},
                                    std::optional<double> oracle = std::nullopt) {
  std::vector<cplx> c(values.begin(), values.end());
  return make_estimate(std::move(id), c, excluded, oracle ? std::optional<cplx>(*oracle) : std::nullopt);
}

/// Least squares y = a + b x with the standard error of b and R^2.
struct LinearFit {
  double intercept = 0.0, slope = 0.0, slope_se = 0.0, r2 = 0.0;
};

inline LinearFit fit_line(std::span<const double> x, std::span<const double> y) {
  const std::size_t n = x.size();
  if (n < 3 || y.size() != n) throw ArgumentError("fit_line: need at least three (x, y) pairs");
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= double(n);
  my /= double(n);
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (!(sxx > 0.0)) throw ArgumentError("fit_line: x values are all equal");
  LinearFit f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  double rss = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double e = y[i] - f.intercept - f.slope * x[i];
    rss += e * e;
  }
  f.slope_se = std::sqrt(rss / double(n - 2) / sxx);
  f.r2 = syy > 0.0 ? 1.0 - rss / syy : 1.0;
  return f;
}

// ---------------------------------------------------------------------------
// Experiment context: kernel, grid, factorized sampler and lattice
// covariances for a fixed set of mollifier levels.

struct Level {
  double eps = 0.0;
  MollifierProfile profile = MollifierProfile::StandardBump;
};

class Lab {
 public:
  Lab(const KernelSpec& spec, const Grid& grid, int n_max, std::vector<Level> levels, unsigned workers = default_workers())
      : spec_(spec.with_domain(grid.box())),
        grid_(grid),
        n_max_(n_max),
        workers_(workers),
        sampler_(IncrementSampler::on_grid(spec_, grid, n_max)),
        cov_(spec_, grid, n_max) {
    for (const auto& l : levels) add_level(l);
  }

  const KernelSpec& spec() const { return spec_; }
  const Grid& grid() const { return grid_; }
  int n_max() const { return n_max_; }
  unsigned workers() const { return workers_; }
  const IncrementSampler& sampler() const { return sampler_; }
  const LatticeCovariance& covariance() const { return cov_; }
  const std::vector<DiscreteKernel>& kernels() const { return kernels_; }

  const DiscreteKernel& kernel(double eps, MollifierProfile p = MollifierProfile::StandardBump) const {
    return kernels_[find(eps, p)];
  }

  /// Var X_eps(x) per grid point (constant by stationarity of the lattice).
  const std::vector<double>& k_eps(double eps, MollifierProfile p = MollifierProfile::StandardBump) const {
    return variances_[find(eps, p)];
  }

  MollifiedKernelTable table(double eps, MollifierProfile p, double eps2, MollifierProfile p2) const {
    return cov_.table(kernel(eps, p), kernel(eps2, p2));
  }

 private:
  void add_level(const Level& l) {
    for (const auto& k : kernels_)
      if (k.profile == l.profile && k.eps == l.eps) return;
    if (n_max_ < required_n_max(l.eps))
      throw ArgumentError("Lab: n_max=" + std::to_string(n_max_) + " too small for eps=" + io::format_double(l.eps));
    const MollifierSpec m = l.profile == MollifierProfile::QuadraticBump ? MollifierSpec::quadratic(grid_.dim())
                                                                         : MollifierSpec::standard(grid_.dim());
    kernels_.push_back(discrete_kernel(m, l.eps, grid_));
    variances_.emplace_back(grid_.size(), cov_.variance(kernels_.back()));
  }

  std::size_t find(double eps, MollifierProfile p) const {
    for (std::size_t i = 0; i < kernels_.size(); ++i)
      if (kernels_[i].profile == p && std::abs(kernels_[i].eps - eps) <= 1e-12 * eps) return i;
    throw ConsistencyError("Lab: level eps=" + io::format_double(eps) + " (" + to_string(p) + ") was not prepared");
  }

  KernelSpec spec_;
  Grid grid_;
  int n_max_;
  unsigned workers_;
  IncrementSampler sampler_;
  LatticeCovariance cov_;
  std::vector<DiscreteKernel> kernels_;
  std::vector<std::vector<double>> variances_;
};

/// Calls fn(sample, second) for replicas 0..R-1, block by block across
/// workers, and returns the results in replica order. `second` is the
/// same replica drawn on stream 1 when two_fields is set, else null.
/// Every prepared level of the lab is attached to the samples.
template <class Fn>
auto map_replicas(const Lab& lab, std::uint64_t seed, std::size_t replicas, bool two_fields, Fn&& fn) {
  using T = std::invoke_result_t<Fn&, FieldSample&, FieldSample*>;
  std::vector<T> out(replicas);
  const std::size_t B = IncrementSampler::kBlock;
  const std::size_t blocks = (replicas + B - 1) / B;
  parallel_for(blocks, lab.workers(), [&](std::size_t b) {
    auto first = lab.sampler().draw_block(seed, b, 0);
    std::vector<FieldSample> second;
    if (two_fields) second = lab.sampler().draw_block(seed, b, 1);
    for (std::size_t c = 0; c < B; ++c) {
      const std::size_t r = b * B + c;
      if (r >= replicas) break;
      sample_mollified(first[c], lab.grid(), lab.kernels());
      FieldSample* s2 = nullptr;
      if (two_fields) {
        sample_mollified(second[c], lab.grid(), lab.kernels());
        s2 = &second[c];
      }
      out[r] = fn(first[c], s2);
    }
  });
  return out;
}

// ---------------------------------------------------------------------------
// Quadrature oracles.

/// sum_{x,y} exp(|gamma|^2 K_{eps,eps'}(x, y)) f(x) f(y) w^2, which is
/// E[M_eps conj(M_eps')] for the field whose covariance the table holds.
inline double second_moment_oracle(const MollifiedKernelTable& table, cplx gamma, std::span<const double> f) {
  const Grid& g = table.grid();
  if (f.size() != g.size()) throw ConsistencyError("second_moment_oracle: f is not on the table grid");
  const auto supp = support_points(f);
  for (std::size_t i : supp)
    if (!table.in_a(i) || !table.in_b(i)) throw DomainError("second_moment_oracle: supp f leaves D_eps");
  const double g2 = std::norm(gamma), w = g.weight();
  double s = 0.0;
  for (std::size_t i : supp) {
    double row = 0.0;
    for (std::size_t j : supp) row += std::exp(g2 * table(i, j)) * f[j];
    s += row * f[i];
  }
  return s * w * w;
}

/// The same oracle built from the lattice covariance of a grid-sampled
/// field with the standard bump.
inline double second_moment_oracle(const KernelSpec& spec, cplx gamma, double eps, double eps2,
                                   std::span<const double> f, const Grid& grid, int n_max) {
  const auto moll = MollifierSpec::standard(grid.dim());
  const LatticeCovariance cov(spec.with_domain(grid.box()), grid, n_max);
  return second_moment_oracle(cov.table(discrete_kernel(moll, eps, grid), discrete_kernel(moll, eps2, grid)), gamma, f);
}

/// E|M_a - M_b|^2 for untruncated single-field chaos, from lattice tables.
inline double pair_distance_oracle(const Lab& lab, cplx gamma, Level a, Level b, std::span<const double> f) {
  const double aa = second_moment_oracle(lab.table(a.eps, a.profile, a.eps, a.profile), gamma, f);
  const double bb = second_moment_oracle(lab.table(b.eps, b.profile, b.eps, b.profile), gamma, f);
  const double ab = second_moment_oracle(lab.table(a.eps, a.profile, b.eps, b.profile), gamma, f);
  return aa + bb - 2.0 * ab;
}

// ---------------------------------------------------------------------------
// Ladders.

struct LadderStep {
  double eps = 0.0, eps2 = 0.0;
  double value = 0.0, se = 0.0;
  /// Mean and SE of (next value - this value) from per-replica differences.
  double change = 0.0, change_se = 0.0;
};

struct LadderReport {
  std::vector<double> ladder;
  std::vector<LadderStep> steps;
  bool decreasing = false;
  std::size_t replicas = 0;
  std::size_t overflow_excluded = 0;
};

/// Decreasing within noise: each consecutive change is negative or within
/// two SE of zero, and the last value is below half the first.
inline bool trend_verdict(const std::vector<LadderStep>& steps) {
  if (steps.size() < 2) return false;
  for (std::size_t l = 0; l + 1 < steps.size(); ++l)
    if (!(steps[l].change < 0.0 || std::abs(steps[l].change) <= 2.0 * steps[l].change_se)) return false;
  return steps.back().value < 0.5 * steps.front().value;
}

inline void check_ladder(const std::vector<double>& ladder) {
  if (ladder.size() < 2) throw ArgumentError("ladder needs at least two levels");
  for (std::size_t l = 0; l + 1 < ladder.size(); ++l)
    if (!(ladder[l + 1] < ladder[l])) throw ArgumentError("ladder must be strictly decreasing");
}

/// Builds the report from per-replica step values d[r][l].
inline LadderReport ladder_report(std::vector<double> ladder, const std::vector<std::vector<double>>& d,
                                  const std::vector<char>& excluded, bool pairs) {
  LadderReport rep;
  rep.ladder = std::move(ladder);
  const std::size_t steps = d.empty() ? 0 : d.front().size();
  for (std::size_t l = 0; l < steps; ++l) {
    std::vector<double> v(d.size());
    for (std::size_t r = 0; r < d.size(); ++r) v[r] = d[r][l];
    const auto e = make_estimate("step", std::span<const double>(v), excluded);
    LadderStep st;
    st.eps = rep.ladder[l];
    st.eps2 = pairs ? rep.ladder[l + 1] : rep.ladder[l];
    st.value = e.estimate.real();
    st.se = e.se_re;
    if (l + 1 < steps) {
      for (std::size_t r = 0; r < d.size(); ++r) v[r] = d[r][l + 1] - d[r][l];
      const auto c = make_estimate("change", std::span<const double>(v), excluded);
      st.change = c.estimate.real();
      st.change_se = c.se_re;
    }
    rep.steps.push_back(st);
    rep.replicas = e.replicas;
    rep.overflow_excluded = e.overflow_excluded;
  }
  rep.decreasing = trend_verdict(rep.steps);
  return rep;
}

inline void check_chaos_phase(int d, const ChaosParams& p) {
  const auto label = classify(d, p.alpha(), p.beta());
  if (!is_subcritical(label)) throw PhaseError("chaos parameters are " + to_string(label) + ", need a subcritical phase");
  if (label == PhaseLabel::SubcriticalNonL2 && !p.truncation.enabled)
    throw ArgumentError("truncation must be enabled outside the L2 region");
}

/// Chaos value at one level, truncated when the params ask for it.
inline ChaosValue chaos_at(const Lab& lab, const FieldSample& s, const FieldSample* s2, const ChaosParams& p,
                           Level lvl) {
  return p.truncation.enabled ? truncated_chaos(s, p, lvl.eps, lab.grid(), lab.k_eps(lvl.eps, lvl.profile), s2, lvl.profile)
                              : chaos_integral(s, p, lvl.eps, lab.grid(), lab.k_eps(lvl.eps, lvl.profile), s2, lvl.profile);
}

/// Per-replica chaos values at every ladder level (for CSV export and the
/// ladder statistics).
struct ReplicaChaos {
  std::vector<ChaosValue> values;
  bool overflow = false;
};

/// E|M_{eps_l} - M_{eps_{l+1}}|^2 on coupled samples.
inline LadderReport cauchy_ladder(const Lab& lab, const ChaosParams& p, const std::vector<double>& ladder,
                                  std::size_t replicas, std::uint64_t seed,
                                  std::vector<ReplicaChaos>* per_replica = nullptr) {
  check_ladder(ladder);
  check_chaos_phase(lab.grid().dim(), p);
  for (double e : ladder) check_support(p.f, lab.grid(), e);
  const bool two = p.mode == ChaosMode::TwoField;
  auto rows = map_replicas(lab, seed, replicas, two, [&](FieldSample& s, FieldSample* s2) {
    ReplicaChaos rc;
    for (double e : ladder) {
      rc.values.push_back(chaos_at(lab, s, s2, p, {e, MollifierProfile::StandardBump}));
      rc.overflow = rc.overflow || rc.values.back().overflow;
    }
    return rc;
  });
  std::vector<std::vector<double>> d(replicas);
  std::vector<char> excl(replicas, 0);
  for (std::size_t r = 0; r < replicas; ++r) {
    excl[r] = rows[r].overflow;
    for (std::size_t l = 0; l + 1 < ladder.size(); ++l)
      d[r].push_back(std::norm(rows[r].values[l].value - rows[r].values[l + 1].value));
  }
  if (per_replica) *per_replica = std::move(rows);
  return ladder_report(ladder, d, excl, true);
}

/// E|M^theta_eps - M^theta'_eps|^2 (standard vs quadratic bump) on the
/// same underlying fields.
inline LadderReport mollifier_independence(const Lab& lab, const ChaosParams& p, const std::vector<double>& ladder,
                                           std::size_t replicas, std::uint64_t seed,
                                           std::vector<ReplicaChaos>* per_replica = nullptr) {
  check_ladder(ladder);
  check_chaos_phase(lab.grid().dim(), p);
  for (double e : ladder) check_support(p.f, lab.grid(), e);
  const bool two = p.mode == ChaosMode::TwoField;
  auto rows = map_replicas(lab, seed, replicas, two, [&](FieldSample& s, FieldSample* s2) {
    ReplicaChaos rc;
    for (double e : ladder) {
      rc.values.push_back(chaos_at(lab, s, s2, p, {e, MollifierProfile::StandardBump}));
      rc.values.push_back(chaos_at(lab, s, s2, p, {e, MollifierProfile::QuadraticBump}));
      rc.overflow = rc.overflow || rc.values[rc.values.size() - 2].overflow || rc.values.back().overflow;
    }
    return rc;
  });
  std::vector<std::vector<double>> d(replicas);
  std::vector<char> excl(replicas, 0);
  for (std::size_t r = 0; r < replicas; ++r) {
    excl[r] = rows[r].overflow;
    for (std::size_t l = 0; l < ladder.size(); ++l)
      d[r].push_back(std::norm(rows[r].values[2 * l].value - rows[r].values[2 * l + 1].value));
  }
  if (per_replica) *per_replica = std::move(rows);
  return ladder_report(ladder, d, excl, false);
}

/// H^{-u} distance between consecutive levels of the (truncated when
/// enabled) chaos density, with the test function as cutoff.
inline LadderReport sobolev_ladder(const Lab& lab, const ChaosParams& p, const std::vector<double>& ladder, double u,
                                   std::size_t replicas, std::uint64_t seed) {
  check_ladder(ladder);
  check_chaos_phase(lab.grid().dim(), p);
  for (double e : ladder) check_support(p.f, lab.grid(), e);
  const bool two = p.mode == ChaosMode::TwoField;
  struct Row {
    std::vector<double> d;
  };
  auto rows = map_replicas(lab, seed, replicas, two, [&](FieldSample& s, FieldSample* s2) {
    Row row;
    std::vector<cplx> prev;
    for (double e : ladder) {
      auto cur = chaos_density(s, p, e, lab.k_eps(e), s2);
      if (!prev.empty()) {
        std::vector<cplx> diff(cur.size());
        for (std::size_t i = 0; i < cur.size(); ++i) diff[i] = cur[i] - prev[i];
        row.d.push_back(sobolev_diag(diff, lab.grid(), u));
      }
      prev = std::move(cur);
    }
    return row;
  });
  std::vector<std::vector<double>> d(replicas);
  for (std::size_t r = 0; r < replicas; ++r) d[r] = std::move(rows[r].d);
  return ladder_report(ladder, d, std::vector<char>(replicas, 0), true);
}

// ---------------------------------------------------------------------------
// Kernel estimates.

enum class KernelEstimate { Mollified, PartialMollified };

inline std::string to_string(KernelEstimate k) { return k == KernelEstimate::Mollified ? "mollified_log" : "partial_mollified_log"; }

struct KernelEstimateRow {
  double eps = 0.0;
  double supremum = 0.0;
};

struct KernelEstimateReport {
  KernelEstimate kind = KernelEstimate::Mollified;
  std::vector<KernelEstimateRow> rows;
  double max_ratio = 0.0;
  bool stable = false;
};

/// Suprema over lattice pairs (x, y) in D_eps of
///   mollified:         |K_{eps,eps}(x,y) - log 1/(|x-y| v eps)|
///   partial_mollified: |K_{n,eps,eps}(x,y) - min(log 1/|x-y|, log 1/eps, n)|, n = 1..n_cap
/// with the continuum midpoint rule. Stable when every consecutive
/// ratio sup_{l+1}/sup_l is at most 1.5.
inline KernelEstimateReport kernel_estimate_check(const KernelSpec& spec, KernelEstimate kind, const Grid& grid,
                                                  const std::vector<double>& ladder, int n_cap = 10,
                                                  unsigned workers = default_workers(),
                                                  bool subtract_log = true) {
  check_ladder(ladder);
  const auto moll = MollifierSpec::standard(grid.dim());
  const auto ks = spec.with_domain(grid.box());
  KernelEstimateReport rep;
  rep.kind = kind;
  for (double eps : ladder) {
    const auto dom = shrink_domain(grid.box(), eps);
    if (dom.empty) throw DomainError("kernel_estimate_check: D_eps is empty");
    std::vector<std::size_t> pts;
    for (std::size_t i = 0; i < grid.size(); ++i)
      if (dom.contains(grid.point(i))) pts.push_back(i);
    // Stationarity: one anchor and every offset realized inside D_eps.
    const Point x = grid.point(pts.front());
    std::vector<double> sups(pts.size(), 0.0);
    parallel_for(pts.size(), workers, [&](std::size_t m) {
      const Point y = grid.point(pts[m]);
      const double r = distance(x, y);
      if (kind == KernelEstimate::Mollified) {
        const double ref = subtract_log ? std::log(1.0 / std::max(r, eps)) : 0.0;
        sups[m] = std::abs(k_mollified(ks, moll, eps, eps, x, y) - ref);
      } else {
        double s = 0.0;
        for (int n = 1; n <= n_cap; ++n) {
          const double lr = r > 0.0 ? std::log(1.0 / r) : std::numeric_limits<double>::infinity();
          const double ref = std::min({lr, std::log(1.0 / eps), double(n)});
          s = std::max(s, std::abs(k_partial_mollified2(ks, moll, n, eps, eps, x, y) - ref));
        }
        sups[m] = s;
      }
    });
    rep.rows.push_back({eps, *std::max_element(sups.begin(), sups.end())});
  }
  rep.stable = true;
  for (std::size_t l = 0; l + 1 < rep.rows.size(); ++l) {
    const double ratio = rep.rows[l + 1].supremum / rep.rows[l].supremum;
    rep.max_ratio = std::max(rep.max_ratio, ratio);
    if (!(ratio <= 1.5)) rep.stable = false;
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Gaussian tail.

struct TailRow {
  double sigma = 0.0, u = 0.0;
  double tail = 0.0;
  double bound = 0.0;          // 2 exp(-u^2 / (2 sigma^2))
  double literal_bound = 0.0;  // 2 exp(-u^2 / sigma^2)
  bool holds = false, literal_holds = false;
};

/// P(N(0, sigma^2) > u) against both exponents.
inline std::vector<TailRow> tail_bound_check(const std::vector<double>& sigmas, const std::vector<double>& u_over_sigma) {
  std::vector<TailRow> out;
  for (double s : sigmas) {
    if (!(s > 0.0)) throw ArgumentError("tail_bound_check: sigma must be positive");
    for (double k : u_over_sigma) {
      if (!(k >= 0.0)) throw ArgumentError("tail_bound_check: u must be nonnegative");
      TailRow row;
      row.sigma = s;
      row.u = k * s;
      row.tail = 0.5 * std::erfc(row.u / (s * std::numbers::sqrt2));
      row.bound = 2.0 * std::exp(-row.u * row.u / (2.0 * s * s));
      row.literal_bound = 2.0 * std::exp(-row.u * row.u / (s * s));
      row.holds = row.tail <= row.bound;
      row.literal_holds = row.tail <= row.literal_bound;
      out.push_back(row);
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Maxima of the approximating fields.

struct SupProbRow {
  int k = 0;
  MomentEstimate plain;       // indicator mean
  MomentEstimate importance;  // mixture of Cameron–Martin shifts
};

struct EventProbRow {
  int q = 0;
  MomentEstimate prob;
};

struct SupProbReport {
  double lambda = 0.0;
  std::vector<SupProbRow> sup_rows;
  std::vector<EventProbRow> event_rows;
  LinearFit log_fit;  // log P(sup Y_k > lambda k) against k
  bool decay_linear = false;
  bool event_increasing = false;
};

/// P(sup_{supp f} Y_k > lambda k) for each k and P[A_{q,lambda}(f)] for each
/// q. The sup probabilities use, besides the plain estimator, the mixture
/// proposal that shifts Y_k by lambda K_k(., x0) with x0 uniform on the
/// support; its likelihood ratio is 1 / mean_{x0} exp(lambda Y_k(x0) - lambda^2 k / 2).
inline SupProbReport sup_field_prob(const Lab& lab, std::span<const double> f, double lambda, const std::vector<int>& ks,
                                    const std::vector<int>& qs, std::size_t replicas, std::size_t event_replicas,
                                    std::uint64_t seed) {
  const int d = lab.grid().dim();
  if (!(lambda > std::sqrt(2.0 * d))) throw ArgumentError("sup_field_prob: lambda must exceed sqrt(2d)");
  for (int k : ks)
    if (k < 1 || k > lab.n_max()) throw ArgumentError("sup_field_prob: level k out of range");
  for (int q : qs)
    if (q < 1 || q > lab.n_max()) throw ArgumentError("sup_field_prob: q out of range");
  const auto supp = support_points(f);
  if (supp.empty()) throw ArgumentError("sup_field_prob: empty support");
  const auto& g = lab.grid();
  const auto& cov = lab.covariance();
  auto offset = [&](std::size_t a, std::size_t b) {
    return std::array<long, 2>{long(g.ix(b)) - long(g.ix(a)), long(g.iy(b)) - long(g.iy(a))};
  };

  struct Row {
    std::vector<double> plain, is;
    std::vector<double> events;
  };
  const std::size_t total = std::max(replicas, event_replicas);
  auto rows = map_replicas(lab, seed, total, false, [&](FieldSample& s, FieldSample*) {
    Row row;
    const std::size_t r = s.replica;
    if (r < replicas) {
      for (int k : ks) {
        const auto& y = s.y(k);
        const double u = lambda * k;
        double mx = -std::numeric_limits<double>::infinity();
        for (std::size_t i : supp) mx = std::max(mx, y[i]);
        row.plain.push_back(mx > u ? 1.0 : 0.0);
        // Proposal component chosen by the replica's own key.
        KeyedStream pick(s.seed, r, 1000 + static_cast<std::uint64_t>(k), 2);
        const std::size_t x0 = supp[std::uniform_int_distribution<std::size_t>(0, supp.size() - 1)(pick)];
        std::vector<double> shifted(supp.size());
        double smax = -std::numeric_limits<double>::infinity();
        for (std::size_t m = 0; m < supp.size(); ++m) {
          const auto o = offset(x0, supp[m]);
          shifted[m] = y[supp[m]] + lambda * cov.partial(k, o[0], o[1]);
          smax = std::max(smax, shifted[m]);
        }
        double w = 0.0;
        if (smax > u) {
          // 1 / mean exp(lambda Y(x0) - lambda^2 k / 2), computed in log space.
          double top = -std::numeric_limits<double>::infinity();
          for (double v : shifted) top = std::max(top, lambda * v);
          double acc = 0.0;
          for (double v : shifted) acc += std::exp(lambda * v - top);
          const double log_mean = top + std::log(acc / double(supp.size())) - lambda * lambda * k / 2.0;
          w = std::exp(-log_mean);
        }
        row.is.push_back(w);
      }
    }
    if (r < event_replicas) {
      for (int q : qs) {
        Truncation t{true, q, lambda, false};
        row.events.push_back(truncation_indicator(s, t, supp).global ? 1.0 : 0.0);
      }
    }
    return row;
  });

  SupProbReport rep;
  rep.lambda = lambda;
  for (std::size_t j = 0; j < ks.size(); ++j) {
    std::vector<double> a(replicas), b(replicas);
    for (std::size_t r = 0; r < replicas; ++r) {
      a[r] = rows[r].plain[j];
      b[r] = rows[r].is[j];
    }
    rep.sup_rows.push_back({ks[j], make_estimate("sup_plain", std::span<const double>(a)),
                            make_estimate("sup_is", std::span<const double>(b))});
  }
  for (std::size_t j = 0; j < qs.size(); ++j) {
    std::vector<double> a(event_replicas);
    for (std::size_t r = 0; r < event_replicas; ++r) a[r] = rows[r].events[j];
    rep.event_rows.push_back({qs[j], make_estimate("event", std::span<const double>(a))});
  }
  if (ks.size() >= 3) {
    std::vector<double> x, y;
    for (const auto& row : rep.sup_rows) {
      if (!(row.importance.estimate.real() > 0.0)) continue;
      x.push_back(row.k);
      y.push_back(std::log(row.importance.estimate.real()));
    }
    if (x.size() == ks.size()) {
      rep.log_fit = fit_line(x, y);
      rep.decay_linear = rep.log_fit.slope < 0.0 && rep.log_fit.r2 >= 0.95;
    }
  }
  rep.event_increasing = !rep.event_rows.empty();
  for (std::size_t j = 0; j + 1 < rep.event_rows.size(); ++j) {
    const auto& a = rep.event_rows[j].prob;
    const auto& b = rep.event_rows[j + 1].prob;
    const double se = std::hypot(a.se_re, b.se_re);
    if (!(b.estimate.real() >= a.estimate.real() - 4.0 * se)) rep.event_increasing = false;
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Tilted events.

struct TiltedRow {
  double separation = 0.0;
  MomentEstimate prob;
};

struct TiltedReport {
  double alpha = 0.0, lambda = 0.0;
  int q = 0, n_max = 0;
  double eps = 0.0;
  std::vector<TiltedRow> rows;
  LinearFit fit;  // log P against log(separation v eps)
  double target = 0.0;  // (2 alpha - lambda)^2 / 2
  bool bound_holds = false;
};

/// Estimates P~[A_q(x) and A_q(y)] under the Cameron–Martin tilt by
/// alpha (X_eps(x) + X_eps'(y)), sampling Y_k on the two points only,
/// for y = x + separation along the first axis.
inline TiltedReport tilted_event_prob(const KernelSpec& spec, Point x, const std::vector<double>& separations,
                                      double eps, double eps2, int q, double lambda, double alpha, int n_max,
                                      std::size_t replicas, std::uint64_t seed, unsigned workers = default_workers()) {
  const int d = spec.dim();
  if (!(lambda > std::sqrt(2.0 * d))) throw ArgumentError("tilted_event_prob: lambda must exceed sqrt(2d)");
  if (q < 1 || q > n_max) throw ArgumentError("tilted_event_prob: need 1 <= q <= n_max");
  if (separations.size() < 4) throw ArgumentError("tilted_event_prob: need at least four separations");
  const auto moll = MollifierSpec::standard(d);
  const ContinuumTiltCovariance cov(spec, moll);
  TiltedReport rep;
  rep.alpha = alpha;
  rep.lambda = lambda;
  rep.q = q;
  rep.n_max = n_max;
  rep.eps = eps;
  rep.target = (2.0 * std::abs(alpha) - lambda) * (2.0 * std::abs(alpha) - lambda) / 2.0;
  std::vector<double> lx, ly;
  for (double sep : separations) {
    const Point y{x[0] + sep, x[1]};
    const std::vector<Point> pts{x, y};
    const IncrementSampler sampler(spec, pts, n_max);
    FieldSample layout;
    layout.n_max = n_max;
    const TiltShift tilt = make_tilt(x, y, eps, eps2, alpha, cov, pts, layout);
    const std::size_t B = IncrementSampler::kBlock, blocks = (replicas + B - 1) / B;
    std::vector<double> hits(replicas, 0.0);
    parallel_for(blocks, workers, [&](std::size_t b) {
      auto block = sampler.draw_block(seed, b, 0);
      for (std::size_t c = 0; c < B; ++c) {
        const std::size_t r = b * B + c;
        if (r >= replicas) break;
        const auto s = apply_tilt(std::move(block[c]), tilt, spec.domain());
        bool ok = true;
        for (int k = q; k <= n_max && ok; ++k) {
          const auto& yk = s.y(k);
          ok = yk[0] <= k * lambda && yk[1] <= k * lambda;
        }
        hits[r] = ok ? 1.0 : 0.0;
      }
    });
    auto est = make_estimate("tilted_event", std::span<const double>(hits));
    rep.rows.push_back({sep, est});
    if (est.estimate.real() > 0.0) {
      lx.push_back(std::log(std::max(sep, eps)));
      ly.push_back(std::log(est.estimate.real()));
    }
  }
  if (lx.size() >= 3) {
    rep.fit = fit_line(lx, ly);
    rep.bound_holds = lx.size() >= 4 && rep.fit.slope >= rep.target - 0.3;
  }
  return rep;
}

}  // namespace gmc
