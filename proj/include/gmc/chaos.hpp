#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <vector>


#include "gmc/errors.hpp"
#include "gmc/fft.hpp"
#include "gmc/geometry.hpp"
#include "gmc/mollifier.hpp"
#include "gmc/sampler.hpp"

namespace gmc {

using cplx = std::complex<double>;

/// Real exponents above this are saturated and flagged.
inline constexpr double kOverflowExponent = 700.0;

struct WickValue {
  cplx value;
  bool overflow = false;
};

/// exp(u z - u^2 v / 2) with u^2 the complex square.
inline WickValue wick_exp(cplx u, double z, double v) {
  if (!(v >= 0.0)) throw ArgumentError("wick_exp: variance must be nonnegative");
  const cplx e = u * z - u * u * v / 2.0;
  WickValue w;
  if (e.real() > kOverflowExponent) {
    w.overflow = true;
    w.value = std::polar(std::exp(kOverflowExponent), e.imag());
  } else {
    w.value = std::polar(std::exp(e.real()), e.imag());
  }
  return w;
}

enum class ChaosMode { Single, TwoField };

inline std::string to_string(ChaosMode m) { return m == ChaosMode::Single ? "single" : "two_field"; }

struct Truncation {
  bool enabled = false;
  int q = 1;
  double lambda = 0.0;
  /// Use mollified levels X_{e^-k} instead of Y_k in the events.
  bool use_mollified_levels = false;
};

struct ChaosParams {
  ChaosMode mode = ChaosMode::Single;
  cplx gamma{0.0, 0.0};  // alpha + i beta
  Truncation truncation;
  std::vector<double> f;  // on the sampling grid

  double alpha() const { return gamma.real(); }
  double beta() const { return gamma.imag(); }
};

struct ChaosValue {
  cplx value;
  ChaosMode mode = ChaosMode::Single;
  double eps = 0.0;
  bool truncated = false;
  /// Global event holds (always true without truncation).
  bool event = true;
  bool overflow = false;
  std::string manifest_id;
};

/// Indices of grid points where f does not vanish.
inline std::vector<std::size_t> support_points(std::span<const double> f) {
  std::vector<std::size_t> s;
  for (std::size_t i = 0; i < f.size(); ++i)
    if (f[i] != 0.0) s.push_back(i);
  return s;
}

inline void check_support(std::span<const double> f, const Grid& grid, double eps) {
  if (f.size() != grid.size()) throw ConsistencyError("test function is not tabulated on the sampling grid");
  const auto dom = shrink_domain(grid.box(), eps);
  for (std::size_t i = 0; i < f.size(); ++i)
    if (f[i] != 0.0 && !dom.contains(grid.point(i)))
      throw DomainError("test function support leaves D_eps for eps=" + io::format_double(eps));
}

/// Smallest q >= 1 with supp f inside D_{e^-q}.
inline int q0_of(std::span<const double> f, const Grid& grid) {
  for (int q = 1; q < 64; ++q) {
    const auto dom = shrink_domain(grid.box(), std::exp(-double(q)));
    bool ok = true;
    for (std::size_t i = 0; i < f.size() && ok; ++i)
      if (f[i] != 0.0 && !dom.contains(grid.point(i))) ok = false;
    if (ok) return q;
  }
  throw DomainError("q0_of: support touches the boundary");
}

/// Smooth bump exp(1 - 1/(1 - s^2)), s = |x - c| / radius (peak 1), in d = 1
/// or as a tensor product in d = 2.
inline std::vector<double> bump_function(const Grid& grid, Point centre, double radius) {
  if (!(radius > 0.0)) throw ArgumentError("bump_function: radius must be positive");
  auto g = [](double s) { return s < 1.0 ? std::exp(1.0 - 1.0 / (1.0 - s * s)) : 0.0; };
  std::vector<double> f(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const auto p = grid.point(i);
    double v = g(std::abs(p[0] - centre[0]) / radius);
    if (grid.dim() == 2) v *= g(std::abs(p[1] - centre[1]) / radius);
    f[i] = v;
  }
  return f;
}

/// Midpoint-rule integral of f.
inline double integrate(std::span<const double> f, const Grid& grid) {
  double s = 0.0;
  for (double v : f) s += v;
  return s * grid.weight();
}

struct EventIndicator {
  std::vector<bool> per_point;  // meaningful on the support points
  bool global = true;
};

/// A_{q,lambda}(x) = [Y_k(x) <= k lambda for every k in q..n_max].
inline EventIndicator truncation_indicator(const FieldSample& s, const Truncation& t,
                                           std::span<const std::size_t> support) {
  if (t.q < 1) throw ArgumentError("truncation: q must be >= 1");
  if (t.q > s.n_max) throw ArgumentError("truncation: q=" + std::to_string(t.q) + " exceeds n_max=" + std::to_string(s.n_max));
  EventIndicator ind;
  ind.per_point.assign(s.size(), true);
  if (t.use_mollified_levels) {
    for (int k = t.q; k <= s.n_max; ++k) {
      const auto& lvl = s.x(std::exp(-double(k)));
      for (std::size_t i : support) {
        if (!lvl.defined(i)) throw DomainError("truncation: support point outside D_{e^-k}");
        if (!(lvl.values[i] <= k * t.lambda)) ind.per_point[i] = false;
      }
    }
  } else {
    for (int k = t.q; k <= s.n_max; ++k) {
      const auto& y = s.y(k);
      for (std::size_t i : support)
        if (!(y[i] <= k * t.lambda)) ind.per_point[i] = false;
    }
  }
  for (std::size_t i : support) ind.global = ind.global && ind.per_point[i];
  return ind;
}

namespace detail {

/// Per-point integrand of the chaos at level eps (zero off the support).
struct Density {
  std::vector<cplx> values;
  bool overflow = false;
  bool event = true;
};

inline Density chaos_density(const FieldSample& s, const ChaosParams& p, double eps, std::span<const double> k_eps,
                             const FieldSample* second, MollifierProfile profile, bool truncate) {
  const auto& x = s.x(eps, profile);
  if (k_eps.size() != s.size() || p.f.size() != s.size())
    throw ConsistencyError("chaos: variance table or test function has the wrong size");
  const MollifiedField* y2 = nullptr;
  if (p.mode == ChaosMode::TwoField) {
    if (!second) throw ConsistencyError("chaos: two-field mode needs an independent second sample");
    if (second->replica != s.replica || second->stream == s.stream)
      throw ConsistencyError("chaos: second sample must be the same replica on a different stream");
    y2 = &second->x(eps, profile);
  }
  const auto support = support_points(p.f);
  Density d;
  d.values.assign(s.size(), cplx{});
  std::optional<EventIndicator> ind;
  if (truncate) {
    ind = truncation_indicator(s, p.truncation, support);
    d.event = ind->global;
  }
  for (std::size_t i : support) {
    if (!x.defined(i)) throw DomainError("chaos: test function support leaves D_eps");
    if (ind && !ind->per_point[i]) continue;
    WickValue w;
    if (p.mode == ChaosMode::Single) {
      w = wick_exp(p.gamma, x.values[i], k_eps[i]);
    } else {
      // exp(alpha X + i beta Y' + (beta^2 - alpha^2) K / 2)
      const double re = p.alpha() * x.values[i] + (p.beta() * p.beta() - p.alpha() * p.alpha()) * k_eps[i] / 2.0;
      const double im = p.beta() * y2->values[i];
      w.overflow = re > kOverflowExponent;
      w.value = std::polar(std::exp(std::min(re, kOverflowExponent)), im);
    }
    d.overflow = d.overflow || w.overflow;
    d.values[i] = w.value * p.f[i];
  }
  return d;
}

}  // namespace detail

/// M_eps(f) = sum_x wick(gamma, X_eps(x), K_eps(x)) f(x) w by the midpoint rule
/// on the sampling grid; k_eps holds Var X_eps(x) per grid point.
inline ChaosValue chaos_integral(const FieldSample& s, const ChaosParams& p, double eps, const Grid& grid,
                                 std::span<const double> k_eps, const FieldSample* second = nullptr,
                                 MollifierProfile profile = MollifierProfile::StandardBump) {
  if (s.size() != grid.size()) throw ConsistencyError("chaos: sample is not on this grid");
  const auto d = detail::chaos_density(s, p, eps, k_eps, second, profile, false);
  ChaosValue v;
  v.mode = p.mode;
  v.eps = eps;
  v.overflow = d.overflow;
  v.manifest_id = s.points_hash + ":" + std::to_string(s.seed) + ":" + std::to_string(s.replica);
  cplx acc{};
  for (const auto& c : d.values) acc += c;
  v.value = acc * grid.weight();
  return v;
}

/// Chaos with the integrand restricted to the points where A_{q,lambda} holds.
inline ChaosValue truncated_chaos(const FieldSample& s, const ChaosParams& p, double eps, const Grid& grid,
                                  std::span<const double> k_eps, const FieldSample* second = nullptr,
                                  MollifierProfile profile = MollifierProfile::StandardBump) {
  if (!p.truncation.enabled) throw ArgumentError("truncated_chaos: truncation is not enabled");
  if (!(p.truncation.lambda > std::sqrt(2.0 * grid.dim())))
    throw ArgumentError("truncated_chaos: lambda must exceed sqrt(2d)");
  if (s.size() != grid.size()) throw ConsistencyError("chaos: sample is not on this grid");
  const auto d = detail::chaos_density(s, p, eps, k_eps, second, profile, true);
  ChaosValue v;
  v.mode = p.mode;
  v.eps = eps;
  v.truncated = true;
  v.event = d.event;
  v.overflow = d.overflow;
  v.manifest_id = s.points_hash + ":" + std::to_string(s.seed) + ":" + std::to_string(s.replica);
  cplx acc{};
  for (const auto& c : d.values) acc += c;
  v.value = acc * grid.weight();
  return v;
}

/// Integrand field (f times the Wick factor, truncated if enabled); this is
/// the density fed to the Sobolev diagnostic with rho = f.
inline std::vector<cplx> chaos_density(const FieldSample& s, const ChaosParams& p, double eps,
                                       std::span<const double> k_eps, const FieldSample* second = nullptr,
                                       MollifierProfile profile = MollifierProfile::StandardBump) {
  return detail::chaos_density(s, p, eps, k_eps, second, profile, p.truncation.enabled).values;
}

/// sum_xi |M^(xi)|^2 (1 + |xi|^2)^-u dxi over the Fourier lattice of the
/// periodized box, with M^ the Riemann-sum transform of the density.
inline double sobolev_diag(std::span<const cplx> density, const Grid& grid, double u) {
  const int d = grid.dim();
  if (!(u > d / 2.0)) throw ArgumentError("sobolev_diag: need u > d/2");
  if (density.size() != grid.size()) throw ConsistencyError("sobolev_diag: density is not on this grid");
  const std::size_t n0 = grid.cells(0), n1 = grid.cells(1);
  std::vector<cplx> buf(density.begin(), density.end());
  fft_forward(buf, n0, d == 2 ? n1 : 1);
  const double L0 = grid.box().side(0), L1 = d == 2 ? grid.box().side(1) : 1.0;
  const double dxi = d == 1 ? 2.0 * std::numbers::pi / L0 : 4.0 * std::numbers::pi * std::numbers::pi / (L0 * L1);
  auto freq = [](std::size_t m, std::size_t n, double L) {
    const double k = m <= n / 2 ? double(m) : double(m) - double(n);
    return 2.0 * std::numbers::pi * k / L;
  };
  double s = 0.0;
  for (std::size_t j = 0; j < n1; ++j) {
    const double xj = d == 2 ? freq(j, n1, L1) : 0.0;
    for (std::size_t i = 0; i < n0; ++i) {
      const double xi = freq(i, n0, L0);
      const double mag = std::norm(buf[i + n0 * j] * grid.weight());
      s += mag * std::pow(1.0 + xi * xi + xj * xj, -u);
    }
  }
  if (!std::isfinite(s)) throw NumericError("sobolev_diag: non-finite norm");
  return s * dxi;
}

}  // namespace gmc
