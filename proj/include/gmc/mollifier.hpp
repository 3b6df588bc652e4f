#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <memory>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "gmc/errors.hpp"
#include "gmc/geometry.hpp"
#include "gmc/quadrature.hpp"

namespace gmc {

enum class MollifierProfile { StandardBump, QuadraticBump, Table };

inline std::string to_string(MollifierProfile p) {
  switch (p) {
    case MollifierProfile::StandardBump: return "standard_bump";
    case MollifierProfile::QuadraticBump: return "quadratic_bump";
    case MollifierProfile::Table: return "table";
  }
  return "unknown";
}

/// Radial mollifier theta(x) = c_d * g(|x|), supported in the unit ball,
/// with c_d fixed by quadrature so that the integral of theta is one.
class MollifierSpec {
 public:
  static MollifierSpec standard(int d) { return MollifierSpec(d, MollifierProfile::StandardBump, {}); }

  /// (1 - |x|^2)^2 on the unit ball. Only C^1, used as the alternative
  /// profile when checking independence of the limit from theta.
  static MollifierSpec quadratic(int d) { return MollifierSpec(d, MollifierProfile::QuadraticBump, {}); }

  /// g sampled at equally spaced radii 0, 1/(m-1), ..., 1 and linearly
  /// interpolated. Values must be nonnegative with g(1) = 0.
  static MollifierSpec from_table(int d, std::vector<double> radial_values) {
    if (radial_values.size() < 2) throw ArgumentError("mollifier table needs at least two samples");
    for (double v : radial_values)
      if (!(v >= 0.0) || !std::isfinite(v)) throw ArgumentError("mollifier table values must be finite and >= 0");
    if (radial_values.back() != 0.0) throw ArgumentError("mollifier table must vanish at radius 1");
    return MollifierSpec(d, MollifierProfile::Table, std::move(radial_values));
  }

  int dim() const { return d_; }
  MollifierProfile profile() const { return profile_; }
  double normalization() const { return c_; }

  /// Unnormalized radial profile g(r).
  double radial(double r) const {
    if (r >= 1.0) return 0.0;
    switch (profile_) {
      case MollifierProfile::StandardBump: return std::exp(-1.0 / (1.0 - r * r));
      case MollifierProfile::QuadraticBump: {
        const double s = 1.0 - r * r;
        return s * s;
      }
      case MollifierProfile::Table: {
        const double u = r * static_cast<double>(table_.size() - 1);
        const auto i = static_cast<std::size_t>(u);
        if (i + 1 >= table_.size()) return table_.back();
        const double t = u - static_cast<double>(i);
        return (1.0 - t) * table_[i] + t * table_[i + 1];
      }
    }
    return 0.0;
  }

  double theta(const Point& x) const { return c_ * radial(std::hypot(x[0], x[1])); }

 private:
  MollifierSpec(int d, MollifierProfile p, std::vector<double> table) : d_(d), profile_(p), table_(std::move(table)) {
    check_dimension(d);
    auto g = [this](double r) { return radial(r); };
    double mass = 0.0;
    if (d_ == 1) {
      mass = 2.0 * quad::adaptive(g, 0.0, 1.0);
    } else {
      mass = 2.0 * std::numbers::pi * quad::adaptive([&](double r) { return r * g(r); }, 0.0, 1.0);
    }
    if (!(mass > 0.0)) throw ArgumentError("mollifier profile has zero mass");
    c_ = 1.0 / mass;
  }

  int d_ = 1;
  MollifierProfile profile_ = MollifierProfile::StandardBump;
  std::vector<double> table_;
  double c_ = 1.0;
};

/// theta_eps(x) = eps^{-d} theta(x / eps).
inline double theta_eps(const MollifierSpec& spec, double eps, const Point& x) {
  if (!(eps > 0.0 && eps <= 1.0)) throw ArgumentError("theta_eps: eps must lie in (0, 1]");
  const Point u{x[0] / eps, x[1] / eps};
  return spec.theta(u) / std::pow(eps, spec.dim());
}

/// Sampled theta_eps on lattice offsets, renormalized to sum exactly one.
struct DiscreteKernel {
  double eps = 0.0;
  MollifierProfile profile = MollifierProfile::StandardBump;
  std::vector<std::array<int, 2>> offsets;
  std::vector<double> weights;
};

/// Grid must resolve eps: spacing h <= eps / 4.
inline void check_resolution(const Grid& grid, double eps) {
  if (grid.max_spacing() > eps / 4.0 * (1.0 + 1e-12))
    throw ResolutionError("mollifier scale eps=" + std::to_string(eps) + " is under-resolved (grid spacing " +
                          std::to_string(grid.max_spacing()) + " > eps/4)");
}

inline DiscreteKernel discrete_kernel(const MollifierSpec& spec, double eps, const Grid& grid) {
  if (spec.dim() != grid.dim()) throw ConsistencyError("mollifier and grid dimensions differ");
  if (!(eps > 0.0 && eps <= 1.0)) throw ArgumentError("discrete_kernel: eps must lie in (0, 1]");
  check_resolution(grid, eps);
  DiscreteKernel k;
  k.eps = eps;
  k.profile = spec.profile();
  const int rx = static_cast<int>(std::ceil(eps / grid.spacing(0)));
  const int ry = grid.dim() == 2 ? static_cast<int>(std::ceil(eps / grid.spacing(1))) : 0;
  double total = 0.0;
  for (int j = -ry; j <= ry; ++j) {
    for (int i = -rx; i <= rx; ++i) {
      const Point off{i * grid.spacing(0), grid.dim() == 2 ? j * grid.spacing(1) : 0.0};
      const double w = theta_eps(spec, eps, off);
      if (w > 0.0) {
        k.offsets.push_back({i, j});
        k.weights.push_back(w);
        total += w;
      }
    }
  }
  for (double& w : k.weights) w /= total;
  return k;
}

/// A field on the grid that is only defined on D_eps; other entries are NaN.
struct MollifiedField {
  double eps = 0.0;
  MollifierProfile profile = MollifierProfile::StandardBump;
  ShrunkenDomain domain;
  std::vector<double> values;

  bool defined(std::size_t idx) const { return !std::isnan(values[idx]); }

  double at(std::size_t idx) const {
    if (!defined(idx)) throw DomainError("mollified field requested outside D_eps");
    return values[idx];
  }
};

/// Discrete convolution of a grid field with a prepared kernel; the output
/// is populated on lattice points inside D_eps only.
inline MollifiedField convolve(std::span<const double> field, const DiscreteKernel& kernel, const Grid& grid) {
  if (field.size() != grid.size()) throw ConsistencyError("convolve: field size does not match grid");
  MollifiedField out;
  out.eps = kernel.eps;
  out.profile = kernel.profile;
  out.domain = shrink_domain(grid.box(), kernel.eps);
  out.values.assign(grid.size(), std::numeric_limits<double>::quiet_NaN());
  if (out.domain.empty) return out;
  const auto n0 = static_cast<long>(grid.cells(0));
  for (std::size_t idx = 0; idx < grid.size(); ++idx) {
    if (!out.domain.contains(grid.point(idx))) continue;
    const long i = static_cast<long>(grid.ix(idx)), j = static_cast<long>(grid.iy(idx));
    double s = 0.0;
    for (std::size_t m = 0; m < kernel.weights.size(); ++m) {
      // D_eps keeps a 2 eps margin, so the shifted index is always on the grid.
      const long src = (i + kernel.offsets[m][0]) + n0 * (j + kernel.offsets[m][1]);
      s += kernel.weights[m] * field[static_cast<std::size_t>(src)];
    }
    out.values[idx] = s;
  }
  return out;
}

inline MollifiedField convolve_grid(std::span<const double> field, const MollifierSpec& spec, double eps,
                                    const Grid& grid) {
  return convolve(field, discrete_kernel(spec, eps, grid), grid);
}

}  // namespace gmc
