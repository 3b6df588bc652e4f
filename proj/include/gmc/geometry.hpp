#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "gmc/errors.hpp"

namespace gmc {

/// Points carry two coordinates; in dimension 1 the second one is zero.
using Point = std::array<double, 2>;

inline double distance(const Point& a, const Point& b) {
  return std::hypot(a[0] - b[0], a[1] - b[1]);
}

inline void check_dimension(int d) {
  if (d != 1 && d != 2) throw ArgumentError("dimension must be 1 or 2, got " + std::to_string(d));
}

/// Axis-aligned box [lo, hi] in dimension d.
struct Box {
  int d = 1;
  std::array<double, 2> lo{0.0, 0.0};
  std::array<double, 2> hi{1.0, 0.0};

  static Box unit(int d) {
    check_dimension(d);
    Box b;
    b.d = d;
    b.hi = {1.0, d == 2 ? 1.0 : 0.0};
    return b;
  }

  double side(int axis) const { return hi[axis] - lo[axis]; }

  double volume() const { return d == 1 ? side(0) : side(0) * side(1); }

  /// Open-interior membership.
  bool contains(const Point& p) const {
    for (int a = 0; a < d; ++a)
      if (!(p[a] > lo[a] && p[a] < hi[a])) return false;
    return true;
  }

  bool operator==(const Box&) const = default;
};

/// Inner box D_eps = {x : dist(x, complement) > 2 eps}.
struct ShrunkenDomain {
  double eps = 0.0;
  Box inner;
  bool empty = false;

  bool contains(const Point& p) const { return !empty && inner.contains(p); }
};

inline ShrunkenDomain shrink_domain(const Box& box, double eps) {
  if (!(eps > 0.0)) throw ArgumentError("shrink_domain: eps must be positive");
  ShrunkenDomain out;
  out.eps = eps;
  out.inner = box;
  const double margin = 2.0 * eps;
  for (int a = 0; a < box.d; ++a) {
    out.inner.lo[a] = box.lo[a] + margin;
    out.inner.hi[a] = box.hi[a] - margin;
    if (!(out.inner.lo[a] < out.inner.hi[a])) out.empty = true;
  }
  return out;
}

/// Largest eps with nonempty D_eps.
inline double max_shrink_eps(const Box& box) {
  double half = box.side(0) / 2.0;
  if (box.d == 2) half = std::min(half, box.side(1) / 2.0);
  return half / 2.0;
}

/// Regular cell-centred lattice on a box. Points are cell midpoints and
/// each carries the cell volume as its midpoint-rule weight. Linear index
/// is i + n0 * j.
class Grid {
 public:
  Grid() = default;

  Grid(const Box& box, std::array<std::size_t, 2> cells) : box_(box), n_(cells) {
    check_dimension(box.d);
    if (box.d == 1) n_[1] = 1;
    if (n_[0] < 1 || n_[1] < 1) throw ArgumentError("Grid: need at least one cell per axis");
    for (int a = 0; a < box.d; ++a) {
      if (!(box.side(a) > 0.0)) throw ArgumentError("Grid: degenerate box");
      h_[a] = box.side(a) / static_cast<double>(n_[a]);
    }
    if (box.d == 1) h_[1] = 1.0;
  }

  /// n cells per axis on the unit box.
  static Grid uniform(int d, std::size_t n) { return Grid(Box::unit(d), {n, d == 2 ? n : 1}); }

  int dim() const { return box_.d; }
  const Box& box() const { return box_; }
  std::size_t cells(int axis) const { return n_[axis]; }
  std::size_t size() const { return n_[0] * n_[1]; }
  double spacing(int axis) const { return h_[axis]; }
  double max_spacing() const { return box_.d == 1 ? h_[0] : std::max(h_[0], h_[1]); }
  double weight() const { return box_.d == 1 ? h_[0] : h_[0] * h_[1]; }

  std::size_t index(std::size_t i, std::size_t j = 0) const { return i + n_[0] * j; }
  std::size_t ix(std::size_t idx) const { return idx % n_[0]; }
  std::size_t iy(std::size_t idx) const { return idx / n_[0]; }

  Point point(std::size_t idx) const {
    Point p{box_.lo[0] + (static_cast<double>(ix(idx)) + 0.5) * h_[0], 0.0};
    if (box_.d == 2) p[1] = box_.lo[1] + (static_cast<double>(iy(idx)) + 0.5) * h_[1];
    return p;
  }

  std::vector<Point> points() const {
    std::vector<Point> out(size());
    for (std::size_t k = 0; k < size(); ++k) out[k] = point(k);
    return out;
  }

  /// Index of the lattice point at p, if p is one (up to 1e-9 cells).
  std::optional<std::size_t> find(const Point& p) const {
    std::array<std::size_t, 2> ij{0, 0};
    for (int a = 0; a < box_.d; ++a) {
      const double u = (p[a] - box_.lo[a]) / h_[a] - 0.5;
      const double r = std::round(u);
      if (std::abs(u - r) > 1e-9 || r < 0.0 || r >= static_cast<double>(n_[a])) return std::nullopt;
      ij[a] = static_cast<std::size_t>(r);
    }
    return index(ij[0], ij[1]);
  }

  /// Mask of lattice points inside D_eps.
  std::vector<bool> inside(const ShrunkenDomain& dom) const {
    std::vector<bool> m(size());
    for (std::size_t k = 0; k < size(); ++k) m[k] = dom.contains(point(k));
    return m;
  }

  bool operator==(const Grid& o) const { return box_ == o.box_ && n_ == o.n_; }

 private:
  Box box_ = Box::unit(1);
  std::array<std::size_t, 2> n_{1, 1};
  std::array<double, 2> h_{1.0, 1.0};
};

}  // namespace gmc
