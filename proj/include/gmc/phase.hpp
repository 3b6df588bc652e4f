#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>

#include "gmc/errors.hpp"
#include "gmc/geometry.hpp"

namespace gmc {

enum class PhaseLabel { L2Subcritical, SubcriticalNonL2, Boundary, PhaseIIGlassy, PhaseIII };

inline std::string to_string(PhaseLabel p) {
  switch (p) {
    case PhaseLabel::L2Subcritical: return "L2_subcritical";
    case PhaseLabel::SubcriticalNonL2: return "subcritical_non_L2";
    case PhaseLabel::Boundary: return "boundary";
    case PhaseLabel::PhaseIIGlassy: return "phase_II_glassy";
    case PhaseLabel::PhaseIII: return "phase_III";
  }
  return "unknown";
}

inline constexpr double kPhaseTolerance = 1e-12;

/// Phase of gamma = alpha + i beta. Points within 1e-12 of a seam are
/// labelled boundary.
inline PhaseLabel classify(int d, double alpha, double beta) {
  check_dimension(d);
  const double a = std::abs(alpha), b = std::abs(beta), tol = kPhaseTolerance;
  const double r2 = a * a + b * b;
  const double half = std::sqrt(d / 2.0), full = std::sqrt(2.0 * d);
  if (r2 < d - tol) return PhaseLabel::L2Subcritical;
  if (r2 > d + tol && a > half + tol && a < full - tol && b < full - a - tol) return PhaseLabel::SubcriticalNonL2;
  if (a < half - tol && r2 > d + tol) return PhaseLabel::PhaseIII;
  if (a + b > full + tol && a > half + tol) return PhaseLabel::PhaseIIGlassy;
  return PhaseLabel::Boundary;
}

inline bool is_subcritical(PhaseLabel p) { return p == PhaseLabel::L2Subcritical || p == PhaseLabel::SubcriticalNonL2; }

/// Open interval of admissible barrier slopes:
/// sqrt(2d) < lambda < 2|alpha| and d + (2|alpha| - lambda)^2 / 2 > alpha^2 + beta^2.
inline std::pair<double, double> lambda_interval(int d, double alpha, double beta) {
  const double a = std::abs(alpha);
  const double excess = std::max(0.0, alpha * alpha + beta * beta - d);
  return {std::sqrt(2.0 * d), std::min(2.0 * a, 2.0 * a - std::sqrt(2.0 * excess))};
}

/// Midpoint of lambda_interval; only defined outside the L2 region.
inline double pick_lambda(int d, double alpha, double beta) {
  const auto label = classify(d, alpha, beta);
  if (label != PhaseLabel::SubcriticalNonL2)
    throw PhaseError("pick_lambda: (alpha, beta) is " + to_string(label) + ", need subcritical_non_L2");
  const auto [lo, hi] = lambda_interval(d, alpha, beta);
  if (!(lo < hi)) throw PhaseError("pick_lambda: empty admissible interval");
  return 0.5 * (lo + hi);
}

/// Direct substitution of both admissibility constraints.
inline bool lambda_admissible(int d, double alpha, double beta, double lambda) {
  const double a = std::abs(alpha);
  return lambda > std::sqrt(2.0 * d) && lambda < 2.0 * a &&
         d + (2.0 * a - lambda) * (2.0 * a - lambda) / 2.0 > alpha * alpha + beta * beta;
}

}  // namespace gmc
