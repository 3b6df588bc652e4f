#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/special_functions/legendre.hpp>

namespace gmc::quad {

/// Gauss–Legendre nodes/weights on [-1, 1].
struct GaussLegendre {
  std::vector<double> nodes;
  std::vector<double> weights;

  explicit GaussLegendre(unsigned order) {
    // Boost returns the nonnegative zeros only; mirror them.
    const auto zeros = boost::math::legendre_p_zeros<double>(static_cast<int>(order));
    for (double z : zeros) {
      const double dp = boost::math::legendre_p_prime<double>(static_cast<int>(order), z);
      const double w = 2.0 / ((1.0 - z * z) * dp * dp);
      if (z == 0.0) {
        nodes.push_back(0.0);
        weights.push_back(w);
      } else {
        nodes.push_back(z);
        weights.push_back(w);
        nodes.push_back(-z);
        weights.push_back(w);
      }
    }
  }

  template <class F>
  double integrate(F&& f, double a, double b) const {
    const double mid = 0.5 * (a + b), half = 0.5 * (b - a);
    double s = 0.0;
    for (std::size_t i = 0; i < nodes.size(); ++i) s += weights[i] * f(mid + half * nodes[i]);
    return s * half;
  }
};

inline const GaussLegendre& gauss_legendre_64() {
  static const GaussLegendre rule(64);
  return rule;
}

/// Adaptive Gauss–Kronrod integration of a smooth integrand.
template <class F>
double adaptive(F&& f, double a, double b, double tol = 1e-13) {
  return boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, a, b, 15, tol);
}

}  // namespace gmc::quad
