#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "gmc/errors.hpp"
#include "gmc/kernels.hpp"
#include "gmc/mollifier.hpp"

using namespace gmc;

namespace {

// Overlap of [-1, 1] and [2r - 1, 2r + 1] by brute-force midpoint sums of
// the indicator product, normalized by the length 2.
double kappa1_bruteforce(double r) {
  const int n = 400000;
  const double a = -1.0, b = 3.0, h = (b - a) / n;
  double s = 0.0;
  for (int i = 0; i < n; ++i) {
    const double x = a + (i + 0.5) * h;
    s += (std::abs(x) <= 1.0 && std::abs(x - 2.0 * r) <= 1.0) ? h : 0.0;
  }
  return s / 2.0;
}

// Disc intersection fraction on a fine lattice (> 1e6 points).
double kappa2_bruteforce(double r) {
  const int n = 1600;
  const double h = 2.0 / n;
  long in = 0, both = 0;
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) {
      const double x = -1.0 + (i + 0.5) * h, y = -1.0 + (j + 0.5) * h;
      if (x * x + y * y > 1.0) continue;
      ++in;
      if ((x - 2.0 * r) * (x - 2.0 * r) + y * y <= 1.0) ++both;
    }
  return double(both) / double(in);
}

// ∫_{n}^{n+1} kappa(e^t r) dt by a fine composite midpoint rule.
double q_n_bruteforce(int n, double r, int d) {
  const int m = 200000;
  double s = 0.0;
  for (int i = 0; i < m; ++i) s += kappa(std::exp(n + (i + 0.5) / m) * r, d);
  return s / m;
}

}  // namespace

TEST(Kappa, PinnedValues) {
  EXPECT_DOUBLE_EQ(kappa(0.0, 1), 1.0);
  EXPECT_DOUBLE_EQ(kappa(0.0, 2), 1.0);
  EXPECT_EQ(kappa(1.5, 2), 0.0);
  EXPECT_EQ(kappa(1.0, 1), 0.0);
}

TEST(Kappa, OverlapOracles) {
  EXPECT_NEAR(kappa(0.5, 1), 0.5, 1e-12);
  EXPECT_NEAR(kappa(0.5, 1), kappa1_bruteforce(0.5), 1e-4);
  EXPECT_NEAR(kappa(0.5, 2), kappa2_bruteforce(0.5), 2e-3);
  EXPECT_NEAR(kappa(0.5, 2), 0.39100, 1e-5);
}

TEST(Qn, DiagonalIsOneAndSupportCutoff) {
  const auto spec = KernelSpec::reference(1);
  EXPECT_DOUBLE_EQ(q_n(spec, 3, 0.0), 1.0);
  EXPECT_EQ(q_n(spec, 3, 0.1), 0.0);
  EXPECT_EQ(q_n(spec, 3, std::exp(-3.0)), 0.0);
}

TEST(Qn, ClosedFormAndQuadrature) {
  const auto spec = KernelSpec::reference(1);
  const double r = std::exp(-2.0);
  EXPECT_NEAR(q_n(spec, 1, r), std::exp(-1.0), 1e-14);
  EXPECT_NEAR(q_n(spec, 1, r), q_n_bruteforce(1, r, 1), 1e-8);
  const auto spec2 = KernelSpec::reference(2);
  for (double rr : {0.01, 0.05, 0.2})
    for (int n : {1, 2})
      EXPECT_NEAR(q_n(spec2, n, rr), q_n_bruteforce(n, rr, 2), 1e-7) << rr << " " << n;
}

TEST(Qn, BoundsAndLipschitz) {
  const auto spec = KernelSpec::reference(1);
  std::mt19937_64 gen(3);
  std::uniform_real_distribution<double> u(0.0, 0.5);
  for (int i = 0; i < 2000; ++i) {
    const double r = u(gen), r2 = r + 1e-4 * u(gen);
    for (int n = 1; n <= 6; ++n) {
      const double a = q_n(spec, n, r), b = q_n(spec, n, r2);
      EXPECT_GE(a, 0.0);
      EXPECT_LE(a, 1.0);
      if (r >= std::exp(-double(n))) {
        EXPECT_EQ(a, 0.0);
      }
      EXPECT_LE(std::abs(a - b), std::exp(n + 1.0) * std::abs(r - r2) + 1e-15);
    }
  }
}

TEST(KPartial, SumsAndEmptySum) {
  const auto spec = KernelSpec::reference(1);
  EXPECT_DOUBLE_EQ(k_partial(spec, 5, 0.0), 5.0);
  EXPECT_EQ(k_partial(spec, 0, 0.3), 0.0);
  const double r = std::exp(-3.0);
  double s = 0.0;
  for (int n = 1; n <= 10; ++n) s += q_n_bruteforce(n, r, 1);
  EXPECT_NEAR(k_partial(spec, 10, r), 1.0 + std::exp(-2.0), 1e-12);
  EXPECT_NEAR(k_partial(spec, 10, r), s, 1e-7);
}

TEST(KPartial, MonotoneInN) {
  const auto spec = KernelSpec::reference(2);
  for (double r : {0.0, 0.003, 0.1})
    for (int n = 0; n < 8; ++n) EXPECT_LE(k_partial(spec, n, r), k_partial(spec, n + 1, r) + 1e-15);
}

TEST(KExact, ClosedFormD1) {
  const auto spec = KernelSpec::reference(1);
  for (int i = 0; i < 50; ++i) {
    const double r = std::exp(-1.0 - 12.0 * i / 49.0);
    EXPECT_NEAR(k_exact(spec, r), std::log(1.0 / r) - 2.0 + std::numbers::e * r, 1e-9) << r;
  }
  EXPECT_NEAR(k_exact(spec, std::exp(-3.0)), 1.0 + std::exp(-2.0), 1e-12);
  EXPECT_EQ(k_exact(spec, 1.0), 0.0);
}

TEST(KExact, DiagonalIsAnError) { EXPECT_THROW(k_exact(KernelSpec::reference(1), 0.0), DomainError); }

TEST(KExact, D2LogOffsetConverges) {
  // K(r) - log 1/r tends to a constant as r -> 0.
  const auto spec = KernelSpec::reference(2);
  const double c8 = k_exact(spec, std::exp(-8.0)) - 8.0;
  const double c4 = k_exact(spec, std::exp(-4.0)) - 4.0;
  const double c12 = k_exact(spec, std::exp(-12.0)) - 12.0;
  EXPECT_NEAR(c8, c12, 2e-3);
  // Recorded as unattainable at the stated 0.01: the O(r) remainder in d = 2
  // is still about 0.06 at r = e^-4.
  EXPECT_NEAR(c4, c8, 0.1);
}

TEST(KMollified, ConstantKernel) {
  const auto spec = KernelSpec::constant(1, 0.7);
  const auto moll = MollifierSpec::standard(1);
  EXPECT_DOUBLE_EQ(k_mollified(spec, moll, 0.1, 0.05, {0.4, 0.0}, {0.55, 0.0}), 0.7);
}

TEST(KMollified, DiagonalMatchesDifferenceDensityOracle) {
  // K_eps,eps(x, x) = E[K_n(|S|)] with S the difference of two independent
  // theta_eps draws and n = ceil(log 1/eps) + 2. Oracle: tabulate the
  // density of S by Simpson convolution and sum the level profile
  // F(s) = U - s (e^U - 1), U = min(1, -log s), written out here directly.
  const auto spec = KernelSpec::reference(1);
  const auto moll = MollifierSpec::standard(1);
  const double eps = 1.0 / 32.0;
  const int levels = 6;
  auto level = [](double s) {
    if (s <= 0.0) return 1.0;
    if (s >= 1.0) return 0.0;
    const double u = std::min(1.0, -std::log(s));
    return u - s * (std::exp(u) - 1.0);
  };
  auto theta = [&](double u) { return theta_eps(moll, eps, {u, 0.0}); };
  auto density = [&](double s) {
    const int n = 2000;
    const double a = -eps, b = eps - s, h = (b - a) / n;
    if (b <= a) return 0.0;
    double acc = theta(a) * theta(a + s) + theta(b) * theta(b + s);
    for (int i = 1; i < n; ++i) acc += (i % 2 ? 4.0 : 2.0) * theta(a + i * h) * theta(a + i * h + s);
    return acc * h / 3.0;
  };
  const int m = 8000;
  const double hs = 2.0 * eps / m;
  double oracle = 0.0;
  for (int i = 0; i < m; ++i) {
    const double s = (i + 0.5) * hs;
    double k = 0.0;
    for (int n = 1; n <= levels; ++n) k += level(std::exp(double(n)) * s);
    oracle += 2.0 * density(s) * k * hs;
  }
  const Point x{0.5, 0.0};
  EXPECT_NEAR(k_mollified(spec, moll, eps, eps, x, x, {128}), oracle, 5e-3);
  EXPECT_NEAR(k_mollified(spec, moll, eps, eps, x, x), oracle, 2e-2);
  EXPECT_NEAR(oracle - std::log(1.0 / eps), 0.0, 1.5);
}

TEST(KMollified, OffsetFromLogStableAcrossLadder) {
  const auto spec = KernelSpec::reference(1);
  const auto moll = MollifierSpec::standard(1);
  std::vector<double> sup;
  for (double eps : {0.125, 0.0625, 0.03125, 0.015625, 0.0078125}) {
    const Point x{0.4, 0.0};
    double s = 0.0;
    for (double sep : {0.0, 0.5 * eps, eps, 2.0 * eps, 3.0 * eps}) {
      const Point y{0.4 + sep, 0.0};
      if (!shrink_domain(Box::unit(1), eps).contains(y)) continue;
      s = std::max(s, std::abs(k_mollified(spec, moll, eps, eps, x, y) - std::log(1.0 / std::max(sep, eps))));
    }
    sup.push_back(s);
  }
  for (std::size_t i = 1; i < sup.size(); ++i) EXPECT_LE(sup[i] / sup[i - 1], 1.5) << i;
}

TEST(KMollified, Preconditions) {
  const auto spec = KernelSpec::reference(1);
  const auto moll = MollifierSpec::standard(1);
  EXPECT_THROW(k_mollified(spec, moll, 0.05, 0.1, {0.5, 0}, {0.5, 0}), ArgumentError);
  EXPECT_THROW(k_mollified(spec, moll, 0.1, 0.1, {0.15, 0}, {0.5, 0}), DomainError);
}

TEST(LatticeCovariance, TableAgreesWithContinuumAwayFromDiagonal) {
  const auto grid = Grid::uniform(1, 256);
  const auto spec = KernelSpec::reference(1);
  const auto moll = MollifierSpec::standard(1);
  const LatticeCovariance cov(spec, grid, 8);
  const double eps = 0.0625;
  const auto t = cov.table(discrete_kernel(moll, eps, grid), discrete_kernel(moll, eps, grid));
  const auto i = grid.index(128), j = grid.index(160);
  const double cont = k_mollified(spec, moll, eps, eps, grid.point(i), grid.point(j));
  EXPECT_NEAR(t(i, j), cont, 0.02);
  EXPECT_TRUE(t.in_a(i));
  EXPECT_THROW(t(grid.index(2), j), DomainError);
}

TEST(PositiveDefinite, KappaSpectrum) {
  EXPECT_GE(kappa_spectrum_min(1, 256).first, -1e-8);
  EXPECT_GE(kappa_spectrum_min(1, 1024).first, -1e-8);
  EXPECT_GE(kappa_spectrum_min(2, 64).first, -1e-8);
}

TEST(PositiveDefinite, ConstantKernelRankOne) {
  const auto rep = pd_check(KernelSpec::constant(1, 2.0), Grid::uniform(1, 32));
  EXPECT_GE(rep.min_eigenvalue, -1e-10 * rep.trace);
}

TEST(PositiveDefinite, IncrementGramMatricesAgainstEigenOracle) {
  const auto spec = KernelSpec::reference(1);
  const auto grid = Grid::uniform(1, 64);
  for (int n = 1; n <= 8; ++n) {
    // Independent assembly from the closed-form profile.
    Eigen::MatrixXd m(64, 64);
    for (int a = 0; a < 64; ++a)
      for (int b = 0; b < 64; ++b) m(a, b) = q_n(spec, n, std::abs(a - b) / 64.0);
    const double oracle = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(m).eigenvalues().minCoeff();
    const auto rep = pd_check(spec, grid, {GramSpec::Kind::Increment, n});
    EXPECT_NEAR(rep.min_eigenvalue, oracle, 1e-10);
    EXPECT_GE(rep.min_eigenvalue, -1e-8 * rep.trace);
  }
}

TEST(TableExport, CsvAndSidecar) {
  const auto grid = Grid::uniform(1, 64);
  const auto spec = KernelSpec::reference(1);
  const auto t = mollified_table_midpoint(spec, MollifierSpec::standard(1), grid, 0.125, 0.125, {8});
  const auto csv = t.to_csv().str();
  EXPECT_EQ(csv.rfind("x_index,y_index,value\r\n", 0), 0u);
  const auto side = table_sidecar(spec, t);
  EXPECT_NE(side.find("\"eps\":0.125"), std::string::npos);
  EXPECT_NE(side.find("tensor_midpoint"), std::string::npos);
}
