#include <gtest/gtest.h>

#include <cmath>
#include <complex>
#include <numbers>
#include <vector>

#include "gmc/chaos.hpp"
#include "gmc/errors.hpp"
#include "gmc/verify.hpp"

using namespace gmc;

namespace {

// A hand-built sample on `grid` with Y_k = k * slope everywhere and one
// mollified level eps holding the constant c on D_eps.
FieldSample synthetic(const Grid& grid, int n_max, double slope, double eps, double c) {
  FieldSample s;
  s.n_max = n_max;
  for (int k = 0; k <= n_max; ++k) {
    s.partial_sums.emplace_back(grid.size(), k * slope);
    s.increments.emplace_back(grid.size(), k ? slope : 0.0);
  }
  MollifiedField m;
  m.eps = eps;
  m.domain = shrink_domain(grid.box(), eps);
  m.values.assign(grid.size(), std::nan(""));
  for (std::size_t i = 0; i < grid.size(); ++i)
    if (m.domain.contains(grid.point(i))) m.values[i] = c;
  s.mollified.push_back(m);
  return s;
}

}  // namespace

TEST(WickExp, PinnedValues) {
  EXPECT_EQ(wick_exp({0.0, 0.0}, 0.0, 0.0).value, cplx(1.0, 0.0));
  EXPECT_NEAR(std::abs(wick_exp({1.0, 0.0}, 1.0, 2.0).value - 1.0), 0.0, 1e-15);
  for (double z : {-2.0, 0.3, 5.0}) {
    const double b = 0.7, v = 1.3;
    const auto w = wick_exp({0.0, b}, z, v).value;
    EXPECT_NEAR(std::abs(w), std::exp(b * b * v / 2.0), 1e-12);
    EXPECT_NEAR(std::abs(w - std::exp(cplx(0.0, b * z) + b * b * v / 2.0)), 0.0, 1e-12);
  }
}

TEST(WickExp, OverflowIsFlagged) {
  const auto w = wick_exp({1.0, 0.0}, 800.0, 0.0);
  EXPECT_TRUE(w.overflow);
  EXPECT_TRUE(std::isfinite(w.value.real()));
  EXPECT_FALSE(wick_exp({1.0, 0.0}, 10.0, 1.0).overflow);
}

TEST(ChaosIntegral, GammaZeroIsIntegralOfF) {
  const auto g = Grid::uniform(1, 128);
  const auto f = bump_function(g, {0.5, 0.0}, 0.2);
  auto s = synthetic(g, 5, 0.3, 0.0625, 1.7);
  ChaosParams p;
  p.f = f;
  const std::vector<double> k(g.size(), 2.0);
  EXPECT_EQ(chaos_integral(s, p, 0.0625, g, k).value, cplx(integrate(f, g), 0.0));
}

TEST(ChaosIntegral, ConstantFieldFactorizes) {
  const auto g = Grid::uniform(1, 128);
  const auto f = bump_function(g, {0.5, 0.0}, 0.2);
  const double c = 0.4, v = 1.1;
  const cplx gamma{0.9, 0.3};
  auto s = synthetic(g, 5, 0.3, 0.0625, c);
  ChaosParams p;
  p.gamma = gamma;
  p.f = f;
  const std::vector<double> k(g.size(), v);
  const auto m = chaos_integral(s, p, 0.0625, g, k).value;
  EXPECT_NEAR(std::abs(m - std::exp(gamma * c - gamma * gamma * v / 2.0) * integrate(f, g)), 0.0, 1e-12);
}

TEST(ChaosIntegral, LinearInF) {
  const auto g = Grid::uniform(1, 128);
  const auto f1 = bump_function(g, {0.45, 0.0}, 0.1), f2 = bump_function(g, {0.55, 0.0}, 0.15);
  std::vector<double> f12(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) f12[i] = f1[i] + f2[i];
  auto s = synthetic(g, 5, 0.3, 0.0625, 0.2);
  for (std::size_t i = 0; i < g.size(); ++i)
    if (s.mollified[0].defined(i)) s.mollified[0].values[i] = std::sin(9.0 * g.point(i)[0]);
  const std::vector<double> k(g.size(), 1.5);
  ChaosParams p;
  p.gamma = {0.8, 0.2};
  p.f = f1;
  const auto a = chaos_integral(s, p, 0.0625, g, k).value;
  p.f = f2;
  const auto b = chaos_integral(s, p, 0.0625, g, k).value;
  p.f = f12;
  EXPECT_NEAR(std::abs(chaos_integral(s, p, 0.0625, g, k).value - (a + b)), 0.0, 1e-13);
}

TEST(ChaosIntegral, SupportMustStayInDomain) {
  const auto g = Grid::uniform(1, 128);
  EXPECT_THROW(check_support(bump_function(g, {0.5, 0.0}, 0.45), g, 0.0625), DomainError);
  auto s = synthetic(g, 5, 0.3, 0.0625, 0.0);
  ChaosParams p;
  p.f = bump_function(g, {0.5, 0.0}, 0.45);
  const std::vector<double> k(g.size(), 1.0);
  EXPECT_THROW(chaos_integral(s, p, 0.0625, g, k), DomainError);
}

TEST(TruncationIndicator, BoundaryInclusive) {
  const auto g = Grid::uniform(1, 64);
  const double lambda = 1.6;
  const auto f = bump_function(g, {0.5, 0.0}, 0.2);
  const auto supp = support_points(f);
  auto s = synthetic(g, 6, lambda, 0.125, 0.0);
  Truncation t{true, 2, lambda, false};
  EXPECT_TRUE(truncation_indicator(s, t, supp).global);
  s.partial_sums[2][supp[3]] = 2.0 * lambda + 1.0;
  const auto ind = truncation_indicator(s, t, supp);
  EXPECT_FALSE(ind.global);
  EXPECT_FALSE(ind.per_point[supp[3]]);
  EXPECT_TRUE(ind.per_point[supp[4]]);
  t.q = 7;
  EXPECT_THROW(truncation_indicator(s, t, supp), ArgumentError);
}

TEST(TruncatedChaos, EqualsUntruncatedOnTheEvent) {
  const auto g = Grid::uniform(1, 128);
  auto s = synthetic(g, 6, 0.5, 0.0625, 0.3);
  ChaosParams p;
  p.gamma = {1.1, 0.25};
  p.f = bump_function(g, {0.5, 0.0}, 0.2);
  p.truncation = {true, 2, 1.5, false};
  const std::vector<double> k(g.size(), 2.0);
  const auto t = truncated_chaos(s, p, 0.0625, g, k);
  EXPECT_TRUE(t.event);
  EXPECT_EQ(t.value, chaos_integral(s, p, 0.0625, g, k).value);
  p.truncation.lambda = 1.0;  // not above sqrt(2d)
  EXPECT_THROW(truncated_chaos(s, p, 0.0625, g, k), ArgumentError);
}

TEST(SobolevDiag, FlatDensityHasOnlyZeroMode) {
  const auto g = Grid::uniform(1, 64);
  std::vector<cplx> ones(g.size(), cplx(1.0, 0.0));
  // |box|^2 * 1^-u * 2 pi / L with L = 1.
  EXPECT_NEAR(sobolev_diag(ones, g, 0.75), 2.0 * std::numbers::pi, 1e-12);
  EXPECT_THROW(sobolev_diag(ones, g, 0.5), ArgumentError);
}

TEST(SobolevDiag, MatchesDirectFourierSum) {
  const auto g = Grid::uniform(1, 32);
  std::vector<cplx> dens(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) dens[i] = {std::cos(6.0 * g.point(i)[0]), 0.3 * g.point(i)[0]};
  const double u = 0.9;
  double direct = 0.0;
  for (int m = -16; m < 16; ++m) {
    const double xi = 2.0 * std::numbers::pi * m;
    cplx c{};
    for (std::size_t i = 0; i < g.size(); ++i) c += dens[i] * std::exp(cplx(0.0, -xi * (double(i) / 32.0))) / 32.0;
    direct += std::norm(c) * std::pow(1.0 + xi * xi, -u);
  }
  direct *= 2.0 * std::numbers::pi;
  EXPECT_NEAR(sobolev_diag(dens, g, u), direct, 1e-10 * direct);
  EXPECT_LT(sobolev_diag(dens, g, 2.0 * u), sobolev_diag(dens, g, u));
}

TEST(ChaosMean, MonteCarloMatchesIntegral) {
  const auto g = Grid::uniform(1, 256);
  const double eps = 1.0 / 32.0;
  const Lab lab(KernelSpec::reference(1), g, required_n_max(eps), {{eps}}, 1);
  const auto f = bump_function(g, {0.5, 0.0}, 0.24);
  for (cplx gamma : {cplx(0.5, 0.0), cplx(0.5, 0.5)}) {
    ChaosParams p;
    p.gamma = gamma;
    p.f = f;
    const auto vals = map_replicas(lab, 11, 4000, false, [&](FieldSample& s, FieldSample*) {
      return chaos_integral(s, p, eps, g, lab.k_eps(eps)).value;
    });
    const auto e = make_estimate("mean", vals, {}, cplx(integrate(f, g), 0.0));
    EXPECT_TRUE(e.within()) << e.z_re << " " << e.z_im;
  }
}

TEST(ChaosMean, TwoFieldMode) {
  const auto g = Grid::uniform(1, 256);
  const double eps = 1.0 / 32.0;
  const Lab lab(KernelSpec::reference(1), g, required_n_max(eps), {{eps}}, 1);
  ChaosParams p;
  p.mode = ChaosMode::TwoField;
  p.gamma = {0.6, 0.4};
  p.f = bump_function(g, {0.5, 0.0}, 0.24);
  const auto vals = map_replicas(lab, 12, 4000, true, [&](FieldSample& s, FieldSample* s2) {
    return chaos_integral(s, p, eps, g, lab.k_eps(eps), s2).value;
  });
  const auto e = make_estimate("mean", vals, {}, cplx(integrate(p.f, g), 0.0));
  EXPECT_TRUE(e.within()) << e.z_re << " " << e.z_im;
}

TEST(SobolevDiag, ConcurrentCallsAgreeWithSerial) {
  const auto g = Grid::uniform(1, 256);
  std::vector<cplx> dens(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) dens[i] = {std::sin(5.0 * g.point(i)[0]), 0.1};
  const double want = sobolev_diag(dens, g, 0.75);
  std::vector<double> got(400);
  parallel_for(got.size(), 8, [&](std::size_t k) { got[k] = sobolev_diag(dens, g, 0.75); });
  for (double v : got) EXPECT_EQ(v, want);
}
