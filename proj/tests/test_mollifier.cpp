#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "gmc/errors.hpp"
#include "gmc/io.hpp"
#include "gmc/mollifier.hpp"

using namespace gmc;

namespace {

// Composite Simpson on [-1, 1] of exp(-1/(1-x^2)), a different rule from
// the library's adaptive Gauss–Kronrod.
double bump_mass_simpson() {
  const int n = 200000;
  const double h = 2.0 / n;
  auto g = [](double x) { return std::abs(x) < 1.0 ? std::exp(-1.0 / (1.0 - x * x)) : 0.0; };
  double s = g(-1.0) + g(1.0);
  for (int i = 1; i < n; ++i) s += (i % 2 ? 4.0 : 2.0) * g(-1.0 + i * h);
  return s * h / 3.0;
}

}  // namespace

TEST(Theta, NormalizationConstant) {
  const double mass = bump_mass_simpson();
  EXPECT_NEAR(mass, 0.443994, 1e-6);
  EXPECT_NEAR(MollifierSpec::standard(1).normalization(), 1.0 / mass, 1e-9);
  EXPECT_NEAR(MollifierSpec::standard(1).normalization(), 2.25228, 1e-5);
}

TEST(Theta, OutsideSupport) {
  const auto m = MollifierSpec::standard(1);
  EXPECT_EQ(theta_eps(m, 0.1, {0.12, 0.0}), 0.0);
  EXPECT_EQ(theta_eps(MollifierSpec::standard(2), 0.1, {0.1, 0.07}), 0.0);
}

TEST(Theta, QuadraticProfileIntegratesToOne) {
  // ∫_{-1}^{1} (1 - x^2)^2 dx = 16/15.
  EXPECT_NEAR(MollifierSpec::quadratic(1).normalization(), 15.0 / 16.0, 1e-12);
  // 2 pi ∫_0^1 r (1 - r^2)^2 dr = pi / 3.
  EXPECT_NEAR(MollifierSpec::quadratic(2).normalization(), 3.0 / std::numbers::pi, 1e-12);
}

TEST(Theta, TableValidation) {
  EXPECT_THROW(MollifierSpec::from_table(1, {1.0}), ArgumentError);
  EXPECT_THROW(MollifierSpec::from_table(1, {1.0, 0.5}), ArgumentError);
  EXPECT_THROW(MollifierSpec::from_table(1, {1.0, -0.5, 0.0}), ArgumentError);
  // Triangle g(r) = 1 - r has mass 1.
  EXPECT_NEAR(MollifierSpec::from_table(1, {1.0, 0.5, 0.0}).normalization(), 1.0, 1e-12);
}

TEST(DiscreteKernel, WeightsSumToOne) {
  const auto g = Grid::uniform(1, 256);
  const auto k = discrete_kernel(MollifierSpec::standard(1), 0.25, g);
  double s = 0.0;
  for (double w : k.weights) {
    EXPECT_GE(w, 0.0);
    s += w;
  }
  EXPECT_NEAR(s, 1.0, 1e-12);
  // Raw midpoint sum of theta_eps approximates 1 as well.
  double raw = 0.0;
  for (const auto& o : k.offsets) raw += theta_eps(MollifierSpec::standard(1), 0.25, {o[0] * g.spacing(0), 0.0});
  EXPECT_NEAR(raw * g.spacing(0), 1.0, 1e-6);
}

TEST(DiscreteKernel, UnderResolvedIsRejected) {
  EXPECT_THROW(discrete_kernel(MollifierSpec::standard(1), 0.01, Grid::uniform(1, 128)), ResolutionError);
  EXPECT_NO_THROW(discrete_kernel(MollifierSpec::standard(1), 1.0 / 32.0, Grid::uniform(1, 128)));
}

TEST(Convolve, ConstantField) {
  const auto g = Grid::uniform(2, 64);
  std::vector<double> f(g.size(), 3.25);
  const auto out = convolve_grid(f, MollifierSpec::standard(2), 0.125, g);
  std::size_t defined = 0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (!out.defined(i)) continue;
    ++defined;
    EXPECT_NEAR(out.values[i], 3.25, 1e-13);
  }
  EXPECT_GT(defined, 0u);
}

TEST(Convolve, LinearFieldPreserved) {
  const auto g = Grid::uniform(1, 512);
  std::vector<double> f(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) f[i] = g.point(i)[0];
  const auto out = convolve_grid(f, MollifierSpec::standard(1), 0.0625, g);
  for (std::size_t i = 0; i < g.size(); ++i)
    if (out.defined(i)) {
      EXPECT_NEAR(out.values[i], g.point(i)[0], 1e-10);
    }
}

TEST(Convolve, SmoothFieldMatchesDenseQuadrature) {
  const auto g = Grid::uniform(1, 1024);
  const double eps = 0.0625;
  std::vector<double> f(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) f[i] = std::sin(2.0 * std::numbers::pi * g.point(i)[0]);
  const auto out = convolve_grid(f, MollifierSpec::standard(1), eps, g);
  // Oracle: the symmetric bump multiplies sin(2 pi x) by its Fourier
  // coefficient at 2 pi, computed by a 4x finer midpoint rule.
  const auto m = MollifierSpec::standard(1);
  const int n = 4 * 2 * 64;
  double c = 0.0;
  for (int k = 0; k < n; ++k) {
    const double t = -eps + (k + 0.5) * 2.0 * eps / n;
    c += theta_eps(m, eps, {t, 0.0}) * std::cos(2.0 * std::numbers::pi * t) * 2.0 * eps / n;
  }
  double worst = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i)
    if (out.defined(i)) worst = std::max(worst, std::abs(out.values[i] - c * f[i]));
  EXPECT_LT(worst, 1e-6);
}

TEST(Convolve, OutsideDomainIsAnError) {
  const auto g = Grid::uniform(1, 128);
  std::vector<double> f(g.size(), 1.0);
  const auto out = convolve_grid(f, MollifierSpec::standard(1), 0.125, g);
  EXPECT_FALSE(out.defined(0));
  EXPECT_THROW(out.at(0), DomainError);
  EXPECT_NO_THROW(out.at(64));
}

TEST(ProfileCsv, OffsetWeightRows) {
  const auto g = Grid::uniform(1, 64);
  const auto k = discrete_kernel(MollifierSpec::standard(1), 0.125, g);
  const auto csv = io::profile_csv(k, g);
  EXPECT_EQ(csv.data_rows(), k.weights.size());
  EXPECT_EQ(csv.str().rfind("offset,weight\r\n", 0), 0u);
}
