#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "gmc/errors.hpp"
#include "gmc/kernels.hpp"
#include "gmc/sampler.hpp"
#include "gmc/verify.hpp"

using namespace gmc;

namespace {

MomentEstimate estimate(const std::vector<double>& v, double oracle) {
  return make_estimate("t", std::span<const double>(v), {}, oracle);
}

}  // namespace

TEST(Sampler, PartialSumVariances) {
  const auto g = Grid::uniform(1, 64);
  const Lab lab(KernelSpec::reference(1), g, 9, {}, 1);
  const std::size_t R = 10000, mid = 32, far = 32 + 24;  // |x - y| = 0.375 >= 1/e
  struct Row {
    double v2, v5, v8, c59, cfar;
  };
  const auto rows = map_replicas(lab, 5, R, false, [&](FieldSample& s, FieldSample*) {
    return Row{s.y(2)[mid] * s.y(2)[mid], s.y(5)[mid] * s.y(5)[mid], s.y(8)[mid] * s.y(8)[mid],
               s.y(5)[mid] * s.y(9)[mid], s.y(3)[mid] * s.y(3)[far] - s.y(0)[mid] * s.y(0)[far]};
  });
  std::vector<double> v2, v5, v8, c59, cfar;
  for (const auto& r : rows) {
    v2.push_back(r.v2), v5.push_back(r.v5), v8.push_back(r.v8), c59.push_back(r.c59), cfar.push_back(r.cfar);
  }
  EXPECT_TRUE(estimate(v2, 2.0).within()) << estimate(v2, 2.0).z_re;
  EXPECT_TRUE(estimate(v5, 5.0).within()) << estimate(v5, 5.0).z_re;
  EXPECT_TRUE(estimate(v8, 8.0).within()) << estimate(v8, 8.0).z_re;
  EXPECT_TRUE(estimate(c59, 5.0).within()) << estimate(c59, 5.0).z_re;
  EXPECT_TRUE(estimate(cfar, 0.0).within()) << estimate(cfar, 0.0).z_re;
}

TEST(Sampler, IncrementsAreIndependentAcrossLevels) {
  const auto g = Grid::uniform(1, 64);
  const Lab lab(KernelSpec::reference(1), g, 6, {}, 1);
  const auto rows = map_replicas(lab, 9, 10000, false, [&](FieldSample& s, FieldSample*) {
    return s.increments[2][20] * s.increments[4][20];
  });
  EXPECT_TRUE(estimate(rows, 0.0).within());
}

TEST(Sampler, MollifiedVarianceMatchesContinuumKernel) {
  const auto g = Grid::uniform(1, 512);
  const double eps = 1.0 / 16.0;
  const Lab lab(KernelSpec::reference(1), g, required_n_max(eps), {{eps}}, 1);
  const std::size_t i = 256;
  const auto rows = map_replicas(lab, 21, 10000, false, [&](FieldSample& s, FieldSample*) {
    const double v = s.x(eps).at(i);
    return v * v;
  });
  const double oracle =
      k_mollified(KernelSpec::reference(1), MollifierSpec::standard(1), eps, eps, g.point(i), g.point(i), {64});
  const auto e = estimate(rows, oracle);
  EXPECT_TRUE(e.within()) << e.estimate.real() << " vs " << oracle << " z=" << e.z_re;
  EXPECT_NEAR(oracle - std::log(1.0 / eps), 0.0, 1.5);
}

TEST(Sampler, MollifiedCovarianceMatchesContinuumKernel) {
  const auto g = Grid::uniform(1, 512);
  const double e1 = 1.0 / 16.0, e2 = 1.0 / 32.0;
  const Lab lab(KernelSpec::reference(1), g, required_n_max(e2), {{e1}, {e2}}, 1);
  const std::size_t i = 240, j = 262;
  const auto rows = map_replicas(lab, 22, 10000, false, [&](FieldSample& s, FieldSample*) {
    return s.x(e1).at(i) * s.x(e2).at(j);
  });
  const double oracle =
      k_mollified(KernelSpec::reference(1), MollifierSpec::standard(1), e1, e2, g.point(i), g.point(j), {64});
  EXPECT_TRUE(estimate(rows, oracle).within()) << estimate(rows, oracle).z_re;
}

TEST(Sampler, DeterministicAcrossWorkersAndBlocks) {
  const auto g = Grid::uniform(1, 128);
  const Lab one(KernelSpec::reference(1), g, 6, {{0.0625}}, 1);
  const Lab four(KernelSpec::reference(1), g, 6, {{0.0625}}, 4);
  auto take = [](const Lab& lab) {
    return map_replicas(lab, 77, 200, false, [](FieldSample& s, FieldSample*) { return s.x(0.0625).values; });
  };
  const auto a = take(one), b = take(four);
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t r = 0; r < a.size(); ++r)
    for (std::size_t k = 0; k < a[r].size(); ++k)
      if (!std::isnan(a[r][k])) {
        ASSERT_EQ(a[r][k], b[r][k]);
      }
  const auto single = one.sampler().draw(77, 130);
  EXPECT_EQ(single.partial_sums, one.sampler().draw_block(77, 2)[2].partial_sums);
  EXPECT_NE(one.sampler().draw(77, 130, 1).partial_sums, single.partial_sums);
}

TEST(Sampler, FactorKinds) {
  const auto g = Grid::uniform(1, 128);
  const auto s = IncrementSampler::on_grid(KernelSpec::reference(1), g, 6);
  EXPECT_EQ(s.factor_info(0).kind, FactorInfo::Kind::Zero);
  EXPECT_EQ(s.factor_info(1).kind, FactorInfo::Kind::Dense);
  // e^-5 < 1/128: Q_5 and Q_6 only see the diagonal.
  EXPECT_EQ(s.factor_info(5).kind, FactorInfo::Kind::Identity);
  EXPECT_EQ(s.factor_info(6).kind, FactorInfo::Kind::Identity);
}

TEST(Sampler, ConstantQ0IsSharedByAllPoints) {
  const auto g = Grid::uniform(1, 32);
  const auto spec = KernelSpec::reference(1).with_q0(0.5);
  const auto s = IncrementSampler::on_grid(spec, g, 3).draw(1, 0);
  for (std::size_t i = 1; i < g.size(); ++i) EXPECT_EQ(s.y(0)[i], s.y(0)[0]);
  EXPECT_NE(s.y(0)[0], 0.0);
}

TEST(SampleMollified, DomainAndPreconditions) {
  const auto g = Grid::uniform(1, 128);
  const Lab lab(KernelSpec::reference(1), g, 6, {{0.125}}, 1);
  auto s = lab.sampler().draw(3, 0);
  sample_mollified(s, g, lab.kernels());
  EXPECT_THROW(s.x(0.125).at(5), DomainError);
  EXPECT_NO_THROW(s.x(0.125).at(64));
  EXPECT_THROW(s.x(0.0625), ConsistencyError);
  auto shallow = IncrementSampler::on_grid(KernelSpec::reference(1), g, 2).draw(3, 0);
  EXPECT_THROW(sample_mollified(shallow, g, lab.kernels()), ArgumentError);
}

TEST(Tilt, ZeroAlphaLeavesSampleUnchanged) {
  const auto g = Grid::uniform(1, 128);
  const double eps = 0.0625;
  const Lab lab(KernelSpec::reference(1), g, 6, {{eps}}, 1);
  auto s = lab.sampler().draw(4, 0);
  sample_mollified(s, g, lab.kernels());
  const LatticeTiltCovariance cov(lab.covariance(), lab.kernels());
  const Point x = g.point(60), y = g.point(70);
  const auto t = make_tilt(x, y, eps, eps, 0.0, cov, g.points(), s);
  const auto u = apply_tilt(s, t, g.box());
  EXPECT_EQ(u.partial_sums, s.partial_sums);
  EXPECT_EQ(u.increments, s.increments);
  for (std::size_t i = 0; i < g.size(); ++i)
    if (s.mollified[0].defined(i)) {
      EXPECT_EQ(u.mollified[0].values[i], s.mollified[0].values[i]);
    }
}

TEST(Tilt, ShiftsMeanByKernelAndKeepsVariance) {
  const auto g = Grid::uniform(1, 256);
  const double eps = 0.0625, alpha = 1.1;
  const auto spec = KernelSpec::reference(1);
  const Lab lab(spec, g, 6, {{eps}}, 1);
  const LatticeTiltCovariance cov(lab.covariance(), lab.kernels());
  const Point x = g.point(120), y = g.point(136), z = g.point(128);
  const std::size_t zi = 128;
  auto layout = lab.sampler().draw(0, 0);
  sample_mollified(layout, g, lab.kernels());
  const auto t = make_tilt(x, y, eps, eps, alpha, cov, g.points(), layout);
  const int n = 3;
  struct Row {
    double plain, tilted;
  };
  const auto rows = map_replicas(lab, 31, 10000, false, [&](FieldSample& s, FieldSample*) {
    const auto u = apply_tilt(s, t, g.box());
    return Row{s.y(n)[zi], u.y(n)[zi]};
  });
  std::vector<double> m, v0, v1;
  for (const auto& r : rows) m.push_back(r.tilted);
  // Oracle: continuum single convolutions of K_n.
  const auto moll = MollifierSpec::standard(1);
  const double oracle = alpha * (k_partial_mollified(spec, moll, n, eps, z, x) + k_partial_mollified(spec, moll, n, eps, z, y));
  const auto e = estimate(m, oracle);
  EXPECT_TRUE(e.within()) << e.estimate.real() << " vs " << oracle;
  double mt = 0.0, mp = 0.0;
  for (const auto& r : rows) mt += r.tilted, mp += r.plain;
  mt /= rows.size(), mp /= rows.size();
  for (const auto& r : rows) {
    v0.push_back((r.plain - mp) * (r.plain - mp));
    v1.push_back((r.tilted - mt) * (r.tilted - mt));
  }
  const auto ev = estimate(v1, estimate(v0, 0.0).estimate.real());
  EXPECT_NEAR(ev.estimate.real(), estimate(v0, 0.0).estimate.real(), 1e-9);
  EXPECT_TRUE(estimate(v1, double(n)).within());
}

TEST(Tilt, PointsOutsideDomainRejected) {
  const auto g = Grid::uniform(1, 128);
  const double eps = 0.0625;
  const Lab lab(KernelSpec::reference(1), g, 6, {{eps}}, 1);
  auto s = lab.sampler().draw(4, 0);
  sample_mollified(s, g, lab.kernels());
  const LatticeTiltCovariance cov(lab.covariance(), lab.kernels());
  const auto t = make_tilt(g.point(60), g.point(64), eps, eps, 1.0, cov, g.points(), s);
  auto bad = t;
  bad.x = g.point(3);
  EXPECT_THROW(apply_tilt(s, bad, g.box()), DomainError);
}
