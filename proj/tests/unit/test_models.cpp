#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "qmcvi/error.hpp"
#include "qmcvi/models.hpp"
#include "test_support.hpp"

using namespace qmcvi;
using namespace qmcvi::models;
using qmcvi::testing::fd_gradient;
using qmcvi::testing::relative_error;

namespace {

const double kLog2Pi = std::log(2.0 * std::numbers::pi);

double normal_logpdf(double x, double mean, double sd) {
  const double r = (x - mean) / sd;
  return -0.5 * r * r - std::log(sd) - 0.5 * kLog2Pi;
}

double lognormal_logpdf(double x, double mu, double sigma) { return normal_logpdf(std::log(x), mu, sigma) - std::log(x); }

// Straight transcription of the HLR generative process.
double hlr_oracle(const HierarchicalLinearRegression& m, std::span<const double> z) {
  const std::size_t k = m.covariates(), groups = m.groups();
  const double sb = z[k], eps = z[k + 1];
  double lp = lognormal_logpdf(sb, 0.0, 0.5) + lognormal_logpdf(eps, 0.0, 0.5);
  for (std::size_t j = 0; j < k; ++j) lp += normal_logpdf(z[j], 0.0, 10.0);
  for (std::size_t i = 0; i < groups; ++i) {
    const double* b = z.data() + k + 2 + i * k;
    double mean = 0.0;
    for (std::size_t j = 0; j < k; ++j) {
      lp += normal_logpdf(b[j], z[j], sb);
      mean += m.x()[i * k + j] * b[j];
    }
    lp += normal_logpdf(m.y()[i], mean, eps);
  }
  return lp;
}

double poisson_oracle(const MultilevelPoisson& m, std::span<const double> z) {
  const std::size_t ne = m.ethnicities(), np = m.precincts();
  double lp = normal_logpdf(z[0], 0.0, 10.0) + normal_logpdf(z[1], 0.0, 10.0) + normal_logpdf(z[2], 0.0, 10.0);
  const double sa = std::exp(0.5 * z[1]), sb = std::exp(0.5 * z[2]);
  for (std::size_t e = 0; e < ne; ++e) lp += normal_logpdf(z[3 + e], 0.0, sa);
  for (std::size_t p = 0; p < np; ++p) lp += normal_logpdf(z[3 + ne + p], 0.0, sb);
  for (std::size_t e = 0; e < ne; ++e) {
    for (std::size_t p = 0; p < np; ++p) {
      const double y = static_cast<double>(m.counts()[e * np + p]);
      const double eta = z[0] + z[3 + e] + z[3 + ne + p] + std::log(m.exposures()[e * np + p]);
      lp += y * eta - std::exp(eta) - std::lgamma(y + 1.0);
    }
  }
  return lp;
}

void expect_gradient_matches_fd(const Model& m, std::uint64_t seed) {
  const auto z = m.random_support_point(seed);
  ASSERT_FALSE(m.log_joint(z).support_violation);
  const auto fd = fd_gradient([&](std::span<const double> zz) { return m.log_joint(zz).value; }, z);
  const auto g = m.grad_z(z);
  EXPECT_LT(relative_error(fd, g), 1e-6) << m.name() << " seed " << seed;
  std::vector<double> g2(z.size());
  EXPECT_EQ(m.value_and_grad(z, g2).value, m.log_joint(z).value);
  EXPECT_EQ(g, g2);
}

}  // namespace

TEST(Models, LatentDimensions) {
  EXPECT_EQ(hierarchical_lr(100, 10, 1)->latent_dim(), 1012u);
  EXPECT_EQ(toy_gaussian(4)->latent_dim(), 4u);
  EXPECT_EQ(multilevel_poisson(4, 30, 1)->latent_dim(), 37u);
  EXPECT_EQ(hierarchical_lr(100, 10, 1)->variational_family().param_dim(), 2024u);
}

TEST(ToyGaussian, ValuesAndGradient) {
  const ToyGaussian m(2);
  EXPECT_NEAR(m.log_joint(std::vector<double>{0.0, 0.0}).value, -kLog2Pi, 1e-15);
  EXPECT_EQ(m.grad_z(std::vector<double>{1.0, -1.0}), (std::vector<double>{-1.0, 1.0}));
  EXPECT_THROW(ToyGaussian(0), Error);
}

TEST(ToyGaussian, OptimalityGap) {
  const ToyGaussian m(2);
  const auto fam = m.variational_family();
  EXPECT_NEAR(*m.optimality_gap(fam, families::VarParams(fam, {0.1, 0.1, 0.0, 0.0})), 0.01, 1e-15);
  EXPECT_EQ(*m.optimality_gap(fam, families::VarParams::uniform(fam, 0.0, 0.0)), 0.0);
  // KL of N(0, s^2) from N(0,1) is (s^2 - 1 - log s^2) / 2
  const double rho = 0.3;
  EXPECT_NEAR(*m.optimality_gap(fam, families::VarParams(fam, {0, 0, rho, rho})),
              std::exp(2 * rho) - 1 - 2 * rho, 1e-14);
  EXPECT_FALSE(hierarchical_lr(2, 2, 1)->optimality_gap(fam, families::VarParams::uniform(fam, 0, 0)).has_value());
}

TEST(MultilevelPoisson, SingleCellByHand) {
  const MultilevelPoisson m(1, 1, {100.0}, {3});
  const std::vector<double> z{-1.0, 0.0, 0.0, 0.2, -0.1};
  const double eta = -1.0 + 0.2 - 0.1 + std::log(100.0);
  double expect = 3.0 * (-0.5 * std::log(2 * std::numbers::pi * 100.0));
  expect += -0.5 * 0.04 - 0.5 * kLog2Pi;
  expect += -0.5 * 0.01 - 0.5 * kLog2Pi;
  expect += -1.0 / 200.0;
  expect += 3.0 * eta - std::exp(eta) - std::log(6.0);
  EXPECT_NEAR(m.log_joint(z).value, expect, 1e-11);
}

TEST(MultilevelPoisson, MatchesOracle) {
  const auto sim = MultilevelPoisson::simulate(4, 30, 12);
  for (std::uint64_t s = 0; s < 5; ++s) {
    const auto z = sim.random_support_point(s);
    EXPECT_NEAR(sim.log_joint(z).value, poisson_oracle(sim, z), 1e-9 * std::abs(poisson_oracle(sim, z)));
  }
}

TEST(MultilevelPoisson, Validation) {
  EXPECT_THROW(MultilevelPoisson(1, 2, {1.0}, {1, 1}), Error);
  EXPECT_THROW(MultilevelPoisson(1, 1, {-1.0}, {1}), Error);
  EXPECT_THROW(MultilevelPoisson(1, 1, {1.0}, {-1}), Error);
}

TEST(HierarchicalLinearRegression, OneGroupPullTerm) {
  // d/db log p = x (y - x b) / eps^2 - (b - mu) / sb^2 for a single group and covariate.
  const HierarchicalLinearRegression m(1, 1, {2.0}, {1.5});
  const double mu = 0.3, sb = 0.8, eps = 0.5, b = 0.4;
  const auto g = m.grad_z(std::vector<double>{mu, sb, eps, b});
  EXPECT_NEAR(g[3], 2.0 * (1.5 - 2.0 * b) / (eps * eps) - (b - mu) / (sb * sb), 1e-12);
  EXPECT_NEAR(g[0], (b - mu) / (sb * sb) - mu / 100.0, 1e-12);
}

TEST(HierarchicalLinearRegression, MatchesOracle) {
  const auto sim = HierarchicalLinearRegression::simulate(10, 3, 5);
  for (std::uint64_t s = 0; s < 5; ++s) {
    const auto z = sim.random_support_point(s);
    const double o = hlr_oracle(sim, z);
    EXPECT_NEAR(sim.log_joint(z).value, o, 1e-10 * std::max(1.0, std::abs(o)));
  }
}

TEST(HierarchicalLinearRegression, SupportViolation) {
  const auto sim = HierarchicalLinearRegression::simulate(2, 2, 5);
  auto z = sim.random_support_point(1);
  z[2] = 0.0;
  const auto lp = sim.log_joint(z);
  EXPECT_TRUE(lp.support_violation);
  EXPECT_EQ(lp.value, -INFINITY);
  z[2] = 1.0;
  z[3] = -0.5;
  EXPECT_TRUE(sim.log_joint(z).support_violation);
}

TEST(Models, GradientsMatchFiniteDifferences) {
  for (std::uint64_t s = 0; s < 10; ++s) {
    expect_gradient_matches_fd(ToyGaussian(5), s);
    expect_gradient_matches_fd(HierarchicalLinearRegression::simulate(10, 3, 2), s);
    expect_gradient_matches_fd(MultilevelPoisson::simulate(4, 30, 2), s);
  }
}

TEST(Models, SimulationIsReproducible) {
  const auto a = HierarchicalLinearRegression::simulate(20, 4, 77);
  const auto b = HierarchicalLinearRegression::simulate(20, 4, 77);
  const auto c = HierarchicalLinearRegression::simulate(20, 4, 78);
  EXPECT_TRUE(std::equal(a.y().begin(), a.y().end(), b.y().begin()));
  EXPECT_FALSE(std::equal(a.y().begin(), a.y().end(), c.y().begin()));
  const auto p = MultilevelPoisson::simulate(4, 30, 3);
  const auto q = MultilevelPoisson::simulate(4, 30, 3);
  EXPECT_TRUE(std::equal(p.counts().begin(), p.counts().end(), q.counts().begin()));
  for (double n : p.exposures()) {
    EXPECT_GE(n, 100.0);
    EXPECT_LE(n, 10000.0);
  }
}

TEST(Models, FamiliesMirrorPriors) {
  const auto hlr = hierarchical_lr(3, 2, 1)->variational_family();
  ASSERT_EQ(hlr.latent_dim(), 10u);
  EXPECT_EQ(hlr.coordinate(1).kind, families::BlockKind::diag_gaussian);
  EXPECT_EQ(hlr.coordinate(2).kind, families::BlockKind::diag_lognormal);
  EXPECT_EQ(hlr.coordinate(3).kind, families::BlockKind::diag_lognormal);
  EXPECT_EQ(hlr.coordinate(4).kind, families::BlockKind::diag_gaussian);
  const auto pois = multilevel_poisson(2, 3, 1)->variational_family();
  for (std::size_t j = 0; j < pois.latent_dim(); ++j) EXPECT_EQ(pois.coordinate(j).kind, families::BlockKind::diag_gaussian);
}
