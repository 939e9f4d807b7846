// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <boost/math/quadrature/exp_sinh.hpp>

#include <cmath>
#include <limits>

#include "spvr/link_model.hpp"

using namespace spvr;

namespace {

// E[log2(1 + snr X)] for X ~ Exp(1), by numerical integration.
double exp_gain_capacity(double snr) {
  boost::math::quadrature::exp_sinh<double> integrator;
  return integrator.integrate([&](double x) { return std::log2(1.0 + snr * x) * std::exp(-x); });
}

RadioModel single_link(double snr) {
  RadioModel m;
  m.n_t = 1;
  m.users = 1;
  m.power_w = 1.0;
  m.default_distance_m = 1.0;
  m.sigma2_w = 1.0 / snr;
  m.bandwidth_hz = 1e6;
  return m;
}

LinkBudget reference_budget() {
  const auto bits = tile_bits(TileMediaSpec{});
  return LinkBudget{2.85e9, 2.2e9, bits.s_com, bits.s_cpt, 200};
}

}  // namespace

TEST(TileBits, ReferenceSizes) {
  const auto b = tile_bits(TileMediaSpec{});
  EXPECT_DOUBLE_EQ(b.s_cpt, 14929920.0);
  EXPECT_NEAR(b.s_com, 14929920.0 / 2.41, 1e-6);
  EXPECT_NEAR(b.s_cpt / (1 << 20), 14.24, 0.005);
  EXPECT_NEAR(b.s_com / (1 << 20), 5.91, 0.005);
  TileMediaSpec raw;
  raw.gamma_c = 1.0;
  EXPECT_EQ(tile_bits(raw).s_com, tile_bits(raw).s_cpt);
  raw.gamma_c = 0.5;
  EXPECT_THROW(tile_bits(raw), std::domain_error);
}

TEST(ComputingRate, Formula) {
  EXPECT_DOUBLE_EQ(computing_rate(ComputeModel{3.0, 1, 3.0}), 1.0);
  EXPECT_DOUBLE_EQ(computing_rate(ComputeModel{8.8e9, 4, 1.0}), 2.2e9);
  EXPECT_DOUBLE_EQ(computing_rate(ComputeModel{8.8e9, 8, 1.0}), 1.1e9);
  EXPECT_THROW(computing_rate(ComputeModel{1.0, 0, 1.0}), std::domain_error);
}

TEST(PowerShare, Cases) {
  RadioModel m;
  m.users = 4;
  const auto eq = zf_power_share(m);
  for (double p : eq) EXPECT_DOUBLE_EQ(p, m.power_w / 4);

  m.users = 2;
  m.power_w = 10.0;
  m.distances_m = {1.0, 2.0};
  const auto p = zf_power_share(m);
  EXPECT_DOUBLE_EQ(p[0], 2.0);
  EXPECT_DOUBLE_EQ(p[1], 8.0);

  m.users = 3;
  m.distances_m = {1.0, 7.0, 3.5};
  m.alpha = 3.2;
  const auto q = zf_power_share(m);
  EXPECT_NEAR(q[0] + q[1] + q[2], m.power_w, 1e-12);
}

TEST(RadioModel, Validation) {
  RadioModel m;
  m.n_t = 2;
  m.users = 3;
  EXPECT_THROW(m.validate(), std::domain_error);
  m.n_t = 4;
  m.distances_m = {1.0, 2.0};
  EXPECT_THROW(m.validate(), std::domain_error);
  EXPECT_DOUBLE_EQ(dbm_to_watts(30.0), 1.0);
}

TEST(ZfGain, SingleDrawNullsInterference) {
  Eigen::MatrixXcd h = Eigen::MatrixXcd::Random(3, 6);
  Eigen::VectorXd g;
  ASSERT_TRUE(zf_equivalent_gains(h, g));
  const Eigen::MatrixXcd w = h.completeOrthogonalDecomposition().pseudoInverse();
  for (Eigen::Index k = 0; k < 3; ++k) {
    const Eigen::VectorXcd wk = w.col(k).normalized();
    EXPECT_NEAR(g[k], std::norm((h.row(k) * wk).value()), 1e-9);
    for (Eigen::Index j = 0; j < 3; ++j)
      if (j != k) EXPECT_NEAR(std::abs((h.row(j) * wk).value()), 0.0, 1e-9);
  }
  Eigen::MatrixXcd singular(2, 4);
  singular.row(0) = h.row(0).head(4);
  singular.row(1) = 2.0 * h.row(0).head(4);
  EXPECT_FALSE(zf_equivalent_gains(singular, g));
}

TEST(ZfGain, MeanIsDegreesOfFreedom) {
  for (auto [n_t, k] : {std::pair<std::size_t, std::size_t>{4, 2}, {8, 4}, {1, 1}, {3, 3}}) {
    const double mean = zf_mean_gain(n_t, k, EnsembleOptions{100000, 5, 4});
    const double expected = static_cast<double>(n_t - k + 1);
    EXPECT_NEAR(mean, expected, 0.02 * expected) << n_t << "x" << k;
  }
}

TEST(EnsembleRate, SingleLinkMatchesQuadrature) {
  for (double snr : {0.1, 1.0, 10.0, 1000.0}) {
    const double mc = ensemble_rate(single_link(snr), EnsembleOptions{100000, 3, 4});
    const double ref = 1e6 * exp_gain_capacity(snr);
    EXPECT_NEAR(mc, ref, 0.01 * ref) << "snr " << snr;
  }
}

TEST(EnsembleRate, NoiseLimitAndLinearity) {
  RadioModel m;
  const EnsembleOptions opt{4096, 9, 2};
  const double base = ensemble_rate(m, opt);
  m.bandwidth_hz *= 2;
  EXPECT_EQ(ensemble_rate(m, opt), 2.0 * base);
  m.sigma2_w = 1e30;
  EXPECT_LT(ensemble_rate(m, opt), 1e-6);
}

TEST(EnsembleRate, IndependentOfWorkerCount) {
  RadioModel m;
  const double a = ensemble_rate(m, EnsembleOptions{5000, 4, 1});
  const double b = ensemble_rate(m, EnsembleOptions{5000, 4, 3});
  const double c = ensemble_rate(m, EnsembleOptions{5000, 4, 0});
  EXPECT_EQ(a, b);
  EXPECT_EQ(a, c);
}

TEST(ResourcesRate, ReferenceAnchor) {
  const double r = resources_rate(reference_budget());
  EXPECT_GE(r, 0.55);
  EXPECT_LE(r, 0.62);
  EXPECT_NEAR(r, 0.558, 5e-4);

  const double mb = 1 << 20;
  const LinkBudget rounded{2.85e9, 2.2e9, 5.9 * mb, 14.2 * mb, 200};
  EXPECT_GE(resources_rate(rounded), 0.55);
  EXPECT_LE(resources_rate(rounded), 0.62);
}

TEST(ResourcesRate, LimitsAndScaling) {
  auto b = reference_budget();
  const double r = resources_rate(b);
  EXPECT_NEAR(resources_rate(b.scaled(2.0)), 2.0 * r, 1e-12 * r);
  b.c_com = 1e30;
  EXPECT_NEAR(resources_rate(b), 1.0 / (b.s_cpt * 200 / b.c_cpt), 1e-12);
  for (double target : {0.6, 1.0, 2.0}) EXPECT_NEAR(resources_rate(with_resources_rate(reference_budget(), target)), target, 1e-12);
  EXPECT_THROW(with_resources_rate(reference_budget(), 0.0), std::domain_error);
}
