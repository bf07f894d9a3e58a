#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <sstream>

#include "wavemollify/distributions.hpp"
#include "wavemollify/errors.hpp"
#include "wavemollify/funcalc.hpp"
#include "wavemollify/nets.hpp"

using namespace wavemollify;

namespace {

constexpr double kPi = std::numbers::pi;

EpsilonNet power_net(double r, double scale = 1.0) {
  EpsilonNet net;
  net.label = "power";
  net.eps = EpsilonNet::dyadic(2, 9);
  for (double e : net.eps) net.values.push_back(scale * std::pow(e, r));
  return net;
}

// Plateau {1, 2} written out from its definition.
double plateau_oracle(double x) {
  x = std::abs(x);
  if (x <= 1.0) return 1.0;
  if (x >= 2.0) return 0.0;
  const double t = x - 1.0;
  return 1.0 - 1.0 / (1.0 + std::exp(1.0 / t - 1.0 / (1.0 - t)));
}

// sum_k |F(eps k)|^2 k^(2j) / (2 pi): squared L2 norm of F_eps(D) applied to delta^(j) on S^1.
double riemann_oracle(double eps, int j) {
  double sum = 0.0;
  for (int k = -static_cast<int>(2.0 / eps) - 1; k <= static_cast<int>(2.0 / eps) + 1; ++k) {
    const double f = plateau_oracle(eps * k);
    sum += f * f * std::pow(static_cast<double>(k), 2 * j);
  }
  return sum / (2.0 * kPi);
}

EpsilonNet regularized_square_norms(DistributionKind kind, std::size_t n, const std::vector<double>& eps) {
  auto op = std::make_shared<const LaplaceBeltrami>(Geometry::circle(n));
  Regularizer reg(op, KernelPair{}, RegularizerConfig{});
  DistributionSpec s;
  s.kind = kind;
  const auto d = make_distribution(s, *op, reg.basis());
  EpsilonNet net;
  net.label = kind_name(kind);
  net.eps = eps;
  for (double e : eps) {
    const double v = weighted_norm(reg.apply(d.values, e), op->weights());
    net.values.push_back(v * v);
  }
  return net;
}

}  // namespace

TEST(EpsilonNet, DyadicGridAndValidation) {
  const auto eps = EpsilonNet::dyadic(2, 9);
  ASSERT_EQ(eps.size(), 8u);
  EXPECT_EQ(eps.front(), 0.25);
  EXPECT_EQ(eps.back(), 1.0 / 512.0);
  EpsilonNet net{"bad", {0.25, 0.5, 0.125, 0.0625}, {1, 1, 1, 1}};
  EXPECT_THROW(net.validate(), ValidationError);
  net = {"bad", {0.5, 0.25, 0.125, 0.0625}, {1, -1, 1, 1}};
  EXPECT_THROW(net.validate(), ValidationError);
  net = {"bad", {0.5, 0.25}, {1}};
  EXPECT_THROW(net.validate(), ValidationError);
}

TEST(EpsilonNet, CsvRoundTrip) {
  const auto net = power_net(2.0);
  std::ostringstream out;
  net.write_csv(out);
  std::istringstream in(out.str());
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "eps,value");
  std::size_t rows = 0;
  while (std::getline(in, line)) {
    const auto comma = line.find(',');
    EXPECT_EQ(std::stod(line.substr(0, comma)), net.eps[rows]);
    EXPECT_EQ(std::stod(line.substr(comma + 1)), net.values[rows]);
    ++rows;
  }
  EXPECT_EQ(rows, net.size());
}

TEST(EstimateOrder, ExactOnPowerNets) {
  for (double r : {-3.0, -1.0, 0.5, 3.0, 7.25}) {
    const auto v = estimate_order(power_net(r));
    EXPECT_NEAR(v.slope, r, 1e-10);
    EXPECT_NEAR(v.r_squared, 1.0, 1e-12);
    EXPECT_EQ(v.samples, 8u);
  }
  const auto v = estimate_order(power_net(3.0));
  EXPECT_NEAR(v.slope, 3.0, 1e-12);
  EXPECT_EQ(v.cls, NetClass::kNegligible);
  EXPECT_EQ(v.negligible_m, 3);
}

TEST(EstimateOrder, ScaleInvariant) {
  const auto a = estimate_order(power_net(1.7, 1.0));
  const auto b = estimate_order(power_net(1.7, 1e6));
  EXPECT_NEAR(a.slope, b.slope, 1e-10);
  EXPECT_NEAR(b.intercept - a.intercept, std::log2(1e6), 1e-9);
}

TEST(EstimateOrder, ClassificationGuardBand) {
  EXPECT_EQ(estimate_order(power_net(-1.0)).cls, NetClass::kModerate);
  EXPECT_EQ(estimate_order(power_net(-1.0)).moderate_n, 1);
  EXPECT_EQ(estimate_order(power_net(-1.2)).moderate_n, 1);
  EXPECT_EQ(estimate_order(power_net(-1.3)).moderate_n, 2);
  EXPECT_EQ(estimate_order(power_net(-0.2)).cls, NetClass::kOrder);
  EXPECT_EQ(estimate_order(power_net(-0.2)).moderate_n, 0);
  EXPECT_EQ(estimate_order(power_net(0.5)).cls, NetClass::kOrder);
  EXPECT_EQ(estimate_order(power_net(1.8)).negligible_m, 2);
  EXPECT_EQ(estimate_order(power_net(1.7)).negligible_m, 1);
}

TEST(EstimateOrder, ExponentialIsNegligibleBeyondTwelve) {
  EpsilonNet net;
  net.label = "exp";
  net.eps = EpsilonNet::dyadic(2, 9);
  for (double e : net.eps) net.values.push_back(std::exp(-1.0 / e));
  const auto v = estimate_order(net);
  EXPECT_EQ(v.cls, NetClass::kNegligible);
  EXPECT_GE(v.negligible_m, 12);
  for (int m = 0; m <= 12; ++m) EXPECT_GE(v.negligible_m, m);
}

TEST(EstimateOrder, ZerosAndShortNets) {
  EpsilonNet zeros{"zeros", EpsilonNet::dyadic(2, 9), std::vector<double>(8, 0.0)};
  const auto v = estimate_order(zeros);
  EXPECT_EQ(v.cls, NetClass::kNegligible);
  EXPECT_EQ(v.negligible_m, kUnbounded);
  EpsilonNet shortnet{"short", {0.5, 0.25, 0.125}, {1.0, 0.5, 0.25}};
  EXPECT_THROW(estimate_order(shortnet), ValidationError);
  OrderOptions window;
  window.eps_hi = 0.1;
  window.eps_lo = 0.01;
  EXPECT_THROW(estimate_order(power_net(1.0), window), ValidationError);
  window.eps_lo = 0.0;
  EXPECT_EQ(estimate_order(power_net(1.0), window).samples, 6u);
  EXPECT_DOUBLE_EQ(estimate_order(power_net(1.0), window).eps_hi, 0.0625);
}

TEST(EstimateOrder, NoiseFloorShortCircuit) {
  auto net = power_net(12.0);
  OrderOptions opt;
  opt.noise_floor = 1e-14;
  const auto v = estimate_order(net, opt);
  EXPECT_TRUE(v.floor_hit);
  EXPECT_EQ(v.negligible_m, kUnbounded);
}

TEST(Association, IdenticalNetsArePairwiseZero) {
  FieldNet a;
  a.eps = EpsilonNet::dyadic(2, 7);
  for (double e : a.eps) a.fields.push_back(Vector::Constant(16, e));
  const Vector w = Vector::Ones(16);
  std::vector<Vector> tests(3, Vector::Ones(16));
  const auto v = association_check(a, a, tests, w);
  EXPECT_TRUE(v.associated);
  EXPECT_TRUE(std::isinf(v.worst_slope));
  ASSERT_EQ(v.per_test.size(), 3u);
  EXPECT_EQ(v.per_test[0].negligible_m, kUnbounded);
}

TEST(Association, GridMismatchThrows) {
  FieldNet a, b;
  a.eps = b.eps = EpsilonNet::dyadic(2, 5);
  for (double e : a.eps) {
    a.fields.push_back(Vector::Constant(8, e));
    b.fields.push_back(Vector::Constant(9, e));
  }
  EXPECT_THROW(association_check(a, b, {Vector::Ones(8)}, Vector::Ones(8)), ValidationError);
  b.eps = EpsilonNet::dyadic(3, 6);
  EXPECT_THROW(association_check(a, a, {Vector::Ones(7)}, Vector::Ones(8)), ValidationError);
}

TEST(Association, DeltaShadowIsNotAssociatedToZero) {
  auto op = std::make_shared<const LaplaceBeltrami>(Geometry::circle(256));
  Regularizer reg(op, KernelPair{}, RegularizerConfig{});
  DistributionSpec s;
  const auto delta = make_distribution(s, *op, reg.basis());
  std::vector<Vector> panel;
  for (int j = 0; j < 8; ++j) {
    DistributionSpec b;
    b.kind = DistributionKind::kSmoothBump;
    b.center = {0.0, 0.2 * j - 0.7};
    b.width = 1.5;
    panel.push_back(make_distribution(b, *op, reg.basis()).values);
  }
  FieldNet a, zero, exact;
  a.eps = zero.eps = exact.eps = EpsilonNet::dyadic(2, 6);
  for (double e : a.eps) {
    a.fields.push_back(reg.apply(delta.values, e));
    zero.fields.push_back(Vector::Zero(256));
    exact.fields.push_back(delta.values);
  }
  OrderOptions opt;
  opt.noise_floor = 1e-12;
  const auto shadow = association_check(a, zero, panel, op->weights(), opt);
  EXPECT_FALSE(shadow.associated);
  EXPECT_LT(std::abs(shadow.worst_slope), 0.05);
  const auto identity = association_check(a, exact, panel, op->weights(), opt);
  EXPECT_TRUE(identity.associated);
  EXPECT_GE(identity.worst_slope, 0.5);
}

TEST(SobolevDetect, DeltaOnCircleMatchesRiemannSums) {
  const auto eps = EpsilonNet::dyadic(2, 6);
  const auto net = regularized_square_norms(DistributionKind::kDelta, 4096, eps);
  for (std::size_t i = 0; i < eps.size(); ++i) {
    // Values differ from the continuum sum by the multiplier tail and the
    // grid dispersion of sqrt(lambda_k); slopes agree much more closely.
    const double oracle = riemann_oracle(eps[i], 0);
    EXPECT_NEAR(net.values[i], oracle, 1e-2 * oracle) << eps[i];
  }
  const auto d = sobolev_detect(net, 1);
  EXPECT_NEAR(d.fit.slope, -1.0, 0.1);
  EXPECT_NEAR(d.implied_floor, d.fit.slope - 0.5, 1e-15);
  EpsilonNet oracle_net{"oracle", eps, {}};
  for (double e : eps) oracle_net.values.push_back(riemann_oracle(e, 0));
  EXPECT_NEAR(d.fit.slope, estimate_order(oracle_net).slope, 0.01);
}

TEST(SobolevDetect, DeltaPrimeOnCircle) {
  const auto eps = EpsilonNet::dyadic(2, 6);
  const auto net = regularized_square_norms(DistributionKind::kDeltaPrime, 4096, eps);
  EpsilonNet oracle_net{"oracle", eps, {}};
  for (std::size_t i = 0; i < eps.size(); ++i) {
    oracle_net.values.push_back(riemann_oracle(eps[i], 1));
    EXPECT_NEAR(net.values[i], oracle_net.values[i], 2e-2 * oracle_net.values[i]) << eps[i];
  }
  const auto d = sobolev_detect(net, 1);
  EXPECT_NEAR(d.fit.slope, -3.0, 0.15);
  EXPECT_NEAR(d.fit.slope, estimate_order(oracle_net).slope, 0.02);
}

TEST(SobolevDetect, SmoothInputIsBounded) {
  const auto eps = EpsilonNet::dyadic(2, 7);
  auto op = std::make_shared<const LaplaceBeltrami>(Geometry::circle(512));
  Regularizer reg(op, KernelPair{}, RegularizerConfig{});
  DistributionSpec s;
  s.kind = DistributionKind::kSmoothBump;
  s.width = 2.0;
  const auto u = make_distribution(s, *op, reg.basis());
  EpsilonNet net{"bump", eps, {}};
  for (double e : eps) net.values.push_back(std::pow(weighted_norm(reg.apply(u.values, e), op->weights()), 2));
  const auto d = sobolev_detect(net, 1);
  EXPECT_EQ(d.fit.moderate_n, 0);
  EXPECT_GE(d.fit.slope, -1e-3);
}
