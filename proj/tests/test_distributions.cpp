#include <gtest/gtest.h>

#include <cmath>
#include <complex>
#include <numbers>

#include "wavemollify/distributions.hpp"
#include "wavemollify/errors.hpp"
#include "wavemollify/funcalc.hpp"

using namespace wavemollify;

namespace {

constexpr double kPi = std::numbers::pi;

// Complex Fourier coefficients (1/L) sum_p u_p e^{-i k x_p} w_p on a circle.
std::complex<double> dft(const LaplaceBeltrami& op, const Vector& u, int k) {
  const double len = op.geometry().axis(0).length();
  std::complex<double> acc = 0.0;
  for (std::size_t p = 0; p < op.size(); ++p) {
    const double x = op.geometry().point(p)[1];
    acc += u[static_cast<Eigen::Index>(p)] * op.weights()[static_cast<Eigen::Index>(p)] *
           std::polar(1.0, -2.0 * kPi * k * x / len);
  }
  return acc / len;
}

double grid_lambda(int k, std::size_t n, double len) {
  const double h = len / static_cast<double>(n);
  return (2.0 - 2.0 * std::cos(2.0 * kPi * k / static_cast<double>(n))) / (h * h);
}

DistributionSpec spec(DistributionKind k) {
  DistributionSpec s;
  s.kind = k;
  return s;
}

}  // namespace

TEST(MakeDistribution, DeltaHasFlatFourierCoefficients) {
  LaplaceBeltrami op(Geometry::circle(256));
  FourierBasis basis(op);
  const auto d = make_distribution(spec(DistributionKind::kDelta), op, basis);
  for (int k = -128; k <= 128; ++k) {
    const auto c = dft(op, d.values, k);
    EXPECT_NEAR(c.real(), 1.0 / (2.0 * kPi), 1e-13) << k;
    EXPECT_NEAR(c.imag(), 0.0, 1e-13) << k;
  }
  EXPECT_DOUBLE_EQ(d.nominal_s, -0.5);
  // Coefficients pair with the basis to give back the grid function.
  EXPECT_LT((basis.synthesize(d.coefficients) - d.values).norm(), 1e-10 * d.values.norm());
}

TEST(MakeDistribution, OffsetDeltaCarriesPhase) {
  LaplaceBeltrami op(Geometry::circle(128));
  FourierBasis basis(op);
  auto s = spec(DistributionKind::kDelta);
  s.center = {0.0, 2.0 * kPi * 37.0 / 128.0};
  const auto d = make_distribution(s, op, basis);
  for (int k : {1, 5, 40}) {
    const auto expected = std::polar(1.0 / (2.0 * kPi), -k * s.center[1]);
    EXPECT_NEAR(std::abs(dft(op, d.values, k) - expected), 0.0, 1e-13);
  }
}

TEST(MakeDistribution, SawtoothCoefficients) {
  const std::size_t n = 512;
  LaplaceBeltrami op(Geometry::circle(n));
  FourierBasis basis(op);
  const auto d = make_distribution(spec(DistributionKind::kSawtooth), op, basis);
  EXPECT_NEAR(std::abs(dft(op, d.values, 0)), 0.0, 1e-14);
  for (int k = 1; k < 200; k += 7) {
    // Sampled sawtooth: -(i / 2N) cot(pi k / N).
    const auto c = dft(op, d.values, k);
    const double discrete = -std::cos(kPi * k / n) / std::sin(kPi * k / n) / (2.0 * n);
    EXPECT_NEAR(c.real(), 0.0, 1e-14);
    EXPECT_NEAR(c.imag(), discrete, 1e-14);
  }
  for (int k = 1; k <= 8; ++k) {
    // Continuum series 1/(2 pi i k) for low modes.
    const auto c = dft(op, d.values, k) * std::complex<double>(0.0, 2.0 * kPi * k);
    EXPECT_NEAR(c.real(), 1.0, 1e-3) << k;
  }
}

TEST(MakeDistribution, DeltaPrimeActsAsMinusDerivative) {
  LaplaceBeltrami op(Geometry::circle(1024));
  FourierBasis basis(op);
  auto s = spec(DistributionKind::kDeltaPrime);
  s.center = {0.0, 1.0};
  const auto d = make_distribution(s, op, basis);
  const double x0 = op.geometry().point(nearest_node(op.geometry(), s.center))[1];
  Vector phi(static_cast<Eigen::Index>(op.size()));
  for (std::size_t p = 0; p < op.size(); ++p) phi[static_cast<Eigen::Index>(p)] = std::sin(op.geometry().point(p)[1]);
  const double h = op.geometry().axis(0).spacing;
  EXPECT_NEAR(weighted_inner(d.values, phi, op.weights()), -std::cos(x0) * std::sin(h) / h, 1e-12);
  EXPECT_NEAR(weighted_inner(d.values, phi, op.weights()), -std::cos(x0), h * h);
  EXPECT_NEAR(d.values.dot(op.weights()), 0.0, 1e-9);
}

TEST(MakeDistribution, SmoothBumpIsCompactlySupported) {
  LaplaceBeltrami op(Geometry::flat_torus(32, 32, 4.0, 4.0));
  FourierBasis basis(op);
  auto s = spec(DistributionKind::kSmoothBump);
  s.center = {2.0, 1.0};
  s.width = 0.9;
  const auto d = make_distribution(s, op, basis);
  for (std::size_t p = 0; p < op.size(); ++p) {
    const auto x = op.geometry().point(p);
    const double r = std::hypot(x[0] - 2.0, x[1] - 1.0);
    if (r >= 0.9) EXPECT_EQ(d.values[static_cast<Eigen::Index>(p)], 0.0);
    if (r <= 0.45) EXPECT_NEAR(d.values[static_cast<Eigen::Index>(p)], 1.0, 1e-15);
  }
  EXPECT_DOUBLE_EQ(d.support_radius, 0.9);
  EXPECT_TRUE(std::isinf(d.nominal_s));
}

TEST(MakeDistribution, SobolevRandomMagnitudesAndSeeds) {
  LaplaceBeltrami op(Geometry::circle(256));
  FourierBasis basis(op);
  auto s = spec(DistributionKind::kSobolevRandom);
  s.s = 3.0;
  s.seed = 11;
  const auto a = make_distribution(s, op, basis);
  const auto b = make_distribution(s, op, basis);
  s.seed = 12;
  const auto c = make_distribution(s, op, basis);
  EXPECT_EQ(a.values, b.values);
  EXPECT_GT((a.values - c.values).norm(), 0.0);
  const Vector& lambda = basis.eigenvalues();
  for (Eigen::Index k = 0; k < lambda.size(); ++k) {
    const double expected = std::pow(1.0 + lambda[k], -(1.5 + 0.25 + 0.01));
    EXPECT_NEAR(std::abs(a.coefficients[k]), expected, 1e-15 + 1e-12 * expected);
  }
}

TEST(MakeDistribution, SobolevRandomBandDoublingFollowsCoefficientSums) {
  auto s = spec(DistributionKind::kSobolevRandom);
  s.s = 3.0;
  double norm3[2], norm35[2];
  for (int r = 0; r < 2; ++r) {
    const std::size_t n = r == 0 ? 256 : 512;
    LaplaceBeltrami op(Geometry::circle(n));
    FourierBasis basis(op);
    const auto d = make_distribution(s, op, basis);
    norm3[r] = sobolev_norm(basis, d.values, 3.0);
    norm35[r] = sobolev_norm(basis, d.values, 3.5);
    // Direct coefficient sum at this resolution.
    double o3 = 0.0, o35 = 0.0;
    for (int k = -static_cast<int>(n) / 2 + 1; k <= static_cast<int>(n) / 2; ++k) {
      const double lam = grid_lambda(k, n, 2.0 * kPi);
      const double c2 = std::pow(1.0 + lam, -3.52);
      o3 += std::pow(1.0 + lam, 3.0) * c2;
      o35 += std::pow(1.0 + lam, 3.5) * c2;
    }
    EXPECT_NEAR(norm3[r], std::sqrt(o3), 1e-10 * std::sqrt(o3));
    EXPECT_NEAR(norm35[r], std::sqrt(o35), 1e-10 * std::sqrt(o35));
  }
  // The H^3 sum converges (terms ~ k^-1.04); the H^3.5 sum grows like
  // K^0.96, so its norm gains about 2^0.48 per band doubling.
  EXPECT_LT(norm3[1] / norm3[0], 1.1);
  EXPECT_GT(norm35[1] / norm35[0], 1.3);
  EXPECT_GT(norm35[1] / norm35[0] - 1.0, 5.0 * (norm3[1] / norm3[0] - 1.0));
}

TEST(MakeDistribution, BandLimitedRespectsNyquist) {
  LaplaceBeltrami op(Geometry::circle(128));
  FourierBasis basis(op);
  auto s = spec(DistributionKind::kBandLimited);
  s.band = 40.0;
  EXPECT_THROW(make_distribution(s, op, basis), ValidationError);
  s.band = 20.0;
  const auto d = make_distribution(s, op, basis);
  for (std::size_t k = 0; k < basis.size(); ++k) {
    if (basis.eigenvalues()[static_cast<Eigen::Index>(k)] > 400.0) EXPECT_EQ(d.coefficients[static_cast<Eigen::Index>(k)], 0.0);
  }
  EXPECT_GT(d.coefficients.norm(), 0.0);
  s.band = 0.0;
  EXPECT_THROW(make_distribution(s, op, basis), ValidationError);
}

TEST(MakeDistribution, BandLimitedReproducedUpToTail) {
  auto op = std::make_shared<const LaplaceBeltrami>(Geometry::circle(256));
  Regularizer reg(op, KernelPair{}, RegularizerConfig{});
  auto s = spec(DistributionKind::kBandLimited);
  s.band = 16.0;
  const auto d = make_distribution(s, *op, reg.basis());
  const double lam_max = (d.coefficients.array() != 0.0).select(reg.basis().eigenvalues().array(), 0.0).maxCoeff();
  for (int j = 2; j <= 7; ++j) {
    const double eps = std::ldexp(1.0, -j);
    if (eps > 1.0 / std::sqrt(lam_max)) continue;
    RunDiagnostics diag;
    const Vector tu = reg.apply(d.values, eps, &diag);
    EXPECT_LE(weighted_norm(tu - d.values, op->weights()),
              1.01 * diag.tail_bound * weighted_norm(d.values, op->weights()) + 1e-13) << eps;
  }
}

TEST(SobolevNorm, ClosedForms) {
  LaplaceBeltrami op(Geometry::circle(256));
  FourierBasis basis(op);
  const Vector one = Vector::Ones(256);
  for (double s : {-2.0, 0.0, 1.5, 4.0}) EXPECT_NEAR(sobolev_norm(basis, one, s), std::sqrt(2.0 * kPi), 1e-12);
  for (int k : {1, 3, 20}) {
    Vector c(256);
    for (std::size_t p = 0; p < 256; ++p) c[static_cast<Eigen::Index>(p)] = std::cos(k * op.geometry().point(p)[1]);
    const double lam = grid_lambda(k, 256, 2.0 * kPi);
    for (double s : {-1.0, 0.0, 2.0}) {
      EXPECT_NEAR(sobolev_norm(basis, c, s), std::sqrt(kPi) * std::pow(1.0 + lam, 0.5 * s),
                  1e-11 * std::pow(1.0 + lam, 0.5 * s));
    }
    EXPECT_NEAR(lam, k * k, 1e-3 * k * k * k * k);
  }
}

TEST(SobolevNorm, DeltaMinusOneMatchesPartialSums) {
  for (std::size_t n : {128u, 1024u}) {
    LaplaceBeltrami op(Geometry::circle(n));
    FourierBasis basis(op);
    const auto d = make_distribution(spec(DistributionKind::kDelta), op, basis);
    double sum = 0.0;
    for (int k = -static_cast<int>(n) / 2 + 1; k <= static_cast<int>(n) / 2; ++k) {
      sum += 1.0 / (1.0 + grid_lambda(k, n, 2.0 * kPi));
    }
    const double oracle = std::sqrt(sum / (2.0 * kPi));
    EXPECT_NEAR(sobolev_norm(basis, d.values, -1.0), oracle, 1e-12 * oracle);
    // Continuum limit: sum_k 1/(1+k^2) = pi coth(pi).
    EXPECT_NEAR(sobolev_norm(basis, d.values, -1.0), std::sqrt(0.5 / std::tanh(kPi)), 2.0 / n);
  }
}

TEST(SobolevNorm, MonotoneInOrder) {
  LaplaceBeltrami op(Geometry::circle(128));
  FourierBasis basis(op);
  for (auto k : {DistributionKind::kDelta, DistributionKind::kDeltaPrime, DistributionKind::kSawtooth,
                 DistributionKind::kSmoothBump, DistributionKind::kSobolevRandom, DistributionKind::kConstant}) {
    auto s = spec(k);
    s.center = {0.0, 2.0};
    s.s = 1.0;
    const auto d = make_distribution(s, op, basis);
    double prev = 0.0;
    for (double order = -3.0; order <= 3.0; order += 0.5) {
      const double v = sobolev_norm(d.coefficients, basis.eigenvalues(), order);
      EXPECT_GE(v, prev * (1.0 - 1e-14)) << kind_name(k) << ' ' << order;
      prev = v;
    }
  }
}

TEST(Slice, TensorProductAndConstants) {
  const Geometry g = Geometry::warped_slab(24, 32, 4.0, 2.0 * kPi, Profile{}, Profile{1.0, 0.3, 0.0});
  LaplaceBeltrami op(g);
  Vector a(24), b(32);
  for (int i = 0; i < 24; ++i) a[i] = std::cos(0.3 * i);
  for (int j = 0; j < 32; ++j) b[j] = std::sin(0.7 * j) + 2.0;
  const Vector u = tensor_product(g, a, b);
  for (std::size_t t : {0u, 5u, 23u}) {
    const auto sl = restrict_to_slice(op, u, t);
    EXPECT_LT((sl.values - a[static_cast<Eigen::Index>(t)] * b).norm(), 1e-15);
    EXPECT_EQ(restrict_to_slice(op, Vector::Ones(op.size()), t).values, Vector::Ones(32));
  }
  EXPECT_THROW(restrict_to_slice(op, u, 24), ValidationError);
}

TEST(Slice, WeightsMatchSliceGeometry) {
  const Geometry g = Geometry::warped_slab(20, 40, 5.0, 2.0 * kPi, Profile{1.0, 0.2, 0.0},
                                           Profile{1.0, 0.3, 0.2, 1, 2});
  LaplaceBeltrami op(g);
  for (std::size_t t = 0; t < 20; t += 3) {
    const auto sl = restrict_to_slice(op, Vector::Zero(op.size()), t);
    LaplaceBeltrami slice_op(sl.geometry);
    EXPECT_LT((sl.weights - slice_op.weights()).cwiseAbs().maxCoeff(), 1e-14);
    const double tt = g.axis(0).coordinate(t);
    for (int j = 0; j < 40; j += 7) {
      const double x = g.axis(1).coordinate(static_cast<std::size_t>(j));
      const double f = 1.0 + 0.3 * std::sin(2.0 * kPi * tt / 5.0) + 0.2 * std::cos(2.0 * x);
      EXPECT_NEAR(sl.weights[j], f * 2.0 * kPi / 40.0, 1e-14);
    }
  }
}

TEST(Slice, CommutesWithTimeMultiplication) {
  const Geometry g = Geometry::warped_slab(16, 16, 4.0, 2.0 * kPi, Profile{}, Profile{1.0, 0.3, 0.0});
  LaplaceBeltrami op(g);
  const Vector bump = time_bump(g, 2.0, 1.5);
  Vector u(static_cast<Eigen::Index>(op.size()));
  for (Eigen::Index p = 0; p < u.size(); ++p) u[p] = std::sin(0.37 * static_cast<double>(p));
  for (std::size_t t = 0; t < 16; ++t) {
    const double a = bump[static_cast<Eigen::Index>(t * 16)];
    EXPECT_EQ(restrict_to_slice(op, bump.cwiseProduct(u), t).values, a * restrict_to_slice(op, u, t).values);
  }
  EXPECT_EQ(bump[static_cast<Eigen::Index>(8 * 16)], 1.0);
  EXPECT_EQ(bump[0], 0.0);
}

TEST(Slice, RejectsOneDimensionalGeometry) {
  LaplaceBeltrami op(Geometry::circle(16));
  EXPECT_THROW(restrict_to_slice(op, Vector::Zero(16), 0), ValidationError);
}
