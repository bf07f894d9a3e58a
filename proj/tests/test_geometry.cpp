#include <gtest/gtest.h>

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <numbers>
#include <fstream>
#include <random>

#include "wavemollify/eigen.hpp"
#include "wavemollify/errors.hpp"
#include "wavemollify/geometry.hpp"
#include "wavemollify/spectral_basis.hpp"

using namespace wavemollify;

namespace {

constexpr double kPi = std::numbers::pi;

std::vector<Geometry> panel() {
  return {
      Geometry::circle(64),
      Geometry::circle(48, Profile{1.0, 0.0, 0.3, 1, 2}),
      Geometry::flat_torus(16, 12, 2 * kPi, 3.0),
      Geometry::warped_slab(16, 12, 4.0, 2 * kPi, Profile{1.0, 0.2, 0.1, 1, 1},
                            Profile{1.0, 0.3, 0.0, 1, 1}),
      Geometry::euclidean_line(4.0, 0.125),
  };
}

Vector random_vector(std::size_t n, std::mt19937_64& rng) {
  std::normal_distribution<double> d;
  Vector v(static_cast<Eigen::Index>(n));
  for (auto& x : v) x = d(rng);
  return v;
}

std::filesystem::path scratch_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("wm-geometry-" + name);
  std::filesystem::remove_all(dir);
  return dir;
}

}  // namespace

TEST(Geometry, ConstantIsAnnihilatedExactly) {
  for (const auto& g : panel()) {
    LaplaceBeltrami op(g);
    const Vector one = Vector::Constant(static_cast<Eigen::Index>(op.size()), 3.25);
    EXPECT_EQ(op.apply(one).cwiseAbs().maxCoeff(), 0.0) << model_name(g.model());
  }
}

TEST(Geometry, SelfAdjointAndNegativeSemidefinite) {
  std::mt19937_64 rng(7);
  for (const auto& g : panel()) {
    LaplaceBeltrami op(g);
    const Vector& w = op.weights();
    for (int trial = 0; trial < 100; ++trial) {
      const Vector u = random_vector(op.size(), rng);
      const Vector v = random_vector(op.size(), rng);
      const double lhs = weighted_inner(op.apply(u), v, w);
      const double rhs = weighted_inner(u, op.apply(v), w);
      const double scale = weighted_norm(u, w) * weighted_norm(v, w);
      EXPECT_LE(std::abs(lhs - rhs), 1e-10 * scale * (1.0 + op.spectral_bound()));
      EXPECT_LE(weighted_inner(op.apply(u), u, w), 1e-10 * weighted_inner(u, u, w));
    }
  }
}

TEST(Geometry, TorusTranslationCommutesExactly) {
  LaplaceBeltrami op(Geometry::flat_torus(16, 20, 2 * kPi, 2 * kPi));
  std::mt19937_64 rng(3);
  const Vector u = random_vector(op.size(), rng);
  auto shift = [](const Vector& v, std::size_t s0, std::size_t s1) {
    Vector out(v.size());
    for (std::size_t i = 0; i < 16; ++i)
      for (std::size_t j = 0; j < 20; ++j)
        out[static_cast<Eigen::Index>(((i + s0) % 16) * 20 + (j + s1) % 20)] =
            v[static_cast<Eigen::Index>(i * 20 + j)];
    return out;
  };
  const Vector a = op.apply(shift(u, 4, 7));
  const Vector b = shift(op.apply(u), 4, 7);
  EXPECT_LE((a - b).cwiseAbs().maxCoeff(), 1e-14 * u.cwiseAbs().maxCoeff());
}

TEST(Geometry, RejectsNonPositiveMetricNamingNode) {
  try {
    Geometry::circle(32, Profile{0.2, 0.0, 0.5, 1, 1});
    FAIL() << "expected ValidationError";
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("node"), std::string::npos);
  }
  EXPECT_THROW(Geometry::circle(4), ValidationError);
}

TEST(Geometry, SerializeRoundTripPreservesFingerprint) {
  for (const auto& g : panel()) {
    const Geometry back = Geometry::deserialize(g.serialize());
    EXPECT_EQ(LaplaceBeltrami(g).fingerprint(), LaplaceBeltrami(back).fingerprint());
  }
  EXPECT_NE(LaplaceBeltrami(Geometry::circle(64)).fingerprint(),
            LaplaceBeltrami(Geometry::circle(65)).fingerprint());
}

TEST(Geometry, PaddingKeepsInteriorCoefficients) {
  const Geometry g = Geometry::circle(40, Profile{1.0, 0.0, 0.25, 1, 1});
  const Geometry p = g.padded(5);
  EXPECT_EQ(p.axis(0).n, 50u);
  LaplaceBeltrami a(g), b(p);
  for (std::size_t i = 0; i < 40; ++i) {
    EXPECT_DOUBLE_EQ(a.weights()[static_cast<Eigen::Index>(i)],
                     b.weights()[static_cast<Eigen::Index>(i + 5)]);
  }
}

TEST(Spectrum, FlatCircleDispersion) {
  const std::size_t n = 256;
  LaplaceBeltrami op(Geometry::circle(n));
  const double h = 2 * kPi / n;
  const EigenSystem es = compute_eigensystem(op, 40);
  for (std::size_t i = 0; i < 40; ++i) {
    const std::size_t k = (i + 1) / 2;
    const double exact = std::pow(2.0 * std::sin(kPi * k / n) / h, 2);
    EXPECT_NEAR(es.values[static_cast<Eigen::Index>(i)], exact, 1e-9 * (1 + exact));
  }
  EXPECT_NEAR(es.values[1], 1.0, 1e-3);
  EXPECT_NEAR(es.values[2], es.values[1], 1e-10);  // sin/cos pair
  EXPECT_NEAR(es.values[0], 0.0, 1e-10);
  EXPECT_GT(es.values[1], 0.5);  // zero mode is simple
  EXPECT_LE(es.max_residual(op), 1e-8);
  EXPECT_LE(es.orthonormality_error(op.weights()), 1e-10);
}

TEST(Spectrum, WarpedSlabWithConstantWarpHasQuarterSpatialEigenvalues) {
  const std::size_t nt = 16, ns = 64;
  LaplaceBeltrami op(Geometry::warped_slab(nt, ns, 3.0, 2 * kPi, Profile{}, Profile{2.0}));
  const EigenSystem es = compute_eigensystem(op, op.size());
  const double h = 2 * kPi / ns;
  std::vector<double> all(es.values.data(), es.values.data() + es.values.size());
  for (int k = 1; k <= 4; ++k) {
    const double discrete = (2.0 - 2.0 * std::cos(2 * kPi * k / ns)) / (4.0 * h * h);
    const auto it = std::min_element(all.begin(), all.end(), [&](double a, double b) {
      return std::abs(a - discrete) < std::abs(b - discrete);
    });
    EXPECT_NEAR(*it, discrete, 1e-9);
    EXPECT_NEAR(discrete, k * k / 4.0, k * k / 4.0 * (k * k * h * h / 10.0));
  }
}

TEST(Spectrum, FlatTorusIntegerLattice) {
  LaplaceBeltrami op(Geometry::flat_torus(64, 64, 2 * kPi, 2 * kPi));
  FourierBasis basis(op);
  std::vector<double> lam(basis.eigenvalues().data(),
                          basis.eigenvalues().data() + basis.size());
  std::sort(lam.begin(), lam.end());
  // 0; 1 (x4); 2 (x4); 4 (x4); 5 (x8)
  const double expect[] = {0, 1, 1, 1, 1, 2, 2, 2, 2, 4, 4, 4, 4, 5, 5, 5, 5, 5, 5, 5, 5};
  for (std::size_t i = 0; i < std::size(expect); ++i) EXPECT_NEAR(lam[i], expect[i], 5e-3 * expect[i] + 1e-12);
}

TEST(Spectrum, MeshRefinementIsSecondOrder) {
  const Profile f{1.0, 0.0, 0.4, 1, 1};
  std::vector<double> lam;
  for (std::size_t n : {32, 64, 128, 256}) {
    lam.push_back(compute_eigensystem(LaplaceBeltrami(Geometry::circle(n, f)), 4).values[3]);
  }
  const double r1 = std::log2(std::abs(lam[0] - lam[1]) / std::abs(lam[1] - lam[2]));
  const double r2 = std::log2(std::abs(lam[1] - lam[2]) / std::abs(lam[2] - lam[3]));
  EXPECT_NEAR(0.5 * (r1 + r2), 2.0, 0.2);
}

TEST(Spectrum, KrylovMatchesDense) {
  LaplaceBeltrami op(Geometry::warped_slab(24, 20, 4.0, 2 * kPi, Profile{1.0, 0.2, 0.0, 1, 1},
                                           Profile{1.0, 0.3, 0.1, 1, 1}));
  const EigenSystem dense = compute_eigensystem(op, 60);
  EigenOptions opt;
  opt.dense_limit = 100;
  const EigenSystem krylov = compute_eigensystem(op, 60, opt);
  EXPECT_LE((dense.values - krylov.values).cwiseAbs().maxCoeff(), 1e-9);
  EXPECT_LE(krylov.max_residual(op), 1e-8);
  EXPECT_LE(krylov.orthonormality_error(op.weights()), 1e-10);
}

TEST(Spectrum, RejectsOversizedRequest) {
  LaplaceBeltrami op(Geometry::circle(16));
  EXPECT_THROW(compute_eigensystem(op, 17), ValidationError);
}

TEST(FourierBasis, OrthonormalAndMatchesDenseSpectrum) {
  for (const Geometry& g : {Geometry::circle(40, Profile{1.5}), Geometry::flat_torus(12, 10, 3.0, 5.0),
                            Geometry::euclidean_line(2.0, 0.1)}) {
    LaplaceBeltrami op(g);
    FourierBasis basis(op);
    std::mt19937_64 rng(11);
    const Vector u = random_vector(op.size(), rng);
    EXPECT_LE((basis.synthesize(basis.analyze(u)) - u).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_NEAR(basis.analyze(u).norm(), weighted_norm(u, op.weights()), 1e-11 * u.norm());
    // -Delta e_k = lambda_k e_k for every basis vector.
    for (std::size_t k = 0; k < basis.size(); k += 3) {
      Vector c = Vector::Zero(static_cast<Eigen::Index>(basis.size()));
      c[static_cast<Eigen::Index>(k)] = 1.0;
      const Vector e = basis.synthesize(c);
      const double lam = basis.eigenvalues()[static_cast<Eigen::Index>(k)];
      EXPECT_LE((-op.apply(e) - lam * e).cwiseAbs().maxCoeff(), 1e-9 * (1 + lam) * e.cwiseAbs().maxCoeff());
      EXPECT_NEAR(weighted_norm(e, op.weights()), 1.0, 1e-12);
    }
    std::vector<double> a(basis.eigenvalues().data(), basis.eigenvalues().data() + basis.size());
    std::sort(a.begin(), a.end());
    const EigenSystem es = compute_eigensystem(op, op.size());
    for (std::size_t i = 0; i < a.size(); ++i)
      EXPECT_NEAR(a[i], es.values[static_cast<Eigen::Index>(i)], 1e-9 * (1 + a[i]));
  }
}

TEST(FourierBasis, RefusesWarpedGeometry) {
  LaplaceBeltrami op(Geometry::circle(32, Profile{1.0, 0.0, 0.2, 1, 1}));
  EXPECT_THROW(FourierBasis{op}, ValidationError);
}

TEST(Cache, RoundTripListAndPurge) {
  const auto dir = scratch_dir("cache");
  EigenCache cache(dir);
  EXPECT_TRUE(cache.list().empty());
  LaplaceBeltrami op(Geometry::circle(48, Profile{1.0, 0.0, 0.3, 1, 1}));
  const EigenSystem fresh = eigensystem(op, 20, &cache);
  const auto loaded = cache.load(op.fingerprint(), 12);
  ASSERT_TRUE(loaded.has_value());
  EXPECT_EQ(loaded->count(), 12u);
  EXPECT_LE((loaded->values - fresh.values.head(12)).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_LE((loaded->vectors - fresh.vectors.leftCols(12)).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_FALSE(cache.load(op.fingerprint(), 21).has_value());
  const auto entries = cache.list();
  ASSERT_EQ(entries.size(), 1u);
  EXPECT_TRUE(entries[0].intact);
  EXPECT_EQ(Geometry::deserialize(entries[0].geometry_text).serialize(), op.geometry().serialize());
  EXPECT_EQ(cache.purge(), 1u);
  EXPECT_TRUE(cache.list().empty());
  std::filesystem::remove_all(dir);
}

TEST(Cache, CorruptedEntryIsIgnoredAndRecomputed) {
  const auto dir = scratch_dir("corrupt");
  EigenCache cache(dir);
  LaplaceBeltrami op(Geometry::circle(32));
  eigensystem(op, 8, &cache);
  const auto path = cache.list().at(0).path;
  {
    std::fstream f(path, std::ios::in | std::ios::out | std::ios::binary);
    f.seekp(100);
    f.put('\x7f');
  }
  EXPECT_FALSE(cache.list().at(0).intact);
  EXPECT_FALSE(cache.load(op.fingerprint(), 8).has_value());
  const EigenSystem again = eigensystem(op, 8, &cache);
  EXPECT_LE(again.max_residual(op), 1e-8);
  std::filesystem::remove_all(dir);
}

TEST(Weyl, CircleExponentHalf) {
  const Geometry g = Geometry::circle(1280);
  LaplaceBeltrami op(g);
  const EigenSystem es = compute_eigensystem(op, op.size());
  const WeylFit fit = weyl_exponent(es.values, trusted_threshold(g));
  EXPECT_GE(fit.trusted, 300u);
  EXPECT_NEAR(fit.exponent, 0.5, 0.05);
}

TEST(Weyl, FlatTorusExponentOneFromKrylov) {
  const Geometry g = Geometry::flat_torus(88, 88, 2 * kPi, 2 * kPi);
  LaplaceBeltrami op(g);
  const double threshold = trusted_threshold(g);
  const EigenSystem es = compute_eigensystem(op, 420);
  ASSERT_GT(es.values[419], threshold);
  EXPECT_LE(es.max_residual(op), 1e-8);
  const WeylFit fit = weyl_exponent(es.values, threshold);
  EXPECT_GE(fit.trusted, 300u);
  EXPECT_NEAR(fit.exponent, 1.0, 0.05);
}

TEST(Weyl, TooFewEigenvaluesIsAnError) {
  Vector ten = Vector::LinSpaced(10, 0.0, 9.0);
  EXPECT_THROW(weyl_exponent(ten, 100.0), ValidationError);
}
