#include <gtest/gtest.h>

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <cmath>
#include <numbers>
#include <sstream>

#include "wavemollify/errors.hpp"
#include "wavemollify/kernels.hpp"

using namespace wavemollify;

namespace {

constexpr double kPi = std::numbers::pi;

// Independent oracle: fixed 30-point Gauss rule on uniform pieces of the glue,
// no adaptivity and no shared nodes with the library.
double oracle_fhat(const PlateauFunction& p, double s) {
  using G = boost::math::quadrature::gauss<double, 30>;
  auto g = [&](double x) { return p(x) * std::cos(s * x); };
  const double a = p.plateau_radius, b = p.support_radius;
  const int pieces = 64 + static_cast<int>(std::abs(s) * (b - a));
  double total = 2.0 * (s == 0.0 ? a : std::sin(a * s) / s);
  for (int i = 0; i < pieces; ++i) {
    const double lo = a + (b - a) * i / pieces, hi = a + (b - a) * (i + 1) / pieces;
    total += 2.0 * G::integrate(g, lo, hi);
  }
  return total;
}

const KernelPair& default_kernel() {
  static const KernelPair k;
  return k;
}

}  // namespace

TEST(Plateau, ExactOnPlateauAndOutside) {
  PlateauFunction p{1.0, 2.0};
  EXPECT_EQ(p(0.0), 1.0);
  EXPECT_EQ(p(1.0), 1.0);
  EXPECT_EQ(p(-0.7), 1.0);
  EXPECT_EQ(p(2.5), 0.0);
  EXPECT_EQ(p(-2.0), 0.0);
}

TEST(Plateau, GlueMonotoneEvenAndBounded) {
  PlateauFunction p{1.0, 2.0};
  const double mid = p(1.5);
  EXPECT_GT(mid, 0.0);
  EXPECT_LT(mid, 1.0);
  double prev = 1.0;
  for (int i = 0; i <= 4000; ++i) {
    const double x = 1.0 + i / 4000.0;
    const double v = p(x);
    EXPECT_LE(v, prev);
    EXPECT_GE(v, 0.0);
    EXPECT_EQ(v, p(-x));
    prev = v;
  }
}

TEST(Plateau, FiniteDifferencesStayBounded) {
  // Finite differences of order <= 6 across the glue region, normalized by h^n,
  // must not blow up as the step shrinks; a kink would make them grow like 1/h.
  PlateauFunction p{1.0, 2.0};
  for (int order = 1; order <= 6; ++order) {
    double coarse = 0.0, fine = 0.0;
    for (double h : {1e-2, 5e-3}) {
      double worst = 0.0;
      for (double x = 0.9; x <= 2.1; x += 1e-3) {
        double d = 0.0, binom = 1.0;
        for (int j = 0; j <= order; ++j) {
          d += ((order - j) % 2 == 0 ? 1.0 : -1.0) * binom * p(x + (j - order / 2.0) * h);
          binom = binom * (order - j) / (j + 1);
        }
        worst = std::max(worst, std::abs(d) / std::pow(h, order));
      }
      (h == 1e-2 ? coarse : fine) = worst;
    }
    EXPECT_LT(fine, 1.5 * coarse + 1.0) << "order " << order;
  }
}

TEST(Plateau, RejectsInvertedRadii) {
  EXPECT_THROW((PlateauFunction{2.0, 1.0}.validate()), ValidationError);
  EXPECT_THROW((TimeCutoff{0.0}.validate()), ValidationError);
}

TEST(TimeCutoff, PlateauAndSupport) {
  TimeCutoff phi{0.5};
  EXPECT_EQ(phi(0.5), 1.0);
  EXPECT_EQ(phi(-0.3), 1.0);
  EXPECT_EQ(phi(1.0), 0.0);
  EXPECT_GT(phi(0.75), 0.0);
  EXPECT_EQ(phi(0.75), phi(-0.75));
}

TEST(Transform, ValueAtZeroBetweenIndicators) {
  const auto& f = default_kernel().transform();
  EXPECT_GE(f(0.0), 2.0);
  EXPECT_LE(f(0.0), 4.0);
}

TEST(Transform, EvenAndMatchesOracle) {
  const auto& k = default_kernel();
  const auto& f = k.transform();
  for (double s : {0.0, 0.3, 1.0, 2.71828, 7.5, 16.0, 33.3, 64.0, 100.1, 257.0, 800.0}) {
    EXPECT_NEAR(f(s), f(-s), 1e-14);
    EXPECT_NEAR(f(s), oracle_fhat(k.plateau(), s), 2e-12) << "s=" << s;
  }
}

TEST(Transform, Plancherel) {
  const auto& f = default_kernel().transform();
  using GK = boost::math::quadrature::gauss_kronrod<double, 61>;
  PlateauFunction p{1.0, 2.0};
  const double lhs_direct =
      2.0 + 2.0 * GK::integrate([&](double x) { return p(x) * p(x); }, 1.0, 2.0, 20, 1e-15);
  // (1/2pi) \int |F^|^2 over R = (1/pi) \int_0^inf |F^|^2; the table tail is below 1e-20.
  double rhs = 0.0;
  const double step = 0.05;
  for (double s = 0.0; s < 600.0; s += step) {
    rhs += GK::integrate([&](double t) { return f(t) * f(t); }, s, s + step, 0, 0.0);
  }
  rhs /= kPi;
  EXPECT_NEAR(rhs / lhs_direct, 1.0, 1e-8);
}

TEST(Transform, DecaysFasterThanPowerEight) {
  const auto& f = default_kernel().transform();
  EXPECT_GE(f.fitted_decay_exponent(64.0), 8.0);
}

TEST(Transform, CsvHasHeaderAndEvenGrid) {
  const auto& f = default_kernel().transform();
  std::ostringstream out;
  f.write_csv(out);
  const std::string text = out.str();
  EXPECT_EQ(text.rfind("s,Fhat\n", 0), 0u);
  EXPECT_EQ(text.find("0,", 7), 7u);
}

TEST(Transform, OutOfRangeThrows) {
  const auto& f = default_kernel().transform();
  EXPECT_THROW(f(f.max_s() * 2.0), ValidationError);
}

TEST(Multiplier, DiagnosticModeIsFourierInversion) {
  const auto& k = default_kernel();
  for (double eps : {0.25, 0.125, 1.0 / 64}) {
    for (double lam : {0.0, 1.0, 3.7, 5.0, 6.0, 7.9, 12.0}) {
      const double x = eps * lam;
      if (x > 2.5) continue;
      const auto m = multiplier(lam, eps, k, CutoffMode::kUnit);
      EXPECT_NEAR(m.value, k.plateau()(x), 1e-10) << eps << " " << lam;
    }
  }
}

TEST(Multiplier, TruncationTailWithinReportedBound) {
  const auto& k = default_kernel();
  for (int j = 2; j <= 8; ++j) {
    const double eps = std::ldexp(1.0, -j);
    for (double x : {0.0, 0.5, 1.0, 1.3, 1.7, 2.0, 3.0}) {
      const auto m = multiplier(x / eps, eps, k);
      EXPECT_LE(std::abs(m.value - k.plateau()(x)), m.tail_bound + 1e-13)
          << "eps=2^-" << j << " x=" << x;
    }
  }
}

TEST(Multiplier, UnitAtZeroOnceTailIsSmall) {
  // The truncation tail at eps = 1/4 is about 1.6e-2 for c = 1; 1e-8 is only
  // reached from eps = 2^-6 on. See the ledger.
  const auto& k = default_kernel();
  for (int j = 6; j <= 8; ++j) {
    const double eps = std::ldexp(1.0, -j);
    EXPECT_NEAR(multiplier(0.0, eps, k).value, 1.0, 1e-8);
    EXPECT_LE(std::abs(multiplier(3.0 / eps, eps, k).value), 1e-6);
  }
  const auto coarse = multiplier(0.0, 0.25, k);
  EXPECT_LE(std::abs(coarse.value - 1.0), coarse.tail_bound);
}

TEST(Multiplier, SupremumBound) {
  const auto& k = default_kernel();
  for (int j = 2; j <= 6; ++j) {
    const double eps = std::ldexp(1.0, -j);
    SpectralMultiplier m(k, eps, 4.0 / eps);
    for (int i = 0; i <= 400; ++i) {
      EXPECT_LE(std::abs(m(i * 0.01 / eps)), 1.0 + m.tail_bound());
    }
  }
}

TEST(Multiplier, EvaluateMatchesPointwise) {
  const auto& k = default_kernel();
  SpectralMultiplier m(k, 0.125, 40.0);
  std::vector<double> f = {3.0, 0.0, 3.0, 17.5, 40.0};
  const auto v = m.evaluate(f);
  for (std::size_t i = 0; i < f.size(); ++i) EXPECT_EQ(v[i], m(f[i]));
  EXPECT_THROW(m(41.0), ValidationError);
}

TEST(Multiplier, TailBoundDecreases) {
  const auto& k = default_kernel();
  double prev = 1e300;
  for (int j = 2; j <= 8; ++j) {
    const double t = tail_bound(std::ldexp(1.0, -j), k);
    EXPECT_LT(t, prev);
    prev = t;
  }
}

TEST(Mollifier, MatchesDirectFormula) {
  const auto& k = default_kernel();
  const double eps = 1.0 / 16;
  LineGrid grid{-3.0, eps / 16, 6 * 16 * 16 + 1};
  const auto mu = euclidean_mollifier(eps, k, grid);
  for (std::size_t i = 0; i < grid.count; i += 7) {
    const double x = grid.at(i);
    const double direct = k.cutoff()(x) * oracle_fhat(k.plateau(), x / eps) / (2 * kPi * eps);
    EXPECT_NEAR(mu[i], direct, 1e-10 * (1.0 / eps) + 1e-10 * std::abs(direct));
  }
}

TEST(Mollifier, MomentsWithinTailBound) {
  const KernelPair k({1.0, 2.0}, {1.0}, 0x1p-7);
  for (int j = 2; j <= 7; ++j) {
    const double eps = std::ldexp(1.0, -j);
    const double h = eps / 16;
    const auto n = static_cast<std::size_t>(std::round(4.2 / h));
    LineGrid grid{-2.1, h, n + 1};
    const auto mu = euclidean_mollifier(eps, k, grid);
    for (int order = 0; order <= 6; ++order) {
      double moment = 0.0;
      for (std::size_t i = 0; i < grid.count; ++i) moment += h * std::pow(grid.at(i), order) * mu[i];
      const double target = order == 0 ? 1.0 : 0.0;
      EXPECT_LE(std::abs(moment - target), moment_tail_bound(order, eps, k) + 1e-13)
          << "eps=2^-" << j << " n=" << order;
    }
  }
}

TEST(Mollifier, UnderResolvedGridThrows) {
  EXPECT_THROW(euclidean_mollifier(0.125, default_kernel(), LineGrid{0.0, 0.1, 10}),
               ValidationError);
}
