#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "test_support.hpp"
#include "wavewhittle/kernels.hpp"

using namespace ww;
using ww::test::error_code_of;

namespace {

constexpr double kPi = std::numbers::pi;

SpectralKernels& db2() {
  static SpectralKernels sk(build_daubechies_filters(2));
  return sk;
}

}  // namespace

TEST(PsiHat, ZeroMeanAndDecay) {
  for (int M : {2, 4, 7}) {
    PsiHatEvaluator psi(build_daubechies_filters(M));
    EXPECT_LT(std::abs(psi(0.0)), 1e-8);
    const double a = daubechies_regularity(M);
    double c_near = 0, c_far = 0;
    for (double l = 1; l <= 10; l += 0.01) c_near = std::max(c_near, std::abs(psi(l)) * std::pow(1 + l, a));
    for (double l = 10; l <= 1000; l += 0.05) c_far = std::max(c_far, std::abs(psi(l)) * std::pow(1 + l, a));
    EXPECT_LT(c_far, 1.5 * c_near) << "M=" << M;
  }
}

TEST(PsiHat, DyadicRecursionMatchesDirect) {
  PsiHatEvaluator psi(build_daubechies_filters(3));
  cplx out[6];
  for (double xi : {0.3, 2.0, -7.5, 40.0}) {
    psi.psi_hat_dyadic(xi, 5, out);
    // the two paths truncate the infinite product at different depths
    for (int u = 0; u <= 5; ++u) EXPECT_LT(std::abs(out[u] - psi(std::ldexp(xi, -u))), 2e-9);
  }
}

TEST(KernelK, ParsevalAtZero) {
  for (int M : {2, 3, 4, 6, 10}) {
    SpectralKernels sk(build_daubechies_filters(M));
    EXPECT_NEAR(sk.K(0.0), 2 * kPi, 1e-5) << "M=" << M;
  }
}

TEST(KernelK, IndependentQuadratureValues) {
  // db2; independent Gauss-Legendre panel quadrature of |lambda|^{-delta}|psi_hat|^2
  const std::pair<double, double> ref[] = {{-0.5, 14.558972874962084}, {0.2, 4.570537425650504},
                                           {0.4, 3.3529086400348294},  {0.6, 2.479100520036527},
                                           {0.8, 1.8469424024053056},  {1.6, 0.6138196567671986}};
  for (auto [d, v] : ref) EXPECT_NEAR(db2().K(d), v, 1e-8 * v) << "delta=" << d;
}

TEST(KernelK, PositiveAndDomain) {
  for (double d : {-0.5, 0.0, 0.4, 0.8, 1.6}) EXPECT_GT(db2().K(d), 0.0);
  const double a = daubechies_regularity(2);
  EXPECT_EQ(error_code_of([&] { db2().K(-a - 0.5); }), ErrorCode::DomainError);
  EXPECT_EQ(error_code_of([&] { db2().K(4.1); }), ErrorCode::DomainError);
}

TEST(KernelK, ToleranceHalvingWithinErrorEstimate) {
  KernelSettings fine;
  fine.quad_tol = 5e-9;
  SpectralKernels sk2(build_daubechies_filters(2), fine);
  for (double d : {0.0, 0.4, 0.8})
    EXPECT_LE(std::abs(db2().K(d) - sk2.K(d)), std::max(db2().K_error(d), 1e-12)) << d;
}

TEST(KernelK, ContinuousInDelta) {
  for (double d : {-0.4, 0.0, 0.3, 0.7, 1.2}) EXPECT_LE(std::abs(db2().K(d + 1e-4) - db2().K(d)), 1e-2);
}

TEST(GPsi, IntegratesToK) {
  // composite Gauss-Legendre over (-pi, pi), avoiding lambda = 0
  static const double x[] = {-0.9602898564975363, -0.7966664774136267, -0.5255324099163290,
                             -0.1834346424956498, 0.1834346424956498,  0.5255324099163290,
                             0.7966664774136267,  0.9602898564975363};
  static const double w[] = {0.1012285362903763, 0.2223810344533745, 0.3137066458778873,
                             0.3626837833783620, 0.3626837833783620, 0.3137066458778873,
                             0.2223810344533745, 0.1012285362903763};
  for (double d : {0.0, 0.4}) {
    double s = 0;
    const int panels = 64;
    for (int side : {-1, 1})
      for (int i = 0; i < panels; ++i) {
        // graded panels toward 0 on each side
        const double a = kPi * std::pow(static_cast<double>(i) / panels, 2);
        const double b = kPi * std::pow(static_cast<double>(i + 1) / panels, 2);
        for (int k = 0; k < 8; ++k) {
          const double l = 0.5 * (a + b) + 0.5 * (b - a) * x[k];
          s += 0.5 * (b - a) * w[k] * db2().g_psi(side * l, d);
        }
      }
    EXPECT_NEAR(s, db2().K(d), 2e-8 * db2().K(d)) << d;
  }
}

TEST(GPsi, NonNegativeAndEven) {
  for (int i = 1; i < 1024; ++i) {
    const double l = -kPi + 2 * kPi * i / 1024.0;
    if (l == 0.0) continue;
    EXPECT_GE(db2().g_psi(l, 0.0), 0.0);
    EXPECT_NEAR(db2().g_psi(l, 0.4), db2().g_psi(-l, 0.4), 1e-12 * db2().g_psi(l, 0.4));
  }
  EXPECT_EQ(error_code_of([] { db2().D_u_inf(0.0, 0, 0.4); }), ErrorCode::SingularityError);
}

TEST(GPsi, WiderFoldingChangesLittle) {
  for (double l : {0.3, 1.7, -2.9}) {
    const double g100 = db2().g_psi_truncated(l, 0.4, 100);
    const double g200 = db2().g_psi_truncated(l, 0.4, 200);
    EXPECT_GT(g200, g100);
    EXPECT_LT(g200 - g100, 10.0 * db2().g_tail_correction(0.4));
  }
}

TEST(DKernel, ScaleZeroIsFoldedDensity) {
  for (double l : {0.2, 1.0, -2.5}) {
    const auto D = db2().D_u_inf(l, 0, 0.4);
    ASSERT_EQ(D.size(), 1u);
    EXPECT_NEAR(D[0].real(), db2().g_psi_truncated(l, 0.4, 100), 1e-12);
    EXPECT_NEAR(D[0].imag(), 0.0, 1e-14);
  }
}

TEST(DKernel, BruteForceDoubleSum) {
  const double l = kPi / 3;
  const auto D = db2().D_u_inf(l, 1, 0.4, 200);
  for (int tau = 0; tau < 2; ++tau) {
    cplx s = 0;
    for (int t = -200; t <= 200; ++t) {
      const double xi = l + 2 * kPi * t;
      s += std::pow(std::abs(xi), -0.4) * std::conj(db2().psi_hat(xi)) * db2().psi_hat(xi / 2) / std::sqrt(2.0) *
           std::polar(1.0, tau * xi / 2);
    }
    EXPECT_LT(std::abs(D[tau] - s), 1e-10 * std::abs(s)) << tau;
  }
  // white noise: orthonormal scales do not mix
  for (const auto& v : db2().D_u_inf(l, 1, 0.0, 400)) EXPECT_LT(std::abs(v), 1e-3);
}

TEST(KernelI, BoundedAtScaleZero) {
  for (double d : {0.0, 0.4, 0.8}) EXPECT_LE(db2().tilde_I_u(0, d, d), 1.0);
  EXPECT_NEAR(2 * kPi * db2().tilde_I_u(0, 0.0, 0.0), 1.0, 1e-8);
}

TEST(KernelI, Symmetric) {
  for (int u : {0, 1, 2}) {
    const double a = db2().tilde_I_u(u, 0.2, 0.7), b = db2().tilde_I_u(u, 0.7, 0.2);
    EXPECT_NEAR(a, b, 1e-8 * std::max(1e-3, std::abs(a))) << u;
  }
}

TEST(KernelI, ImaginaryPartNegligible) {
  const auto r = db2().I_batch({{0.4, 0.8}, {0.3, 0.3}}, 3);
  for (size_t p = 0; p < 2; ++p)
    for (int u = 0; u <= 3; ++u) EXPECT_LT(std::abs(r.I_im[p][u]), 1e-8);
}

TEST(KernelI, TrapezoidOracleAtZero) {
  // int g(lambda; 0)^2 / K(0)^2 on a uniform periodic grid with |t| <= 200 folding
  const int n = 512;
  double s = 0;
  for (int i = 0; i < n; ++i) {
    const double l = -kPi + 2 * kPi * (i + 0.5) / n;
    double g = 0;
    for (int t = -200; t <= 200; ++t) g += std::norm(db2().psi_hat(l + 2 * kPi * t));
    s += g * g;
  }
  s *= 2 * kPi / n / std::pow(2 * kPi, 2);
  EXPECT_NEAR(db2().tilde_I_u(0, 0.0, 0.0), s, 1e-4);
}

TEST(KernelI, IndependentGridValues) {
  // db2; frequency-grid oracle of the tau-sum form with |t| <= 2000
  struct Ref {
    int u;
    double d1, d2, v;
  };
  const Ref ref[] = {{0, 0.4, 0.4, 0.1607533600565012},
                     {0, 0.8, 0.8, 0.1654941898413149},
                     {0, 0.2, 0.6, 0.16034913345344007},
                     {1, 0.8, 0.8, 0.0033560645360768034},
                     {2, 0.4, 0.8, 0.0010485726471816306}};
  for (const auto& r : ref) EXPECT_NEAR(db2().tilde_I_u(r.u, r.d1, r.d2), r.v, 1e-6) << r.u << " " << r.d1;
}

TEST(EtaKappa, ClosedForms) {
  auto [e0, k0] = eta_kappa(0);
  EXPECT_DOUBLE_EQ(e0, 0.0);
  EXPECT_DOUBLE_EQ(k0, 0.0);
  auto [e1, k1] = eta_kappa(1);
  EXPECT_NEAR(e1, 1.0 / 3, 1e-15);
  EXPECT_NEAR(k1, 2.0 / 9, 1e-15);
  auto [e50, k50] = eta_kappa(50);
  EXPECT_NEAR(e50, 1.0, 1e-10);
  EXPECT_NEAR(k50, 2.0, 1e-8);
  auto [ei, ki] = eta_kappa(kInfiniteDelta);
  EXPECT_EQ(ei, 1.0);
  EXPECT_EQ(ki, 2.0);
}

class AggregatedKernels : public ::testing::Test {
protected:
  static void SetUpTestSuite() {
    table_ = new KernelTable(build_kernel_table(db2(), {0.0, 0.4, 0.8},
                                                {{0.0, 0.0}, {0.4, 0.4}, {0.8, 0.8}, {0.4, 0.8}}, 40,
                                                kInfiniteDelta));
  }
  static void TearDownTestSuite() { delete table_; }
  static KernelTable* table_;
};
KernelTable* AggregatedKernels::table_ = nullptr;

TEST_F(AggregatedKernels, DeltaZeroIsDegenerate) {
  EXPECT_EQ(error_code_of([] { script_I_Delta(0, 0.4, 0.4, *table_); }), ErrorCode::DegenerateDelta);
  EXPECT_EQ(error_code_of([] { script_I_dG_Delta(0, 0.4, 0.4, *table_); }), ErrorCode::DegenerateDelta);
}

TEST_F(AggregatedKernels, GKernelTwoTermExpansion) {
  const auto& t = *table_;
  for (auto [a, b] : {std::pair{0.4, 0.4}, std::pair{0.4, 0.8}}) {
    const double coef = (std::exp2(a) + std::exp2(b)) / 2;
    EXPECT_NEAR(script_I_G_Delta(1, a, b, t), t.I_tilde(0, a, b) + coef * (2.0 / 3) * t.I_tilde(1, a, b), 1e-15);
    EXPECT_NEAR(script_I_G_Delta(1, a, b, t, GWeight::Printed),
                t.I_tilde(0, a, b) + coef * (7.0 / 6) * t.I_tilde(1, a, b), 1e-15);
  }
}

TEST_F(AggregatedKernels, CrossKernelHandExpansion) {
  // Delta = 1: eta = 1/3, kappa = 2/9, weight (2 - 1/4)/(3/2) = 7/6, eta_0 = 0
  const auto& t = *table_;
  EXPECT_NEAR(script_I_dG_Delta(1, 0.0, 0.0, t), 3.5 * t.I_tilde(1, 0.0, 0.0), 1e-15);
}

TEST_F(AggregatedKernels, CrossKernelSwapChangesOnlyEtaTerm) {
  const auto& t = *table_;
  for (int D : {2, 4, 7}) {
    auto [eta, kappa] = eta_kappa(D);
    double expect = 0;
    for (int u = 1; u <= D; ++u)
      expect += std::ldexp(1.0, -u) * t.I_tilde(u, 0.4, 0.8) * (std::exp2(-u * 0.8) - std::exp2(-u * 0.4)) *
                eta_kappa(D - u).first;
    expect /= kappa;
    EXPECT_NEAR(script_I_dG_Delta(D, 0.4, 0.8, t) - script_I_dG_Delta(D, 0.8, 0.4, t), expect, 1e-14);
    EXPECT_TRUE(std::isfinite(script_I_dG_Delta(D, 0.8, 0.8, t)));
  }
}

TEST_F(AggregatedKernels, GKernelConvergesInDelta) {
  const auto& t = *table_;
  for (double d : {0.0, 0.4, 0.8}) {
    const double inf = script_I_G_Delta(kInfiniteDelta, d, d, t);
    double prev = -1;
    for (int D = 1; D <= 12; ++D) {
      const double v = script_I_G_Delta(D, d, d, t);
      EXPECT_GE(v, prev - 1e-12);
      prev = v;
    }
    EXPECT_NEAR(prev, inf, 1e-3);
  }
}

TEST_F(AggregatedKernels, InfiniteSeriesMatchesLongFiniteSum) {
  const auto& t = *table_;
  double s = t.I_tilde(0, 0.4, 0.8);
  for (int u = 1; u <= 40; ++u) s += (std::exp2(0.4 * u) + std::exp2(0.8 * u)) * std::ldexp(1.0, -u) * t.I_tilde(u, 0.4, 0.8);
  EXPECT_NEAR(script_I_Delta(kInfiniteDelta, 0.4, 0.8, t), s, 1e-9);
}

TEST_F(AggregatedKernels, AssembledEqualsPrintedWhereTheyCoincide) {
  const auto& t = *table_;
  // the G form with exponents equal to the arguments is the displayed form
  for (int D : {1, 3, 6, kInfiniteDelta})
    EXPECT_NEAR(assembled_I_G(D, 0.4, 0.8, 0.4, 0.8, t), script_I_G_Delta(D, 0.4, 0.8, t), 1e-14);
  EXPECT_NEAR(assembled_I_d(kInfiniteDelta, 0.4, 0.8, 0.4, 0.8, t), script_I_Delta(kInfiniteDelta, 0.4, 0.8, t), 1e-14);
  // white noise: only the scale-zero term survives
  for (int D : {1, 4})
    EXPECT_NEAR(assembled_I_d(D, 0.0, 0.0, 0.0, 0.0, t), 2.0 / eta_kappa(D).second * t.I_tilde(0, 0, 0), 1e-7);
}

TEST_F(AggregatedKernels, ScalePairWeights) {
  // Q_0 = kappa; Q_u at Delta = 1
  for (int D : {1, 3, 8}) EXPECT_NEAR(scale_pair_weight(D, 0), eta_kappa(D).second, 1e-14);
  EXPECT_NEAR(scale_pair_weight(1, 1), (2.0 / 3) * (-1.0 / 3) * (2.0 / 3), 1e-15);
}

TEST(AggregatedKernelsDivergence, LargeDeltaSeries) {
  // the cross-scale kernels decay fast enough that the series still contracts at delta = 1.2
  auto t = build_kernel_table(db2(), {1.2}, {{1.2, 1.2}}, 40, kInfiniteDelta);
  EXPECT_TRUE(std::isfinite(script_I_Delta(kInfiniteDelta, 1.2, 1.2, t)));
  EXPECT_NO_THROW(script_I_Delta(4, 1.2, 1.2, t));
  // flat kernels: terms grow like 2^{0.2 u}
  for (auto& [key, v] : t.I_tilde_values)
    if (std::get<0>(key) >= 1) v = 1.0;
  EXPECT_EQ(error_code_of([&] { script_I_Delta(kInfiniteDelta, 1.2, 1.2, t); }), ErrorCode::DivergentSeries);
  EXPECT_NO_THROW(script_I_Delta(4, 1.2, 1.2, t));
}

TEST(KernelTableIO, JsonRoundTripIsExact) {
  const auto t = build_kernel_table(db2(), {0.1, 0.3}, {{0.1, 0.3}, {0.3, 0.3}}, 3, 3);
  const auto back = kernel_table_from_json(kernel_table_to_json(t));
  EXPECT_EQ(back.family, t.family);
  EXPECT_EQ(back.M, t.M);
  EXPECT_EQ(back.max_u, 3);
  EXPECT_EQ(back.K(0.1), t.K(0.1));
  for (int u = 0; u <= 3; ++u) EXPECT_EQ(back.I_tilde(u, 0.3, 0.1), t.I_tilde(u, 0.1, 0.3));
  EXPECT_EQ(error_code_of([] { kernel_table_from_json("{\"format\": \"other\"}"); }), ErrorCode::ParseError);
  EXPECT_EQ(error_code_of([&] { t.I_tilde(4, 0.1, 0.3); }), ErrorCode::DomainError);
  EXPECT_EQ(error_code_of([&] { t.K(0.2); }), ErrorCode::DomainError);
}

TEST(KernelTableGrid, InterpolationAccuracy) {
  const auto g = build_kernel_grid(db2(), 0.0, 0.6, 0.04, 2, 2);
  const auto e = build_kernel_table(db2(), {0.13, 0.37}, {{0.13, 0.37}}, 2, 2);
  EXPECT_NEAR(g.K(0.13), e.K(0.13), 1e-6 * e.K(0.13));
  for (int u = 0; u <= 2; ++u)
    EXPECT_NEAR(g.I_tilde(u, 0.13, 0.37), e.I_tilde(u, 0.13, 0.37), 1e-6 * std::abs(e.I_tilde(0, 0.13, 0.37)));
  EXPECT_EQ(error_code_of([&] { g.K(0.9); }), ErrorCode::DomainError);
  const auto back = kernel_table_from_json(kernel_table_to_json(g));
  EXPECT_EQ(back.I_tilde(1, 0.13, 0.37), g.I_tilde(1, 0.13, 0.37));
}
