#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "test_support.hpp"
#include "wavewhittle/wavelet.hpp"

using namespace ww;
using ww::test::error_code_of;

TEST(Daubechies, TwoTapClosedForm) {
  const double s3 = std::sqrt(3.0), c = 4.0 * std::sqrt(2.0);
  const double expect[] = {(1 + s3) / c, (3 + s3) / c, (3 - s3) / c, (1 - s3) / c};
  const auto f = build_daubechies_filters(2);
  ASSERT_EQ(f.scaling_filter.size(), 4u);
  for (int k = 0; k < 4; ++k) EXPECT_NEAR(f.scaling_filter[k], expect[k], 1e-14);
  EXPECT_EQ(f.support_length, 3);
}

TEST(Daubechies, FourMomentTaps) {
  // published db4 low-pass taps
  const double expect[] = {0.2303778133088964, 0.7148465705529154,  0.6308807679298587,
                           -0.0279837694168599, -0.1870348117190931, 0.0308413818355607,
                           0.0328830116668852, -0.0105974017850690};
  const auto f = build_daubechies_filters(4);
  ASSERT_EQ(f.scaling_filter.size(), 8u);
  for (int k = 0; k < 8; ++k) EXPECT_NEAR(f.scaling_filter[k], expect[k], 1e-12);
}

class FamilyOrders : public ::testing::TestWithParam<int> {};

TEST_P(FamilyOrders, FilterInvariants) {
  const int M = GetParam();
  const auto f = build_daubechies_filters(M);
  const auto& h = f.scaling_filter;
  const auto& g = f.wavelet_filter;
  const int L = static_cast<int>(h.size());
  ASSERT_EQ(L, 2 * M);
  EXPECT_EQ(f.support_length, L - 1);
  EXPECT_NEAR(std::accumulate(h.begin(), h.end(), 0.0), std::sqrt(2.0), 1e-12);
  for (int k = 0; k < L; ++k) EXPECT_DOUBLE_EQ(g[k], (k % 2 ? -1.0 : 1.0) * h[L - 1 - k]);
  // orthonormality of even shifts, for both filters
  for (int m = 0; 2 * m < L; ++m) {
    double sh = 0, sg = 0, cross = 0;
    for (int k = 0; k + 2 * m < L; ++k) {
      sh += h[k] * h[k + 2 * m];
      sg += g[k] * g[k + 2 * m];
    }
    for (int k = 0; k < L; ++k)
      if (k + 2 * m < L) cross += h[k] * g[k + 2 * m];
    EXPECT_NEAR(sh, m == 0 ? 1.0 : 0.0, 1e-10);
    EXPECT_NEAR(sg, m == 0 ? 1.0 : 0.0, 1e-10);
    EXPECT_NEAR(cross, 0.0, 1e-10);
  }
  // vanishing moments of the high-pass filter
  for (int m = 0; m < M; ++m) {
    double s = 0, scale = 0;
    for (int k = 0; k < L; ++k) {
      s += std::pow(k, m) * g[k];
      scale += std::pow(k, m) * std::abs(g[k]);
    }
    EXPECT_NEAR(s / scale, 0.0, 1e-10) << "moment " << m;
  }
}

TEST_P(FamilyOrders, RegularityConstant) {
  const int M = GetParam();
  double binom = 1;
  for (int i = 1; i <= M - 1; ++i) binom = binom * (M + i) / i;  // C(2M-1, M-1)
  EXPECT_NEAR(daubechies_regularity(M), M - 0.5 * std::log2(binom), 1e-12);
  if (M == 2) EXPECT_NEAR(daubechies_regularity(2), 1.2075187496394219, 1e-12);
  EXPECT_DOUBLE_EQ(build_daubechies_filters(M).regularity, daubechies_regularity(M));
}

INSTANTIATE_TEST_SUITE_P(AllOrders, FamilyOrders, ::testing::Range(2, 11));

TEST(Daubechies, OrderOutsideRange) {
  EXPECT_EQ(error_code_of([] { build_daubechies_filters(1); }), ErrorCode::UnsupportedOrder);
  EXPECT_EQ(error_code_of([] { build_daubechies_filters(11); }), ErrorCode::UnsupportedOrder);
}

TEST(CoefficientCount, Examples) {
  EXPECT_EQ(coefficient_count(3600, 4, 7), 218);
  EXPECT_EQ(coefficient_count(10, 4, 7), 0);
  // the five-scale total at N = 3600, j = 4..8 depends on the family
  auto total = [](int T) {
    int n = 0;
    for (int j = 4; j <= 8; ++j) n += coefficient_count(3600, j, T);
    return n;
  };
  EXPECT_EQ(total(7), 404);
  EXPECT_EQ(total(3), 424);
}

TEST(CoefficientCount, MaxScaleKeepsFourCoefficients) {
  for (int N : {64, 100, 3600, 4096}) {
    for (int T : {3, 7}) {
      const int j = max_scale(N, T, 4);
      EXPECT_GE(coefficient_count(N, j, T), 4);
      EXPECT_LT(coefficient_count(N, j + 1, T), 4);
    }
  }
}

TEST(Pyramid, MatchesDirectOracle) {
  for (int M : {2, 4, 6}) {
    const auto fam = build_daubechies_filters(M);
    for (int N : {64, 256, 512}) {
      const auto panel = ww::test::noise_panel(N, 2, 100 + N + M);
      const int j1 = std::min(5, max_scale(N, fam.support_length, 4));
      if (j1 < 1) continue;
      const auto pyr = pyramid_transform(panel, fam, 1, j1);
      for (int j = 1; j <= j1; ++j)
        for (int k = 0; k < pyr.count(j); ++k)
          for (int c = 0; c < 2; ++c)
            ASSERT_NEAR(pyr.at(j)(k, c), direct_transform_oracle(panel, fam, j, k, c), 1e-10)
                << "M=" << M << " N=" << N << " j=" << j << " k=" << k;
    }
  }
}

TEST(Pyramid, FirstLevelIsFilterDotProduct) {
  const auto fam = build_daubechies_filters(3);
  const auto panel = ww::test::noise_panel(64, 1, 5);
  const auto pyr = pyramid_transform(panel, fam, 1, 2);
  for (int k = 0; k < pyr.count(1); ++k) {
    double s = 0;
    for (int n = 0; n < 6; ++n) s += fam.wavelet_filter[n] * panel.values(2 * k + n, 0);
    EXPECT_NEAR(pyr.at(1)(k, 0), s, 1e-12);
    EXPECT_NEAR(direct_transform_oracle(panel, fam, 1, k, 0), s, 1e-12);
  }
}

TEST(Pyramid, CountsFollowFormula) {
  const auto fam = build_daubechies_filters(4);
  const auto pyr = pyramid_transform(ww::test::noise_panel(3600, 1, 1), fam, 2, 8);
  for (int j = 2; j <= 8; ++j) {
    EXPECT_EQ(pyr.count(j), coefficient_count(3600, j, 7));
    EXPECT_EQ(pyr.at(j).rows(), pyr.count(j));
    if (j > 2) {
      EXPECT_LE(pyr.count(j), pyr.count(j - 1));
      EXPECT_GE(pyr.count(j), pyr.count(j - 1) / 2 - 7);
    }
  }
}

TEST(Pyramid, AnnihilatesLowDegreePolynomials) {
  for (int M : {2, 3, 5}) {
    const auto fam = build_daubechies_filters(M);
    const int N = 1024;
    for (int deg = 0; deg < M; ++deg) {
      Eigen::MatrixXd x(N, 1);
      for (int t = 0; t < N; ++t) x(t, 0) = std::pow((t - N / 2.0) / N, deg) + 3.0;
      const auto pyr = pyramid_transform(make_panel(x), fam, 1, 4);
      for (int j = 1; j <= 4; ++j) EXPECT_LT(pyr.at(j).cwiseAbs().maxCoeff(), 1e-8) << "M=" << M << " deg=" << deg;
    }
  }
}

TEST(Pyramid, ColumnsAreIndependent) {
  const auto fam = build_daubechies_filters(2);
  const auto panel = ww::test::noise_panel(512, 3, 9);
  const auto full = pyramid_transform(panel, fam, 1, 5);
  for (int c = 0; c < 3; ++c) {
    const auto single = pyramid_transform(make_panel(panel.values.col(c)), fam, 1, 5);
    for (int j = 1; j <= 5; ++j) EXPECT_EQ(single.at(j).col(0), full.at(j).col(c));
  }
}

TEST(Pyramid, Errors) {
  const auto fam = build_daubechies_filters(2);
  const auto panel = ww::test::noise_panel(64, 1, 1);
  EXPECT_EQ(error_code_of([&] { pyramid_transform(panel, fam, 0, 2); }), ErrorCode::InvalidArgument);
  EXPECT_EQ(error_code_of([&] { pyramid_transform(panel, fam, 1, 6); }), ErrorCode::SeriesTooShort);
  auto bad = panel;
  bad.values(10, 0) = std::nan("");
  EXPECT_EQ(error_code_of([&] { pyramid_transform(bad, fam, 1, 2); }), ErrorCode::NonFiniteInput);
  bad.values(10, 0) = INFINITY;
  EXPECT_EQ(error_code_of([&] { pyramid_transform(bad, fam, 1, 2); }), ErrorCode::NonFiniteInput);
  EXPECT_EQ(error_code_of([&] { direct_transform_oracle(panel, fam, 2, 1000, 0); }), ErrorCode::IndexOutOfRange);
}

TEST(PeriodicTransform, PreservesEnergy) {
  for (int M : {2, 4, 8}) {
    const auto fam = build_daubechies_filters(M);
    const auto x = ww::test::gaussian_matrix(1024, 1, M);
    std::vector<double> v(x.data(), x.data() + x.size());
    const auto pt = periodic_transform(v, fam, 10);
    double e = 0;
    for (const auto& d : pt.details)
      for (double c : d) e += c * c;
    for (double c : pt.smooth) e += c * c;
    EXPECT_NEAR(e, x.squaredNorm(), 1e-8 * x.squaredNorm());
  }
}

TEST(PeriodicTransform, ReversalNeedsMirroredFilters) {
  // extremal-phase filters are not symmetric: reversing the series changes the level energies,
  // reversing the taps as well maps the first-level details onto a permutation of themselves
  const auto fam = build_daubechies_filters(2);
  auto mirrored = fam;
  std::reverse(mirrored.scaling_filter.begin(), mirrored.scaling_filter.end());
  std::reverse(mirrored.wavelet_filter.begin(), mirrored.wavelet_filter.end());
  const auto x = ww::test::gaussian_matrix(256, 1, 3);
  std::vector<double> v(x.data(), x.data() + x.size()), r(v.rbegin(), v.rend());
  auto energy = [](const std::vector<double>& d) { return std::inner_product(d.begin(), d.end(), d.begin(), 0.0); };
  const auto a = periodic_transform(v, fam, 4), b = periodic_transform(r, mirrored, 1),
             c = periodic_transform(r, fam, 4);
  EXPECT_NEAR(energy(a.details[0]), energy(b.details[0]), 1e-10 * energy(a.details[0]));
  double gap = 0;
  for (int j = 0; j < 4; ++j) gap = std::max(gap, std::abs(energy(a.details[j]) - energy(c.details[j])));
  EXPECT_GT(gap, 1e-3);
}

TEST(Panel, RejectsMismatchedNames) {
  EXPECT_EQ(error_code_of([] { make_panel(Eigen::MatrixXd::Zero(4, 2), {"a"}); }), ErrorCode::InvalidArgument);
}
