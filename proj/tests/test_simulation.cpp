#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "test_support.hpp"
#include "wavewhittle/simulation.hpp"
#include "wavewhittle/stats.hpp"

using namespace ww;
using ww::test::error_code_of;

namespace {

constexpr double kPi = std::numbers::pi;

SimulationSpec univariate(double d, int N, std::uint64_t seed, int trunc = 0) {
  SimulationSpec s;
  s.p = 1;
  s.d = Eigen::VectorXd::Constant(1, d);
  s.omega = Eigen::MatrixXd::Identity(1, 1);
  s.N = N;
  s.seed = seed;
  s.ma_truncation = trunc;
  return s;
}

// uncentred sample autocovariance (the process mean is known to be zero)
double autocov(const Eigen::VectorXd& x, int k) {
  const int n = static_cast<int>(x.size());
  return x.head(n - k).dot(x.tail(n - k)) / n;
}

double autocov(const std::vector<double>& x, int k) {
  return autocov(Eigen::Map<const Eigen::VectorXd>(x.data(), x.size()), k);
}

}  // namespace

TEST(FractionalMA, Recursion) {
  const auto psi = fractional_ma_coefficients(0.4, 4);
  ASSERT_EQ(psi.size(), 5u);
  EXPECT_DOUBLE_EQ(psi[0], 1.0);
  EXPECT_NEAR(psi[1], 0.4, 1e-15);
  EXPECT_NEAR(psi[2], 0.28, 1e-15);
  EXPECT_NEAR(psi[3], 0.224, 1e-15);
  const auto flat = fractional_ma_coefficients(0.0, 10);
  for (size_t k = 1; k < flat.size(); ++k) EXPECT_EQ(flat[k], 0.0);
  EXPECT_EQ(error_code_of([] { fractional_ma_coefficients(0.5, 10); }), ErrorCode::DomainError);
}

TEST(FractionalMA, SquaredSumMatchesVarianceWithTail) {
  for (double d : {0.1, 0.25, 0.4}) {
    const int T = 100000;
    const auto psi = fractional_ma_coefficients(d, T);
    double s = 0;
    for (double c : psi) s += c * c;
    // psi_k ~ k^{d-1} / Gamma(d)
    const double tail = std::pow(T + 0.5, 2 * d - 1) / ((1 - 2 * d) * std::pow(std::tgamma(d), 2));
    const double exact = std::tgamma(1 - 2 * d) / std::pow(std::tgamma(1 - d), 2);
    EXPECT_NEAR(s + tail, exact, 1e-3 * exact) << d;
    EXPECT_NEAR(arfima_autocovariance(d, 0), exact, 1e-12 * exact);
  }
}

TEST(FractionalMA, AutocovarianceLagRatio) {
  for (double d : {-0.3, 0.2, 0.45}) {
    EXPECT_NEAR(arfima_autocovariance(d, 1) / arfima_autocovariance(d, 0), d / (1 - d), 1e-14);
    EXPECT_NEAR(arfima_autocovariance(d, -3), arfima_autocovariance(d, 3), 0.0);
  }
}

TEST(Simulate, DeterministicPerReplicate) {
  SimulationSpec s;
  s.p = 2;
  s.d = Eigen::Vector2d(0.2, 0.4);
  s.omega = (Eigen::Matrix2d() << 1, 0.3, 0.3, 2).finished();
  s.N = 512;
  s.seed = 99;
  const auto a = simulate_mvlm(s, 3), b = simulate_mvlm(s, 3), c = simulate_mvlm(s, 4);
  EXPECT_EQ(a.values, b.values);
  EXPECT_GT((a.values - c.values).cwiseAbs().maxCoeff(), 0.1);
  EXPECT_EQ(a.component_names, (std::vector<std::string>{"X1", "X2"}));
  s.seed = 100;
  EXPECT_GT((simulate_mvlm(s, 3).values - a.values).cwiseAbs().maxCoeff(), 0.1);
}

TEST(Simulate, WhiteNoiseHasNoSerialCorrelation) {
  const int N = 4096;
  int inside = 0;
  double var = 0;
  for (int r = 0; r < 100; ++r) {
    const Eigen::VectorXd x = simulate_mvlm(univariate(0.0, N, 1, 1), r).values.col(0);
    var += autocov(x, 0) / 100;
    if (std::abs(autocov(x, 1) / autocov(x, 0)) < 3.0 / std::sqrt(N)) ++inside;
  }
  EXPECT_GE(inside, 97);
  EXPECT_NEAR(var, 2 * kPi, 0.02 * 2 * kPi);
}

TEST(Simulate, LongMemoryAutocorrelationMatchesClosedForm) {
  const int N = 1 << 15, reps = 20;
  const auto spec = univariate(0.4, N, 2);
  const int lags[] = {1, 2, 5, 10, 20};
  std::vector<double> mean(5, 0.0);
  for (int r = 0; r < reps; ++r) {
    const Eigen::VectorXd x = simulate_mvlm(spec, r).values.col(0);
    const double g0 = autocov(x, 0);
    for (int i = 0; i < 5; ++i) mean[i] += autocov(x, lags[i]) / g0 / reps;
  }
  for (int i = 0; i < 5; ++i)
    EXPECT_NEAR(mean[i], arfima_autocovariance(0.4, lags[i]) / arfima_autocovariance(0.4, 0), 0.05) << lags[i];
}

TEST(Simulate, ContemporaneousCorrelation) {
  SimulationSpec s;
  s.p = 2;
  s.d = Eigen::Vector2d(0.3, 0.3);
  s.omega = (Eigen::Matrix2d() << 1, 0.5, 0.5, 1).finished();
  s.N = 1 << 13;
  s.seed = 3;
  double mean = 0;
  const int reps = 20;
  for (int r = 0; r < reps; ++r) {
    const auto x = simulate_mvlm(s, r).values;
    mean += x.col(0).dot(x.col(1)) / std::sqrt(x.col(0).squaredNorm() * x.col(1).squaredNorm()) / reps;
  }
  EXPECT_NEAR(mean, 0.5, 0.05);
}

TEST(Simulate, StationaryHalvesAndWaveletSlope) {
  const int N = 1 << 14, reps = 20;
  const auto spec = univariate(0.3, N, 4);
  const auto fam = build_daubechies_filters(2);
  double first = 0, second = 0;
  std::vector<double> logv(8, 0.0);
  for (int r = 0; r < reps; ++r) {
    const Eigen::VectorXd x = simulate_mvlm(spec, r).values.col(0);
    first += x.head(N / 2).squaredNorm() / reps;
    second += x.tail(N / 2).squaredNorm() / reps;
    const auto pyr = pyramid_transform(make_panel(x), fam, 3, 10);
    for (int j = 3; j <= 10; ++j) logv[j - 3] += std::log2(pyr.at(j).squaredNorm() / pyr.count(j)) / reps;
  }
  EXPECT_NEAR(first / second, 1.0, 0.15);
  // log2 Var(W_j) ~ 2 d j
  const double slope = (logv[6] - logv[1]) / 5.0;
  EXPECT_NEAR(slope, 0.6, 0.1);
}

TEST(Simulate, CrossSpectrumPhaseAtLowFrequency) {
  // unequal memory: the low-frequency cross-spectrum has phase -pi (d1 - d2)/2 under
  // the causal filter, so the wavelet-domain covariance carries cos(pi (d1 - d2)/2)
  SimulationSpec s;
  s.p = 2;
  s.d = Eigen::Vector2d(0.1, 0.4);
  s.omega = (Eigen::Matrix2d() << 1, 0.6, 0.6, 1).finished();
  s.N = 1 << 13;
  s.seed = 6;
  SpectralKernels sk(build_daubechies_filters(2));
  const auto t = kernel_table_for(sk, s.d, 0);
  const Eigen::MatrixXd G = G_from_omega(s.omega, s.d, t);
  const double r_theory = G(0, 1) / std::sqrt(G(0, 0) * G(1, 1));
  const auto fam = build_daubechies_filters(2);
  double mean = 0;
  const int reps = 40;
  for (int r = 0; r < reps; ++r) {
    const auto set = scale_covariances(pyramid_transform(simulate_mvlm(s, r), fam, 4, 9));
    const auto rho = scale_correlations(set);
    for (int j = 6; j <= 8; ++j) mean += rho.at(j)(0, 1) / (3 * reps);
  }
  EXPECT_NEAR(mean, r_theory, 0.05);
  EXPECT_LT(r_theory, 0.6 * 0.95);
}

TEST(Simulate, DifferencedComponent) {
  auto s = univariate(0.8, 1000, 8, 4096);
  EXPECT_EQ(s.resolved_differencing(), std::vector<int>{1});
  const Eigen::VectorXd x = simulate_mvlm(s).values.col(0);
  auto inc = univariate(-0.2, 1001, 8, 4096);
  const Eigen::VectorXd y = simulate_mvlm(inc).values.col(0);
  for (int t = 1; t < 1000; ++t) ASSERT_NEAR(x(t) - x(t - 1), y(t + 1), 1e-9);
}

TEST(Simulate, Validation) {
  auto s = univariate(0.3, 1 << 20, 1);
  EXPECT_EQ(error_code_of([&] { s.validate(); }), ErrorCode::ResourceLimit);
  s = univariate(1.5, 100, 1);
  EXPECT_EQ(error_code_of([&] { s.validate(); }), ErrorCode::DomainError);
  s = univariate(0.5, 100, 1);
  EXPECT_EQ(error_code_of([&] { s.validate(); }), ErrorCode::DomainError);
  s = univariate(0.3, 100, 1);
  s.ar1 = 1.0;
  EXPECT_EQ(error_code_of([&] { s.validate(); }), ErrorCode::DomainError);
  s = univariate(0.3, 100, 1);
  s.differencing = {1};
  EXPECT_EQ(error_code_of([&] { s.validate(); }), ErrorCode::DomainError);
  SimulationSpec m;
  m.p = 2;
  m.d = Eigen::Vector2d(0.1, 0.1);
  m.omega = (Eigen::Matrix2d() << 1, 2, 2, 1).finished();
  m.N = 100;
  EXPECT_EQ(error_code_of([&] { m.validate(); }), ErrorCode::NonPDMatrix);
  m.omega(0, 1) = 0.1;
  EXPECT_EQ(error_code_of([&] { m.validate(); }), ErrorCode::NonPDMatrix);
}

TEST(Simulate, ShortMemoryAndSkewedInnovations) {
  auto s = univariate(0.0, 1 << 14, 12, 1);
  s.ar1 = 0.6;
  const Eigen::VectorXd x = simulate_mvlm(s).values.col(0);
  EXPECT_NEAR(autocov(x, 1) / autocov(x, 0), 0.6, 0.03);
  EXPECT_NEAR(autocov(x, 0), 2 * kPi / (1 - 0.36), 0.1 * 2 * kPi / (1 - 0.36));

  auto e = univariate(0.0, 1 << 14, 13, 1);
  e.innovation = Innovation::CenteredExponential;
  const Eigen::VectorXd y = simulate_mvlm(e).values.col(0);
  const auto mo = sample_moments(std::span<const double>(y.data(), y.size()));
  EXPECT_NEAR(mo.mean, 0.0, 0.1);
  EXPECT_NEAR(mo.sd * mo.sd, 2 * kPi, 0.1 * 2 * kPi);
  EXPECT_NEAR(mo.skewness, 2.0, 0.3);
}

TEST(CirculantEmbedding, Autocovariances) {
  const int N = 256, reps = 400;
  const double d = 0.3;
  std::vector<double> g(3, 0.0);
  const int lags[3] = {0, 1, 4};
  for (int r = 0; r < reps; ++r) {
    auto rng = replicate_rng(21, r);
    const auto x = circulant_embedding_fn(d, N, 1.5, rng);
    ASSERT_EQ(x.size(), static_cast<size_t>(N));
    for (int i = 0; i < 3; ++i) g[i] += autocov(x, lags[i]) * N / (N - lags[i]) / reps;
  }
  for (int i = 0; i < 3; ++i) EXPECT_NEAR(g[i] / (1.5 * arfima_autocovariance(d, lags[i])), 1.0, 0.08) << lags[i];
  auto rng = replicate_rng(1, 0);
  EXPECT_EQ(error_code_of([&] { circulant_embedding_fn(d, 1, 1.0, rng); }), ErrorCode::InvalidArgument);
}

TEST(MonteCarlo, WhiteNoiseCalibration) {
  auto s = univariate(0.0, 1 << 12, 17, 1);
  EstimationConfig cfg;
  const auto mc = monte_carlo(s, 500, cfg);
  ASSERT_EQ(mc.params.size(), 1u);
  const auto& d = mc.params[0];
  EXPECT_EQ(mc.failures, 0);
  EXPECT_EQ(d.estimates.size(), 500u);
  EXPECT_NEAR(d.empirical_sd / d.theoretical_sd, 1.0, 0.15);
  EXPECT_GE(d.coverage, 0.90);
  EXPECT_LE(d.coverage, 0.98);
  EXPECT_LT(d.ks, 0.08);
  EXPECT_EQ(mc.j1, max_scale(1 << 12, 3));
  EXPECT_EQ(mc.Delta, mc.j1 - 3);
}

TEST(MonteCarlo, RejectsTooShortSeries) {
  auto s = univariate(0.0, 32, 1, 1);
  EstimationConfig cfg;
  EXPECT_EQ(error_code_of([&] { monte_carlo(s, 2, cfg); }), ErrorCode::SeriesTooShort);
  s.N = 4096;
  EXPECT_EQ(error_code_of([&] { monte_carlo(s, 0, cfg); }), ErrorCode::InvalidArgument);
}
