#include "wavewhittle/simulation.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <memory>
#include <mutex>
#include <numbers>
#include <numeric>

#include "wavewhittle/error.hpp"
#include "wavewhittle/stats.hpp"

namespace ww {

namespace {

constexpr double kPi = std::numbers::pi;

std::mutex& fftw_planner_mutex() {
  static std::mutex m;
  return m;
}

struct FftwFree {
  void operator()(void* p) const { fftw_free(p); }
};
using RealBuf = std::unique_ptr<double[], FftwFree>;
using CplxBuf = std::unique_ptr<fftw_complex[], FftwFree>;

RealBuf real_buf(size_t n) { return RealBuf(static_cast<double*>(fftw_malloc(sizeof(double) * n))); }
CplxBuf cplx_buf(size_t n) {
  return CplxBuf(static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * n)));
}

// Real FFT round trip; planning is not thread-safe in FFTW, execution is.
void fft_r2c(int n, double* in, fftw_complex* out) {
  fftw_plan plan;
  {
    std::lock_guard lk(fftw_planner_mutex());
    plan = fftw_plan_dft_r2c_1d(n, in, out, FFTW_ESTIMATE);
  }
  fftw_execute(plan);
  std::lock_guard lk(fftw_planner_mutex());
  fftw_destroy_plan(plan);
}

void fft_c2r(int n, fftw_complex* in, double* out) {
  fftw_plan plan;
  {
    std::lock_guard lk(fftw_planner_mutex());
    plan = fftw_plan_dft_c2r_1d(n, in, out, FFTW_ESTIMATE);
  }
  fftw_execute(plan);
  std::lock_guard lk(fftw_planner_mutex());
  fftw_destroy_plan(plan);
}

int next_pow2(long long n) {
  int m = 1;
  while (m < n) m <<= 1;
  return m;
}

// y[t] = sum_{k=0}^{len(h)-1} h[k] x[t-k], for t = 0..len(x)-1 (x taken as 0 before 0)
std::vector<double> causal_filter(const std::vector<double>& h, const std::vector<double>& x) {
  const long long total = static_cast<long long>(h.size()) + static_cast<long long>(x.size()) - 1;
  const int n = next_pow2(total);
  const int nc = n / 2 + 1;
  auto a = real_buf(n), b = real_buf(n);
  auto A = cplx_buf(nc), B = cplx_buf(nc);
  std::fill(a.get(), a.get() + n, 0.0);
  std::fill(b.get(), b.get() + n, 0.0);
  std::copy(h.begin(), h.end(), a.get());
  std::copy(x.begin(), x.end(), b.get());
  fft_r2c(n, a.get(), A.get());
  fft_r2c(n, b.get(), B.get());
  for (int i = 0; i < nc; ++i) {
    const double re = A[i][0] * B[i][0] - A[i][1] * B[i][1];
    const double im = A[i][0] * B[i][1] + A[i][1] * B[i][0];
    A[i][0] = re / n;
    A[i][1] = im / n;
  }
  fft_c2r(n, A.get(), a.get());
  return std::vector<double>(a.get(), a.get() + x.size());
}

}  // namespace

int SimulationSpec::truncation() const {
  return ma_truncation > 0 ? ma_truncation : std::max(1 << 16, 16 * N);
}

std::vector<int> SimulationSpec::resolved_differencing() const {
  if (!differencing.empty()) return differencing;
  std::vector<int> D(p);
  for (int a = 0; a < p; ++a) D[a] = d(a) > 0.5 ? 1 : 0;
  return D;
}

void SimulationSpec::validate() const {
  if (p < 1 || d.size() != p) fail(ErrorCode::InvalidArgument, "d must have p entries");
  if (omega.rows() != p || omega.cols() != p) fail(ErrorCode::InvalidArgument, "omega must be p x p");
  if (N < 1) fail(ErrorCode::InvalidArgument, "N must be positive");
  if ((omega - omega.transpose()).cwiseAbs().maxCoeff() > 1e-12 * std::max(1.0, omega.cwiseAbs().maxCoeff()))
    fail(ErrorCode::NonPDMatrix, "omega is not symmetric");
  if (Eigen::LLT<Eigen::MatrixXd>(omega).info() != Eigen::Success)
    fail(ErrorCode::NonPDMatrix, "omega is not positive definite");
  if (std::abs(ar1) >= 1.0) fail(ErrorCode::DomainError, "AR(1) coefficient must satisfy |phi| < 1");
  const auto D = resolved_differencing();
  if (static_cast<int>(D.size()) != p) fail(ErrorCode::InvalidArgument, "differencing must have p entries");
  for (int a = 0; a < p; ++a) {
    if (!(d(a) > -0.5 && d(a) <= 1.25)) fail(ErrorCode::DomainError, "d must lie in (-0.5, 1.25]");
    const double r = d(a) - D[a];
    if (D[a] < 0 || !(r > -0.5 && r < 0.5))
      fail(ErrorCode::DomainError, "d - D must lie in (-0.5, 0.5) for component " + std::to_string(a));
  }
  if (truncation() < 1) fail(ErrorCode::InvalidArgument, "MA truncation must be >= 1");
  if (static_cast<long long>(N) * truncation() > budget)
    fail(ErrorCode::ResourceLimit, "N * truncation exceeds the simulation budget");
}

std::vector<double> fractional_ma_coefficients(double d, int trunc) {
  if (!(std::abs(d) < 0.5)) fail(ErrorCode::DomainError, "fractional MA needs |d| < 0.5");
  if (trunc < 1) fail(ErrorCode::DomainError, "truncation must be >= 1");
  std::vector<double> psi(static_cast<size_t>(trunc) + 1);
  psi[0] = 1.0;
  for (int k = 1; k <= trunc; ++k) psi[k] = psi[k - 1] * (k - 1 + d) / k;
  return psi;
}

double arfima_autocovariance(double d, int lag) {
  if (!(std::abs(d) < 0.5)) fail(ErrorCode::DomainError, "ARFIMA autocovariance needs |d| < 0.5");
  lag = std::abs(lag);
  double g = std::exp(std::lgamma(1 - 2 * d) - 2 * std::lgamma(1 - d));
  for (int k = 1; k <= lag; ++k) g *= (k - 1 + d) / (k - d);
  return g;
}

std::mt19937_64 replicate_rng(std::uint64_t seed, std::uint64_t replicate, std::uint64_t tag) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(replicate), static_cast<std::uint32_t>(replicate >> 32),
                    static_cast<std::uint32_t>(tag)};
  return std::mt19937_64(seq);
}

TimeSeriesPanel simulate_mvlm(const SimulationSpec& spec, std::uint64_t replicate) {
  spec.validate();
  const int p = spec.p, N = spec.N, T = spec.truncation();
  const auto D = spec.resolved_differencing();
  const int Dmax = *std::max_element(D.begin(), D.end());
  // simulate N + Dmax increments so differenced components keep length N
  const int Nd = N + Dmax;
  const long long L = static_cast<long long>(T) + Nd;

  auto rng = replicate_rng(spec.seed, replicate);
  const Eigen::MatrixXd chol = Eigen::LLT<Eigen::MatrixXd>(2.0 * kPi * spec.omega).matrixL();
  Eigen::MatrixXd eps(L, p);
  std::normal_distribution<double> gauss;
  std::exponential_distribution<double> expo(1.0);
  Eigen::VectorXd z(p);
  for (long long t = 0; t < L; ++t) {
    for (int a = 0; a < p; ++a) z(a) = spec.innovation == Innovation::Gaussian ? gauss(rng) : expo(rng) - 1.0;
    eps.row(t) = (chol * z).transpose();
  }
  if (spec.ar1 != 0.0) {
    const double phi = spec.ar1;
    eps.row(0) /= std::sqrt(1.0 - phi * phi);
    for (long long t = 1; t < L; ++t) eps.row(t) += phi * eps.row(t - 1);
  }

  Eigen::MatrixXd out(N, p);
  std::vector<double> x(L);
  for (int a = 0; a < p; ++a) {
    const auto psi = fractional_ma_coefficients(spec.d(a) - D[a], T);
    for (long long t = 0; t < L; ++t) x[t] = eps(t, a);
    const auto y = causal_filter(psi, x);
    // integrate D[a] times the post-burn-in segment
    std::vector<double> seg(y.begin() + T, y.begin() + T + Nd);
    for (int k = 0; k < D[a]; ++k) std::partial_sum(seg.begin(), seg.end(), seg.begin());
    for (int t = 0; t < N; ++t) out(t, a) = seg[Nd - N + t];
  }
  std::vector<std::string> names(p);
  for (int a = 0; a < p; ++a) names[a] = "X" + std::to_string(a + 1);
  return make_panel(std::move(out), std::move(names));
}

std::vector<double> circulant_embedding_fn(double d, int N, double innovation_variance,
                                           std::mt19937_64& rng) {
  if (N < 2) fail(ErrorCode::InvalidArgument, "circulant embedding needs N >= 2");
  if (!(innovation_variance > 0)) fail(ErrorCode::DomainError, "innovation variance must be positive");
  const int m = 2 * (N - 1);
  auto c = real_buf(m);
  const int nc = m / 2 + 1;
  auto lam = cplx_buf(nc);
  double g = arfima_autocovariance(d, 0) * innovation_variance;
  for (int k = 0; k < N; ++k) {
    if (k > 0) g *= (k - 1 + d) / (k - d);
    c[k] = g;
    if (k > 0 && k < N - 1) c[m - k] = g;
  }
  fft_r2c(m, c.get(), lam.get());
  std::vector<double> ev(nc);
  for (int i = 0; i < nc; ++i) {
    ev[i] = lam[i][0];
    if (ev[i] < -1e-10 * std::abs(lam[0][0]))
      fail(ErrorCode::DomainError, "circulant embedding is not nonnegative definite");
    ev[i] = std::max(ev[i], 0.0);
  }
  // Y = sqrt(lam/m) * complex Gaussian with Hermitian symmetry; real part of inverse DFT
  std::normal_distribution<double> gauss;
  auto W = cplx_buf(nc);
  for (int i = 0; i < nc; ++i) {
    if (i == 0 || i == m / 2) {
      W[i][0] = std::sqrt(ev[i] / m) * gauss(rng);
      W[i][1] = 0.0;
    } else {
      const double s = std::sqrt(ev[i] / (2.0 * m));
      W[i][0] = s * gauss(rng);
      W[i][1] = s * gauss(rng);
    }
  }
  auto y = real_buf(m);
  fft_c2r(m, W.get(), y.get());
  return std::vector<double>(y.get(), y.get() + N);
}

int EstimationConfig::resolved_j1(int N) const {
  const int T = 2 * M - 1;
  return j1 > 0 ? j1 : max_scale(N, T, 4);
}

int EstimationConfig::resolved_delta(int N) const {
  return Delta == -2 ? resolved_j1(N) - j0 : Delta;
}

MonteCarloSummary monte_carlo(const SimulationSpec& spec, int replicates, const EstimationConfig& cfg) {
  spec.validate();
  SpectralKernels sk(build_daubechies_filters(cfg.M), cfg.kernels);
  const int Delta = cfg.resolved_delta(spec.N);
  const KernelTable table = kernel_table_for(sk, spec.d, Delta);
  return monte_carlo(spec, replicates, cfg, table);
}

MonteCarloSummary monte_carlo(const SimulationSpec& spec, int replicates, const EstimationConfig& cfg,
                              const KernelTable& table) {
  spec.validate();
  if (replicates < 1) fail(ErrorCode::InvalidArgument, "replicates must be >= 1");
  const int p = spec.p;
  const WaveletFamily fam = build_daubechies_filters(cfg.M);
  const int j1 = cfg.resolved_j1(spec.N), Delta = cfg.resolved_delta(spec.N);
  if (j1 <= cfg.j0) fail(ErrorCode::SeriesTooShort, "series too short for the requested scales");

  MonteCarloSummary out;
  out.replicates = replicates;
  out.j0 = cfg.j0;
  out.j1 = j1;
  out.Delta = Delta;
  for (int j = cfg.j0; j <= j1; ++j) out.n += coefficient_count(spec.N, j, fam.support_length);

  // true-parameter asymptotics
  const Eigen::MatrixXd G0 = G_from_omega(spec.omega, spec.d, table);
  const Eigen::MatrixXd Vd0 = d_asym_cov(spec.d, G0, Delta, table);
  const int npairs = p * (p - 1) / 2;
  std::vector<double> r_true, r_var0;
  for (int a = 0; a < p; ++a)
    for (int b = a + 1; b < p; ++b) {
      r_true.push_back(G0(a, b) / std::sqrt(G0(a, a) * G0(b, b)));
      r_var0.push_back(r_asym_var_at(a, b, spec.d, G0, Delta, table));
    }

  const int nparam = p + npairs;
  std::vector<std::vector<double>> est(replicates, std::vector<double>(nparam, 0.0));
  std::vector<std::vector<double>> sd(replicates, std::vector<double>(nparam, 0.0));
  std::vector<std::string> err(replicates);
  std::vector<char> ok(replicates, 0);

#pragma omp parallel for schedule(dynamic)
  for (int rep = 0; rep < replicates; ++rep) {
    try {
      const auto panel = simulate_mvlm(spec, static_cast<std::uint64_t>(rep));
      const auto pyr = pyramid_transform(panel, fam, cfg.j0, j1);
      const auto set = scale_covariances(pyr);
      const auto fit = estimate_d(set, init_d_log_regression(set), cfg.optim);
      const Eigen::MatrixXd Gh = G_hat(set, fit.d_hat);
      Eigen::MatrixXd Vd = Vd0;
      if (cfg.plug_in) Vd = d_asym_cov(fit.d_hat, Gh, Delta, table);
      int k = 0;
      for (int a = 0; a < p; ++a, ++k) {
        est[rep][k] = fit.d_hat(a);
        sd[rep][k] = std::sqrt(Vd(a, a));
      }
      int q = 0;
      for (int a = 0; a < p; ++a)
        for (int b = a + 1; b < p; ++b, ++k, ++q) {
          est[rep][k] = Gh(a, b) / std::sqrt(Gh(a, a) * Gh(b, b));
          sd[rep][k] = std::sqrt(cfg.plug_in ? r_asym_var_at(a, b, fit.d_hat, Gh, Delta, table) : r_var0[q]);
        }
      ok[rep] = 1;
    } catch (const std::exception& e) {
      err[rep] = e.what();
    }
  }

  for (int rep = 0; rep < replicates; ++rep)
    if (!ok[rep]) {
      ++out.failures;
      if (out.failure_messages.size() < 10) out.failure_messages.push_back(err[rep]);
    }
  if (out.failures > 0.05 * replicates)
    fail(ErrorCode::OptimFailed, std::to_string(out.failures) + " of " + std::to_string(replicates) +
                                     " replicates failed: " + out.failure_messages.front());

  const double rootn = std::sqrt(static_cast<double>(out.n));
  const double z = normal_quantile(0.5 * (1.0 + cfg.ci_level));
  auto summarize = [&](int k, std::string name, double truth, double theo_var) {
    ParameterSummary s;
    s.name = std::move(name);
    s.truth = truth;
    s.theoretical_sd = std::sqrt(theo_var);
    std::vector<double> scaled, standardized;
    int covered = 0;
    for (int rep = 0; rep < replicates; ++rep) {
      if (!ok[rep]) continue;
      const double e = est[rep][k];
      s.estimates.push_back(e);
      scaled.push_back(rootn * (e - truth));
      standardized.push_back(sd[rep][k] > 0 ? rootn * (e - truth) / sd[rep][k] : 0.0);
      if (std::abs(e - truth) <= z * sd[rep][k] / rootn) ++covered;
    }
    double m = 0;
    for (double e : s.estimates) m += e;
    s.mean = m / s.estimates.size();
    s.coverage = static_cast<double>(covered) / s.estimates.size();
    if (scaled.size() >= 2) {
      s.empirical_sd = sample_moments(scaled).sd;
      const auto mo = sample_moments(standardized);
      s.skewness = mo.skewness;
      s.excess_kurtosis = mo.excess_kurtosis;
      s.ks = ks_distance_normal(standardized, 0.0, 1.0);
    }
    out.params.push_back(std::move(s));
  };
  int k = 0;
  for (int a = 0; a < p; ++a, ++k) summarize(k, "d[" + std::to_string(a + 1) + "]", spec.d(a), Vd0(a, a));
  int q = 0;
  for (int a = 0; a < p; ++a)
    for (int b = a + 1; b < p; ++b, ++k, ++q)
      summarize(k, "r[" + std::to_string(a + 1) + "," + std::to_string(b + 1) + "]", r_true[q], r_var0[q]);
  return out;
}

}  // namespace ww
