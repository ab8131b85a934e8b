#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "wavewhittle/asymptotics.hpp"
#include "wavewhittle/estimation.hpp"
#include "wavewhittle/kernels.hpp"
#include "wavewhittle/wavelet.hpp"

namespace ww {

enum class Innovation { Gaussian, CenteredExponential };

struct SimulationSpec {
  int p = 1;
  Eigen::VectorXd d;
  Eigen::MatrixXd omega;          // long-run covariance (SPD)
  std::vector<int> differencing;  // empty: 1 where d > 0.5, else 0
  int ma_truncation = 0;          // 0: max(2^16, 16 N)
  std::uint64_t seed = 0;
  int N = 0;
  double ar1 = 0.0;  // optional short-memory AR(1) applied to every component
  Innovation innovation = Innovation::Gaussian;
  long long budget = 1LL << 36;  // cap on N * truncation

  int truncation() const;
  std::vector<int> resolved_differencing() const;
  void validate() const;
};

// psi_0 = 1, psi_k = psi_{k-1} (k - 1 + d) / k
std::vector<double> fractional_ma_coefficients(double d, int trunc);

// Autocovariance of ARFIMA(0,d,0) driven by unit-variance noise.
double arfima_autocovariance(double d, int lag);

// One stream per (seed, replicate, tag) so serial and parallel runs agree.
std::mt19937_64 replicate_rng(std::uint64_t seed, std::uint64_t replicate, std::uint64_t tag = 0);

// Truncated MA(infinity) with burn-in; innovations have covariance 2 pi omega so
// that the spectral density behaves as omega |lambda|^{-2d} at zero.
TimeSeriesPanel simulate_mvlm(const SimulationSpec& spec, std::uint64_t replicate = 0);

// Exact univariate fractional noise by circulant embedding (Davies-Harte).
std::vector<double> circulant_embedding_fn(double d, int N, double innovation_variance,
                                           std::mt19937_64& rng);

struct EstimationConfig {
  int M = 2;
  int j0 = 3;
  int j1 = 0;                 // 0: deepest scale with at least 4 coefficients
  int Delta = -2;             // -2: j1 - j0; kInfiniteDelta for the infinite form
  double ci_level = 0.95;
  bool plug_in = false;       // CIs at estimates instead of true parameters
  OptimOptions optim;
  KernelSettings kernels;

  int resolved_j1(int N) const;
  int resolved_delta(int N) const;
};

struct ParameterSummary {
  std::string name;
  double truth = 0.0;
  double mean = 0.0;
  double empirical_sd = 0.0;    // of sqrt(n)(theta_hat - theta)
  double theoretical_sd = 0.0;  // sqrt of the asymptotic variance
  double coverage = 0.0;
  double skewness = 0.0, excess_kurtosis = 0.0, ks = 0.0;  // of standardized estimates
  std::vector<double> estimates;
};

struct MonteCarloSummary {
  int replicates = 0;
  int failures = 0;
  int n = 0;
  int j0 = 0, j1 = 0, Delta = 0;
  std::vector<ParameterSummary> params;  // d_a, then r_ab (a < b)
  std::vector<std::string> failure_messages;
};

MonteCarloSummary monte_carlo(const SimulationSpec& spec, int replicates, const EstimationConfig& cfg);
// Variant reusing a prebuilt kernel table (must cover the true exponents).
MonteCarloSummary monte_carlo(const SimulationSpec& spec, int replicates, const EstimationConfig& cfg,
                              const KernelTable& table);

}  // namespace ww
