#pragma once

#include <Eigen/Dense>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "wavewhittle/kernels.hpp"
#include "wavewhittle/wavelet.hpp"

namespace ww {

struct ScaleCovarianceSet {
  int j0 = 0, j1 = 0;
  std::vector<Eigen::MatrixXd> sigma_hat;  // index j - j0
  std::vector<int> counts;
  int n = 0;
  double mean_scale = 0.0;  // <J> = (1/n) sum n_j j

  int dim() const { return sigma_hat.empty() ? 0 : static_cast<int>(sigma_hat[0].rows()); }
  int scales() const { return static_cast<int>(sigma_hat.size()); }
  const Eigen::MatrixXd& at(int j) const { return sigma_hat.at(j - j0); }
};

ScaleCovarianceSet scale_covariances(const WaveletPyramid& pyr);

// Builds a set directly (synthetic / noise-free inputs); validates symmetry.
ScaleCovarianceSet make_scale_set(int j0, std::vector<Eigen::MatrixXd> sigma, std::vector<int> counts);

std::map<int, Eigen::MatrixXd> scale_correlations(const ScaleCovarianceSet& set);

Eigen::MatrixXd G_hat(const ScaleCovarianceSet& set, const Eigen::VectorXd& d);

struct CriterionValue {
  double value = 0.0;
  bool non_pd = false;
};
// R(d) = log det G_hat(d) + 2 log2 <J> sum d; +inf with non_pd flag when G_hat(d) is not PD.
CriterionValue whittle_criterion_R(const ScaleCovarianceSet& set, const Eigen::VectorXd& d);
// Strict variant: throws NonPDMatrix.
double whittle_R(const ScaleCovarianceSet& set, const Eigen::VectorXd& d);
// Full Whittle negative log-likelihood L(G, d) = (1/n) sum_j n_j [log det(Lambda G Lambda) + tr(...)].
double whittle_likelihood(const ScaleCovarianceSet& set, const Eigen::MatrixXd& G,
                          const Eigen::VectorXd& d);

Eigen::VectorXd whittle_gradient(const ScaleCovarianceSet& set, const Eigen::VectorXd& d);
Eigen::MatrixXd whittle_hessian(const ScaleCovarianceSet& set, const Eigen::VectorXd& d);

Eigen::VectorXd init_d_log_regression(const ScaleCovarianceSet& set);

struct Bounds {
  double lo = -1.0, hi = 2.0;
};

struct TraceEntry {
  int iteration;
  double best;
  double diameter;
  std::string phase;
};

struct OptimOptions {
  Bounds bounds;
  int max_iter_per_dim = 2000;
  double x_tol = 1e-6;
  double f_tol = 1e-10;
  double initial_step = 0.1;
  double restart_perturbation = 0.05;
  bool newton_polish = true;
  int trace_every = 25;
};

struct EstimateD {
  Eigen::VectorXd d_hat;
  double criterion = 0.0;
  bool boundary_hit = false;
  int iterations = 0;
  std::vector<TraceEntry> trace;
};

EstimateD estimate_d(const ScaleCovarianceSet& set, const Eigen::VectorXd& init,
                     const OptimOptions& opt = {});

Eigen::MatrixXd omega_hat(const Eigen::MatrixXd& G, const Eigen::VectorXd& d, const KernelTable& t);
Eigen::MatrixXd long_run_correlations(const Eigen::MatrixXd& G);

// Generic bounded Nelder-Mead (exposed for testing).
struct NMResult {
  Eigen::VectorXd x;
  double f = 0.0;
  int iterations = 0;
  bool converged = false;
};
NMResult nelder_mead(const std::function<double(const Eigen::VectorXd&)>& f, const Eigen::VectorXd& x0,
                     double step, const Bounds& b, int max_iter, double x_tol, double f_tol,
                     std::vector<TraceEntry>* trace = nullptr, int trace_every = 25,
                     const std::string& phase = "simplex");

}  // namespace ww
