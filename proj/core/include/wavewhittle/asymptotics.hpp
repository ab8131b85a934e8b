#pragma once

#include <Eigen/Dense>
#include <vector>

#include "wavewhittle/kernels.hpp"

namespace ww {

// Derived: assembled from the wavelet-covariance process (default).
// Printed: the compact displays exactly as published.
enum class KernelForm { Derived, Printed };

// Exponents d_a + d_b an estimate at d needs, and the table covering them
// (exact entries for few distinct values, an interpolation grid otherwise).
std::vector<double> exponent_sums(const Eigen::VectorXd& d);
KernelTable kernel_table_for(SpectralKernels& sk, const Eigen::VectorXd& d, int Delta,
                             int max_exact = 12, double grid_step = 0.04);

// Asymptotic covariance of the normalized scale statistics (a,b) at j0+u and (a2,b2) at j0+u2.
double wavelet_cov_asym_cov(int u, int u2, int a, int b, int a2, int b2, const Eigen::VectorXd& d,
                            const Eigen::MatrixXd& G, const KernelTable& t);

// Asymptotic variance of sqrt(n_j) (rho_hat_ab(j) - rho_ab(j)).
double scale_correlation_variance(double da, double db, double rho, const KernelTable& t);

// Covariance of sqrt(n)(d_hat - d).
Eigen::MatrixXd d_asym_cov(const Eigen::VectorXd& d, const Eigen::MatrixXd& G, int Delta,
                           const KernelTable& t, KernelForm form = KernelForm::Derived);

// Entry of the covariance of sqrt(n) vec(G_hat - G); vec index (a,b) -> a*p + b.
double G_asym_entry(int a, int b, int a2, int b2, const Eigen::VectorXd& d, const Eigen::MatrixXd& G,
                    int Delta, const KernelTable& t, KernelForm form = KernelForm::Derived);
Eigen::MatrixXd G_asym_cov(const Eigen::VectorXd& d, const Eigen::MatrixXd& G, int Delta,
                           const KernelTable& t, KernelForm form = KernelForm::Derived);

// Asymptotic variance of sqrt(n)(r_hat_ab - r_ab).
double r_asym_var(double da, double db, double r, int Delta, const KernelTable& t,
                  KernelForm form = KernelForm::Derived);
// Same, by the delta method on the full G covariance entries at (d, G).
double r_asym_var_at(int a, int b, const Eigen::VectorXd& d, const Eigen::MatrixXd& G, int Delta,
                     const KernelTable& t, KernelForm form = KernelForm::Derived);

// Cross covariance Cov(sqrt(n) d_hat_l, sqrt(n) G_hat_ab), p x p^2.
Eigen::MatrixXd dG_cross_cov(const Eigen::VectorXd& d, const Eigen::MatrixXd& G, int Delta,
                             const KernelTable& t, KernelForm form = KernelForm::Derived);
// [[d-block, cross], [cross^T, G-block]]
Eigen::MatrixXd joint_dG_cov(const Eigen::VectorXd& d, const Eigen::MatrixXd& G, int Delta,
                             const KernelTable& t, KernelForm form = KernelForm::Derived);

// Population G(d) = Omega_ab cos(pi (d_a - d_b)/2) K(d_a + d_b).
Eigen::MatrixXd G_from_omega(const Eigen::MatrixXd& omega, const Eigen::VectorXd& d, const KernelTable& t);

struct Interval {
  double estimate = 0.0, sd = 0.0, lo = 0.0, hi = 0.0;
};
// estimate +- z_{(1+level)/2} sqrt(var / n)
Interval confidence_interval(double estimate, double asym_var, int n, double level);

// Symmetrize after asserting the pre-symmetrization asymmetry is below tol (relative).
Eigen::MatrixXd symmetrize_checked(const Eigen::MatrixXd& M, double tol = 1e-8);

}  // namespace ww
