#include "wavewhittle/asymptotics.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>

#include "wavewhittle/error.hpp"
#include "wavewhittle/stats.hpp"

namespace ww {

namespace {
constexpr double kPi = std::numbers::pi;
constexpr double kLn2 = std::numbers::ln2;

Eigen::MatrixXd inverse_checked(const Eigen::MatrixXd& G) {
  Eigen::FullPivLU<Eigen::MatrixXd> lu(G);
  if (!lu.isInvertible()) fail(ErrorCode::SingularMatrix, "G is singular");
  return lu.inverse();
}

// (G^{-1} o G + I)^{-1}
Eigen::MatrixXd sandwich_inverse(const Eigen::MatrixXd& G, const Eigen::MatrixXd& Gi) {
  const int p = static_cast<int>(G.rows());
  Eigen::MatrixXd A = Gi.cwiseProduct(G) + Eigen::MatrixXd::Identity(p, p);
  return inverse_checked(A);
}

void check_square(const Eigen::VectorXd& d, const Eigen::MatrixXd& G) {
  if (G.rows() != G.cols() || G.rows() != d.size())
    fail(ErrorCode::InvalidArgument, "d and G dimensions disagree");
}
}  // namespace

std::vector<double> exponent_sums(const Eigen::VectorXd& d) {
  std::set<long long> seen;
  std::vector<double> out;
  for (int a = 0; a < d.size(); ++a)
    for (int b = a; b < d.size(); ++b) {
      const double s = d(a) + d(b);
      if (seen.insert(delta_key(s)).second) out.push_back(s);
    }
  std::sort(out.begin(), out.end());
  return out;
}

KernelTable kernel_table_for(SpectralKernels& sk, const Eigen::VectorXd& d, int Delta, int max_exact,
                             double grid_step) {
  const auto S = exponent_sums(d);
  const int U = Delta == kInfiniteDelta ? sk.settings().inf_max_u : Delta;
  if (static_cast<int>(S.size()) <= max_exact) {
    std::vector<std::pair<double, double>> pairs;
    for (size_t i = 0; i < S.size(); ++i)
      for (size_t j = i; j < S.size(); ++j) pairs.emplace_back(S[i], S[j]);
    return build_kernel_table(sk, S, pairs, U, Delta);
  }
  double lo = S.front(), hi = S.back();
  const int n = std::max(4, static_cast<int>(std::ceil((hi - lo) / grid_step)) + 1);
  const double mid = 0.5 * (lo + hi);
  lo = mid - 0.5 * (n - 1) * grid_step;
  hi = mid + 0.5 * (n - 1) * grid_step;
  return build_kernel_grid(sk, lo, hi, grid_step, U, Delta);
}

double wavelet_cov_asym_cov(int u, int u2, int a, int b, int a2, int b2, const Eigen::VectorXd& d,
                            const Eigen::MatrixXd& G, const KernelTable& t) {
  check_square(d, G);
  if (u < 0 || u2 < 0) fail(ErrorCode::InvalidArgument, "scale offsets must be >= 0");
  const int du = std::abs(u - u2);
  const double e = (d(a) + d(b) + d(a2) + d(b2)) * std::max(u, u2) - 0.5 * du;
  return 2.0 * kPi * std::exp2(e) *
         (G(a, a2) * G(b, b2) * t.I_tilde(du, d(a) + d(a2), d(b) + d(b2)) +
          G(a, b2) * G(b, a2) * t.I_tilde(du, d(a) + d(b2), d(b) + d(a2)));
}

double scale_correlation_variance(double da, double db, double rho, const KernelTable& t) {
  if (std::abs(rho) > 1.0) fail(ErrorCode::InvalidArgument, "|rho| must be <= 1");
  const double s = da + db, r2 = rho * rho;
  return 2.0 * kPi *
         (t.I_tilde(0, 2 * da, 2 * db) + t.I_tilde(0, s, s) * (r2 + r2 * r2) -
          2.0 * r2 * (t.I_tilde(0, 2 * da, s) + t.I_tilde(0, 2 * db, s)) +
          0.5 * r2 * (t.I_tilde(0, 2 * da, 2 * da) + t.I_tilde(0, 2 * db, 2 * db)));
}

Eigen::MatrixXd d_asym_cov(const Eigen::VectorXd& d, const Eigen::MatrixXd& G, int Delta,
                           const KernelTable& t, KernelForm form) {
  check_square(d, G);
  const int p = static_cast<int>(d.size());
  const Eigen::MatrixXd Gi = inverse_checked(G);
  auto I = [&](double e1, double e2, double d1, double d2) {
    return form == KernelForm::Derived ? assembled_I_d(Delta, e1, e2, d1, d2, t)
                                       : script_I_Delta(Delta, d1, d2, t);
  };
  Eigen::MatrixXd W = Eigen::MatrixXd::Zero(p, p);
  for (int a = 0; a < p; ++a)
    for (int a2 = 0; a2 < p; ++a2) {
      double s = 0.0;
      for (int c = 0; c < p; ++c) {
        if (Gi(a, c) == 0.0) continue;
        for (int c2 = 0; c2 < p; ++c2) {
          const double w = Gi(a, c) * Gi(a2, c2);
          if (w == 0.0) continue;
          const double e1 = d(a) + d(c), e2 = d(a2) + d(c2);
          double v = 0.0;
          if (G(a, a2) * G(c, c2) != 0.0) v += G(a, a2) * G(c, c2) * I(e1, e2, d(a) + d(a2), d(c) + d(c2));
          if (G(a, c2) * G(c, a2) != 0.0) v += G(a, c2) * G(c, a2) * I(e1, e2, d(a) + d(c2), d(c) + d(a2));
          s += w * v;
        }
      }
      W(a, a2) = s;
    }
  const Eigen::MatrixXd Ai = sandwich_inverse(G, Gi);
  return symmetrize_checked(kPi / (kLn2 * kLn2) * Ai * symmetrize_checked(W) * Ai);
}

double G_asym_entry(int a, int b, int a2, int b2, const Eigen::VectorXd& d, const Eigen::MatrixXd& G,
                    int Delta, const KernelTable& t, KernelForm form) {
  auto I = [&](double e1, double e2, double d1, double d2) {
    return form == KernelForm::Derived ? assembled_I_G(Delta, e1, e2, d1, d2, t)
                                       : script_I_G_Delta(Delta, d1, d2, t);
  };
  const double e1 = d(a) + d(b), e2 = d(a2) + d(b2);
  double v = 0.0;
  if (G(a, a2) * G(b, b2) != 0.0) v += G(a, a2) * G(b, b2) * I(e1, e2, d(a) + d(a2), d(b) + d(b2));
  if (G(a, b2) * G(b, a2) != 0.0) v += G(a, b2) * G(b, a2) * I(e1, e2, d(a) + d(b2), d(b) + d(a2));
  return 2.0 * kPi * v;
}

Eigen::MatrixXd G_asym_cov(const Eigen::VectorXd& d, const Eigen::MatrixXd& G, int Delta,
                           const KernelTable& t, KernelForm form) {
  check_square(d, G);
  const int p = static_cast<int>(d.size()), q = p * p;
  Eigen::MatrixXd W(q, q);
  for (int a = 0; a < p; ++a)
    for (int b = 0; b < p; ++b)
      for (int a2 = 0; a2 < p; ++a2)
        for (int b2 = 0; b2 < p; ++b2)
          W(a * p + b, a2 * p + b2) = G_asym_entry(a, b, a2, b2, d, G, Delta, t, form);
  return symmetrize_checked(W);
}

double r_asym_var_at(int a, int b, const Eigen::VectorXd& d, const Eigen::MatrixXd& G, int Delta,
                     const KernelTable& t, KernelForm form) {
  check_square(d, G);
  if (a == b) return 0.0;
  const double gaa = G(a, a), gbb = G(b, b), r = G(a, b) / std::sqrt(gaa * gbb);
  // gradient of r w.r.t. (G_ab, G_aa, G_bb)
  const int idx[3][2] = {{a, b}, {a, a}, {b, b}};
  const double g[3] = {1.0 / std::sqrt(gaa * gbb), -0.5 * r / gaa, -0.5 * r / gbb};
  double v = 0.0;
  for (int i = 0; i < 3; ++i)
    for (int k = 0; k < 3; ++k)
      v += g[i] * g[k] *
           G_asym_entry(idx[i][0], idx[i][1], idx[k][0], idx[k][1], d, G, Delta, t, form);
  return std::max(v, 0.0);
}

double r_asym_var(double da, double db, double r, int Delta, const KernelTable& t, KernelForm form) {
  if (std::abs(r) > 1.0) fail(ErrorCode::InvalidArgument, "|r| must be <= 1");
  if (form == KernelForm::Printed) {
    const double s = da + db, r2 = r * r;
    auto I = [&](double x, double y) { return script_I_G_Delta(Delta, x, y, t); };
    return 2.0 * kPi *
           (I(2 * da, 2 * db) + I(s, s) * (r2 + r2 * r2) - 2.0 * r2 * (I(2 * da, s) + I(2 * db, s)) +
            0.5 * r2 * (I(2 * da, 2 * da) + I(2 * db, 2 * db)));
  }
  Eigen::VectorXd d(2);
  d << da, db;
  Eigen::MatrixXd G(2, 2);
  G << 1.0, r, r, 1.0;
  return r_asym_var_at(0, 1, d, G, Delta, t, form);
}

Eigen::MatrixXd dG_cross_cov(const Eigen::VectorXd& d, const Eigen::MatrixXd& G, int Delta,
                             const KernelTable& t, KernelForm form) {
  check_square(d, G);
  const int p = static_cast<int>(d.size()), q = p * p;
  const Eigen::MatrixXd Gi = inverse_checked(G);
  const Eigen::MatrixXd Ai = sandwich_inverse(G, Gi);
  Eigen::MatrixXd C = Eigen::MatrixXd::Zero(p, q);
  if (form == KernelForm::Printed) {
    for (int l = 0; l < p; ++l)
      for (int a = 0; a < p; ++a)
        for (int b = 0; b < p; ++b) {
          double s = 0.0;
          for (int m = 0; m < p; ++m)
            s += Ai(l, m) * (G(l, a) * G(m, b) * script_I_dG_Delta(Delta, d(l) + d(a), d(m) + d(b), t) +
                             G(l, b) * G(a, m) * script_I_dG_Delta(Delta, d(l) + d(b), d(m) + d(a), t));
          C(l, a * p + b) = kPi / (2.0 * kLn2) * s;
        }
    return C;
  }
  const double kappa = eta_kappa(Delta).second;
  if (Delta == 0) fail(ErrorCode::DegenerateDelta, "Delta = 0");
  Eigen::MatrixXd Y = Eigen::MatrixXd::Zero(p, q);
  for (int m = 0; m < p; ++m)
    for (int a = 0; a < p; ++a)
      for (int b = 0; b < p; ++b) {
        double s = 0.0;
        const double eg = d(a) + d(b);
        for (int c = 0; c < p; ++c) {
          if (Gi(m, c) == 0.0) continue;
          const double ed = d(m) + d(c);
          double v = 0.0;
          if (G(m, a) * G(c, b) != 0.0)
            v += G(m, a) * G(c, b) * assembled_I_dG(Delta, ed, eg, d(m) + d(a), d(c) + d(b), t);
          if (G(m, b) * G(c, a) != 0.0)
            v += G(m, b) * G(c, a) * assembled_I_dG(Delta, ed, eg, d(m) + d(b), d(c) + d(a), t);
          s += Gi(m, c) * v;
        }
        Y(m, a * p + b) = s;
      }
  C = 2.0 * kPi / (kappa * kLn2) * Ai * Y;
  return C;
}

Eigen::MatrixXd joint_dG_cov(const Eigen::VectorXd& d, const Eigen::MatrixXd& G, int Delta,
                             const KernelTable& t, KernelForm form) {
  const int p = static_cast<int>(d.size()), q = p * p;
  Eigen::MatrixXd J(p + q, p + q);
  J.topLeftCorner(p, p) = d_asym_cov(d, G, Delta, t, form);
  J.bottomRightCorner(q, q) = G_asym_cov(d, G, Delta, t, form);
  Eigen::MatrixXd C = dG_cross_cov(d, G, Delta, t, form);
  J.topRightCorner(p, q) = C;
  J.bottomLeftCorner(q, p) = C.transpose();
  return J;
}

Eigen::MatrixXd G_from_omega(const Eigen::MatrixXd& omega, const Eigen::VectorXd& d, const KernelTable& t) {
  const int p = static_cast<int>(d.size());
  Eigen::MatrixXd G(p, p);
  for (int a = 0; a < p; ++a)
    for (int b = 0; b < p; ++b)
      G(a, b) = omega(a, b) * std::cos(kPi * (d(a) - d(b)) / 2.0) * t.K(d(a) + d(b));
  return G;
}

Interval confidence_interval(double estimate, double asym_var, int n, double level) {
  if (!(level > 0.0 && level < 1.0)) fail(ErrorCode::InvalidArgument, "CI level must lie in (0,1)");
  if (n < 1) fail(ErrorCode::InvalidArgument, "n must be positive");
  const double sd = std::sqrt(std::max(asym_var, 0.0) / n);
  const double z = normal_quantile(0.5 * (1.0 + level));
  return {estimate, sd, estimate - z * sd, estimate + z * sd};
}

Eigen::MatrixXd symmetrize_checked(const Eigen::MatrixXd& M, double tol) {
  const double scale = std::max(1.0, M.cwiseAbs().maxCoeff());
  const double asym = (M - M.transpose()).cwiseAbs().maxCoeff();
  if (asym > tol * scale)
    fail(ErrorCode::ConvergenceError, "assembled covariance is not symmetric (" + std::to_string(asym) + ")");
  return 0.5 * (M + M.transpose());
}

}  // namespace ww
