#pragma once

#include <complex>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "wavewhittle/wavelet.hpp"

namespace ww {

using cplx = std::complex<double>;

class PsiHatEvaluator {
public:
  explicit PsiHatEvaluator(WaveletFamily family, int product_depth = 30);

  cplx operator()(double lambda) const { return psi_hat(lambda); }
  cplx psi_hat(double lambda) const;
  cplx phi_hat(double lambda) const;
  cplx m0(double x) const { return transfer(lo_, x); }
  cplx m1(double x) const { return transfer(hi_, x); }

  // out[u] = psi_hat(xi / 2^u), u = 0..U
  void psi_hat_dyadic(double xi, int U, cplx* out) const;

  const WaveletFamily& family() const { return family_; }
  int product_depth() const { return depth_; }

private:
  cplx transfer(const std::vector<double>& c, double x) const;
  int depth_for(double x) const;

  WaveletFamily family_;
  int depth_;
  std::vector<double> lo_, hi_;  // taps / sqrt(2)
};

struct KernelSettings {
  int product_depth = 30;
  int trunc_terms = 100;     // folding |t| <= T
  double quad_tol = 1e-8;    // relative
  int tail_octaves = 12;     // direct integration out to pi * 2^tail_octaves
  int max_scale_gap = 12;    // default u range for finite Delta
  int inf_max_u = 40;        // series cutoff for Delta = infinity
  double inf_term_cutoff = 1e-10;
};

// Integration profile of |lambda|^{-delta} |psi_hat|^2 on [0, inf).
struct KProfile {
  double delta = 0.0;
  double head = 0.0;             // [0, pi]
  std::vector<double> panels;    // [i pi, (i+1) pi], i = 1..P-1 (index i)
  double tail = 0.0;             // extrapolated beyond the last panel
  double error = 0.0;
  double value() const;          // full K over the real line
  double tail_from(int i0) const;  // 2 * int_{i0 pi}^{inf}
};

class SpectralKernels {
public:
  explicit SpectralKernels(const WaveletFamily& family, KernelSettings s = {});

  const PsiHatEvaluator& psi() const { return psi_; }
  const KernelSettings& settings() const { return s_; }
  const WaveletFamily& family() const { return psi_.family(); }

  cplx psi_hat(double lambda) const { return psi_(lambda); }

  double K(double delta);
  std::vector<double> K_batch(const std::vector<double>& deltas);
  double K_error(double delta);

  // Folded |t| <= T sum plus the mean tail correction (so that its integral is K).
  double g_psi(double lambda, double delta);
  double g_psi_truncated(double lambda, double delta, int T) const;
  double g_tail_correction(double delta);

  // Polyphase components D_{u,tau}(lambda; delta), tau = 0..2^u-1 (u <= 16).
  std::vector<cplx> D_u_inf(double lambda, int u, double delta, int T = -1) const;

  struct IResult {
    std::vector<std::vector<double>> I;     // [pair][u]  (real part)
    std::vector<std::vector<double>> I_im;  // [pair][u]
    std::vector<std::vector<double>> err;   // [pair][u]
  };
  // I_u(delta1, delta2) for u = 0..U and every requested pair, one quadrature pass.
  IResult I_batch(const std::vector<std::pair<double, double>>& pairs, int U);

  double I_u(int u, double d1, double d2);
  double tilde_I_u(int u, double d1, double d2);

  void check_domain(double delta) const;

private:
  const KProfile& profile(double delta);
  std::vector<KProfile> compute_profiles(const std::vector<double>& deltas) const;

  PsiHatEvaluator psi_;
  KernelSettings s_;
  std::mutex mu_;
  std::map<long long, KProfile> cache_;
};

long long delta_key(double delta);

// Mean and variance of the scale-weight law 2^{-u}/(2 - 2^{-Delta}), u = 0..Delta.
std::pair<double, double> eta_kappa(int Delta);

constexpr int kInfiniteDelta = -1;

struct KernelTable {
  std::string family;
  int M = 0;
  KernelSettings settings;
  int max_u = 0;
  int delta_gap = 0;  // Delta the table was built for (kInfiniteDelta allowed)
  double eta = 0.0, kappa = 0.0;

  std::map<long long, double> K_values;
  std::map<std::tuple<int, long long, long long>, double> I_tilde_values;
  std::map<long long, double> delta_of_key;

  // optional uniform grid (large p): lookups interpolate
  bool has_grid = false;
  double grid_lo = 0.0, grid_step = 0.0;
  int grid_n = 0;
  std::vector<double> K_grid;               // [i]
  std::vector<std::vector<double>> I_grid;  // [u][i * grid_n + j]

  double K(double delta) const;
  double I_tilde(int u, double d1, double d2) const;
  bool has_K(double delta) const;
};

KernelTable build_kernel_table(SpectralKernels& sk, const std::vector<double>& K_deltas,
                               const std::vector<std::pair<double, double>>& pairs, int U,
                               int delta_gap);
KernelTable build_kernel_grid(SpectralKernels& sk, double lo, double hi, double step, int U,
                              int delta_gap);

std::string kernel_table_to_json(const KernelTable& t);
KernelTable kernel_table_from_json(const std::string& text);
void save_kernel_table(const KernelTable& t, const std::string& path);
KernelTable load_kernel_table(const std::string& path);

// ---- scale-aggregated kernels ----

enum class GWeight { Exact, Printed };

// Finite Delta (>= 1) or kInfiniteDelta; the displayed formulas.
double script_I_Delta(int Delta, double d1, double d2, const KernelTable& t);
double script_I_G_Delta(int Delta, double d1, double d2, const KernelTable& t,
                        GWeight w = GWeight::Exact);
double script_I_dG_Delta(int Delta, double d1, double d2, const KernelTable& t);

// Forms assembled directly from the wavelet-covariance process: e1, e2 are the
// exponents of the two scale statistics, (d1, d2) the kernel arguments.
double assembled_I_d(int Delta, double e1, double e2, double d1, double d2, const KernelTable& t);
double assembled_I_G(int Delta, double e1, double e2, double d1, double d2, const KernelTable& t);
// Cross kernel between the d-score (exponent ed) and a G statistic (exponent eg).
double assembled_I_dG(int Delta, double ed, double eg, double d1, double d2,
                      const KernelTable& t);

// Weight Q_u = sum_{s=0}^{Delta-u} p_s (s - eta)(s + u - eta)
double scale_pair_weight(int Delta, int u);

}  // namespace ww
