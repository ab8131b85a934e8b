#include "wavewhittle/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <set>
#include <sstream>

#include <json.hpp>

#include "wavewhittle/error.hpp"
#include "wavewhittle/quadrature.hpp"

namespace ww {

namespace {
constexpr double kPi = std::numbers::pi;
constexpr double kTwoPi = 2.0 * std::numbers::pi;

// |x|^{-delta}, with the removable t = 0, lambda = 0 case mapped to 0
inline double power_weight(double ax, double delta) {
  if (ax == 0.0) return delta > 0.0 ? std::numeric_limits<double>::infinity() : (delta == 0.0 ? 1.0 : 0.0);
  return std::exp(-delta * std::log(ax));
}
}  // namespace

long long delta_key(double delta) { return std::llround(delta * 1e12); }

// ---------------------------------------------------------------- psi hat

PsiHatEvaluator::PsiHatEvaluator(WaveletFamily family, int product_depth)
    : family_(std::move(family)), depth_(product_depth) {
  if (depth_ < 20) fail(ErrorCode::InvalidArgument, "product depth must be >= 20");
  const double r = 1.0 / std::sqrt(2.0);
  for (double v : family_.scaling_filter) lo_.push_back(v * r);
  for (double v : family_.wavelet_filter) hi_.push_back(v * r);
}

cplx PsiHatEvaluator::transfer(const std::vector<double>& c, double x) const {
  const cplx z(std::cos(x), -std::sin(x));
  cplx acc = c.back();
  for (int k = static_cast<int>(c.size()) - 2; k >= 0; --k) acc = acc * z + c[k];
  return acc;
}

int PsiHatEvaluator::depth_for(double x) const {
  const double ax = std::abs(x);
  return depth_ + (ax > 1.0 ? static_cast<int>(std::ceil(std::log2(ax))) : 0);
}

cplx PsiHatEvaluator::phi_hat(double y) const {
  const int depth = depth_for(y);
  cplx prod = 1.0;
  double x = y;
  for (int k = 1; k <= depth; ++k) {
    x *= 0.5;
    prod *= m0(x);
  }
  return prod;
}

cplx PsiHatEvaluator::psi_hat(double lambda) const {
  return m1(0.5 * lambda) * phi_hat(0.5 * lambda);
}

void PsiHatEvaluator::psi_hat_dyadic(double xi, int U, cplx* out) const {
  cplx ph = phi_hat(std::ldexp(xi, -(U + 1)));
  out[U] = m1(std::ldexp(xi, -(U + 1))) * ph;
  for (int u = U - 1; u >= 0; --u) {
    ph *= m0(std::ldexp(xi, -(u + 2)));
    out[u] = m1(std::ldexp(xi, -(u + 1))) * ph;
  }
}

// ---------------------------------------------------------------- K

double KProfile::value() const {
  double s = head + tail;
  for (double v : panels) s += v;
  return 2.0 * s;
}

double KProfile::tail_from(int i0) const {
  double s = tail;
  for (size_t i = std::max(i0, 1); i < panels.size(); ++i) s += panels[i];
  return 2.0 * s;
}

SpectralKernels::SpectralKernels(const WaveletFamily& family, KernelSettings s)
    : psi_(family, s.product_depth), s_(s) {
  if (s_.trunc_terms < 10) fail(ErrorCode::InvalidArgument, "T_trunc must be >= 10");
}

void SpectralKernels::check_domain(double delta) const {
  const double a = family().regularity, M = family().vanishing_moments;
  if (!(delta > -a && delta < 2.0 * M))
    fail(ErrorCode::DomainError, "kernel exponent " + std::to_string(delta) +
                                     " outside (-alpha, 2M) = (" + std::to_string(-a) + ", " +
                                     std::to_string(2 * M) + ")");
}

std::vector<KProfile> SpectralKernels::compute_profiles(const std::vector<double>& deltas) const {
  const int m = static_cast<int>(deltas.size());
  std::vector<KProfile> out(m);
  if (m == 0) return out;
  const double tol = s_.quad_tol;

  // head: lambda = pi s^2
  auto head_fn = [&](double s, double* o) {
    const double lam = kPi * s * s, jac = kTwoPi * s;
    const double a2 = std::norm(psi_(lam));
    for (int i = 0; i < m; ++i) o[i] = lam > 0.0 ? power_weight(lam, deltas[i]) * a2 * jac : 0.0;
  };
  auto head = quad::gauss_kronrod(head_fn, m, {0.0, 0.25, 0.5, 1.0},
                                  std::vector<double>(m, 1e-300), 0.1 * tol);
  if (!head.converged) fail(ErrorCode::ConvergenceError, "K: quadrature near the origin failed");

  const int P = 1 << s_.tail_octaves;
  for (int i = 0; i < m; ++i) {
    out[i].delta = deltas[i];
    out[i].head = head.value[i];
    out[i].error = head.error[i];
    out[i].panels.assign(P, 0.0);
  }
  auto fn = [&](double lam, double* o) {
    const double a2 = std::norm(psi_(lam));
    const double lg = std::log(lam);
    for (int i = 0; i < m; ++i) o[i] = std::exp(-deltas[i] * lg) * a2;
  };
  std::vector<double> abs_tol(m);
  for (int i = 0; i < m; ++i) abs_tol[i] = 1e-3 * tol * std::abs(head.value[i]) / P + 1e-300;
  std::vector<double> val(m), err(m), scratch;
  for (int p = 1; p < P; ++p) {
    const double a = p * kPi, b = a + kPi;
    quad::gk15_panel(fn, m, a, b, val.data(), err.data(), scratch);
    bool ok = true;
    for (int i = 0; i < m; ++i)
      if (err[i] > std::max(abs_tol[i], tol * std::abs(val[i]))) ok = false;
    if (!ok) {
      auto r = quad::gauss_kronrod(fn, m, {a, b}, abs_tol, tol, 64);
      val = r.value;
      err = r.error;
    }
    for (int i = 0; i < m; ++i) {
      out[i].panels[p] = val[i];
      out[i].error += err[i];
    }
  }
  // geometric extrapolation of octave energies
  for (int i = 0; i < m; ++i) {
    auto octave = [&](int k) {
      double s = 0.0;
      for (int p = 1 << k; p < (2 << k); ++p) s += out[i].panels[p];
      return s;
    };
    const double e1 = octave(s_.tail_octaves - 1), e0 = octave(s_.tail_octaves - 2);
    double r = e0 > 0.0 ? e1 / e0 : 0.0;
    if (!(r < 0.95))
      fail(ErrorCode::ConvergenceError,
           "K: spectral tail does not contract for delta=" + std::to_string(deltas[i]));
    r = std::max(r, 0.0);
    out[i].tail = e1 * r / (1.0 - r);
    out[i].error += 2.0 * std::abs(out[i].tail);
  }
  return out;
}

const KProfile& SpectralKernels::profile(double delta) {
  check_domain(delta);
  const long long k = delta_key(delta);
  {
    std::lock_guard<std::mutex> lock(mu_);
    auto it = cache_.find(k);
    if (it != cache_.end()) return it->second;
  }
  auto v = compute_profiles({delta});
  std::lock_guard<std::mutex> lock(mu_);
  return cache_.emplace(k, std::move(v[0])).first->second;
}

std::vector<double> SpectralKernels::K_batch(const std::vector<double>& deltas) {
  std::vector<double> missing;
  std::set<long long> seen;
  for (double d : deltas) {
    check_domain(d);
    const long long k = delta_key(d);
    std::lock_guard<std::mutex> lock(mu_);
    if (!cache_.count(k) && seen.insert(k).second) missing.push_back(d);
  }
  if (!missing.empty()) {
    auto prof = compute_profiles(missing);
    std::lock_guard<std::mutex> lock(mu_);
    for (auto& p : prof) cache_.emplace(delta_key(p.delta), std::move(p));
  }
  std::vector<double> out;
  for (double d : deltas) out.push_back(profile(d).value());
  return out;
}

double SpectralKernels::K(double delta) {
  const auto& p = profile(delta);
  const double v = p.value();
  if (p.error > 1e-4 * v)
    fail(ErrorCode::ConvergenceError, "K: error budget exceeded for delta=" + std::to_string(delta));
  return v;
}

double SpectralKernels::K_error(double delta) { return profile(delta).error; }

// ---------------------------------------------------------------- folding

double SpectralKernels::g_psi_truncated(double lambda, double delta, int T) const {
  if (lambda == 0.0 && delta > 0.0)
    fail(ErrorCode::SingularityError, "g_psi: lambda = 0 with delta > 0");
  double s = 0.0;
  for (int t = -T; t <= T; ++t) {
    const double xi = lambda + kTwoPi * t;
    const double a2 = std::norm(psi_(xi));
    if (a2 == 0.0) continue;
    s += power_weight(std::abs(xi), delta) * a2;
  }
  return s;
}

double SpectralKernels::g_tail_correction(double delta) {
  return profile(delta).tail_from(2 * s_.trunc_terms + 1) / kTwoPi;
}

double SpectralKernels::g_psi(double lambda, double delta) {
  return g_psi_truncated(lambda, delta, s_.trunc_terms) + g_tail_correction(delta);
}

std::vector<cplx> SpectralKernels::D_u_inf(double lambda, int u, double delta, int T) const {
  if (u < 0 || u > 16) fail(ErrorCode::InvalidArgument, "D_u_inf: u must lie in [0,16]");
  if (lambda == 0.0 && delta > 0.0)
    fail(ErrorCode::SingularityError, "D_u_inf: lambda = 0 with delta > 0");
  if (T < 0) T = s_.trunc_terms;
  const int ntau = 1 << u;
  const double scale = std::ldexp(1.0, -u);
  std::vector<cplx> out(ntau, 0.0);
  std::vector<cplx> ph(u + 1);
  for (int t = -T; t <= T; ++t) {
    const double xi = lambda + kTwoPi * t;
    psi_.psi_hat_dyadic(xi, u, ph.data());
    if (ph[0] == 0.0) continue;
    const cplx base = power_weight(std::abs(xi), delta) * std::conj(ph[0]) * ph[u] *
                      std::sqrt(scale);
    for (int tau = 0; tau < ntau; ++tau) {
      const double arg = scale * tau * xi;
      out[tau] += base * cplx(std::cos(arg), std::sin(arg));
    }
  }
  return out;
}

SpectralKernels::IResult SpectralKernels::I_batch(const std::vector<std::pair<double, double>>& pairs,
                                                  int U) {
  if (U < 0) fail(ErrorCode::InvalidArgument, "I_batch: U must be >= 0");
  // distinct exponents
  std::vector<double> ds;
  std::map<long long, int> index;
  for (auto [a, b] : pairs)
    for (double d : {a, b}) {
      check_domain(d);
      if (index.emplace(delta_key(d), static_cast<int>(ds.size())).second) ds.push_back(d);
    }
  const int nd = static_cast<int>(ds.size()), np = static_cast<int>(pairs.size());
  auto Kv = K_batch(ds);
  std::vector<double> corr(nd);
  for (int i = 0; i < nd; ++i) corr[i] = g_tail_correction(ds[i]);
  std::vector<std::pair<int, int>> pidx;
  for (auto [a, b] : pairs) pidx.emplace_back(index[delta_key(a)], index[delta_key(b)]);

  const int T = s_.trunc_terms, nt = 2 * T + 1, U1 = U + 1;
  std::vector<int> nclass(U1);
  for (int u = 0; u <= U; ++u) nclass[u] = (u >= 30 || (1 << u) >= nt) ? nt : (1 << u);

  const int m = np * U1 * 2;
  auto fn = [&](double lam, double* o) {
    std::vector<cplx> ps(static_cast<size_t>(nt) * U1);
    std::vector<double> w(static_cast<size_t>(nd) * nt);
    for (int t = 0; t < nt; ++t) {
      const double xi = lam + kTwoPi * (t - T);
      psi_.psi_hat_dyadic(xi, U, &ps[static_cast<size_t>(t) * U1]);
      const double lg = std::log(std::abs(xi));
      for (int i = 0; i < nd; ++i) w[static_cast<size_t>(i) * nt + t] = std::exp(-ds[i] * lg);
    }
    std::vector<cplx> S(static_cast<size_t>(nd) * nt);
    for (int u = 0; u <= U; ++u) {
      const int nc = nclass[u];
      std::fill(S.begin(), S.end(), cplx(0.0));
      for (int t = 0; t < nt; ++t) {
        const cplx* pt = &ps[static_cast<size_t>(t) * U1];
        const cplx base = std::conj(pt[0]) * pt[u];
        const int r = nc == nt ? t : (((t - T) % nc) + nc) % nc;
        for (int i = 0; i < nd; ++i) S[static_cast<size_t>(i) * nt + r] += w[static_cast<size_t>(i) * nt + t] * base;
      }
      if (u == 0)
        for (int i = 0; i < nd; ++i) S[static_cast<size_t>(i) * nt] += corr[i];
      for (int p = 0; p < np; ++p) {
        const cplx* s1 = &S[static_cast<size_t>(pidx[p].first) * nt];
        const cplx* s2 = &S[static_cast<size_t>(pidx[p].second) * nt];
        cplx acc = 0.0;
        for (int r = 0; r < nc; ++r) acc += std::conj(s1[r]) * s2[r];
        o[(p * U1 + u) * 2] = acc.real();
        o[(p * U1 + u) * 2 + 1] = acc.imag();
      }
    }
  };
  std::vector<double> abs_tol(m);
  for (int p = 0; p < np; ++p)
    for (int u = 0; u <= U; ++u)
      for (int c = 0; c < 2; ++c)
        abs_tol[(p * U1 + u) * 2 + c] =
            1e-2 * s_.quad_tol * Kv[pidx[p].first] * Kv[pidx[p].second];
  auto r = quad::gauss_kronrod(fn, m, {-kPi, -kPi / 2, 0.0, kPi / 2, kPi}, abs_tol, s_.quad_tol,
                               2000);
  if (!r.converged) fail(ErrorCode::ConvergenceError, "I_u quadrature did not reach tolerance");

  IResult res;
  res.I.assign(np, std::vector<double>(U1));
  res.I_im.assign(np, std::vector<double>(U1));
  res.err.assign(np, std::vector<double>(U1));
  for (int p = 0; p < np; ++p) {
    const double kk = Kv[pidx[p].first] * Kv[pidx[p].second];
    for (int u = 0; u <= U; ++u) {
      const int c = (p * U1 + u) * 2;
      res.I[p][u] = r.value[c];
      res.I_im[p][u] = r.value[c + 1];
      res.err[p][u] = r.error[c];
      if (std::abs(r.value[c + 1]) > std::max(10.0 * s_.quad_tol * kk, 10.0 * r.error[c + 1]))
        fail(ErrorCode::ConvergenceError, "I_u: imaginary part exceeds tolerance");
    }
  }
  return res;
}

double SpectralKernels::I_u(int u, double d1, double d2) { return I_batch({{d1, d2}}, u).I[0][u]; }

double SpectralKernels::tilde_I_u(int u, double d1, double d2) {
  return I_u(u, d1, d2) / (K(d1) * K(d2));
}

// ---------------------------------------------------------------- eta / kappa

std::pair<double, double> eta_kappa(int Delta) {
  if (Delta == kInfiniteDelta) return {1.0, 2.0};
  if (Delta < 0) fail(ErrorCode::InvalidArgument, "eta_kappa: Delta must be >= 0");
  const double norm = 2.0 - std::ldexp(1.0, -Delta);
  double eta = 0.0;
  for (int u = 0; u <= Delta; ++u) eta += u * std::ldexp(1.0, -u) / norm;
  double kappa = 0.0;
  for (int u = 0; u <= Delta; ++u) kappa += (u - eta) * (u - eta) * std::ldexp(1.0, -u) / norm;
  return {eta, kappa};
}

// ---------------------------------------------------------------- table

namespace {

std::tuple<int, long long, long long> ikey(int u, double a, double b) {
  long long ka = delta_key(a), kb = delta_key(b);
  if (ka > kb) std::swap(ka, kb);
  return {u, ka, kb};
}

// 4-point Lagrange stencil on a uniform grid
void stencil(double x, double lo, double h, int n, int& i0, double w[4]) {
  if (n < 4) fail(ErrorCode::DomainError, "kernel grid too small");
  const double s = (x - lo) / h;
  if (s < -1e-9 || s > n - 1 + 1e-9)
    fail(ErrorCode::DomainError, "kernel grid does not cover exponent " + std::to_string(x));
  i0 = std::clamp(static_cast<int>(std::floor(s)) - 1, 0, n - 4);
  const double t = s - i0;
  for (int a = 0; a < 4; ++a) {
    double v = 1.0;
    for (int b = 0; b < 4; ++b)
      if (b != a) v *= (t - b) / double(a - b);
    w[a] = v;
  }
}

}  // namespace

bool KernelTable::has_K(double delta) const {
  return K_values.count(delta_key(delta)) > 0 || has_grid;
}

double KernelTable::K(double delta) const {
  auto it = K_values.find(delta_key(delta));
  if (it != K_values.end()) return it->second;
  if (!has_grid) fail(ErrorCode::DomainError, "kernel table lacks K(" + std::to_string(delta) + ")");
  int i0;
  double w[4];
  stencil(delta, grid_lo, grid_step, grid_n, i0, w);
  double s = 0.0;
  for (int a = 0; a < 4; ++a) s += w[a] * K_grid[i0 + a];
  return s;
}

double KernelTable::I_tilde(int u, double d1, double d2) const {
  if (u < 0 || u > max_u)
    fail(ErrorCode::DomainError, "kernel table holds u <= " + std::to_string(max_u) +
                                     ", requested " + std::to_string(u));
  auto it = I_tilde_values.find(ikey(u, d1, d2));
  if (it != I_tilde_values.end()) return it->second;
  if (!has_grid)
    fail(ErrorCode::DomainError, "kernel table lacks I~_" + std::to_string(u) + "(" +
                                     std::to_string(d1) + ", " + std::to_string(d2) + ")");
  int i0, j0;
  double wi[4], wj[4];
  stencil(d1, grid_lo, grid_step, grid_n, i0, wi);
  stencil(d2, grid_lo, grid_step, grid_n, j0, wj);
  const auto& g = I_grid[u];
  double s = 0.0;
  for (int a = 0; a < 4; ++a)
    for (int b = 0; b < 4; ++b) s += wi[a] * wj[b] * g[(i0 + a) * grid_n + (j0 + b)];
  return s;
}

static KernelTable table_shell(SpectralKernels& sk, int U, int delta_gap) {
  KernelTable t;
  t.family = sk.family().name;
  t.M = sk.family().vanishing_moments;
  t.settings = sk.settings();
  t.max_u = U;
  t.delta_gap = delta_gap;
  if (delta_gap != 0) std::tie(t.eta, t.kappa) = eta_kappa(delta_gap);
  return t;
}

KernelTable build_kernel_table(SpectralKernels& sk, const std::vector<double>& K_deltas,
                               const std::vector<std::pair<double, double>>& pairs, int U,
                               int delta_gap) {
  KernelTable t = table_shell(sk, U, delta_gap);
  std::vector<double> all = K_deltas;
  std::vector<std::pair<double, double>> uniq;
  std::set<std::pair<long long, long long>> seen;
  for (auto [a, b] : pairs) {
    all.push_back(a);
    all.push_back(b);
    const long long ka = delta_key(a), kb = delta_key(b);
    if (seen.insert({std::min(ka, kb), std::max(ka, kb)}).second) uniq.emplace_back(std::min(a, b), std::max(a, b));
  }
  auto Kv = sk.K_batch(all);
  for (size_t i = 0; i < all.size(); ++i) {
    t.K_values[delta_key(all[i])] = Kv[i];
    t.delta_of_key[delta_key(all[i])] = all[i];
  }
  if (!uniq.empty()) {
    auto r = sk.I_batch(uniq, U);
    for (size_t p = 0; p < uniq.size(); ++p)
      for (int u = 0; u <= U; ++u)
        t.I_tilde_values[ikey(u, uniq[p].first, uniq[p].second)] =
            r.I[p][u] / (t.K(uniq[p].first) * t.K(uniq[p].second));
  }
  return t;
}

KernelTable build_kernel_grid(SpectralKernels& sk, double lo, double hi, double step, int U,
                              int delta_gap) {
  KernelTable t = table_shell(sk, U, delta_gap);
  const int n = std::max(4, static_cast<int>(std::ceil((hi - lo) / step - 1e-9)) + 1);
  t.has_grid = true;
  t.grid_lo = lo;
  t.grid_step = step;
  t.grid_n = n;
  std::vector<double> x(n);
  for (int i = 0; i < n; ++i) x[i] = lo + i * step;
  t.K_grid = sk.K_batch(x);
  std::vector<std::pair<double, double>> pairs;
  for (int i = 0; i < n; ++i)
    for (int j = i; j < n; ++j) pairs.emplace_back(x[i], x[j]);
  auto r = sk.I_batch(pairs, U);
  t.I_grid.assign(U + 1, std::vector<double>(static_cast<size_t>(n) * n));
  size_t p = 0;
  for (int i = 0; i < n; ++i)
    for (int j = i; j < n; ++j, ++p)
      for (int u = 0; u <= U; ++u) {
        const double v = r.I[p][u] / (t.K_grid[i] * t.K_grid[j]);
        t.I_grid[u][i * n + j] = v;
        t.I_grid[u][j * n + i] = v;
      }
  return t;
}

// ---------------------------------------------------------------- serialization

std::string kernel_table_to_json(const KernelTable& t) {
  nlohmann::json j;
  j["format"] = "wavewhittle-kernel-table";
  j["schema_version"] = 1;
  j["family"] = t.family;
  j["M"] = t.M;
  j["tolerances"] = {{"quad_tol", t.settings.quad_tol},
                     {"trunc_terms", t.settings.trunc_terms},
                     {"product_depth", t.settings.product_depth},
                     {"tail_octaves", t.settings.tail_octaves},
                     {"inf_max_u", t.settings.inf_max_u},
                     {"inf_term_cutoff", t.settings.inf_term_cutoff}};
  j["max_u"] = t.max_u;
  j["delta_gap"] = t.delta_gap;
  j["eta"] = t.eta;
  j["kappa"] = t.kappa;
  auto& K = j["K"] = nlohmann::json::array();
  for (auto& [k, v] : t.K_values) K.push_back({t.delta_of_key.at(k), v});
  auto& I = j["I_tilde"] = nlohmann::json::array();
  for (auto& [k, v] : t.I_tilde_values) {
    auto [u, a, b] = k;
    I.push_back({u, t.delta_of_key.at(a), t.delta_of_key.at(b), v});
  }
  if (t.has_grid) {
    j["grid"] = {{"lo", t.grid_lo}, {"step", t.grid_step}, {"n", t.grid_n}, {"K", t.K_grid},
                 {"I_tilde", t.I_grid}};
  }
  return j.dump(1);
}

KernelTable kernel_table_from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const std::exception& e) {
    fail(ErrorCode::ParseError, std::string("kernel table: ") + e.what());
  }
  if (j.value("format", "") != "wavewhittle-kernel-table")
    fail(ErrorCode::ParseError, "kernel table: unrecognized format");
  KernelTable t;
  t.family = j.at("family");
  t.M = j.at("M");
  const auto& tol = j.at("tolerances");
  t.settings.quad_tol = tol.at("quad_tol");
  t.settings.trunc_terms = tol.at("trunc_terms");
  t.settings.product_depth = tol.at("product_depth");
  t.settings.tail_octaves = tol.at("tail_octaves");
  t.settings.inf_max_u = tol.at("inf_max_u");
  t.settings.inf_term_cutoff = tol.at("inf_term_cutoff");
  t.max_u = j.at("max_u");
  t.delta_gap = j.at("delta_gap");
  t.eta = j.at("eta");
  t.kappa = j.at("kappa");
  for (const auto& e : j.at("K")) {
    const double d = e[0];
    t.K_values[delta_key(d)] = e[1];
    t.delta_of_key[delta_key(d)] = d;
  }
  for (const auto& e : j.at("I_tilde")) {
    const int u = e[0];
    const double a = e[1], b = e[2];
    t.delta_of_key[delta_key(a)] = a;
    t.delta_of_key[delta_key(b)] = b;
    t.I_tilde_values[ikey(u, a, b)] = e[3];
  }
  if (j.contains("grid")) {
    const auto& g = j["grid"];
    t.has_grid = true;
    t.grid_lo = g.at("lo");
    t.grid_step = g.at("step");
    t.grid_n = g.at("n");
    t.K_grid = g.at("K").get<std::vector<double>>();
    t.I_grid = g.at("I_tilde").get<std::vector<std::vector<double>>>();
  }
  return t;
}

void save_kernel_table(const KernelTable& t, const std::string& path) {
  std::ofstream f(path);
  if (!f) fail(ErrorCode::IoError, "cannot write " + path);
  f << kernel_table_to_json(t) << '\n';
}

KernelTable load_kernel_table(const std::string& path) {
  std::ifstream f(path);
  if (!f) fail(ErrorCode::IoError, "cannot read " + path);
  std::stringstream ss;
  ss << f.rdbuf();
  return kernel_table_from_json(ss.str());
}

// ---------------------------------------------------------------- aggregated kernels

namespace {

double p_s(int Delta, int s) { return std::ldexp(1.0, -s) / (2.0 - std::ldexp(1.0, -Delta)); }

void require_delta(int Delta) {
  if (Delta == 0) fail(ErrorCode::DegenerateDelta, "Delta = 0: kappa vanishes; minimum Delta is 1");
  if (Delta < 0 && Delta != kInfiniteDelta) fail(ErrorCode::InvalidArgument, "invalid Delta");
}

// sum_{u>=1} coef(u) * I~_u(d1, d2) until the running term drops below the cutoff
template <class Coef>
double infinite_series(double d1, double d2, const KernelTable& t, Coef coef) {
  const int umax = std::min(t.settings.inf_max_u, t.max_u);
  const double cutoff = t.settings.inf_term_cutoff;
  double sum = 0.0, prev = std::numeric_limits<double>::infinity();
  int growing = 0;
  for (int u = 1; u <= umax; ++u) {
    const double term = coef(u) * t.I_tilde(u, d1, d2);
    sum += term;
    if (std::abs(term) < cutoff) return sum;
    growing = std::abs(term) > prev ? growing + 1 : 0;
    if (growing >= 3 && std::max(d1, d2) >= 1.0)
      fail(ErrorCode::DivergentSeries, "infinite-Delta kernel series diverges (max delta >= 1)");
    prev = std::abs(term);
  }
  if (std::max(d1, d2) >= 1.0)
    fail(ErrorCode::DivergentSeries, "infinite-Delta kernel series does not contract");
  if (umax < t.settings.inf_max_u)
    fail(ErrorCode::DomainError, "kernel table too shallow for the Delta = infinity series");
  return sum;
}

}  // namespace

double scale_pair_weight(int Delta, int u) {
  if (Delta == kInfiniteDelta) return 2.0;
  const double eta = eta_kappa(Delta).first;
  double q = 0.0;
  for (int s = 0; s <= Delta - u; ++s) q += p_s(Delta, s) * (s - eta) * (s + u - eta);
  return q;
}

double script_I_Delta(int Delta, double d1, double d2, const KernelTable& t) {
  require_delta(Delta);
  const double I0 = t.I_tilde(0, d1, d2);
  if (Delta == kInfiniteDelta)
    return I0 + infinite_series(d1, d2, t, [&](int u) {
             return (std::exp2(u * d1) + std::exp2(u * d2)) * std::ldexp(1.0, -u);
           });
  auto [eta, kappa] = eta_kappa(Delta);
  const double norm = 2.0 - std::ldexp(1.0, -Delta);
  double s = 2.0 / kappa * I0;
  for (int u = 1; u <= Delta; ++u) {
    const double w = (2.0 - std::ldexp(1.0, -Delta + u)) / norm;
    const double eta_r = eta_kappa(Delta - u).first;
    s += 2.0 / (kappa * kappa) * (std::exp2(u * d1) + std::exp2(u * d2)) * std::ldexp(1.0, -u) * w *
         (u - eta) * (u - eta - eta_r) * t.I_tilde(u, d1, d2);
  }
  return s;
}

double script_I_G_Delta(int Delta, double d1, double d2, const KernelTable& t, GWeight gw) {
  require_delta(Delta);
  const double I0 = t.I_tilde(0, d1, d2);
  if (Delta == kInfiniteDelta)
    return I0 + infinite_series(d1, d2, t, [&](int u) {
             return (std::exp2(u * d1) + std::exp2(u * d2)) * std::ldexp(1.0, -u);
           });
  const double norm = 2.0 - std::ldexp(1.0, -Delta);
  double s = I0;
  for (int u = 1; u <= Delta; ++u) {
    const double w = (2.0 - std::ldexp(1.0, gw == GWeight::Exact ? -Delta + u : -Delta - u)) / norm;
    s += (std::exp2(u * d1) + std::exp2(u * d2)) * std::ldexp(1.0, -u) * w * t.I_tilde(u, d1, d2);
  }
  return s;
}

double script_I_dG_Delta(int Delta, double d1, double d2, const KernelTable& t) {
  if (Delta == kInfiniteDelta) fail(ErrorCode::InvalidArgument, "I^{d,G} requires finite Delta");
  require_delta(Delta);
  auto [eta, kappa] = eta_kappa(Delta);
  const double norm = 2.0 - std::ldexp(1.0, -Delta);
  double s = 0.0;
  for (int u = 1; u <= Delta; ++u) {
    const double w = (2.0 - std::ldexp(1.0, -Delta - u)) / norm;
    const double eta_r = eta_kappa(Delta - u).first;
    s += std::ldexp(1.0, -u) * t.I_tilde(u, d1, d2) *
         ((std::exp2(-u * d1) + std::exp2(-u * d2)) * w * (u - eta) + std::exp2(-u * d2) * eta_r);
  }
  return s / kappa;
}

double assembled_I_d(int Delta, double e1, double e2, double d1, double d2, const KernelTable& t) {
  require_delta(Delta);
  const double I0 = t.I_tilde(0, d1, d2);
  if (Delta == kInfiniteDelta)
    return I0 + infinite_series(d1, d2, t, [&](int u) {
             return (std::exp2(u * e1) + std::exp2(u * e2)) * std::ldexp(1.0, -u);
           });
  const double kappa = eta_kappa(Delta).second;
  double s = 2.0 / kappa * I0;
  for (int u = 1; u <= Delta; ++u)
    s += 2.0 / (kappa * kappa) * (std::exp2(u * e1) + std::exp2(u * e2)) * std::ldexp(1.0, -u) *
         scale_pair_weight(Delta, u) * t.I_tilde(u, d1, d2);
  return s;
}

double assembled_I_G(int Delta, double e1, double e2, double d1, double d2, const KernelTable& t) {
  require_delta(Delta);
  const double I0 = t.I_tilde(0, d1, d2);
  if (Delta == kInfiniteDelta)
    return I0 + infinite_series(d1, d2, t, [&](int u) {
             return (std::exp2(u * e1) + std::exp2(u * e2)) * std::ldexp(1.0, -u);
           });
  const double norm = 2.0 - std::ldexp(1.0, -Delta);
  double s = I0;
  for (int u = 1; u <= Delta; ++u) {
    const double w = (2.0 - std::ldexp(1.0, -Delta + u)) / norm;
    s += (std::exp2(u * e1) + std::exp2(u * e2)) * std::ldexp(1.0, -u) * w * t.I_tilde(u, d1, d2);
  }
  return s;
}

double assembled_I_dG(int Delta, double ed, double eg, double d1, double d2, const KernelTable& t) {
  require_delta(Delta);
  if (Delta == kInfiniteDelta)
    return infinite_series(d1, d2, t, [&](int u) {
      return std::ldexp(1.0, -u) * u * std::exp2(u * eg);
    });
  const double eta = eta_kappa(Delta).first;
  double s = 0.0;
  for (int u = 1; u <= Delta; ++u) {
    double a = 0.0, b = 0.0;
    for (int v = 0; v <= Delta - u; ++v) {
      a += p_s(Delta, v) * (v - eta);
      b += p_s(Delta, v) * (v + u - eta);
    }
    s += std::ldexp(1.0, -u) * t.I_tilde(u, d1, d2) * (std::exp2(u * ed) * a + std::exp2(u * eg) * b);
  }
  return s;
}

}  // namespace ww
