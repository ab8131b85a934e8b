#include "wavewhittle/estimation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>

#include "wavewhittle/error.hpp"

namespace ww {

namespace {
constexpr double kLn2 = std::numbers::ln2;
constexpr double kInf = std::numeric_limits<double>::infinity();
}  // namespace

ScaleCovarianceSet make_scale_set(int j0, std::vector<Eigen::MatrixXd> sigma, std::vector<int> counts) {
  if (sigma.empty() || sigma.size() != counts.size())
    fail(ErrorCode::InvalidArgument, "scale set: need matching, non-empty sigma/count lists");
  ScaleCovarianceSet s;
  s.j0 = j0;
  s.j1 = j0 + static_cast<int>(sigma.size()) - 1;
  long long n = 0;
  double js = 0.0;
  for (size_t i = 0; i < sigma.size(); ++i) {
    if (counts[i] < 1) fail(ErrorCode::EmptyScale, "scale " + std::to_string(j0 + i) + " has no coefficients");
    if ((sigma[i] - sigma[i].transpose()).cwiseAbs().maxCoeff() > 1e-12 * (1.0 + sigma[i].cwiseAbs().maxCoeff()))
      fail(ErrorCode::InvalidArgument, "scale covariance not symmetric");
    n += counts[i];
    js += double(counts[i]) * (j0 + static_cast<int>(i));
  }
  s.sigma_hat = std::move(sigma);
  s.counts = std::move(counts);
  s.n = static_cast<int>(n);
  s.mean_scale = js / double(n);
  return s;
}

ScaleCovarianceSet scale_covariances(const WaveletPyramid& pyr) {
  std::vector<Eigen::MatrixXd> sig;
  for (int j = pyr.j0; j <= pyr.j1; ++j) {
    const auto& W = pyr.at(j);
    if (W.rows() < 1) fail(ErrorCode::EmptyScale, "scale " + std::to_string(j) + " has no coefficients");
    Eigen::MatrixXd S = (W.transpose() * W) / double(W.rows());
    S = 0.5 * (S + S.transpose()).eval();
    sig.push_back(std::move(S));
  }
  return make_scale_set(pyr.j0, std::move(sig), pyr.counts);
}

std::map<int, Eigen::MatrixXd> scale_correlations(const ScaleCovarianceSet& set) {
  std::map<int, Eigen::MatrixXd> out;
  for (int j = set.j0; j <= set.j1; ++j) {
    const auto& S = set.at(j);
    Eigen::VectorXd dg = S.diagonal();
    if ((dg.array() <= 0.0).any())
      fail(ErrorCode::DegenerateVariance, "zero wavelet variance at scale " + std::to_string(j));
    Eigen::VectorXd is = dg.cwiseSqrt().cwiseInverse();
    Eigen::MatrixXd R = is.asDiagonal() * S * is.asDiagonal();
    R.diagonal().setOnes();
    out[j] = R.cwiseMax(-1.0).cwiseMin(1.0);
  }
  return out;
}

namespace {

// (1/n) sum_j n_j j^power 2^{-j(d_a+d_b)} sigma_ab(j)
Eigen::MatrixXd weighted_moment(const ScaleCovarianceSet& set, const Eigen::VectorXd& d, int power) {
  const int p = set.dim();
  if (d.size() != p) fail(ErrorCode::InvalidArgument, "d has wrong length");
  if (!d.allFinite()) fail(ErrorCode::InvalidArgument, "d not finite");
  Eigen::MatrixXd G = Eigen::MatrixXd::Zero(p, p);
  for (int i = 0; i < set.scales(); ++i) {
    const int j = set.j0 + i;
    Eigen::VectorXd s = (-double(j) * d).unaryExpr([](double x) { return std::exp2(x); });
    const double w = set.counts[i] * std::pow(double(j), power) / set.n;
    G.noalias() += w * (s.asDiagonal() * set.sigma_hat[i] * s.asDiagonal());
  }
  return G;
}

}  // namespace

Eigen::MatrixXd G_hat(const ScaleCovarianceSet& set, const Eigen::VectorXd& d) {
  return weighted_moment(set, d, 0);
}

CriterionValue whittle_criterion_R(const ScaleCovarianceSet& set, const Eigen::VectorXd& d) {
  Eigen::LLT<Eigen::MatrixXd> llt(G_hat(set, d));
  if (llt.info() != Eigen::Success) return {kInf, true};
  const auto& L = llt.matrixL();
  double logdet = 0.0;
  for (int i = 0; i < d.size(); ++i) {
    const double v = L(i, i);
    if (!(v > 0.0)) return {kInf, true};
    logdet += 2.0 * std::log(v);
  }
  return {logdet + 2.0 * kLn2 * set.mean_scale * d.sum(), false};
}

double whittle_R(const ScaleCovarianceSet& set, const Eigen::VectorXd& d) {
  auto r = whittle_criterion_R(set, d);
  if (r.non_pd) fail(ErrorCode::NonPDMatrix, "G_hat(d) is not positive definite");
  return r.value;
}

double whittle_likelihood(const ScaleCovarianceSet& set, const Eigen::MatrixXd& G, const Eigen::VectorXd& d) {
  double L = 0.0;
  for (int i = 0; i < set.scales(); ++i) {
    const int j = set.j0 + i;
    Eigen::VectorXd s = (double(j) * d).unaryExpr([](double x) { return std::exp2(x); });
    Eigen::MatrixXd C = s.asDiagonal() * G * s.asDiagonal();
    Eigen::LLT<Eigen::MatrixXd> llt(C);
    if (llt.info() != Eigen::Success) fail(ErrorCode::NonPDMatrix, "model covariance not PD");
    double logdet = 0.0;
    for (int k = 0; k < C.rows(); ++k) logdet += 2.0 * std::log(llt.matrixL()(k, k));
    L += set.counts[i] * (logdet + llt.solve(set.sigma_hat[i]).trace());
  }
  return L / set.n;
}

Eigen::VectorXd whittle_gradient(const ScaleCovarianceSet& set, const Eigen::VectorXd& d) {
  Eigen::LDLT<Eigen::MatrixXd> ldlt(G_hat(set, d));
  if (ldlt.info() != Eigen::Success) fail(ErrorCode::NonPDMatrix, "G_hat(d) is singular");
  Eigen::MatrixXd X = ldlt.solve(weighted_moment(set, d, 1));
  return (-2.0 * kLn2 * X.diagonal()).array() + 2.0 * kLn2 * set.mean_scale;
}

Eigen::MatrixXd whittle_hessian(const ScaleCovarianceSet& set, const Eigen::VectorXd& d) {
  const int p = set.dim();
  Eigen::MatrixXd G = G_hat(set, d);
  Eigen::LDLT<Eigen::MatrixXd> ldlt(G);
  if (ldlt.info() != Eigen::Success) fail(ErrorCode::NonPDMatrix, "G_hat(d) is singular");
  Eigen::MatrixXd Gi = ldlt.solve(Eigen::MatrixXd::Identity(p, p));
  Eigen::MatrixXd S1 = weighted_moment(set, d, 1), S2 = weighted_moment(set, d, 2);
  // X_a = G^{-1} dG/dd_a, (dG/dd_a)_{ce} = -log2 S1_ce (delta_ac + delta_ae)
  std::vector<Eigen::MatrixXd> X(p);
  for (int a = 0; a < p; ++a) {
    Eigen::MatrixXd D = Eigen::MatrixXd::Zero(p, p);
    D.row(a) += S1.row(a);
    D.col(a) += S1.col(a);
    X[a] = Gi * (-kLn2 * D);
  }
  Eigen::MatrixXd H(p, p);
  for (int a = 0; a < p; ++a)
    for (int b = a; b < p; ++b) {
      double t2 = 0.0;
      for (int c = 0; c < p; ++c)
        for (int e = 0; e < p; ++e) {
          const int w = ((a == c) + (a == e)) * ((b == c) + (b == e));
          if (w) t2 += w * Gi(e, c) * S2(c, e);
        }
      const double v = -(X[b].cwiseProduct(X[a].transpose())).sum() + kLn2 * kLn2 * t2;
      H(a, b) = H(b, a) = v;
    }
  return H;
}

Eigen::VectorXd init_d_log_regression(const ScaleCovarianceSet& set) {
  const int J = set.scales(), p = set.dim();
  if (J < 2) fail(ErrorCode::InvalidArgument, "log-regression init needs at least 2 scales");
  Eigen::VectorXd d(p);
  const double jm = set.j0 + (J - 1) / 2.0;
  for (int a = 0; a < p; ++a) {
    double sxy = 0.0, sxx = 0.0, ym = 0.0;
    std::vector<double> y(J);
    for (int i = 0; i < J; ++i) {
      const double v = set.sigma_hat[i](a, a);
      if (!(v > 0.0))
        fail(ErrorCode::DegenerateVariance, "zero wavelet variance in component " + std::to_string(a));
      y[i] = std::log2(v);
      ym += y[i] / J;
    }
    for (int i = 0; i < J; ++i) {
      const double x = set.j0 + i - jm;
      sxy += x * (y[i] - ym);
      sxx += x * x;
    }
    d(a) = 0.5 * sxy / sxx;
  }
  return d;
}

// ---------------------------------------------------------------- Nelder-Mead

NMResult nelder_mead(const std::function<double(const Eigen::VectorXd&)>& f, const Eigen::VectorXd& x0,
                     double step, const Bounds& b, int max_iter, double x_tol, double f_tol,
                     std::vector<TraceEntry>* trace, int trace_every, const std::string& phase) {
  const int n = static_cast<int>(x0.size());
  auto inside = [&](const Eigen::VectorXd& x) {
    return (x.array() >= b.lo).all() && (x.array() <= b.hi).all();
  };
  auto F = [&](const Eigen::VectorXd& x) {
    if (!inside(x)) return kInf;
    const double v = f(x);
    return std::isnan(v) ? kInf : v;
  };
  // adaptive coefficients for higher dimension
  const double alpha = 1.0;
  const double gamma = n > 2 ? 1.0 + 2.0 / n : 2.0;
  const double rho = n > 2 ? 0.75 - 1.0 / (2.0 * n) : 0.5;
  const double sigma = n > 2 ? 1.0 - 1.0 / n : 0.5;

  std::vector<Eigen::VectorXd> xs(n + 1, x0);
  std::vector<double> fs(n + 1);
  for (int i = 0; i < n; ++i) {
    xs[i + 1](i) += (x0(i) + step <= b.hi) ? step : -step;
  }
  for (int i = 0; i <= n; ++i) fs[i] = F(xs[i]);

  std::vector<int> order(n + 1);
  NMResult res;
  int it = 0;
  for (; it < max_iter; ++it) {
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int i, int j) { return fs[i] < fs[j]; });
    {
      std::vector<Eigen::VectorXd> x2(n + 1);
      std::vector<double> f2(n + 1);
      for (int i = 0; i <= n; ++i) {
        x2[i] = xs[order[i]];
        f2[i] = fs[order[i]];
      }
      xs.swap(x2);
      fs.swap(f2);
    }
    double diam = 0.0;
    for (int i = 1; i <= n; ++i) diam = std::max(diam, (xs[i] - xs[0]).cwiseAbs().maxCoeff());
    const double spread = std::isfinite(fs[n]) ? fs[n] - fs[0] : kInf;
    if (trace && it % trace_every == 0) trace->push_back({it, fs[0], diam, phase});
    if (diam < x_tol && spread < f_tol) {
      res.converged = true;
      break;
    }
    Eigen::VectorXd c = Eigen::VectorXd::Zero(n);
    for (int i = 0; i < n; ++i) c += xs[i];
    c /= n;
    Eigen::VectorXd xr = c + alpha * (c - xs[n]);
    const double fr = F(xr);
    if (fr < fs[0]) {
      Eigen::VectorXd xe = c + gamma * (xr - c);
      const double fe = F(xe);
      if (fe < fr) {
        xs[n] = xe;
        fs[n] = fe;
      } else {
        xs[n] = xr;
        fs[n] = fr;
      }
      continue;
    }
    if (fr < fs[n - 1]) {
      xs[n] = xr;
      fs[n] = fr;
      continue;
    }
    bool shrink = false;
    if (fr < fs[n]) {
      Eigen::VectorXd xc = c + rho * (xr - c);
      const double fc = F(xc);
      if (fc <= fr) {
        xs[n] = xc;
        fs[n] = fc;
      } else {
        shrink = true;
      }
    } else {
      Eigen::VectorXd xc = c + rho * (xs[n] - c);
      const double fc = F(xc);
      if (fc < fs[n]) {
        xs[n] = xc;
        fs[n] = fc;
      } else {
        shrink = true;
      }
    }
    if (shrink)
      for (int i = 1; i <= n; ++i) {
        xs[i] = xs[0] + sigma * (xs[i] - xs[0]);
        fs[i] = F(xs[i]);
      }
  }
  const int best = static_cast<int>(std::min_element(fs.begin(), fs.end()) - fs.begin());
  res.x = xs[best];
  res.f = fs[best];
  res.iterations = it;
  if (trace) trace->push_back({it, res.f, 0.0, phase + (res.converged ? ":converged" : ":stopped")});
  return res;
}

EstimateD estimate_d(const ScaleCovarianceSet& set, const Eigen::VectorXd& init, const OptimOptions& opt) {
  const int p = set.dim();
  if (init.size() != p) fail(ErrorCode::InvalidArgument, "init has wrong length");
  const Bounds& b = opt.bounds;
  auto R = [&](const Eigen::VectorXd& d) { return whittle_criterion_R(set, d).value; };
  const double margin = 1e-3 * (b.hi - b.lo);
  Eigen::VectorXd x0 = init.unaryExpr([&](double v) {
    return std::isfinite(v) ? std::clamp(v, b.lo + margin, b.hi - margin) : 0.0;
  });
  if (!std::isfinite(R(x0))) x0.setZero();

  EstimateD out;
  const int max_iter = opt.max_iter_per_dim * p;
  auto r1 = nelder_mead(R, x0, opt.initial_step, b, max_iter, opt.x_tol, opt.f_tol, &out.trace,
                        opt.trace_every, "simplex");
  Eigen::VectorXd x1 = r1.x;
  for (int i = 0; i < p; ++i) x1(i) += (i % 2 ? -1.0 : 1.0) * opt.restart_perturbation;
  x1 = x1.cwiseMax(b.lo).cwiseMin(b.hi);
  auto r2 = nelder_mead(R, x1, opt.initial_step, b, max_iter, opt.x_tol, opt.f_tol, &out.trace,
                        opt.trace_every, "restart");
  NMResult best = r2.f < r1.f ? r2 : r1;
  out.iterations = r1.iterations + r2.iterations;
  bool converged = r1.converged || r2.converged;

  if (opt.newton_polish && std::isfinite(best.f)) {
    Eigen::VectorXd x = best.x;
    double fx = best.f;
    for (int it = 0; it < 50; ++it) {
      Eigen::VectorXd g;
      Eigen::MatrixXd H;
      try {
        g = whittle_gradient(set, x);
        H = whittle_hessian(set, x);
      } catch (const Error&) {
        break;
      }
      Eigen::LDLT<Eigen::MatrixXd> ldlt(H);
      if (ldlt.info() != Eigen::Success || !ldlt.isPositive()) break;
      Eigen::VectorXd step = -ldlt.solve(g);
      if (!step.allFinite()) break;
      double t = 1.0;
      bool moved = false;
      for (int ls = 0; ls < 30; ++ls, t *= 0.5) {
        Eigen::VectorXd xn = x + t * step;
        if ((xn.array() < b.lo).any() || (xn.array() > b.hi).any()) continue;
        const double fn = R(xn);
        if (fn <= fx) {
          moved = fn < fx || (t * step).cwiseAbs().maxCoeff() > 0.0;
          x = xn;
          fx = fn;
          break;
        }
      }
      out.trace.push_back({out.iterations + it, fx, (t * step).cwiseAbs().maxCoeff(), "newton"});
      if (!moved || (t * step).cwiseAbs().maxCoeff() < 1e-13) break;
    }
    best.x = x;
    best.f = fx;
    try {
      if (whittle_gradient(set, x).cwiseAbs().maxCoeff() < 1e-6) converged = true;
    } catch (const Error&) {
    }
  }
  if (!converged || !std::isfinite(best.f))
    fail(ErrorCode::OptimFailed, "simplex search did not converge within " + std::to_string(max_iter) +
                                     " iterations");
  out.d_hat = best.x;
  out.criterion = best.f;
  out.boundary_hit = ((best.x.array() - b.lo).abs() < 1e-4).any() || ((b.hi - best.x.array()).abs() < 1e-4).any();
  return out;
}

Eigen::MatrixXd omega_hat(const Eigen::MatrixXd& G, const Eigen::VectorXd& d, const KernelTable& t) {
  const int p = static_cast<int>(G.rows());
  Eigen::MatrixXd O(p, p);
  for (int a = 0; a < p; ++a)
    for (int b = a; b < p; ++b) {
      const double c = std::cos(std::numbers::pi * (d(a) - d(b)) / 2.0);
      if (std::abs(c) <= 1e-6)
        fail(ErrorCode::CosineSingularity, "cos(pi (d_a - d_b)/2) vanishes for components " +
                                               std::to_string(a) + ", " + std::to_string(b));
      O(a, b) = O(b, a) = G(a, b) / (c * t.K(d(a) + d(b)));
    }
  return O;
}

Eigen::MatrixXd long_run_correlations(const Eigen::MatrixXd& G) {
  Eigen::VectorXd dg = G.diagonal();
  if ((dg.array() <= 0.0).any()) fail(ErrorCode::DegenerateVariance, "non-positive diagonal in G_hat");
  Eigen::VectorXd is = dg.cwiseSqrt().cwiseInverse();
  Eigen::MatrixXd R = is.asDiagonal() * G * is.asDiagonal();
  R.diagonal().setOnes();
  return R.cwiseMax(-1.0).cwiseMin(1.0);
}

}  // namespace ww
