#include "wavewhittle/wavelet.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numeric>

#include <Eigen/Eigenvalues>

#include "wavewhittle/error.hpp"

namespace ww {

namespace {

using cd = std::complex<double>;

double binom(int n, int k) {
  double r = 1.0;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

// Roots of the half-band polynomial P(y) = sum_{k<M} C(M-1+k,k) y^k.
std::vector<cd> half_band_roots(int M) {
  const int deg = M - 1;
  std::vector<double> c(M);
  for (int k = 0; k < M; ++k) c[k] = binom(M - 1 + k, k);
  if (deg == 0) return {};
  Eigen::MatrixXd comp = Eigen::MatrixXd::Zero(deg, deg);
  for (int i = 1; i < deg; ++i) comp(i, i - 1) = 1.0;
  for (int i = 0; i < deg; ++i) comp(i, deg - 1) = -c[i] / c[deg];
  Eigen::EigenSolver<Eigen::MatrixXd> es(comp, false);
  std::vector<cd> roots(es.eigenvalues().data(), es.eigenvalues().data() + deg);
  // Newton polish
  for (auto& r : roots) {
    for (int it = 0; it < 8; ++it) {
      cd p = c[deg], dp = 0.0;
      for (int k = deg - 1; k >= 0; --k) {
        dp = dp * r + p;
        p = p * r + c[k];
      }
      if (std::abs(dp) == 0.0) break;
      r -= p / dp;
    }
  }
  return roots;
}

}  // namespace

double daubechies_regularity(int M) {
  // M - 0.5 log2 C(2M-1, M-1)
  if (M < 2 || M > 10) fail(ErrorCode::UnsupportedOrder, "regularity: M out of range");
  double binom = 1.0;
  for (int i = 1; i <= M - 1; ++i) binom = binom * (M + i) / i;
  return M - 0.5 * std::log2(binom);
}

WaveletFamily build_daubechies_filters(int M) {
  if (M < 2 || M > 10)
    fail(ErrorCode::UnsupportedOrder, "Daubechies order must lie in [2,10], got " + std::to_string(M));

  // poly in w = z^{-1}: (1+w)^M * prod (w - z_i), |z_i| > 1
  std::vector<cd> poly{1.0};
  auto mul = [&](cd a0, cd a1) {  // multiply by (a0 + a1 w)
    std::vector<cd> out(poly.size() + 1, 0.0);
    for (size_t i = 0; i < poly.size(); ++i) {
      out[i] += poly[i] * a0;
      out[i + 1] += poly[i] * a1;
    }
    poly.swap(out);
  };
  for (int i = 0; i < M; ++i) mul(1.0, 1.0);
  for (cd y : half_band_roots(M)) {
    // (2 - z - 1/z)/4 = y  ->  z^2 - (2 - 4y) z + 1 = 0
    cd b = 2.0 - 4.0 * y;
    cd s = std::sqrt(b * b - 4.0);
    cd z1 = (b + s) / 2.0, z2 = (b - s) / 2.0;
    cd z = std::abs(z1) > std::abs(z2) ? z1 : z2;
    mul(-z, 1.0);
  }

  WaveletFamily f;
  f.vanishing_moments = M;
  f.name = "db" + std::to_string(M);
  const int L = 2 * M;
  f.scaling_filter.resize(L);
  double sum = 0.0;
  for (int k = 0; k < L; ++k) sum += poly[k].real();
  for (int k = 0; k < L; ++k) f.scaling_filter[k] = poly[k].real() * std::sqrt(2.0) / sum;
  f.wavelet_filter.resize(L);
  for (int k = 0; k < L; ++k)
    f.wavelet_filter[k] = ((k % 2) ? -1.0 : 1.0) * f.scaling_filter[L - 1 - k];
  f.support_length = L - 1;
  f.regularity = daubechies_regularity(M);
  return f;
}

TimeSeriesPanel make_panel(Eigen::MatrixXd values, std::vector<std::string> names) {
  TimeSeriesPanel p;
  p.values = std::move(values);
  if (names.empty())
    for (int a = 0; a < p.values.cols(); ++a) names.push_back("X" + std::to_string(a + 1));
  if (static_cast<Eigen::Index>(names.size()) != p.values.cols())
    fail(ErrorCode::InvalidArgument, "component name count does not match columns");
  p.component_names = std::move(names);
  return p;
}

int coefficient_count(int N, int j, int T) {
  double v = std::ldexp(static_cast<double>(N - T + 1), -j) - T + 1;
  return v <= 0.0 ? 0 : static_cast<int>(std::floor(v));
}

int max_scale(int N, int T, int min_count) {
  int j = 0;
  while (coefficient_count(N, j + 1, T) >= min_count) ++j;
  return j;
}

std::vector<double> level_filter(const WaveletFamily& family, int j) {
  if (j < 1) fail(ErrorCode::IndexOutOfRange, "level filter needs j >= 1");
  const auto& h = family.scaling_filter;
  const auto& g = family.wavelet_filter;
  std::vector<double> low{1.0};
  for (int lev = 1; lev <= j; ++lev) {
    const auto& taps = lev == j ? g : h;
    const size_t up = size_t(1) << (lev - 1);
    std::vector<double> out(low.size() + up * (taps.size() - 1), 0.0);
    for (size_t n = 0; n < taps.size(); ++n)
      for (size_t m = 0; m < low.size(); ++m) out[m + up * n] += taps[n] * low[m];
    low.swap(out);
  }
  return low;
}

WaveletPyramid pyramid_transform(const TimeSeriesPanel& panel, const WaveletFamily& family,
                                 int j0, int j1) {
  const int N = panel.length(), p = panel.dim();
  const int T = family.support_length;
  if (j0 < 1 || j1 < j0)
    fail(ErrorCode::InvalidArgument, "need 1 <= j0 <= j1 (got j0=" + std::to_string(j0) +
                                         ", j1=" + std::to_string(j1) + ")");
  if (coefficient_count(N, j1, T) < 4)
    fail(ErrorCode::SeriesTooShort, "series of length " + std::to_string(N) +
                                        " leaves fewer than 4 interior coefficients at scale " +
                                        std::to_string(j1));
  if (!panel.values.allFinite()) fail(ErrorCode::NonFiniteInput, "panel contains NaN or Inf");

  WaveletPyramid pyr;
  pyr.j0 = j0;
  pyr.j1 = j1;
  pyr.family = family;
  for (int j = j0; j <= j1; ++j) {
    pyr.counts.push_back(coefficient_count(N, j, T));
    pyr.coefficients.emplace_back(pyr.counts.back(), p);
  }

  const auto& h = family.scaling_filter;
  const auto& g = family.wavelet_filter;
  const int L = static_cast<int>(h.size());
  for (int a = 0; a < p; ++a) {
    std::vector<double> approx(panel.values.col(a).data(), panel.values.col(a).data() + N);
    for (int j = 1; j <= j1; ++j) {
      const int m = static_cast<int>(approx.size());
      const int valid = m >= L ? (m - L) / 2 + 1 : 0;
      std::vector<double> next(valid);
      const bool keep = j >= j0;
      Eigen::MatrixXd* dst = keep ? &pyr.coefficients[j - j0] : nullptr;
      const int nkeep = keep ? pyr.counts[j - j0] : 0;
      for (int k = 0; k < valid; ++k) {
        const double* x = approx.data() + 2 * k;
        double s = 0.0, d = 0.0;
        for (int n = 0; n < L; ++n) {
          s += h[n] * x[n];
          d += g[n] * x[n];
        }
        next[k] = s;
        if (k < nkeep) (*dst)(k, a) = d;
      }
      approx.swap(next);
    }
  }
  return pyr;
}

double direct_transform_oracle(const TimeSeriesPanel& panel, const WaveletFamily& family,
                               int j, int k, int component) {
  if (component < 0 || component >= panel.dim())
    fail(ErrorCode::IndexOutOfRange, "component index out of range");
  if (j < 1 || k < 0) fail(ErrorCode::IndexOutOfRange, "scale/translation out of range");
  auto f = level_filter(family, j);
  const long start = (long(1) << j) * k;
  if (start + static_cast<long>(f.size()) > panel.length())
    fail(ErrorCode::IndexOutOfRange, "(j,k) is not an interior coefficient");
  double s = 0.0;
  for (size_t m = 0; m < f.size(); ++m) s += f[m] * panel.values(start + m, component);
  return s;
}

PeriodicTransform periodic_transform(const std::vector<double>& x, const WaveletFamily& family,
                                     int levels) {
  const auto& h = family.scaling_filter;
  const auto& g = family.wavelet_filter;
  PeriodicTransform out;
  std::vector<double> a = x;
  for (int lev = 0; lev < levels; ++lev) {
    const size_t m = a.size();
    if (m < 2 || m % 2) fail(ErrorCode::InvalidArgument, "periodic transform needs dyadic length");
    std::vector<double> s(m / 2), d(m / 2);
    for (size_t k = 0; k < m / 2; ++k) {
      double ss = 0.0, dd = 0.0;
      for (size_t n = 0; n < h.size(); ++n) {
        double v = a[(2 * k + n) % m];
        ss += h[n] * v;
        dd += g[n] * v;
      }
      s[k] = ss;
      d[k] = dd;
    }
    out.details.push_back(std::move(d));
    a.swap(s);
  }
  out.smooth = std::move(a);
  return out;
}

}  // namespace ww
