#include "wavewhittle/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "wavewhittle/error.hpp"

namespace ww {

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) fail(ErrorCode::DomainError, "normal quantile needs 0 < p < 1");
  static constexpr double a[] = {-3.969683028665376e+01, 2.209460984245205e+02, -2.759285104469687e+02,
                                 1.383577518672690e+02,  -3.066479806614716e+01, 2.506628277459239e+00};
  static constexpr double b[] = {-5.447609879822406e+01, 1.615858368580409e+02, -1.556989798598866e+02,
                                 6.680131188771972e+01,  -1.328068155288572e+01};
  static constexpr double c[] = {-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e+00,
                                 -2.549732539343734e+00, 4.374664141464968e+00,  2.938163982698783e+00};
  static constexpr double dd[] = {7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e+00,
                                  3.754408661907416e+00};
  constexpr double plow = 0.02425;
  double x;
  if (p < plow) {
    const double q = std::sqrt(-2 * std::log(p));
    x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((dd[0] * q + dd[1]) * q + dd[2]) * q + dd[3]) * q + 1);
  } else if (p <= 1 - plow) {
    const double q = p - 0.5, r = q * q;
    x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
        (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1);
  } else {
    const double q = std::sqrt(-2 * std::log1p(-p));
    x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((dd[0] * q + dd[1]) * q + dd[2]) * q + dd[3]) * q + 1);
  }
  const double e = normal_cdf(x) - p;
  const double u = e * std::sqrt(2 * std::numbers::pi) * std::exp(0.5 * x * x);
  return x - u / (1 + 0.5 * x * u);
}

Moments sample_moments(std::span<const double> x) {
  Moments m;
  m.n = static_cast<int>(x.size());
  if (m.n < 2) fail(ErrorCode::InvalidArgument, "need at least two values");
  for (double v : x) m.mean += v;
  m.mean /= m.n;
  double m2 = 0, m3 = 0, m4 = 0;
  for (double v : x) {
    const double e = v - m.mean, e2 = e * e;
    m2 += e2;
    m3 += e2 * e;
    m4 += e2 * e2;
  }
  m.sd = std::sqrt(m2 / (m.n - 1));
  m2 /= m.n;
  m3 /= m.n;
  m4 /= m.n;
  if (m2 > 0) {
    m.skewness = m3 / std::pow(m2, 1.5);
    m.excess_kurtosis = m4 / (m2 * m2) - 3.0;
  }
  return m;
}

double ks_distance_normal(std::span<const double> x, double mu, double sigma) {
  if (x.empty()) fail(ErrorCode::InvalidArgument, "empty sample");
  if (!(sigma > 0)) fail(ErrorCode::DomainError, "sigma must be positive");
  std::vector<double> s(x.begin(), x.end());
  std::sort(s.begin(), s.end());
  const double n = static_cast<double>(s.size());
  double D = 0.0;
  for (size_t i = 0; i < s.size(); ++i) {
    const double F = normal_cdf((s[i] - mu) / sigma);
    D = std::max({D, (i + 1) / n - F, F - i / n});
  }
  return D;
}

Histogram histogram(std::span<const double> x, int bins) {
  if (x.empty() || bins < 1) fail(ErrorCode::InvalidArgument, "histogram needs data and bins >= 1");
  const auto [mn, mx] = std::minmax_element(x.begin(), x.end());
  Histogram h;
  h.lo = *mn;
  h.width = (*mx > *mn) ? (*mx - *mn) / bins : 1.0;
  h.counts.assign(bins, 0);
  for (double v : x) h.counts[std::min(bins - 1, static_cast<int>((v - h.lo) / h.width))]++;
  return h;
}

std::vector<std::pair<double, double>> qq_normal(std::span<const double> x) {
  std::vector<double> s(x.begin(), x.end());
  std::sort(s.begin(), s.end());
  std::vector<std::pair<double, double>> out;
  out.reserve(s.size());
  const double n = static_cast<double>(s.size());
  for (size_t i = 0; i < s.size(); ++i) out.emplace_back(normal_quantile((i + 0.5) / n), s[i]);
  return out;
}

}  // namespace ww
