#pragma once

#include <span>
#include <vector>

namespace ww {

double normal_cdf(double x);
// Acklam's rational approximation refined by one Halley step (|err| ~ 1e-15).
double normal_quantile(double p);

struct Moments {
  double mean = 0.0, sd = 0.0, skewness = 0.0, excess_kurtosis = 0.0;
  int n = 0;
};
// sd uses n-1; skewness/kurtosis are the plain moment ratios.
Moments sample_moments(std::span<const double> x);

// sup_x |F_n(x) - Phi((x - mu)/sigma)|
double ks_distance_normal(std::span<const double> x, double mu, double sigma);

struct Histogram {
  double lo = 0.0, width = 0.0;
  std::vector<int> counts;
};
Histogram histogram(std::span<const double> x, int bins);

// (theoretical normal quantile, sorted sample) pairs
std::vector<std::pair<double, double>> qq_normal(std::span<const double> x);

}  // namespace ww
