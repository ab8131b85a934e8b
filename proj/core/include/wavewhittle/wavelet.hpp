#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

namespace ww {

struct WaveletFamily {
  int vanishing_moments = 0;         // M
  std::vector<double> scaling_filter;  // h, sum = sqrt(2)
  std::vector<double> wavelet_filter;  // g_k = (-1)^k h_{L-1-k}
  int support_length = 0;            // T_psi = L - 1
  double regularity = 0.0;           // Fourier decay exponent alpha
  std::string name;
};

// Daubechies extremal-phase filters by spectral factorization, 2 <= M <= 10.
WaveletFamily build_daubechies_filters(int M);

// Lower bound on the Fourier decay exponent of db-M.
double daubechies_regularity(int M);

struct TimeSeriesPanel {
  Eigen::MatrixXd values;  // N x p
  std::vector<std::string> component_names;

  int length() const { return static_cast<int>(values.rows()); }
  int dim() const { return static_cast<int>(values.cols()); }
};

TimeSeriesPanel make_panel(Eigen::MatrixXd values, std::vector<std::string> names = {});

struct WaveletPyramid {
  int j0 = 0, j1 = 0;
  std::vector<Eigen::MatrixXd> coefficients;  // index j - j0, n_j x p
  std::vector<int> counts;                   // n_j
  WaveletFamily family;

  const Eigen::MatrixXd& at(int j) const { return coefficients.at(j - j0); }
  int count(int j) const { return counts.at(j - j0); }
};

// max(0, floor(2^{-j}(N - T + 1) - T + 1))
int coefficient_count(int N, int j, int T);

// Largest scale with at least min_count interior coefficients (0 if none).
int max_scale(int N, int T, int min_count = 4);

WaveletPyramid pyramid_transform(const TimeSeriesPanel& panel, const WaveletFamily& family,
                                 int j0, int j1);

// Explicit convolution with the level-j equivalent filter; independent of the pyramid.
double direct_transform_oracle(const TimeSeriesPanel& panel, const WaveletFamily& family,
                               int j, int k, int component);

// Equivalent level-j detail filter (upsampled cascade), length (2^j - 1)(L - 1) + 1.
std::vector<double> level_filter(const WaveletFamily& family, int j);

// Periodized full-depth orthonormal transform without trimming (energy bookkeeping).
struct PeriodicTransform {
  std::vector<std::vector<double>> details;  // level 1..J
  std::vector<double> smooth;
};
PeriodicTransform periodic_transform(const std::vector<double>& x, const WaveletFamily& family,
                                     int levels);

}  // namespace ww
