#include <benchmark/benchmark.h>

#include <random>

#include "wavewhittle/asymptotics.hpp"
#include "wavewhittle/estimation.hpp"
#include "wavewhittle/kernels.hpp"
#include "wavewhittle/wavelet.hpp"

using namespace ww;

namespace {

TimeSeriesPanel noise(int N, int p) {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> n01;
  Eigen::MatrixXd x(N, p);
  for (int i = 0; i < x.size(); ++i) x.data()[i] = n01(rng);
  return make_panel(std::move(x));
}

void BM_Pyramid(benchmark::State& st) {
  const int N = static_cast<int>(st.range(0)), p = static_cast<int>(st.range(1));
  const auto panel = noise(N, p);
  const auto fam = build_daubechies_filters(4);
  const int j1 = max_scale(N, fam.support_length);
  for (auto _ : st) benchmark::DoNotOptimize(pyramid_transform(panel, fam, 1, j1));
  st.SetItemsProcessed(st.iterations() * N * p);
}
BENCHMARK(BM_Pyramid)->Args({4096, 1})->Args({1 << 15, 1})->Args({3600, 51});

void BM_K(benchmark::State& st) {
  const auto fam = build_daubechies_filters(2);
  double delta = 0.1;
  for (auto _ : st) {
    SpectralKernels sk(fam);  // fresh cache each time
    benchmark::DoNotOptimize(sk.K(delta));
  }
}
BENCHMARK(BM_K)->Unit(benchmark::kMillisecond);

void BM_KernelTable(benchmark::State& st) {
  const auto fam = build_daubechies_filters(2);
  Eigen::VectorXd d(2);
  d << 0.2, 0.4;
  const int Delta = st.range(0) < 0 ? kInfiniteDelta : static_cast<int>(st.range(0));
  for (auto _ : st) {
    SpectralKernels sk(fam);
    benchmark::DoNotOptimize(kernel_table_for(sk, d, Delta));
  }
}
BENCHMARK(BM_KernelTable)->Arg(4)->Arg(-1)->Unit(benchmark::kMillisecond);

void BM_EstimateD(benchmark::State& st) {
  const int p = static_cast<int>(st.range(0));
  const auto fam = build_daubechies_filters(2);
  const auto set = scale_covariances(pyramid_transform(noise(4096, p), fam, 3, max_scale(4096, 3)));
  const auto init = init_d_log_regression(set);
  for (auto _ : st) benchmark::DoNotOptimize(estimate_d(set, init));
}
BENCHMARK(BM_EstimateD)->Arg(1)->Arg(2)->Arg(8)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
