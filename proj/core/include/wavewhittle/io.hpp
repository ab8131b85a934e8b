#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <exception>
#include <string>
#include <string_view>
#include <vector>

#include "wavewhittle/asymptotics.hpp"
#include "wavewhittle/estimation.hpp"
#include "wavewhittle/simulation.hpp"
#include "wavewhittle/wavelet.hpp"

namespace ww {

inline constexpr int kReportSchemaVersion = 1;

// CSV: header of component names, comma separated, '.' decimal.
TimeSeriesPanel parse_panel_csv(std::string_view text);
TimeSeriesPanel load_panel_csv(const std::string& path);
std::string panel_to_csv(const TimeSeriesPanel& panel);
void write_panel_csv(const TimeSeriesPanel& panel, const std::string& path);

enum class DeltaMode { Finite, Infinite };

struct AnalysisConfig {
  std::string input_path;
  std::string output_path;
  int j0 = 3;
  int j1 = 0;  // 0: deepest scale with at least 4 coefficients
  int M = 2;
  double quad_tolerance = 1e-8;
  int trunc_terms = 100;
  int product_depth = 30;
  double ci_level = 0.95;
  DeltaMode delta_mode = DeltaMode::Finite;  // drives the joint covariance
  std::uint64_t seed = 0;
  int joint_max_dim = 10;  // joint covariance emitted only up to this p
  int histogram_bins = 20;

  void validate() const;
  KernelSettings kernel_settings() const;
};

struct DeltaInference {
  int Delta = 0;
  Eigen::MatrixXd d_cov;       // asymptotic covariance of sqrt(n)(d_hat - d)
  std::vector<Interval> d_ci;
  Eigen::MatrixXd r_sd;        // sd of r_hat (already divided by sqrt(n)); zero diagonal
};

struct AnalysisResult {
  int N = 0, p = 0, n = 0, j0 = 0, j1 = 0;
  ScaleCovarianceSet scales;
  EstimateD fit;
  Eigen::MatrixXd G, omega, r;
  DeltaInference finite, infinite;
  bool joint_included = false;
  Eigen::MatrixXd joint;
  KernelTable table;  // finite-Delta table (provenance)
};

AnalysisResult analyze_panel(const TimeSeriesPanel& panel, const AnalysisConfig& cfg);

std::string analysis_report_json(const AnalysisResult& res, const AnalysisConfig& cfg,
                                 const TimeSeriesPanel& panel);
std::string error_report_json(const std::string& command, const std::exception& e);
std::string monte_carlo_report_json(const MonteCarloSummary& s, const SimulationSpec& spec,
                                    const EstimationConfig& cfg);

// Simulation spec file: {"p", "d", "omega", "N", "seed", "ma_truncation", "differencing",
// "ar1", "innovation", "replicates", "estimation": {"M", "j0", "j1", "delta", "ci_level", "plug_in"}}
struct SimulationRequest {
  SimulationSpec spec;
  EstimationConfig estimation;
  int replicates = 200;
};
SimulationRequest parse_simulation_request(std::string_view json_text);
SimulationRequest load_simulation_request(const std::string& path);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& text);

}  // namespace ww
