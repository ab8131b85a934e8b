// wavewhittle: analyze | simulate | mc | kernels
#include <omp.h>

#include <CLI11.hpp>
#include <cstdio>
#include <cstdlib>
#include <iostream>
#include <string>
#include <vector>

#include "wavewhittle/error.hpp"
#include "wavewhittle/io.hpp"

using namespace ww;

namespace {

void emit(const std::string& text, const std::string& path) {
  if (path.empty() || path == "-") {
    std::cout << text << '\n';
  } else {
    write_text_file(path, text + '\n');
  }
}

int parse_delta(const std::string& s) {
  if (s == "inf" || s == "infinite") return kInfiniteDelta;
  try {
    size_t used = 0;
    const int v = std::stoi(s, &used);
    if (used == s.size() && v >= 0) return v;
  } catch (const std::exception&) {
  }
  fail(ErrorCode::InvalidArgument, "delta must be a non-negative integer or 'inf'");
}

void apply_thread_env() {
  if (const char* t = std::getenv("WAVEWHITTLE_THREADS")) {
    const int n = std::atoi(t);
    if (n > 0) omp_set_num_threads(n);
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multivariate wavelet Whittle estimation of long memory"};
  app.set_config("--config", "", "TOML/INI file with option defaults (flags override)");
  app.require_subcommand(1);

  AnalysisConfig acfg;
  std::string delta_mode = "finite";
  auto* analyze = app.add_subcommand("analyze", "estimate d, G, Omega and their asymptotic covariance");
  analyze->add_option("-i,--input", acfg.input_path, "CSV panel (header of component names)")->required();
  analyze->add_option("-o,--output", acfg.output_path, "report path (default stdout)");
  analyze->add_option("--j0", acfg.j0, "finest scale")->capture_default_str();
  analyze->add_option("--j1", acfg.j1, "coarsest scale (0: deepest with >= 4 coefficients)")->capture_default_str();
  analyze->add_option("-M,--wavelet-order", acfg.M, "Daubechies vanishing moments")->capture_default_str();
  analyze->add_option("--quad-tolerance", acfg.quad_tolerance)->capture_default_str();
  analyze->add_option("--trunc-terms", acfg.trunc_terms, "aliasing sum truncation")->capture_default_str();
  analyze->add_option("--product-depth", acfg.product_depth, "infinite-product depth")->capture_default_str();
  analyze->add_option("--ci-level", acfg.ci_level)->capture_default_str();
  analyze->add_option("--delta-mode", delta_mode, "scale window for the joint covariance")
      ->check(CLI::IsMember({"finite", "infinite"}))
      ->capture_default_str();
  analyze->add_option("--seed", acfg.seed)->capture_default_str();
  analyze->add_option("--joint-max-dim", acfg.joint_max_dim, "largest p with a joint covariance")->capture_default_str();
  analyze->add_option("--histogram-bins", acfg.histogram_bins)->capture_default_str();

  std::string spec_path, out_path;
  std::uint64_t replicate = 0;
  auto* simulate = app.add_subcommand("simulate", "simulate one panel from a JSON spec and write CSV");
  simulate->add_option("-s,--spec", spec_path, "JSON simulation spec")->required();
  simulate->add_option("-o,--output", out_path, "CSV path (default stdout)");
  simulate->add_option("--replicate", replicate, "replicate index (seed stream)")->capture_default_str();

  int replicates = 0;
  auto* mc = app.add_subcommand("mc", "Monte Carlo study: empirical vs theoretical sds and coverage");
  mc->add_option("-s,--spec", spec_path, "JSON simulation spec")->required();
  mc->add_option("-r,--replicates", replicates, "overrides the spec's replicate count");
  mc->add_option("-o,--output", out_path, "report path (default stdout)");

  int kM = 2;
  std::vector<double> kd{0.0};
  std::string kdelta = "inf";
  KernelSettings ks;
  auto* kernels = app.add_subcommand("kernels", "dump the kernel table needed at a memory vector d");
  kernels->add_option("-M,--wavelet-order", kM)->capture_default_str();
  kernels->add_option("-d,--memory", kd, "memory parameters d_1 .. d_p")->expected(1, -1);
  kernels->add_option("--delta", kdelta, "scale gap (integer or 'inf')")->capture_default_str();
  kernels->add_option("--quad-tolerance", ks.quad_tol)->capture_default_str();
  kernels->add_option("--trunc-terms", ks.trunc_terms)->capture_default_str();
  kernels->add_option("--product-depth", ks.product_depth)->capture_default_str();
  kernels->add_option("-o,--output", out_path, "JSON path (default stdout)");

  CLI11_PARSE(app, argc, argv);
  apply_thread_env();

  std::string command = app.get_subcommands().front()->get_name();
  const std::string& report_path = command == "analyze" ? acfg.output_path : out_path;
  try {
    if (command == "analyze") {
      acfg.delta_mode = delta_mode == "infinite" ? DeltaMode::Infinite : DeltaMode::Finite;
      acfg.validate();
      const auto panel = load_panel_csv(acfg.input_path);
      const auto res = analyze_panel(panel, acfg);
      emit(analysis_report_json(res, acfg, panel), acfg.output_path);
    } else if (command == "simulate") {
      const auto req = load_simulation_request(spec_path);
      const auto panel = simulate_mvlm(req.spec, replicate);
      if (out_path.empty() || out_path == "-")
        std::cout << panel_to_csv(panel);
      else
        write_panel_csv(panel, out_path);
    } else if (command == "mc") {
      auto req = load_simulation_request(spec_path);
      if (replicates > 0) req.replicates = replicates;
      const auto summary = monte_carlo(req.spec, req.replicates, req.estimation);
      emit(monte_carlo_report_json(summary, req.spec, req.estimation), out_path);
    } else {
      const int Delta = parse_delta(kdelta);
      SpectralKernels sk(build_daubechies_filters(kM), ks);
      const Eigen::VectorXd d = Eigen::Map<const Eigen::VectorXd>(kd.data(), static_cast<Eigen::Index>(kd.size()));
      emit(kernel_table_to_json(kernel_table_for(sk, d, Delta)), out_path);
    }
  } catch (const std::exception& e) {
    std::cerr << "wavewhittle " << command << ": " << e.what() << '\n';
    const auto err = error_report_json(command, e);
    try {
      emit(err, command == "simulate" ? std::string() : report_path);
    } catch (const std::exception&) {
      std::cout << err << '\n';
    }
    return 1;
  }
  return 0;
}
