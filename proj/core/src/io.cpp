#include "wavewhittle/io.hpp"

#include <json.hpp>

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "wavewhittle/error.hpp"
#include "wavewhittle/stats.hpp"

namespace ww {

using nlohmann::json;

std::string_view to_string(ErrorCode c) {
  switch (c) {
    case ErrorCode::UnsupportedOrder: return "UnsupportedOrder";
    case ErrorCode::SeriesTooShort: return "SeriesTooShort";
    case ErrorCode::NonFiniteInput: return "NonFiniteInput";
    case ErrorCode::IndexOutOfRange: return "IndexOutOfRange";
    case ErrorCode::DomainError: return "DomainError";
    case ErrorCode::ConvergenceError: return "ConvergenceError";
    case ErrorCode::SingularityError: return "SingularityError";
    case ErrorCode::DivergentSeries: return "DivergentSeries";
    case ErrorCode::DegenerateDelta: return "DegenerateDelta";
    case ErrorCode::EmptyScale: return "EmptyScale";
    case ErrorCode::DegenerateVariance: return "DegenerateVariance";
    case ErrorCode::NonPDMatrix: return "NonPDMatrix";
    case ErrorCode::OptimFailed: return "OptimFailed";
    case ErrorCode::CosineSingularity: return "CosineSingularity";
    case ErrorCode::SingularMatrix: return "SingularMatrix";
    case ErrorCode::ResourceLimit: return "ResourceLimit";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::EmptyFile: return "EmptyFile";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

// ---- files ----

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::IoError, "cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::IoError, "cannot write " + path);
  out << text;
  if (!out) fail(ErrorCode::IoError, "write failed for " + path);
}

// ---- CSV ----

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split_commas(std::string_view line) {
  std::vector<std::string_view> out;
  size_t start = 0;
  while (true) {
    const size_t pos = line.find(',', start);
    out.push_back(trim(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

}  // namespace

TimeSeriesPanel parse_panel_csv(std::string_view text) {
  std::vector<std::string_view> lines;
  std::vector<int> line_no;  // 1-based file line of each kept line
  size_t start = 0;
  for (int ln = 1; start <= text.size(); ++ln) {
    size_t pos = text.find('\n', start);
    if (pos == std::string_view::npos) pos = text.size();
    auto line = trim(text.substr(start, pos - start));
    if (!line.empty()) {
      lines.push_back(line);
      line_no.push_back(ln);
    }
    start = pos + 1;
  }
  if (lines.empty()) fail(ErrorCode::EmptyFile, "CSV input is empty");
  const auto header = split_commas(lines[0]);
  const int p = static_cast<int>(header.size());
  std::vector<std::string> names;
  for (int c = 0; c < p; ++c) {
    if (header[c].empty()) fail(ErrorCode::ParseError, "empty column name at column " + std::to_string(c + 1));
    names.emplace_back(header[c]);
  }
  const int N = static_cast<int>(lines.size()) - 1;
  if (N == 0) fail(ErrorCode::EmptyFile, "CSV has a header but no data rows");
  Eigen::MatrixXd values(N, p);
  for (int r = 0; r < N; ++r) {
    const auto cells = split_commas(lines[r + 1]);
    const int row = line_no[r + 1];
    if (static_cast<int>(cells.size()) != p)
      fail(ErrorCode::ParseError, "row " + std::to_string(row) + ": expected " + std::to_string(p) +
                                      " cells, found " + std::to_string(cells.size()));
    for (int c = 0; c < p; ++c) {
      const auto cell = cells[c];
      double v = 0.0;
      const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
      if (cell.empty() || ec != std::errc() || ptr != cell.data() + cell.size() || !std::isfinite(v))
        fail(ErrorCode::ParseError, "row " + std::to_string(row) + ", column " + std::to_string(c + 1) + " (" +
                                        names[c] + "): invalid numeric cell '" + std::string(cell) + "'");
      values(r, c) = v;
    }
  }
  return make_panel(std::move(values), std::move(names));
}

TimeSeriesPanel load_panel_csv(const std::string& path) { return parse_panel_csv(read_text_file(path)); }

std::string panel_to_csv(const TimeSeriesPanel& panel) {
  std::string out;
  for (int c = 0; c < panel.dim(); ++c) {
    if (c) out += ',';
    out += panel.component_names[c];
  }
  out += '\n';
  char buf[32];
  for (int t = 0; t < panel.length(); ++t) {
    for (int c = 0; c < panel.dim(); ++c) {
      if (c) out += ',';
      const auto res = std::to_chars(buf, buf + sizeof buf, panel.values(t, c));  // shortest round-trip
      out.append(buf, res.ptr);
    }
    out += '\n';
  }
  return out;
}

void write_panel_csv(const TimeSeriesPanel& panel, const std::string& path) {
  write_text_file(path, panel_to_csv(panel));
}

// ---- analysis ----

void AnalysisConfig::validate() const {
  if (M < 2 || M > 10) fail(ErrorCode::UnsupportedOrder, "wavelet order M must lie in [2, 10]");
  if (j0 < 1) fail(ErrorCode::InvalidArgument, "j0 must be >= 1");
  if (j1 != 0 && j1 <= j0) fail(ErrorCode::InvalidArgument, "j1 must exceed j0");
  if (!(ci_level > 0.0 && ci_level < 1.0)) fail(ErrorCode::InvalidArgument, "ci_level must lie in (0,1)");
  if (!(quad_tolerance > 0.0)) fail(ErrorCode::InvalidArgument, "quad_tolerance must be positive");
  if (trunc_terms < 1 || product_depth < 1) fail(ErrorCode::InvalidArgument, "truncations must be positive");
  if (histogram_bins < 1) fail(ErrorCode::InvalidArgument, "histogram_bins must be >= 1");
}

KernelSettings AnalysisConfig::kernel_settings() const {
  KernelSettings s;
  s.quad_tol = quad_tolerance;
  s.trunc_terms = trunc_terms;
  s.product_depth = product_depth;
  return s;
}

namespace {

DeltaInference infer(const Eigen::VectorXd& d, const Eigen::MatrixXd& G, int Delta, const KernelTable& t,
                     int n, double level) {
  const int p = static_cast<int>(d.size());
  DeltaInference out;
  out.Delta = Delta;
  out.d_cov = d_asym_cov(d, G, Delta, t);
  for (int a = 0; a < p; ++a) out.d_ci.push_back(confidence_interval(d(a), out.d_cov(a, a), n, level));
  out.r_sd = Eigen::MatrixXd::Zero(p, p);
  for (int a = 0; a < p; ++a)
    for (int b = a + 1; b < p; ++b)
      out.r_sd(a, b) = out.r_sd(b, a) = std::sqrt(r_asym_var_at(a, b, d, G, Delta, t) / n);
  return out;
}

json matrix_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (int i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (int j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

json vector_json(const Eigen::VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

json histogram_json(const std::vector<double>& values, int bins) {
  json h;
  h["values"] = values;
  if (values.empty()) return h;
  const auto hist = histogram(values, bins);
  h["bin_lo"] = hist.lo;
  h["bin_width"] = hist.width;
  h["counts"] = hist.counts;
  json qq = json::array();
  for (const auto& [theo, samp] : qq_normal(values)) qq.push_back({theo, samp});
  h["qq_normal"] = std::move(qq);
  return h;
}

json inference_json(const DeltaInference& inf, const std::vector<std::string>& names) {
  json j;
  j["Delta"] = inf.Delta == kInfiniteDelta ? json("infinite") : json(inf.Delta);
  json d = json::array();
  for (size_t a = 0; a < inf.d_ci.size(); ++a) {
    const auto& ci = inf.d_ci[a];
    d.push_back({{"component", names[a]}, {"estimate", ci.estimate}, {"sd", ci.sd}, {"ci", {ci.lo, ci.hi}}});
  }
  j["d"] = std::move(d);
  j["d_asymptotic_covariance"] = matrix_json(inf.d_cov);
  j["r_sd"] = matrix_json(inf.r_sd);
  return j;
}

}  // namespace

AnalysisResult analyze_panel(const TimeSeriesPanel& panel, const AnalysisConfig& cfg) {
  cfg.validate();
  AnalysisResult res;
  res.N = panel.length();
  res.p = panel.dim();
  const WaveletFamily fam = build_daubechies_filters(cfg.M);
  res.j0 = cfg.j0;
  res.j1 = cfg.j1 > 0 ? cfg.j1 : max_scale(res.N, fam.support_length, 4);
  if (res.j1 <= res.j0) fail(ErrorCode::SeriesTooShort, "series too short for scales beyond j0");

  const auto pyr = pyramid_transform(panel, fam, res.j0, res.j1);
  res.scales = scale_covariances(pyr);
  res.n = res.scales.n;
  res.fit = estimate_d(res.scales, init_d_log_regression(res.scales));
  const Eigen::VectorXd& d = res.fit.d_hat;
  res.G = G_hat(res.scales, d);
  res.r = long_run_correlations(res.G);

  SpectralKernels sk(fam, cfg.kernel_settings());
  const int Delta = res.j1 - res.j0;
  res.table = kernel_table_for(sk, d, Delta);
  const KernelTable table_inf = kernel_table_for(sk, d, kInfiniteDelta);
  res.omega = omega_hat(res.G, d, res.table);
  res.finite = infer(d, res.G, Delta, res.table, res.n, cfg.ci_level);
  res.infinite = infer(d, res.G, kInfiniteDelta, table_inf, res.n, cfg.ci_level);
  if (res.p <= cfg.joint_max_dim) {
    res.joint_included = true;
    res.joint = cfg.delta_mode == DeltaMode::Finite ? joint_dG_cov(d, res.G, Delta, res.table)
                                                    : joint_dG_cov(d, res.G, kInfiniteDelta, table_inf);
  }
  return res;
}

std::string analysis_report_json(const AnalysisResult& res, const AnalysisConfig& cfg,
                                 const TimeSeriesPanel& panel) {
  json r;
  r["schema_version"] = kReportSchemaVersion;
  r["command"] = "analyze";
  r["config"] = {{"input_path", cfg.input_path},
                 {"j0", res.j0},
                 {"j1", res.j1},
                 {"M", cfg.M},
                 {"quad_tolerance", cfg.quad_tolerance},
                 {"trunc_terms", cfg.trunc_terms},
                 {"product_depth", cfg.product_depth},
                 {"ci_level", cfg.ci_level},
                 {"delta_mode", cfg.delta_mode == DeltaMode::Finite ? "finite" : "infinite"},
                 {"seed", cfg.seed}};
  r["input"] = {{"N", res.N}, {"p", res.p}, {"components", panel.component_names}};

  json scales = json::array();
  const auto rho = scale_correlations(res.scales);
  for (int j = res.scales.j0; j <= res.scales.j1; ++j)
    scales.push_back({{"j", j},
                      {"n_j", res.scales.counts[j - res.scales.j0]},
                      {"sigma", matrix_json(res.scales.at(j))},
                      {"rho", matrix_json(rho.at(j))}});
  r["scales"] = std::move(scales);
  r["n"] = res.n;

  r["estimate"] = {{"d", vector_json(res.fit.d_hat)},
                   {"criterion", res.fit.criterion},
                   {"boundary_hit", res.fit.boundary_hit},
                   {"iterations", res.fit.iterations},
                   {"G", matrix_json(res.G)},
                   {"omega", matrix_json(res.omega)},
                   {"r", matrix_json(res.r)}};
  json trace = json::array();
  for (const auto& t : res.fit.trace)
    trace.push_back({{"iteration", t.iteration}, {"best", t.best}, {"diameter", t.diameter}, {"phase", t.phase}});
  r["estimate"]["trace"] = std::move(trace);

  r["inference"] = {{"finite", inference_json(res.finite, panel.component_names)},
                    {"infinite", inference_json(res.infinite, panel.component_names)}};
  if (res.joint_included) {
    r["joint_covariance"] = {{"order", "d then vec(G) row-major"},
                             {"delta_mode", cfg.delta_mode == DeltaMode::Finite ? "finite" : "infinite"},
                             {"matrix", matrix_json(res.joint)}};
  } else {
    r["joint_covariance"] = {{"omitted", true}, {"reason", "p exceeds joint_max_dim"}};
  }

  const auto& t = res.table;
  r["kernel_table"] = {{"family", t.family},
                       {"M", t.M},
                       {"quad_tolerance", t.settings.quad_tol},
                       {"trunc_terms", t.settings.trunc_terms},
                       {"product_depth", t.settings.product_depth},
                       {"tail_octaves", t.settings.tail_octaves},
                       {"infinite_max_u", t.settings.inf_max_u},
                       {"interpolated", t.has_grid}};

  std::vector<double> dvals(res.fit.d_hat.data(), res.fit.d_hat.data() + res.p), rvals;
  for (int a = 0; a < res.p; ++a)
    for (int b = a + 1; b < res.p; ++b) rvals.push_back(res.r(a, b));
  r["histograms"] = {{"d", histogram_json(dvals, cfg.histogram_bins)},
                     {"r", histogram_json(rvals, cfg.histogram_bins)}};
  r["error"] = nullptr;
  return r.dump(2);
}

std::string error_report_json(const std::string& command, const std::exception& e) {
  json r;
  r["schema_version"] = kReportSchemaVersion;
  r["command"] = command;
  std::string code = "Exception";
  if (const auto* we = dynamic_cast<const Error*>(&e)) code = std::string(to_string(we->code()));
  r["error"] = {{"code", code}, {"message", e.what()}};
  return r.dump(2);
}

std::string monte_carlo_report_json(const MonteCarloSummary& s, const SimulationSpec& spec,
                                    const EstimationConfig& cfg) {
  json r;
  r["schema_version"] = kReportSchemaVersion;
  r["command"] = "mc";
  r["spec"] = {{"p", spec.p},
               {"d", vector_json(spec.d)},
               {"omega", matrix_json(spec.omega)},
               {"N", spec.N},
               {"seed", spec.seed},
               {"ma_truncation", spec.truncation()},
               {"ar1", spec.ar1}};
  r["estimation"] = {{"M", cfg.M}, {"j0", s.j0}, {"j1", s.j1},
                     {"Delta", s.Delta == kInfiniteDelta ? json("infinite") : json(s.Delta)},
                     {"ci_level", cfg.ci_level}, {"plug_in", cfg.plug_in}};
  r["replicates"] = s.replicates;
  r["failures"] = s.failures;
  r["failure_messages"] = s.failure_messages;
  r["n"] = s.n;
  const double rootn = std::sqrt(static_cast<double>(s.n));
  json table = json::array(), params = json::array();
  for (const auto& p : s.params) {
    table.push_back({{"parameter", p.name},
                     {"theoretical_sd", p.theoretical_sd / rootn},
                     {"observed_sd", p.empirical_sd / rootn}});
    params.push_back({{"name", p.name},
                      {"truth", p.truth},
                      {"mean", p.mean},
                      {"empirical_sd_scaled", p.empirical_sd},
                      {"theoretical_sd_scaled", p.theoretical_sd},
                      {"coverage", p.coverage},
                      {"skewness", p.skewness},
                      {"excess_kurtosis", p.excess_kurtosis},
                      {"ks_distance", p.ks},
                      {"estimates", p.estimates}});
  }
  r["sd_table"] = std::move(table);
  r["parameters"] = std::move(params);
  r["error"] = nullptr;
  return r.dump(2);
}

SimulationRequest parse_simulation_request(std::string_view text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    fail(ErrorCode::ParseError, std::string("spec file: ") + e.what());
  }
  SimulationRequest req;
  try {
    auto& s = req.spec;
    s.p = j.at("p").get<int>();
    const auto d = j.at("d").get<std::vector<double>>();
    s.d = Eigen::Map<const Eigen::VectorXd>(d.data(), static_cast<Eigen::Index>(d.size()));
    if (j.contains("omega")) {
      const auto om = j.at("omega").get<std::vector<std::vector<double>>>();
      s.omega.resize(static_cast<Eigen::Index>(om.size()), om.empty() ? 0 : static_cast<Eigen::Index>(om[0].size()));
      for (size_t a = 0; a < om.size(); ++a) {
        if (om[a].size() != om.size()) fail(ErrorCode::ParseError, "omega must be square");
        for (size_t b = 0; b < om[a].size(); ++b) s.omega(a, b) = om[a][b];
      }
    } else {
      s.omega = Eigen::MatrixXd::Identity(s.p, s.p);
    }
    s.N = j.at("N").get<int>();
    s.seed = j.value("seed", std::uint64_t{0});
    s.ma_truncation = j.value("ma_truncation", 0);
    s.differencing = j.value("differencing", std::vector<int>{});
    s.ar1 = j.value("ar1", 0.0);
    const auto inn = j.value("innovation", std::string("gaussian"));
    if (inn == "gaussian") s.innovation = Innovation::Gaussian;
    else if (inn == "centered_exponential") s.innovation = Innovation::CenteredExponential;
    else fail(ErrorCode::ParseError, "unknown innovation '" + inn + "'");
    req.replicates = j.value("replicates", 200);
    if (j.contains("estimation")) {
      const auto& e = j.at("estimation");
      auto& c = req.estimation;
      c.M = e.value("M", c.M);
      c.j0 = e.value("j0", c.j0);
      c.j1 = e.value("j1", c.j1);
      c.ci_level = e.value("ci_level", c.ci_level);
      c.plug_in = e.value("plug_in", c.plug_in);
      if (e.contains("delta")) {
        const auto& dl = e.at("delta");
        if (dl.is_string()) {
          const auto v = dl.get<std::string>();
          if (v == "infinite") c.Delta = kInfiniteDelta;
          else if (v == "finite") c.Delta = -2;
          else fail(ErrorCode::ParseError, "delta must be 'finite', 'infinite' or an integer");
        } else {
          c.Delta = dl.get<int>();
        }
      }
    }
  } catch (const json::exception& e) {
    fail(ErrorCode::ParseError, std::string("spec file: ") + e.what());
  }
  req.spec.validate();
  return req;
}

SimulationRequest load_simulation_request(const std::string& path) {
  return parse_simulation_request(read_text_file(path));
}

}  // namespace ww
