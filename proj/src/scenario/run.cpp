#include "pluriflow/scenario/run.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <set>
#include <sstream>

namespace pluriflow {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double to_double(const std::string& key, const std::string& v) {
  std::size_t pos = 0;
  double x = 0.0;
  try {
    x = std::stod(v, &pos);
  } catch (const std::logic_error&) {
    pos = 0;
  }
  if (pos == 0 || pos != v.size() || !std::isfinite(x)) {
    throw ConfigError("config: '" + key + "' expects a number, got '" + v + "'");
  }
  return x;
}

long long to_integer(const std::string& key, const std::string& v) {
  std::size_t pos = 0;
  long long x = 0;
  try {
    x = std::stoll(v, &pos);
  } catch (const std::logic_error&) {
    pos = 0;
  }
  if (pos == 0 || pos != v.size()) {
    throw ConfigError("config: '" + key + "' expects an integer, got '" + v + "'");
  }
  return x;
}

std::uint64_t to_seed(const std::string& key, const std::string& v) {
  std::size_t pos = 0;
  unsigned long long x = 0;
  try {
    if (!v.empty() && v[0] != '-') x = std::stoull(v, &pos, 0);
  } catch (const std::logic_error&) {
    pos = 0;
  }
  if (pos == 0 || pos != v.size()) {
    throw ConfigError("config: '" + key + "' expects an unsigned 64-bit integer, got '" + v + "'");
  }
  return x;
}

DerivativeScheme parse_scheme(const std::string& v) {
  if (v == "spectral") return DerivativeScheme::spectral();
  if (v == "central4") return DerivativeScheme::central4();
  throw ConfigError("config: flow.derivatives must be 'spectral' or 'central4'");
}

std::string scheme_name(DerivativeScheme s) {
  return s.kind == SchemeKind::Spectral ? "spectral" : "central4";
}

std::string num(double v) {
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

}  // namespace

RunConfig parse_config(const std::string& text) {
  RunConfig c;
  std::set<std::string> seen;
  std::istringstream is(text);
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("config line " + std::to_string(lineno) + ": expected key = value");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string v = trim(line.substr(eq + 1));
    if (!seen.insert(key).second) throw ConfigError("config: duplicate key '" + key + "'");
    if (v.empty()) throw ConfigError("config: empty value for '" + key + "'");

    ScenarioSpec& s = c.scenario;
    if (key == "scenario.kind") s.kind = parse_scenario_kind(v);
    else if (key == "scenario.n") s.n = static_cast<int>(to_integer(key, v));
    else if (key == "scenario.resolution") s.resolution = static_cast<int>(to_integer(key, v));
    else if (key == "scenario.period") s.period = to_double(key, v);
    else if (key == "scenario.epsilon") s.epsilon = to_double(key, v);
    else if (key == "scenario.seed") s.seed = to_seed(key, v);
    else if (key == "scenario.cutoff") s.cutoff = static_cast<int>(to_integer(key, v));
    else if (key == "scenario.snapshot") s.snapshot = v;
    else if (key == "background.kind") s.background.kind = parse_background_kind(v);
    else if (key == "background.epsilon") s.background.epsilon = to_double(key, v);
    else if (key == "background.cutoff") s.background.cutoff = static_cast<int>(to_integer(key, v));
    else if (key == "flow.dt") c.flow.dt = v == "auto" ? std::nullopt : std::optional(to_double(key, v));
    else if (key == "flow.t_end") c.flow.t_end = to_double(key, v);
    else if (key == "flow.integrator") c.flow.integrator = parse_integrator(v);
    else if (key == "flow.cfl_safety") c.flow.cfl_safety = to_double(key, v);
    else if (key == "flow.sample_interval") c.flow.sample_interval = static_cast<int>(to_integer(key, v));
    else if (key == "flow.derivatives") c.flow.derivatives = parse_scheme(v);
    else if (key == "flow.compat_floor") c.flow.compat_floor = to_double(key, v);
    else if (key == "monitor.R") c.monitor.R = to_double(key, v);
    else if (key == "monitor.p") c.monitor.p = to_double(key, v);
    else if (key == "monitor.A") c.monitor.A = to_double(key, v);
    else if (key == "monitor.k_max") c.monitor.k_max = static_cast<int>(to_integer(key, v));
    else if (key == "output.dir") c.output_dir = v;
    else throw ConfigError("config: unknown key '" + key + "'");
  }
  c.monitor.scheme = c.flow.derivatives;
  c.scenario.validate();
  c.flow.validate();
  c.monitor.validate(c.scenario.grid());
  return c;
}

RunConfig load_config(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot read config file '" + path + "'");
  std::ostringstream buf;
  buf << is.rdbuf();
  return parse_config(buf.str());
}

std::string RunConfig::to_text() const {
  const ScenarioSpec& s = scenario;
  std::ostringstream os;
  os << "scenario.kind = " << to_string(s.kind) << "\n";
  os << "scenario.n = " << s.n << "\n";
  os << "scenario.resolution = " << s.points_per_axis() << "\n";
  os << "scenario.period = " << num(s.period) << "\n";
  os << "scenario.epsilon = " << num(s.epsilon) << "\n";
  os << "scenario.seed = " << s.seed << "\n";
  os << "scenario.cutoff = " << s.cutoff << "\n";
  if (!s.snapshot.empty()) os << "scenario.snapshot = " << s.snapshot << "\n";
  os << "background.kind = " << to_string(s.background.kind) << "\n";
  os << "background.epsilon = " << num(s.background.epsilon) << "\n";
  os << "background.cutoff = " << s.background.cutoff << "\n";
  os << "flow.dt = " << (flow.dt ? num(*flow.dt) : std::string("auto")) << "\n";
  os << "flow.t_end = " << num(flow.t_end) << "\n";
  os << "flow.integrator = " << to_string(flow.integrator) << "\n";
  os << "flow.cfl_safety = " << num(flow.cfl_safety) << "\n";
  os << "flow.sample_interval = " << flow.sample_interval << "\n";
  os << "flow.derivatives = " << scheme_name(flow.derivatives) << "\n";
  os << "flow.compat_floor = " << num(flow.compat_floor) << "\n";
  os << "monitor.R = " << num(monitor.R) << "\n";
  os << "monitor.p = " << num(monitor.p) << "\n";
  os << "monitor.A = " << num(monitor.A) << "\n";
  os << "monitor.k_max = " << monitor.k_max << "\n";
  os << "output.dir = " << output_dir << "\n";
  return os.str();
}

void write_monitor_csv_row(std::ostream& os, const MonitorRecord& r) {
  os << num(r.t) << ',' << num(r.detG_drift) << ',' << num(r.sup_upsilon_sq) << ',' << num(r.f1)
     << ',' << num(r.f2) << ',' << num(r.tr_G_Gtilde_sup) << ',' << num(r.phi_sup) << ','
     << num(r.res_prop32) << ',' << num(r.res_lemma34) << ',' << num(r.calabi_ratio) << '\n';
}

void write_monitor_csv(std::ostream& os, const MonitorSeries& series) {
  os << kMonitorCsvHeader << '\n';
  for (const MonitorRecord& r : series.records()) write_monitor_csv_row(os, r);
}

RunOutcome run_scenario(const RunConfig& config, const std::optional<std::string>& resume) {
  RunOutcome out;
  ScenarioSpec spec = config.scenario;
  if (resume) {
    spec.kind = ScenarioKind::FromSnapshot;
    spec.snapshot = *resume;
  }
  out.initial = build_initial_data(spec);
  MonitorSettings settings = config.monitor;
  settings.scheme = config.flow.derivatives;

  namespace fs = std::filesystem;
  fs::create_directories(config.output_dir);
  const fs::path dir(config.output_dir);
  out.csv_path = (dir / "monitors.csv").string();
  out.report_path = (dir / "report.txt").string();
  out.snapshot_path = (dir / "final.snap").string();

  const FlowMonitor monitor = estimate_monitor(out.initial.background, settings, out.series);
  try {
    out.run = run_flow(out.initial.state, config.flow, {monitor});
    out.completed = true;
  } catch (const FlowAbort& e) {
    out.message = e.what();
  }

  {
    std::ofstream csv(out.csv_path, std::ios::trunc);
    if (!csv) throw ConfigError("cannot write '" + out.csv_path + "'");
    write_monitor_csv(csv, out.series);
  }
  std::size_t live = 0;
  for (const MonitorRecord& r : out.series.records()) live += r.t > 0.0;
  if (live >= 4) out.calabi = calabi_monitor(out.series, settings.R);
  if (out.completed) {
    write_snapshot(out.snapshot_path, out.run.final_state, out.initial.provenance);
  } else {
    out.snapshot_path.clear();
  }
  std::ofstream rep(out.report_path, std::ios::trunc);
  if (!rep) throw ConfigError("cannot write '" + out.report_path + "'");
  rep << format_report(config, out, resume);
  return out;
}

std::string format_report(const RunConfig& config, const RunOutcome& o,
                          const std::optional<std::string>& resume) {
  std::ostringstream os;
  const ScenarioChecks& ck = o.initial.checks;
  os << "# pluriflow run report\n";
  os << "seed: " << config.scenario.seed << "\n";
  os << "provenance: " << o.initial.provenance << "\n";
  if (resume) os << "resumed_from: " << *resume << "\n";
  os << "[config]\n" << config.to_text();
  os << "[initial]\n";
  os << "t: " << num(o.initial.state.t) << "\n";
  os << "epsilon_used: " << num(ck.epsilon_used) << "\n";
  os << "epsilon_retries: " << ck.retries << "\n";
  os << "compatibility_residual: " << num(ck.compat) << "\n";
  os << "pluriclosed_residual: " << num(ck.pluriclosed) << "\n";
  os << "torsion_sup: " << num(ck.torsion) << "\n";
  os << "min_eigenvalue: " << num(ck.min_eigenvalue) << "\n";
  os << "detG_deviation: " << num(ck.detG) << "\n";
  os << "[run]\n";
  os << "outcome: " << (o.completed ? "completed" : "aborted") << "\n";
  if (!o.completed) os << "abort_reason: " << o.message << "\n";
  os << "samples: " << o.series.size() << "\n";
  if (o.completed) {
    os << "steps: " << o.run.steps << "\n";
    os << "t_final: " << num(o.run.final_state.t) << "\n";
    os << "initial_compat: " << num(o.run.initial_compat) << "\n";
    os << "final_compat: " << num(o.run.final_compat) << "\n";
  }
  double evolution = 0.0, trace_heat = 0.0, drift = 0.0;
  bool gradient = true;
  for (const MonitorRecord& r : o.series.records()) {
    evolution = std::max(evolution, r.res_prop32);
    trace_heat = std::max(trace_heat, r.res_lemma34);
    drift = std::max(drift, r.detG_drift);
    gradient = gradient && r.gradient_holds;
  }
  os << "max_evolution_residual: " << num(evolution) << "\n";
  os << "max_trace_heat_residual: " << num(trace_heat) << "\n";
  os << "max_detG_drift: " << num(drift) << "\n";
  os << "gradient_inequality: " << (gradient ? "holds" : "violated") << "\n";
  os << "[calabi]\n";
  if (o.calabi) {
    os << "R: " << num(config.monitor.R) << "\n";
    os << "K: " << num(o.calabi->K) << "\n";
    os << "first_half_max: " << num(o.calabi->first_half_max) << "\n";
    os << "second_half_max: " << num(o.calabi->second_half_max) << "\n";
    os << "bounded: " << (o.calabi->unbounded ? "no" : "yes") << "\n";
  } else {
    os << "status: fewer than 4 samples with t > 0\n";
  }
  os << "[output]\n";
  os << "csv: " << o.csv_path << "\n";
  if (!o.snapshot_path.empty()) os << "snapshot: " << o.snapshot_path << "\n";
  return os.str();
}

MonitorRecord monitor_snapshot(const Snapshot& snapshot, const BackgroundRequest& background,
                               const MonitorSettings& settings) {
  const FlowState& s = snapshot.state;
  const ChartGrid& grid = s.g.grid();
  settings.validate(grid);
  validate_metric(s.g);
  validate_torsion_potential(s.beta);
  const BackgroundData bg = build_background(grid, background);
  std::vector<double> center = settings.center;
  if (center.empty()) center.assign(grid.real_dim(), 0.0);
  const CutoffField eta = cutoff(grid, center, settings.R);
  const FlowRhs rhs = flow_rhs(s, settings.scheme);
  MonitorRecord r = evaluate_monitors(s, rhs, assemble_G(s.g, s.beta), bg, settings, eta);
  r.res_prop32 = evolution_identity_residual(s, rhs, settings.scheme);
  return r;
}

}  // namespace pluriflow
