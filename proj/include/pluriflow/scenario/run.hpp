#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "pluriflow/scenario/scenario.hpp"
#include "pluriflow/scenario/snapshot.hpp"

namespace pluriflow {

/// Flat key = value configuration. Keys:
///   scenario.kind, scenario.n, scenario.resolution, scenario.period, scenario.epsilon,
///   scenario.seed, scenario.cutoff, scenario.snapshot
///   background.kind, background.epsilon, background.cutoff
///   flow.dt (number or "auto"), flow.t_end, flow.integrator, flow.cfl_safety,
///   flow.sample_interval, flow.derivatives (spectral | central4), flow.compat_floor
///   monitor.R, monitor.p, monitor.A, monitor.k_max
///   output.dir
struct RunConfig {
  ScenarioSpec scenario;
  FlowConfig flow;
  MonitorSettings monitor;
  std::string output_dir = "pluriflow-out";

  /// Effective settings as key = value lines, parseable by parse_config.
  std::string to_text() const;
};

/// Throws ConfigError on unknown or duplicate keys and malformed values.
RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::string& path);

inline constexpr const char* kMonitorCsvHeader =
    "t,detG_drift,sup_upsilon_sq,f1,f2,tr_G_Gtilde_sup,phi_sup,res_prop32,res_lemma34,calabi_ratio";

void write_monitor_csv_row(std::ostream& os, const MonitorRecord& r);
void write_monitor_csv(std::ostream& os, const MonitorSeries& series);

struct RunOutcome {
  bool completed = false;
  std::string message;  // abort reason
  InitialData initial;
  FlowRun run;
  MonitorSeries series;
  std::optional<CalabiReport> calabi;
  std::string csv_path;
  std::string report_path;
  std::string snapshot_path;
};

/// Builds the scenario (or loads the resume snapshot), runs the flow with the estimate
/// monitors and writes monitors.csv, report.txt and final.snap into output_dir.
/// Flow aborts are reported in the outcome and the report, not thrown.
RunOutcome run_scenario(const RunConfig& config, const std::optional<std::string>& resume = {});

std::string format_report(const RunConfig& config, const RunOutcome& outcome,
                          const std::optional<std::string>& resume);

/// Monitor record of a stored state against a background, evolution residual included.
MonitorRecord monitor_snapshot(const Snapshot& snapshot, const BackgroundRequest& background,
                               const MonitorSettings& settings);

}  // namespace pluriflow
