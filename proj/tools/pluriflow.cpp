#include <CLI11.hpp>

#include <iostream>
#include <optional>
#include <string>

#include "pluriflow/scenario/run.hpp"
#include "pluriflow/scenario/verify.hpp"

namespace {

using namespace pluriflow;

constexpr int kExitFailure = 1;
constexpr int kExitUsage = 2;

int cmd_verify(bool quick, int n, std::uint64_t seed, bool inject) {
  VerifyOptions opt;
  opt.quick = quick;
  opt.n = n;
  opt.seed = seed;
  if (inject) opt.torsion_fault = TorsionFault::SecondTermSign;
  const VerifyReport rep = verify_suite(opt);
  std::cout << rep.to_text();
  return rep.all_passed() ? 0 : kExitFailure;
}

int cmd_flow(const std::string& config_path, const std::optional<std::string>& resume) {
  const RunConfig cfg = load_config(config_path);
  const RunOutcome out = run_scenario(cfg, resume);
  std::cout << "seed " << cfg.scenario.seed << ": " << out.series.size() << " monitor samples -> "
            << out.csv_path << "\n";
  if (out.calabi) {
    std::cout << "calabi K " << out.calabi->K << (out.calabi->unbounded ? " (growing)" : " (bounded)")
              << "\n";
  }
  std::cout << "report: " << out.report_path << "\n";
  if (!out.completed) {
    std::cerr << "flow aborted: " << out.message << "\n";
    return kExitFailure;
  }
  std::cout << "snapshot: " << out.snapshot_path << "\n";
  return 0;
}

int cmd_monitor(const std::string& snapshot, const std::string& background, MonitorSettings settings) {
  const Snapshot snap = read_snapshot(snapshot);
  const MonitorRecord r = monitor_snapshot(snap, parse_background_request(background), settings);
  std::cout << kMonitorCsvHeader << "\n";
  write_monitor_csv_row(std::cout, r);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  pluriflow::configure_threads();
  CLI::App app{"Pluriclosed flow on flat complex tori: verification, runs and monitors"};
  app.require_subcommand(1);

  auto* verify = app.add_subcommand("verify", "Run the identity and convergence checks");
  bool quick = false, inject = false;
  int n = 2;
  std::uint64_t seed = 7;
  verify->add_flag("--quick", quick, "Skip the convergence studies and shorten runs");
  verify->add_option("--n", n, "Complex dimension (1 or 2)")->check(CLI::IsMember({1, 2}));
  verify->add_option("--seed", seed, "Seed for all draws");
  verify->add_flag("--inject-torsion-fault", inject, "Flip the torsion sign convention")->group("");

  auto* flow = app.add_subcommand("flow", "Run a scenario and write monitors, report and snapshot");
  std::string config_path;
  std::string resume;
  flow->add_option("--config", config_path, "Key = value configuration file")->required();
  flow->add_option("--resume", resume, "Continue from a snapshot");

  auto* monitor = app.add_subcommand("monitor", "Recompute the monitor record of a snapshot");
  std::string snapshot, background = "flat";
  pluriflow::MonitorSettings settings;
  monitor->add_option("--snapshot", snapshot, "Snapshot file")->required();
  monitor->add_option("--background", background,
                      "flat | kahler-perturbation[,epsilon=E][,cutoff=C][,seed=S]")
      ->required();
  monitor->add_option("--R", settings.R, "Cutoff radius");
  monitor->add_option("--p", settings.p, "Cutoff power in the test function");
  monitor->add_option("--A", settings.A, "Trace weight in the test function");
  monitor->add_option("--k-max", settings.k_max, "Highest derivative order for f_k");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    if (*verify) return cmd_verify(quick, n, seed, inject);
    if (*flow) {
      return cmd_flow(config_path, resume.empty() ? std::nullopt : std::optional<std::string>(resume));
    }
    if (*monitor) return cmd_monitor(snapshot, background, settings);
  } catch (const pluriflow::ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << "\n\n" << app.help();
    return kExitUsage;
  } catch (const pluriflow::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitFailure;
  }
  return kExitUsage;
}
