#include <algorithm>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "pluriflow/scenario/run.hpp"
#include "pluriflow/scenario/verify.hpp"
#include "test_support.hpp"

using namespace pluriflow;
using namespace testsupport;

namespace {

ScenarioSpec spec_of(ScenarioKind kind) {
  ScenarioSpec s;
  s.kind = kind;
  return s;
}

std::filesystem::path scratch(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("pluriflow-test-" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream is(p, std::ios::binary);
  std::ostringstream os;
  os << is.rdbuf();
  return os.str();
}

bool bit_equal(const TensorField& a, const TensorField& b) {
  return a.grid() == b.grid() && a.data().size() == b.data().size() &&
         std::memcmp(a.data().data(), b.data().data(), a.data().size() * sizeof(cplx)) == 0;
}

/// sup_k |i (d_1 h_{2kbar} - d_2 h_{1kbar}) - d_kbar beta_12|, straight from partials.
double mode_equation_residual(const TensorField& g, const TensorField& beta) {
  const TensorField dg = partial(g, Dir::Holo);
  const TensorField dbb = partial(beta, Dir::Antiholo);
  const cplx I(0.0, 1.0);
  double r = 0.0;
  for (std::size_t p = 0; p < g.num_points(); ++p)
    for (int k = 0; k < 2; ++k) {
      const cplx lhs = I * (dg(p, 0 * 4 + 1 * 2 + k) - dg(p, 1 * 4 + 0 * 2 + k));
      r = std::max(r, std::abs(lhs - dbb(p, k * 4 + 1)));
    }
  return r;
}

}  // namespace

TEST_CASE("flat scenario has vanishing S") {
  const InitialData d = build_initial_data(spec_of(ScenarioKind::Flat));
  CHECK(d.state.g.grid() == ChartGrid(2, 16));
  const ClassicalGeometry geo = classical_geometry(d.state.g, d.state.beta);
  CHECK(s_tensor_blocks(geo).sup_norm() == 0.0);
  CHECK(d.background.constant);
}

TEST_CASE("kahler scenario passes its gates and is torsion free") {
  const InitialData d = build_initial_data(spec_of(ScenarioKind::KahlerPerturbation));
  CHECK(d.checks.compat < 1e-10);
  CHECK(d.checks.pluriclosed < 1e-10);
  CHECK(d.checks.torsion < 1e-10);
  CHECK(d.state.beta.sup_norm() == 0.0);
  CHECK(sup_diff(d.state.g, identity_metric(d.state.g.grid())) > 1e-3);

  // n = 1 defaults to 64 points per axis
  ScenarioSpec one = spec_of(ScenarioKind::KahlerPerturbation);
  one.n = 1;
  const InitialData d1 = build_initial_data(one);
  CHECK(d1.state.g.grid() == ChartGrid(1, 64));
  CHECK(d1.checks.torsion == 0.0);
}

TEST_CASE("compatible-fourier scenario: seed 7, epsilon 0.05") {
  const InitialData d = build_initial_data(spec_of(ScenarioKind::CompatibleFourier));
  CHECK(d.checks.compat < 1e-9);
  CHECK(d.checks.pluriclosed < 1e-9);
  CHECK(d.checks.min_eigenvalue > 0.5);
  CHECK(mode_equation_residual(d.state.g, d.state.beta) < 1e-12);
  CHECK(d.checks.torsion > 1e-3);
  CHECK(d.state.beta.sup_norm() > 1e-3);
  // zero-mean perturbation
  cplx mean[4] = {};
  for (std::size_t p = 0; p < d.state.g.num_points(); ++p)
    for (int c = 0; c < 4; ++c) mean[c] += d.state.g(p, c);
  for (int c = 0; c < 4; ++c) {
    CHECK(std::abs(mean[c] / static_cast<double>(d.state.g.num_points()) - (c == 0 || c == 3 ? 1.0 : 0.0)) < 1e-14);
  }
  CHECK(d.provenance.find("seed=7") != std::string::npos);
}

TEST_CASE("scenario draws describe the same continuous data at every resolution") {
  const ChartGrid coarse(2, 16), fine(2, 32);
  std::mt19937_64 r1(11), r2(11);
  auto [gc, bc] = compatible_fourier(coarse, 0.05, 2, r1);
  auto [gf, bf] = compatible_fourier(fine, 0.05, 2, r2);
  double gap = 0.0;
  for (std::size_t p = 0; p < coarse.num_points(); ++p) {
    std::size_t q = 0;
    for (int a = 0; a < 4; ++a) q += 2 * coarse.coordinate_index(p, a) * fine.stride(a);
    for (int c = 0; c < 4; ++c) {
      gap = std::max({gap, std::abs(gc(p, c) - gf(q, c)), std::abs(bc(p, c) - bf(q, c))});
    }
  }
  CHECK(gap < 1e-13);
}

TEST_CASE("positivity failures halve epsilon, then abort") {
  ScenarioSpec s = spec_of(ScenarioKind::KahlerPerturbation);
  s.seed = 5;
  s.epsilon = 8.0;
  s.resolution = 8;
  s.cutoff = 2;
  const InitialData d = build_initial_data(s);
  CHECK(d.checks.retries == 2);
  CHECK(d.checks.epsilon_used == 2.0);
  CHECK(d.checks.min_eigenvalue > 0.0);
  // the previous scale was indeed degenerate
  const TensorField h = cplx(1.0 / d.checks.epsilon_used) * (d.state.g - identity_metric(d.state.g.grid()));
  CHECK(min_eigenvalue(identity_metric(h.grid()) + cplx(4.0) * h) <= kDegenerateEigenvalue);

  std::mt19937_64 rng(5);
  CHECK_THROWS_AS(kahler_perturbation(ChartGrid(2, 8), 1000.0, 2, rng), ConfigError);
}

TEST_CASE("scenario validation") {
  ScenarioSpec s;
  s.cutoff = 5;
  CHECK_THROWS_AS(build_initial_data(s), ConfigError);
  s = ScenarioSpec{};
  s.kind = ScenarioKind::CompatibleFourier;
  s.n = 1;
  CHECK_THROWS_AS(build_initial_data(s), ConfigError);
  s = ScenarioSpec{};
  s.kind = ScenarioKind::FromSnapshot;
  CHECK_THROWS_AS(build_initial_data(s), ConfigError);
  s.snapshot = "/nonexistent/snap";
  CHECK_THROWS_AS(build_initial_data(s), SnapshotError);
  CHECK_THROWS_AS(parse_scenario_kind("torus"), ConfigError);
  CHECK(parse_scenario_kind("compatible-fourier") == ScenarioKind::CompatibleFourier);
}

TEST_CASE("background requests") {
  const BackgroundRequest a = parse_background_request("flat");
  CHECK(a.spec.kind == BackgroundKind::Flat);
  const BackgroundRequest b = parse_background_request("kahler-perturbation,epsilon=0.1,cutoff=2,seed=42");
  CHECK(b.spec.kind == BackgroundKind::KahlerPerturbation);
  CHECK(b.spec.epsilon == 0.1);
  CHECK(b.spec.cutoff == 2);
  CHECK(b.seed == 42);
  CHECK_THROWS_AS(parse_background_request("kahler-perturbation,size=3"), ConfigError);
  CHECK_THROWS_AS(parse_background_request("round"), ConfigError);
  CHECK_THROWS_AS(parse_background_request("flat,epsilon=x"), ConfigError);

  // the scenario's background is reproducible from its seed alone
  ScenarioSpec s = spec_of(ScenarioKind::Flat);
  s.background.kind = BackgroundKind::KahlerPerturbation;
  const InitialData d = build_initial_data(s);
  const BackgroundData again = build_background(d.state.g.grid(), BackgroundRequest{s.background, s.seed});
  CHECK(bit_equal(d.background.G, again.G));
  CHECK(!d.background.constant);
}

TEST_CASE("snapshot round trip is bit exact") {
  const ChartGrid grid(2, 8);
  FlowState s{0.1 + 1e-17, random_bandlimited(grid, metric_signature(), 3),
              random_bandlimited(grid, form_signature(), 4)};
  s.g.data()[5] = cplx(-0.0, 1e-310);
  const std::string bytes = encode_snapshot(s, "unit test");
  const Snapshot back = decode_snapshot(bytes);
  CHECK(bit_equal(back.state.g, s.g));
  CHECK(bit_equal(back.state.beta, s.beta));
  CHECK(back.state.t == s.t);
  CHECK(back.header.provenance == "unit test");
  CHECK(encode_snapshot(back.state, "unit test") == bytes);

  const auto dir = scratch("snapshot");
  const std::string path = (dir / "s.snap").string();
  write_snapshot(path, s, "file");
  CHECK(bit_equal(read_snapshot(path).state.g, s.g));
  CHECK(!std::filesystem::exists(path + ".tmp"));
}

TEST_CASE("snapshot errors are explicit") {
  const ChartGrid grid(1, 8);
  const FlowState s{0.0, identity_metric(grid), zero_form(grid)};
  const std::string bytes = encode_snapshot(s, "p");

  auto message = [](const std::string& b) {
    try {
      decode_snapshot(b);
    } catch (const SnapshotError& e) {
      return std::string(e.what());
    }
    return std::string();
  };
  CHECK(message(bytes.substr(0, bytes.size() - 9)).find("checksum") != std::string::npos);
  std::string flipped = bytes;
  flipped[flipped.size() - 3] ^= 0x10;
  CHECK(message(flipped).find("checksum") != std::string::npos);
  std::string bumped = bytes;
  bumped.replace(bumped.find("schema 1"), 8, "schema 2");
  CHECK(message(bumped).find("unsupported schema") != std::string::npos);
  CHECK(message("not a snapshot").find("not a snapshot") != std::string::npos);
  std::string dims = bytes;
  dims.replace(dims.find("points 8 8"), 10, "points 8 4");
  CHECK(!message(dims).empty());
  CHECK_THROWS_AS(encode_snapshot(s, "two\nlines"), InvalidArgumentError);
}

TEST_CASE("config parsing") {
  const RunConfig c = parse_config(
      "# comment\n"
      "scenario.kind = compatible-fourier   # trailing comment\n"
      "scenario.seed=123\n"
      "flow.dt = auto\n"
      "flow.integrator = rk4\n"
      "monitor.R = 0.3\n"
      "output.dir = out\n");
  CHECK(c.scenario.kind == ScenarioKind::CompatibleFourier);
  CHECK(c.scenario.seed == 123);
  CHECK(c.scenario.points_per_axis() == 16);
  CHECK(!c.flow.dt.has_value());
  CHECK(c.flow.integrator == Integrator::RK4);
  CHECK(c.flow.t_end == 0.1);
  CHECK(c.flow.cfl_safety == 0.25);
  CHECK(c.monitor.R == 0.3);
  CHECK(c.output_dir == "out");
  // the echoed settings parse back to themselves
  CHECK(parse_config(c.to_text()).to_text() == c.to_text());

  CHECK(parse_config("scenario.n = 1\nscenario.kind = kahler-perturbation\n").scenario.points_per_axis() == 64);
  CHECK_THROWS_AS(parse_config("scenario.colour = red\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("scenario.seed = 1\nscenario.seed = 2\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("scenario.epsilon = small\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("flow.t_end = 0.1x\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("just words\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("monitor.R = 0.1\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("flow.derivatives = fd2\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("scenario.seed = -3\n"), ConfigError);
  CHECK_THROWS_AS(load_config("/nonexistent.cfg"), ConfigError);
}

TEST_CASE("flat run: constant monitor series and its files") {
  const auto dir = scratch("flat");
  RunConfig c = parse_config("scenario.kind = flat\nflow.t_end = 0.004\nflow.sample_interval = 1\nmonitor.k_max = 0\n");
  c.output_dir = dir.string();
  const RunOutcome out = run_scenario(c);
  REQUIRE(out.completed);
  REQUIRE(out.series.size() >= 5);
  for (const MonitorRecord& r : out.series.records()) {
    CHECK(r.sup_upsilon_sq == 0.0);
    CHECK(r.detG_drift == 0.0);
    CHECK(r.tr_G_Gtilde_sup == 4.0);
    CHECK(r.res_prop32 == 0.0);
    CHECK(r.res_lemma34 == 0.0);
    CHECK(r.calabi_ratio == 0.0);
  }
  REQUIRE(out.calabi.has_value());
  CHECK(out.calabi->K == 0.0);
  CHECK(!out.calabi->unbounded);

  const std::string csv = slurp(out.csv_path);
  CHECK(csv.rfind(std::string(kMonitorCsvHeader) + "\n", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == static_cast<long>(out.series.size() + 1));
  const std::string report = slurp(out.report_path);
  CHECK(report.find("seed: 7") != std::string::npos);
  CHECK(report.find("outcome: completed") != std::string::npos);
  CHECK(read_snapshot(out.snapshot_path).state.t == c.flow.t_end);
}

TEST_CASE("resume continues from the snapshot time and reproduces the direct run") {
  const auto dir = scratch("resume");
  const std::string base =
      "scenario.kind = compatible-fourier\nflow.dt = 0.001\nflow.sample_interval = 2\nmonitor.k_max = 0\n";
  RunConfig full = parse_config(base + "flow.t_end = 0.004\n");
  full.output_dir = (dir / "full").string();
  RunConfig half = parse_config(base + "flow.t_end = 0.002\n");
  half.output_dir = (dir / "half").string();
  RunConfig rest = full;
  rest.output_dir = (dir / "rest").string();

  const RunOutcome a = run_scenario(full);
  const RunOutcome b = run_scenario(half);
  const RunOutcome r = run_scenario(rest, b.snapshot_path);
  REQUIRE(a.completed);
  REQUIRE(r.completed);
  CHECK(r.series.records().front().t == 0.002);
  CHECK(r.run.final_state.t == 0.004);
  CHECK(sup_diff(a.run.final_state.g, r.run.final_state.g) < 1e-15);
  CHECK(sup_diff(a.run.final_state.beta, r.run.final_state.beta) < 1e-15);
  CHECK(slurp(r.report_path).find("resumed_from: " + b.snapshot_path) != std::string::npos);

  // monitors are deterministic: recomputing from the final snapshot matches the last record
  MonitorSettings ms = full.monitor;
  const MonitorRecord m = monitor_snapshot(read_snapshot(a.snapshot_path),
                                           BackgroundRequest{full.scenario.background, full.scenario.seed}, ms);
  std::ostringstream x, y;
  write_monitor_csv_row(x, m);
  write_monitor_csv_row(y, a.series.records().back());
  CHECK(x.str() == y.str());
}

TEST_CASE("non-constant B-field Christoffel law") {
  const ChartGrid grid(2, 16);
  auto [g, beta] = compatible_pair(grid, 21, 0.05);
  const TensorField G = assemble_G(g, beta);
  std::mt19937_64 rng(3);
  TensorField gam = random_form_field(grid, 1, rng);
  CHECK(gam.sup_norm() <= 1.0 + 1e-12);
  gam *= 0.3;
  CHECK(bfield_christoffel_residual(G, gam) < 1e-9);
  // constant shifts reduce to plain conjugation
  TensorField c = zero_form(grid);
  for (std::size_t p = 0; p < grid.num_points(); ++p) {
    c(p, 1) = cplx(0.2, 0.1);
    c(p, 2) = -cplx(0.2, 0.1);
  }
  CHECK(bfield_christoffel_residual(G, c) < 1e-10);
}

TEST_CASE("kahler reduction against the potential flow") {
  const InitialData d = build_initial_data(spec_of(ScenarioKind::KahlerPerturbation));
  const KahlerReduction k = kahler_reduction(d.state.g, 0.004, 0.001);
  CHECK(k.g_gap < 1e-12);
  CHECK(k.beta_sup == 0.0);
  CHECK(k.torsion_sup < 1e-9);
}

TEST_CASE("verify: n = 1 subset skips the beta checks") {
  VerifyOptions o;
  o.quick = true;
  o.n = 1;
  const VerifyReport rep = verify_suite(o);
  CHECK(rep.all_passed());
  int skipped = 0;
  for (const VerifyCheck& c : rep.checks) {
    if (c.status == CheckStatus::Skip && c.detail == "β ≡ 0 in n=1") ++skipped;
  }
  CHECK(skipped >= 6);
  REQUIRE(rep.find("two_route_curvature") != nullptr);
  CHECK(rep.find("two_route_curvature")->status == CheckStatus::Skip);
  CHECK(rep.to_text().find("summary:") != std::string::npos);
}

TEST_CASE("verify: a flipped torsion sign fails the two-route check") {
  VerifyOptions o;
  o.quick = true;
  o.torsion_fault = TorsionFault::SecondTermSign;
  const VerifyReport rep = verify_suite(o);
  CHECK(!rep.all_passed());
  const VerifyCheck* c = rep.find("two_route_curvature");
  REQUIRE(c != nullptr);
  CHECK(c->status == CheckStatus::Fail);
  CHECK(c->measured > 1e-3);
  CHECK(active_torsion_fault() == TorsionFault::None);
}
