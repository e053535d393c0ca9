#include <cmath>

#include "doctest.h"
#include "pluriflow/flow/pluriclosed_flow.hpp"
#include "test_support.hpp"

using namespace pluriflow;
using namespace testsupport;

namespace {

FlowState flat_state(const ChartGrid& grid) { return {0.0, identity_metric(grid), zero_form(grid)}; }

double hermitian_defect(const TensorField& s) {
  const int n = s.grid().n();
  double r = 0.0;
  for (std::size_t p = 0; p < s.num_points(); ++p)
    for (int a = 0; a < n; ++a)
      for (int b = 0; b < n; ++b) r = std::max(r, std::abs(s(p, a * n + b) - std::conj(s(p, b * n + a))));
  return r;
}

double antisym_defect(const TensorField& s) {
  const int n = s.grid().n();
  double r = 0.0;
  for (std::size_t p = 0; p < s.num_points(); ++p)
    for (int a = 0; a < n; ++a)
      for (int b = 0; b < n; ++b) r = std::max(r, std::abs(s(p, a * n + b) + s(p, b * n + a)));
  return r;
}

double distance_from_flat(const TensorField& g) { return (g - identity_metric(g.grid())).sup_norm(); }

}  // namespace

TEST_CASE("flat torus is a fixed point") {
  ChartGrid grid(2, 16);
  const FlowState s = flat_state(grid);
  const FlowRhs r = flow_rhs(s);
  CHECK(r.g_dot.sup_norm() == 0.0);
  CHECK(r.beta_dot.sup_norm() == 0.0);
  for (Integrator integ : {Integrator::Euler, Integrator::RK4}) {
    FlowConfig cfg;
    cfg.integrator = integ;
    const FlowState next = step(s, cfg, 0.5);
    CHECK(sup_diff(next.g, s.g) < 1e-14);
    CHECK(next.beta.sup_norm() < 1e-14);
    CHECK(next.t == doctest::Approx(0.5));
  }
  CHECK(evolution_identity_residual(s) == 0.0);
}

TEST_CASE("bismut ricci pieces") {
  ChartGrid grid(2, 16);
  const KahlerData k = kahler_metric(grid, 4, 0.05);
  const BismutRicci rk = rho_bismut(k.g, zero_form(grid));
  CHECK(sup_diff(rk.rho11, s_classical(k.g)) < 1e-12);
  CHECK(rk.rho20.sup_norm() < 1e-14);

  auto [g, beta] = compatible_pair(grid, 41, 0.05);
  const BismutRicci r = rho_bismut(g, beta);
  CHECK(hermitian_defect(r.rho11) < 1e-14);
  CHECK(antisym_defect(r.rho20) < 1e-15);
  CHECK(r.rho20.sup_norm() > 1e-4);
  CHECK_THROWS_AS(rho_bismut(random_metric(grid, 1, 0.3), zero_form(grid)), IncompatiblePairError);
}

TEST_CASE("kahler rhs is the Kahler-Ricci flow rhs d dbar log det g") {
  ChartGrid grid(2, 16);
  const KahlerData k = kahler_metric(grid, 6, 0.05);
  const FlowRhs r = flow_rhs(FlowState{0.0, k.g, zero_form(grid)});
  TensorField logdet(grid, {});
  for (std::size_t p = 0; p < grid.num_points(); ++p)
    logdet(p, 0) = std::log(k.g(p, 0) * k.g(p, 3) - k.g(p, 1) * k.g(p, 2));
  const TensorField want = Differentiator(logdet, {}).mixed_hessian();
  CHECK(sup_diff(r.g_dot, want) < 1e-8);
  CHECK(r.beta_dot.sup_norm() == 0.0);
}

TEST_CASE("G_dot: trivial cases and a finite-difference-in-time oracle") {
  ChartGrid grid(2, 8);
  const TensorField g = random_metric(grid, 51, 0.4);
  TensorField beta = zero_form(grid);
  const FlowState s0{0.0, g, beta};
  CHECK(assemble_G_dot(s0, TensorField(grid, metric_signature()), zero_form(grid)).sup_norm() == 0.0);

  // beta = 0: ZZ block is g_dot, WW block is d/dt g^{jbar i}
  const TensorField gd = random_metric(grid, 52, 0.5) - identity_metric(grid);
  const TensorField Gd = assemble_G_dot(s0, gd, zero_form(grid));
  const TensorField gi = inverse_metric(g);
  double r = 0.0;
  for (std::size_t p = 0; p < grid.num_points(); ++p)
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j) {
        cplx w = 0.0;  // -(g^{-1} gd g^{-1})[j][i]
        for (int a = 0; a < 2; ++a)
          for (int b = 0; b < 2; ++b) w -= gi(p, j * 2 + a) * gd(p, a * 2 + b) * gi(p, b * 2 + i);
        r = std::max(r, std::abs(Gd(p, i * 4 + j) - gd(p, i * 2 + j)));
        r = std::max(r, std::abs(Gd(p, (2 + i) * 4 + 2 + j) - w));
        r = std::max(r, std::abs(Gd(p, i * 4 + 2 + j)) + std::abs(Gd(p, (2 + i) * 4 + j)));
      }
  CHECK(r < 1e-14);

  // general state, central difference along the straight path
  const TensorField b0 = compatible_pair(grid, 53, 0.3).second;
  const TensorField bd = compatible_pair(grid, 54, 0.7).second;
  const FlowState s{0.0, g, b0};
  const double ds = 1e-4;
  const TensorField Gp = assemble_G(g + cplx(ds) * gd, b0 + cplx(ds) * bd);
  const TensorField Gm = assemble_G(g - cplx(ds) * gd, b0 - cplx(ds) * bd);
  const TensorField fd = cplx(0.5 / ds) * (Gp - Gm);
  const TensorField exact = assemble_G_dot(s, gd, bd);
  CHECK(exact.sup_norm() > 1e-2);
  CHECK(sup_diff(fd, exact) < 1e-7);
}

TEST_CASE("evolution identity dG/dt = -S holds on compatible data and fails otherwise") {
  ChartGrid grid(2, 16);
  const KahlerData k = kahler_metric(grid, 8, 0.05);
  CHECK(evolution_identity_residual(FlowState{0.0, k.g, zero_form(grid)}) < 1e-8);
  auto [g, beta] = compatible_pair(grid, 61, 0.05);
  CHECK(evolution_identity_residual(FlowState{0.0, g, beta}) < 1e-7);
  // generic metrics are not pluriclosed: the identity does not apply
  CHECK(evolution_identity_residual(FlowState{0.0, random_metric(grid, 62, 0.05), zero_form(grid)}) >
        1e-4);
}

TEST_CASE("kahler perturbation relaxes toward flat and keeps beta = 0") {
  ChartGrid grid(2, 16);
  const KahlerData k = kahler_metric(grid, 9, 0.05);
  FlowConfig cfg;
  cfg.t_end = 0.02;
  cfg.sample_interval = 5;
  std::vector<double> dist;
  double tmax = 0.0, bmax = 0.0;
  const FlowMonitor mon = [&](const FlowState& s, const SampleContext& ctx) {
    dist.push_back(distance_from_flat(s.g));
    tmax = std::max(tmax, ctx.geometry.torsion.sup_norm());
    bmax = std::max(bmax, s.beta.sup_norm());
  };
  const FlowRun run = run_flow(FlowState{0.0, k.g, zero_form(grid)}, cfg, {mon});
  REQUIRE(dist.size() >= 3);
  for (std::size_t i = 1; i < dist.size(); ++i) CHECK(dist[i] < dist[i - 1]);
  CHECK(bmax < 1e-12);
  CHECK(tmax < 1e-9);
  CHECK(run.final_state.t == doctest::Approx(0.02).epsilon(1e-12));
  for (std::size_t i = 1; i < run.samples.size(); ++i) CHECK(run.samples[i].t > run.samples[i - 1].t);
  for (const FlowSample& s : run.samples) {
    CHECK(s.evolution_residual < 1e-7);
    CHECK(s.detG_drift < 1e-12);
  }
  CHECK(run.samples.front().step == 0);
  CHECK(run.samples.back().step == run.steps);
}

TEST_CASE("integrator self-convergence orders") {
  // coarse grid: aliasing drifts the compatibility residual, which is not what this test measures
  ChartGrid grid(2, 12);
  const KahlerData k = kahler_metric(grid, 10, 0.05, 2);
  const FlowState s0{0.0, k.g, zero_form(grid)};
  auto solve = [&](Integrator integ, double dt) {
    FlowConfig cfg;
    cfg.integrator = integ;
    cfg.dt = dt;
    cfg.t_end = 0.01;
    cfg.sample_interval = 1000000;
    cfg.compat_floor = 1e-4;
    return run_flow(s0, cfg).final_state.g;
  };
  auto order = [&](Integrator integ, double dt) {
    const TensorField a = solve(integ, dt), b = solve(integ, dt / 2), c = solve(integ, dt / 4);
    return std::log2(sup_diff(a, b) / sup_diff(b, c));
  };
  const double p_euler = order(Integrator::Euler, 1e-3);
  const double p_rk4 = order(Integrator::RK4, 2e-3);
  MESSAGE("euler order " << p_euler << ", rk4 order " << p_rk4);
  CHECK(std::abs(p_euler - 1.0) < 0.1);
  CHECK(p_rk4 >= 3.0);
}

TEST_CASE("aborts and configuration errors") {
  ChartGrid grid(2, 16);
  const KahlerData k = kahler_metric(grid, 11, 0.3);
  FlowConfig cfg;
  CHECK_THROWS_AS(step(FlowState{0.0, k.g, zero_form(grid)}, cfg, 1.0), FlowAbort);

  auto [g, beta] = compatible_pair(grid, 12, 0.05);
  CHECK_THROWS_AS(step(FlowState{0.0, g, beta}, cfg, 1e-4, 1e-300), FlowAbort);
  CHECK_NOTHROW(step(FlowState{0.0, g, beta}, cfg, 1e-4, 1e-6));

  FlowConfig bad;
  bad.t_end = 1.5;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = FlowConfig{};
  bad.cfl_safety = 1.0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = FlowConfig{};
  bad.dt = -1.0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  CHECK_THROWS_AS(parse_integrator("midpoint"), ConfigError);
  CHECK(parse_integrator("rk4") == Integrator::RK4);
}

TEST_CASE("auto time step follows the parabolic CFL bound") {
  ChartGrid grid(2, 16);
  const double h = grid.min_spacing();
  CHECK(auto_dt(identity_metric(grid), 0.25) == doctest::Approx(0.25 * h * h));
  CHECK(auto_dt(cplx(0.5) * identity_metric(grid), 0.25) == doctest::Approx(0.125 * h * h));
}
