#include "pluriflow/flow/pluriclosed_flow.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "pluriflow/detail/small_matrix.hpp"

namespace pluriflow {

namespace {

struct Stage {
  ClassicalGeometry geo;
  FlowRhs rhs;
};

Stage evaluate(const FlowState& s, DerivativeScheme scheme) {
  try {
    Stage st{classical_geometry(s.g, s.beta, scheme), {}};
    st.rhs = flow_rhs(st.geo);
    return st;
  } catch (const DegenerateMetricError& e) {
    throw FlowAbort(std::string("flow singularity or CFL violation: ") + e.what());
  }
}

FlowState advance(const FlowState& s, double h, const FlowRhs& k) {
  FlowState out{s.t + h, s.g + cplx(h) * k.g_dot, s.beta + cplx(h) * k.beta_dot};
  return out;
}

void check_state(const FlowState& s) {
  for (const TensorField* f : {&s.g, &s.beta}) {
    for (const cplx& v : f->data()) {
      if (!std::isfinite(v.real()) || !std::isfinite(v.imag())) {
        throw FlowAbort("flow singularity or CFL violation: non-finite values at t = " +
                        std::to_string(s.t));
      }
    }
  }
  const double lam = min_eigenvalue(s.g);
  if (lam < kDegenerateEigenvalue) {
    std::ostringstream os;
    os << "flow singularity or CFL violation: min eigenvalue of g is " << lam << " at t = " << s.t;
    throw FlowAbort(os.str());
  }
}

void check_compat(double compat, double limit, double t) {
  if (compat > limit) {
    std::ostringstream os;
    os << "compatibility drift: residual " << compat << " exceeds limit " << limit << " at t = " << t;
    throw FlowAbort(os.str());
  }
}

}  // namespace

std::string to_string(Integrator s) { return s == Integrator::Euler ? "euler" : "rk4"; }

Integrator parse_integrator(const std::string& s) {
  if (s == "euler" || s == "explicit-euler") return Integrator::Euler;
  if (s == "rk4") return Integrator::RK4;
  throw ConfigError("unknown integrator '" + s + "' (expected euler or rk4)");
}

void FlowConfig::validate() const {
  if (dt && !(*dt > 0.0)) throw ConfigError("dt must be positive");
  if (!(t_end > 0.0) || t_end > 1.0) throw ConfigError("t_end must lie in (0, 1]");
  if (!(cfl_safety > 0.0) || !(cfl_safety < 1.0)) throw ConfigError("cfl_safety must lie in (0, 1)");
  if (sample_interval < 1) throw ConfigError("sample_interval must be at least 1");
  if (!(compat_floor > 0.0)) throw ConfigError("compat_floor must be positive");
}

BismutRicci rho_bismut(const ClassicalGeometry& geo) {
  return {geo.s - geo.t2, cplx(-1.0) * geo.beta_laplacian};
}

BismutRicci rho_bismut(const TensorField& g, const TensorField& beta, DerivativeScheme scheme,
                       double compat_tol) {
  const ClassicalGeometry geo = classical_geometry(g, beta, scheme);
  const double compat = compatibility_residual(geo.metric, geo.form);
  if (compat > compat_tol) {
    throw IncompatiblePairError("rho_bismut: compatibility residual " + std::to_string(compat));
  }
  return rho_bismut(geo);
}

FlowRhs flow_rhs(const ClassicalGeometry& geo) {
  return {geo.t2 - geo.s, geo.beta_laplacian};
}

FlowRhs flow_rhs(const FlowState& state, DerivativeScheme scheme) {
  return flow_rhs(classical_geometry(state.g, state.beta, scheme));
}

TensorField assemble_G_dot(const FlowState& state, const TensorField& g_dot,
                           const TensorField& beta_dot) {
  require_same_grid(state.g.grid(), g_dot.grid(), "assemble_G_dot");
  require_same_grid(state.g.grid(), beta_dot.grid(), "assemble_G_dot");
  TensorField out(state.g.grid(), gen_metric_signature());
  detail::with_dim(state.g.grid().n(), [&](auto nc) {
    constexpr int n = decltype(nc)::value;
    using M2 = detail::Mat<2 * n>;
#pragma omp parallel for schedule(static)
    for (std::size_t p = 0; p < out.num_points(); ++p) {
      const detail::Mat<n> M = detail::CMap<n>(state.g.at(p));
      const detail::Mat<n> Md = detail::CMap<n>(g_dot.at(p));
      const detail::Mat<n> Mi = M.inverse();
      const M2 U = detail::shift<n>(state.beta.at(p));
      M2 Ud = M2::Zero();
      Ud.template block<n, n>(0, n) = detail::CMap<n>(beta_dot.at(p));
      M2 D = M2::Zero(), Dd = M2::Zero();
      D.template block<n, n>(0, 0) = M;
      D.template block<n, n>(n, n) = Mi.transpose();
      Dd.template block<n, n>(0, 0) = Md;
      Dd.template block<n, n>(n, n) = -(Mi * Md * Mi).transpose();
      detail::MMap<2 * n> dst(out.at(p));
      dst = Ud * D * U.adjoint() + U * Dd * U.adjoint() + U * D * Ud.adjoint();
    }
  });
  return out;
}

double evolution_identity_residual(const FlowState& state, const FlowRhs& rhs,
                                   DerivativeScheme scheme) {
  const TensorField G = assemble_G(state.g, state.beta);
  const TensorField S = s_tensor(chern_curvature_G_direct(G, scheme), state.g);
  return (assemble_G_dot(state, rhs.g_dot, rhs.beta_dot) + S).sup_norm();
}

double evolution_identity_residual(const FlowState& state, DerivativeScheme scheme) {
  return evolution_identity_residual(state, flow_rhs(state, scheme), scheme);
}

double auto_dt(const TensorField& g, double cfl_safety) {
  const double h = g.grid().min_spacing();
  // spectral radius of g^{-1} is 1 / lambda_min(g)
  return cfl_safety * h * h * min_eigenvalue(g);
}

double step_size(const FlowState& state, const FlowConfig& config) {
  return config.dt ? *config.dt : auto_dt(state.g, config.cfl_safety);
}

void symmetrize(FlowState& s) {
  const int n = s.g.grid().n();
#pragma omp parallel for schedule(static)
  for (std::size_t p = 0; p < s.g.num_points(); ++p) {
    cplx* g = s.g.at(p);
    cplx* b = s.beta.at(p);
    for (int i = 0; i < n; ++i)
      for (int j = i; j < n; ++j) {
        const cplx h = 0.5 * (g[i * n + j] + std::conj(g[j * n + i]));
        g[i * n + j] = h;
        g[j * n + i] = std::conj(h);
        const cplx a = 0.5 * (b[i * n + j] - b[j * n + i]);
        b[i * n + j] = a;
        b[j * n + i] = -a;
      }
  }
}

FlowState step(const FlowState& state, const FlowConfig& config, double dt, double compat_limit) {
  const DerivativeScheme sc = config.derivatives;
  Stage s1 = evaluate(state, sc);
  check_compat(compatibility_residual(s1.geo.metric, s1.geo.form), compat_limit, state.t);
  FlowState next;
  if (config.integrator == Integrator::Euler) {
    next = advance(state, dt, s1.rhs);
  } else {
    const FlowRhs k1 = std::move(s1.rhs);
    s1 = Stage{};
    const FlowRhs k2 = evaluate(advance(state, 0.5 * dt, k1), sc).rhs;
    const FlowRhs k3 = evaluate(advance(state, 0.5 * dt, k2), sc).rhs;
    const FlowRhs k4 = evaluate(advance(state, dt, k3), sc).rhs;
    FlowRhs k{k1.g_dot + cplx(2.0) * k2.g_dot + cplx(2.0) * k3.g_dot + k4.g_dot,
              k1.beta_dot + cplx(2.0) * k2.beta_dot + cplx(2.0) * k3.beta_dot + k4.beta_dot};
    next = advance(state, dt / 6.0, k);
    next.t = state.t + dt;
  }
  symmetrize(next);
  check_state(next);
  return next;
}

FlowState step(const FlowState& state, const FlowConfig& config) {
  return step(state, config, step_size(state, config));
}

FlowRun run_flow(const FlowState& initial, const FlowConfig& config,
                 const std::vector<FlowMonitor>& monitors) {
  config.validate();
  validate_metric(initial.g);
  validate_torsion_potential(initial.beta);
  require_same_grid(initial.g.grid(), initial.beta.grid(), "run_flow");

  FlowRun run;
  run.initial_compat = compatibility_residual(initial.g, initial.beta, config.derivatives);
  const double limit = 10.0 * std::max(run.initial_compat, config.compat_floor);
  const double dt0 = step_size(initial, config);
  const long nsteps = std::max<long>(1, std::lround(std::ceil((config.t_end - initial.t) / dt0 - 1e-9)));
  const double dt = (config.t_end - initial.t) / static_cast<double>(nsteps);

  auto sample = [&](const FlowState& s, long k) {
    Stage st = evaluate(s, config.derivatives);
    const TensorField G = assemble_G(s.g, s.beta);
    FlowSample fs;
    fs.t = s.t;
    fs.step = k;
    fs.dt = dt;
    fs.detG_drift = det_G_deviation(G);
    fs.evolution_residual = evolution_identity_residual(s, st.rhs, config.derivatives);
    fs.compat_residual = compatibility_residual(st.geo.metric, st.geo.form);
    const SampleContext ctx{fs, st.geo, st.rhs, G};
    for (const auto& m : monitors) m(s, ctx);
    run.samples.push_back(fs);
    return fs.compat_residual;
  };

  if (!(initial.t < config.t_end)) {
    run.final_state = initial;
    run.final_compat = sample(initial, 0);
    return run;
  }

  FlowState s = initial;
  sample(s, 0);
  for (long k = 1; k <= nsteps; ++k) {
    s = step(s, config, dt, limit);
    if (k == nsteps) s.t = config.t_end;
    if (k % config.sample_interval == 0 || k == nsteps) {
      const double c = sample(s, k);
      check_compat(c, limit, s.t);
    }
  }
  run.steps = nsteps;
  run.final_state = s;
  run.final_compat = run.samples.back().compat_residual;
  check_compat(run.final_compat, limit, s.t);
  return run;
}

}  // namespace pluriflow
