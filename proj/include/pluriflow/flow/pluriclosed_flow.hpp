#pragma once

#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "pluriflow/generalized/generalized_geometry.hpp"

namespace pluriflow {

struct FlowState {
  double t = 0.0;
  TensorField g;
  TensorField beta;
};

enum class Integrator { Euler, RK4 };

std::string to_string(Integrator s);
Integrator parse_integrator(const std::string& s);

struct FlowConfig {
  std::optional<double> dt;  // empty: choose from the parabolic CFL bound
  double t_end = 0.1;
  Integrator integrator = Integrator::Euler;
  double cfl_safety = 0.25;
  int sample_interval = 10;
  DerivativeScheme derivatives{};
  /// Compatibility may drift to 10 x max(initial, floor) before the run aborts.
  double compat_floor = 1e-9;

  void validate() const;
};

struct BismutRicci {
  TensorField rho11;  // S^g - T^2
  TensorField rho20;  // -Delta_g beta
};

BismutRicci rho_bismut(const ClassicalGeometry& geo);
BismutRicci rho_bismut(const TensorField& g, const TensorField& beta, DerivativeScheme scheme = {},
                       double compat_tol = 1e-6);

struct FlowRhs {
  TensorField g_dot;
  TensorField beta_dot;
};

/// g_dot = -(S^g - T^2), beta_dot = Delta_g beta.
FlowRhs flow_rhs(const ClassicalGeometry& geo);
FlowRhs flow_rhs(const FlowState& state, DerivativeScheme scheme = {});

/// Product-rule derivative of assemble_G along (g_dot, beta_dot).
TensorField assemble_G_dot(const FlowState& state, const TensorField& g_dot,
                           const TensorField& beta_dot);

/// sup |G_dot + S(Omega_direct(G))|.
double evolution_identity_residual(const FlowState& state, const FlowRhs& rhs,
                                   DerivativeScheme scheme = {});
double evolution_identity_residual(const FlowState& state, DerivativeScheme scheme = {});

/// cfl_safety * h_min^2 / max spectral radius of g^{-1}.
double auto_dt(const TensorField& g, double cfl_safety);

/// Step size used for this state under the configuration.
double step_size(const FlowState& state, const FlowConfig& config);

/// One Euler or RK4 step of length dt, with symmetrization and a positivity check.
/// The compatibility residual of the input state is compared against compat_limit.
FlowState step(const FlowState& state, const FlowConfig& config, double dt,
               double compat_limit = std::numeric_limits<double>::infinity());
FlowState step(const FlowState& state, const FlowConfig& config);

void symmetrize(FlowState& state);

struct FlowSample {
  double t = 0.0;
  long step = 0;
  double detG_drift = 0.0;
  double evolution_residual = 0.0;
  double compat_residual = 0.0;
  double dt = 0.0;
};

/// Context handed to monitors at every sample time.
struct SampleContext {
  const FlowSample& sample;
  const ClassicalGeometry& geometry;
  const FlowRhs& rhs;
  const TensorField& G;
};

using FlowMonitor = std::function<void(const FlowState&, const SampleContext&)>;

struct FlowRun {
  std::vector<FlowSample> samples;
  FlowState final_state;
  long steps = 0;
  double initial_compat = 0.0;
  double final_compat = 0.0;
};

/// Steps to t_end, sampling at step 0, every sample_interval steps and at the end.
/// Throws FlowAbort on positivity loss or compatibility drift.
FlowRun run_flow(const FlowState& initial, const FlowConfig& config,
                 const std::vector<FlowMonitor>& monitors = {});

}  // namespace pluriflow
