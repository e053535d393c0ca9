#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <string>

#include "pluriflow/estimates/estimates.hpp"

namespace pluriflow {

enum class ScenarioKind { Flat, KahlerPerturbation, CompatibleFourier, FromSnapshot };
enum class BackgroundKind { Flat, KahlerPerturbation };

std::string to_string(ScenarioKind k);
std::string to_string(BackgroundKind k);
ScenarioKind parse_scenario_kind(const std::string& s);
BackgroundKind parse_background_kind(const std::string& s);

struct BackgroundSpec {
  BackgroundKind kind = BackgroundKind::Flat;
  double epsilon = 0.05;
  int cutoff = 1;
};

struct ScenarioSpec {
  ScenarioKind kind = ScenarioKind::KahlerPerturbation;
  int n = 2;
  std::optional<int> resolution;  // default 16, or 64 for n = 1
  double period = 1.0;
  double epsilon = 0.05;
  std::uint64_t seed = 7;
  int cutoff = 1;
  std::string snapshot;  // from-snapshot source
  BackgroundSpec background{};

  int points_per_axis() const { return resolution.value_or(n == 1 ? 64 : 16); }
  ChartGrid grid() const { return ChartGrid(n, points_per_axis(), period); }
  /// Throws ConfigError.
  void validate() const;
};

/// Residual gates measured on constructed data.
struct ScenarioChecks {
  double compat = 0.0;
  double pluriclosed = 0.0;
  double torsion = 0.0;
  double min_eigenvalue = 0.0;
  double detG = 0.0;
  double epsilon_used = 0.0;
  int retries = 0;
};

struct InitialData {
  FlowState state;
  BackgroundData background;
  ScenarioChecks checks;
  std::string provenance;
};

/// Positivity failures halve epsilon, at most this many times.
inline constexpr int kMaxEpsilonRetries = 5;

/// Builds the initial state and background, then runs the residual gates.
/// Throws ConfigError for an invalid spec or persistent positivity failure, and
/// IncompatiblePairError when a gate fails.
InitialData build_initial_data(const ScenarioSpec& spec);

/// Real trigonometric polynomial phi with every frequency |q_a| <= cutoff; metric
/// delta + eps * ddbar phi with ddbar phi scaled so the sum of its Fourier amplitudes is 1.
/// The same draws give the same continuous metric on every resolution.
TensorField kahler_perturbation(const ChartGrid& grid, double eps, int cutoff, std::mt19937_64& rng);

/// Random bandlimited beta_12 with a per-mode solve of
/// i (d_1 h_{2kbar} - d_2 h_{1kbar}) = d_kbar beta_12 for zero-mean Hermitian h,
/// scaled like the Kahler perturbation (eps times a unit amplitude sum). n = 2 only.
std::pair<TensorField, TensorField> compatible_fourier(const ChartGrid& grid, double eps, int cutoff,
                                                       std::mt19937_64& rng);

BackgroundData build_background(const ChartGrid& grid, const BackgroundSpec& spec,
                                std::mt19937_64& rng);

/// "flat" or "kahler-perturbation[,epsilon=..][,cutoff=..][,seed=..]".
struct BackgroundRequest {
  BackgroundSpec spec;
  std::uint64_t seed = 7;
};
BackgroundRequest parse_background_request(const std::string& text);
/// Same background a scenario with this seed builds.
BackgroundData build_background(const ChartGrid& grid, const BackgroundRequest& request);

}  // namespace pluriflow
