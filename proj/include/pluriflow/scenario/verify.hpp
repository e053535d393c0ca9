#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "pluriflow/scenario/scenario.hpp"

namespace pluriflow {

enum class CheckStatus { Pass, Fail, Skip };

struct VerifyCheck {
  std::string name;
  CheckStatus status = CheckStatus::Pass;
  double measured = 0.0;   // residual, gap or order
  double threshold = 0.0;
  std::string relation;    // "<", "<=", ">=" or "=="
  std::string detail;      // extra measurements, skip reason or error
  double seconds = 0.0;
};

struct VerifyOptions {
  bool quick = false;
  int n = 2;
  std::uint64_t seed = 7;
  TorsionFault torsion_fault = TorsionFault::None;
};

struct VerifyReport {
  std::uint64_t seed = 0;
  int n = 2;
  bool quick = false;
  std::vector<VerifyCheck> checks;

  bool all_passed() const;
  const VerifyCheck* find(const std::string& name) const;
  std::string to_text() const;
};

/// Runs every identity check on fixed seeds. Failures and exceptions become report
/// entries. torsion_fault is installed for the whole run (mutation testing).
VerifyReport verify_suite(const VerifyOptions& options = {});

/// Random antisymmetric (2,0)-form whose coefficient is a trigonometric polynomial
/// with frequencies |q_a| <= cutoff and unit amplitude sum.
TensorField random_form_field(const ChartGrid& grid, int cutoff, std::mt19937_64& rng);

/// sup |Gamma(U G U^H) - [(dU) U^-1 + U Gamma U^-1 + U G (dU^H) U^-H G^-1 U^-1]| for the
/// pointwise shift U = [[I, gamma(x)], [0, I]]: the Christoffel law for a non-constant B-field.
double bfield_christoffel_residual(const TensorField& G, const TensorField& gamma,
                                   DerivativeScheme scheme = {});

/// Sup distance at t_end between the flow of Kahler data (beta = 0) and an independent
/// Kahler-Ricci potential integration d_t phi = log det(g0 + ddbar phi), both explicit
/// Euler with step dt.
struct KahlerReduction {
  double g_gap = 0.0;
  double beta_sup = 0.0;
  double torsion_sup = 0.0;
  double evolution_residual = 0.0;
};
KahlerReduction kahler_reduction(const TensorField& g0, double t_end, double dt);

}  // namespace pluriflow
