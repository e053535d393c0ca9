#pragma once

#include "pluriflow/field/covariant.hpp"
#include "pluriflow/field/derivatives.hpp"

namespace pluriflow {

// Component conventions (n <= 2, row-major per point):
//   g      (Holo, Antiholo)              g[i][j]       = g_{i jbar}
//   ginv   (Antiholo^, Holo^)            ginv[j][i]    = g^{jbar i}
//   beta   (Holo, Holo)                  beta[i][j]    = beta_{ij} = -beta_{ji}
//   Gamma  (Holo, Holo, Holo^)           Gamma[i][j][k]= g^{lbar k} d_i g_{j lbar}
//   Omega  (Holo, Antiholo, Holo, Antiholo)
//   T      (Holo, Holo, Antiholo)        T[i][j][k]    = d_i g_{j kbar} - d_j g_{i kbar}
// The form convention is omega_{i jbar} = i g_{i jbar}; compatibility means
// i T_{ijkbar} = d_kbar beta_{ij}.

Signature metric_signature();
Signature inverse_metric_signature();
Signature form_signature();

TensorField identity_metric(const ChartGrid& grid);
TensorField zero_form(const ChartGrid& grid);

/// Smallest eigenvalue threshold below which a metric counts as degenerate.
inline constexpr double kDegenerateEigenvalue = 1e-8;

/// Smallest eigenvalue of the Hermitian part over all points.
double min_eigenvalue(const TensorField& g);
/// Largest pointwise spectral radius.
double max_eigenvalue(const TensorField& g);

/// Throws InvalidArgumentError for a non-Hermitian field, DegenerateMetricError on positivity loss.
void validate_metric(const TensorField& g);
/// Throws InvalidArgumentError unless beta is antisymmetric (and zero for n = 1).
void validate_torsion_potential(const TensorField& beta);

TensorField inverse_metric(const TensorField& g);

/// g and its first and mixed second derivatives, computed once.
struct MetricJet {
  TensorField g;
  TensorField ginv;
  TensorField dg;   // (Holo, Holo, Antiholo):            d_i g_{j kbar}
  TensorField dbg;  // (Antiholo, Holo, Antiholo):        d_ibar g_{j kbar}
  TensorField ddg;  // (Holo, Antiholo, Holo, Antiholo):  d_i d_jbar g_{a bbar}
};

struct FormJet {
  TensorField beta;
  TensorField dbeta;   // (Holo, Holo, Holo):            d_i beta_{ab}
  TensorField dbbeta;  // (Antiholo, Holo, Holo):        d_jbar beta_{ab}
  TensorField ddbeta;  // (Holo, Antiholo, Holo, Holo):  d_i d_jbar beta_{ab}
};

MetricJet metric_jet(const TensorField& g, DerivativeScheme scheme = {});
FormJet form_jet(const TensorField& beta, DerivativeScheme scheme = {});

TensorField chern_connection_classical(const MetricJet& jet);
TensorField chern_connection_classical(const TensorField& g, DerivativeScheme scheme = {});

TensorField chern_curvature_classical(const MetricJet& jet);
TensorField chern_curvature_classical(const TensorField& g, DerivativeScheme scheme = {});

TensorField chern_torsion(const MetricJet& jet);
TensorField chern_torsion(const TensorField& g, DerivativeScheme scheme = {});

/// T^2_{i jbar} = T_{i l nbar} conj(T_{j k mbar}) g^{kbar l} g^{nbar m}.
TensorField torsion_square(const TensorField& T, const TensorField& g);
TensorField torsion_square_from_inverse(const TensorField& T, const TensorField& ginv);

/// S^g_{a bbar} = g^{jbar i} Omega_{i jbar a bbar}.
TensorField s_classical(const MetricJet& jet);
TensorField s_classical(const TensorField& g, DerivativeScheme scheme = {});
TensorField trace_curvature(const TensorField& omega, const TensorField& ginv);

/// sup |d_lbar T_{ij kbar} - d_kbar T_{ij lbar}|, the components of i d dbar omega.
double pluriclosed_residual(const MetricJet& jet);
double pluriclosed_residual(const TensorField& g, DerivativeScheme scheme = {});

/// sup |i T_{ij kbar} - d_kbar beta_{ij}|.
double compatibility_residual(const MetricJet& jet, const FormJet& bjet);
double compatibility_residual(const TensorField& g, const TensorField& beta,
                              DerivativeScheme scheme = {});

/// (nabla_i nabla_jbar beta)_{a p}: dbar first, then the classical Chern derivative
/// on both form indices. Slots (Holo, Antiholo, Holo, Holo).
TensorField form_hessian(const FormJet& bjet, const TensorField& gamma);
/// (Delta_g beta)_{a p} = g^{jbar i} (nabla_i nabla_jbar beta)_{a p}.
TensorField form_laplacian(const TensorField& hessian, const TensorField& ginv);

/// Everything the flow and the curvature blocks need from (g, beta).
struct ClassicalGeometry {
  MetricJet metric;
  FormJet form;
  TensorField gamma;
  TensorField omega;
  TensorField torsion;
  TensorField t2;
  TensorField s;
  TensorField beta_hessian;
  TensorField beta_laplacian;
};

ClassicalGeometry classical_geometry(const TensorField& g, const TensorField& beta,
                                     DerivativeScheme scheme = {});

/// Deliberate torsion-convention faults used by mutation tests.
enum class TorsionFault { None, SecondTermSign };

TorsionFault active_torsion_fault();

/// Installs a torsion fault for the current thread while alive.
class ScopedTorsionFault {
 public:
  explicit ScopedTorsionFault(TorsionFault fault);
  ~ScopedTorsionFault();
  ScopedTorsionFault(const ScopedTorsionFault&) = delete;
  ScopedTorsionFault& operator=(const ScopedTorsionFault&) = delete;

 private:
  TorsionFault previous_;
};

/// Pointwise helpers on row-major n x n complex matrices (n <= 4).
namespace pointwise {
double min_eigenvalue_hermitian(const cplx* m, int n);
void invert(const cplx* m, cplx* out, int n);
}  // namespace pointwise

}  // namespace pluriflow
