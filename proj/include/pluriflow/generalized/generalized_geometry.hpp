#pragma once

#include <Eigen/Core>

#include "pluriflow/hermitian/hermitian_geometry.hpp"

namespace pluriflow {

// Generalized index A runs over Z^1..Z^n (0..n-1) then W^1..W^n (n..2n-1).
//   G      (Gen, GenConj)                        G[A][B]      = G_{A Bbar}
//   Ginv   (GenConj^, Gen^)                      Ginv[B][A]   = G^{Bbar A}, the matrix inverse of G
//   Gamma  (Holo, Gen, Gen^)                     Gamma[i][A][B] = d_i G_{A Cbar} G^{Cbar B}
//   Omega  (Holo, Antiholo, Gen, GenConj)
//   S      (Gen, GenConj)
// In matrix form G = U diag(g, g^{-T}) U^H with U = [[I, beta], [0, I]].

Signature gen_metric_signature();
Signature gen_inverse_signature();
Signature gen_connection_signature();
Signature gen_curvature_signature();

using FormMatrix = Eigen::Matrix<cplx, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor, 2, 2>;

TensorField assemble_G(const TensorField& g, const TensorField& beta);
/// Closed-form block inverse.
TensorField inverse_G_blocks(const TensorField& g, const TensorField& beta);
/// Pointwise numeric inverse (LU), independent of the block formula.
TensorField inverse_G(const TensorField& G);

double det_G_deviation(const TensorField& G);
double min_eigenvalue_G(const TensorField& G);

TensorField chern_connection_G(const TensorField& G, DerivativeScheme scheme = {});
TensorField chern_connection_G(const TensorField& G, const TensorField& Ginv,
                               DerivativeScheme scheme);
TensorField chern_curvature_G_direct(const TensorField& G, DerivativeScheme scheme = {});

/// Curvature blocks written in the gauge beta(p) = 0: built from g, T and
/// nabla nabla-bar beta only, hence invariant under constant shifts of beta.
TensorField curvature_gauge_blocks(const ClassicalGeometry& geo);
TensorField curvature_gauge_blocks(const TensorField& g, const TensorField& beta,
                                   DerivativeScheme scheme = {});

/// Curvature of G from the block formulas: the gauge blocks conjugated by U(beta(p)).
/// Throws IncompatiblePairError when the compatibility residual exceeds compat_tol.
TensorField chern_curvature_G_blocks(const ClassicalGeometry& geo, double compat_tol = 1e-6);
TensorField chern_curvature_G_blocks(const TensorField& g, const TensorField& beta,
                                     DerivativeScheme scheme = {}, double compat_tol = 1e-6);

/// S_{A Bbar} = g^{jbar i} Omega_{i jbar A Bbar}.
TensorField s_tensor(const TensorField& omega, const TensorField& g);
TensorField s_tensor_from_inverse(const TensorField& omega, const TensorField& ginv);

/// Trace blocks (S^g - T^2, -g^{-1} Delta beta, ...) in the beta(p) = 0 gauge.
TensorField s_gauge_blocks(const ClassicalGeometry& geo);
/// Block-formula S: gauge blocks conjugated by U(beta(p)).
TensorField s_tensor_blocks(const ClassicalGeometry& geo);

/// X -> U(gamma) X U(gamma)^H on the trailing (Gen, GenConj) pair, gamma constant.
TensorField conjugate_by_shift(const TensorField& X, const FormMatrix& gamma);
/// Same with a pointwise gamma taken from a (Holo, Holo) field.
TensorField conjugate_by_shift(const TensorField& X, const TensorField& gamma);

struct BFieldResult {
  TensorField G;
  TensorField gamma;  // Chern connection of the transformed metric
  TensorField omega;
  TensorField s;
};

/// Constant B-field shift: G -> U G U^H with U = [[I, gamma], [0, I]]; transports
/// Gamma -> U Gamma U^{-1}, Omega -> U Omega U^H, S -> U S U^H. The returned
/// connection/curvature/S are transported from those of G, not recomputed.
BFieldResult bfield_transform(const TensorField& G, const FormMatrix& gamma,
                              DerivativeScheme scheme = {});
/// Field-valued gamma: accepted only when constant over the grid.
BFieldResult bfield_transform(const TensorField& G, const TensorField& gamma,
                              DerivativeScheme scheme = {});

/// Validates a constant antisymmetric form matrix for the grid's dimension.
void validate_constant_form(const FormMatrix& gamma, int n);

struct CurvatureGap {
  double abs_gap = 0.0;
  double direct_norm = 0.0;
  double relative() const { return direct_norm > 0.0 ? abs_gap / direct_norm : abs_gap; }
};

/// sup|Omega_blocks - Omega_direct| and sup|Omega_direct|, evaluated one (i, jbar)
/// pair at a time to bound memory on fine grids.
CurvatureGap curvature_two_route_gap(const TensorField& g, const TensorField& beta,
                                     DerivativeScheme scheme = {}, double compat_tol = 1e-6);

}  // namespace pluriflow
