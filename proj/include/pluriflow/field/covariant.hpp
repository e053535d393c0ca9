#pragma once

#include "pluriflow/field/derivatives.hpp"

namespace pluriflow {

/// Christoffel symbols used by covariant derivatives.
///  classical:   slots (Holo, Holo, Holo^), Gamma_{ij}^k of g
///  generalized: slots (Holo, Gen, Gen^),   Gamma_{iA}^B of G
/// Barred directions use complex conjugates on barred slots only.
struct ConnectionSet {
  const TensorField* classical = nullptr;
  const TensorField* generalized = nullptr;
};

/// nabla_l f (Dir::Holo) or nabla_lbar f (Dir::Antiholo); prepends one slot.
TensorField covariant_derivative(const TensorField& f, Dir dir, const ConnectionSet& conn,
                                 DerivativeScheme scheme = {});

/// Adds connection terms to a precomputed partial-derivative stack (leading slot = direction).
void add_connection_terms(TensorField& stack, const TensorField& f, Dir dir,
                          const ConnectionSet& conn);

/// g^{kbar l} nabla_l nabla_kbar f.  ginv has slots (Antiholo^, Holo^): ginv[k][l] = g^{kbar l}.
TensorField chern_laplacian(const TensorField& f, const TensorField& ginv,
                            const ConnectionSet& conn, DerivativeScheme scheme = {});

/// Metrics weighting each slot kind in a pointwise squared norm.
///  metric:  g_{ij bar}, slots (Holo, Antiholo)
///  ginv:    g^{jbar i}, slots (Antiholo^, Holo^)
///  Ginv:    G^{Bbar A}, slots (GenConj^, Gen^)
///  third:   metric for upper generalized slots (G or a background)
struct NormMetrics {
  const TensorField* metric = nullptr;
  const TensorField* ginv = nullptr;
  const TensorField* Ginv = nullptr;
  const TensorField* third = nullptr;
};

/// sum X_I conj(X_J) prod_s W_s(I_s, J_s); returns a real field.
RealField tensor_norm_sq(const TensorField& X, const NormMetrics& m);

/// Max of f over grid points within flat distance `radius` of `center`.
/// Throws ResolutionError for an empty ball or radius >= half the minimal period.
double sup_ball(const RealField& f, const std::vector<double>& center, double radius);
/// Same, with the background metric accepted for grid checking; distance stays flat.
double sup_ball(const RealField& f, const std::vector<double>& center, double radius,
                const TensorField& gtilde);

}  // namespace pluriflow
