#pragma once

#include <vector>

#include "pluriflow/flow/pluriclosed_flow.hpp"

namespace pluriflow {

/// Background generalized metric and the fields derived from it.
struct BackgroundData {
  TensorField g;
  TensorField beta;
  TensorField G;
  TensorField Ginv;
  TensorField gamma;  // Chern connection of G~, (Holo, Gen, Gen^)
  TensorField omega;  // Chern curvature of G~, (Holo, Antiholo, Gen, GenConj)
  double lambda = 1.0;
  bool constant = false;  // G~ is the same at every point (Gamma~ = Omega~ = 0)
};

BackgroundData make_background(const TensorField& g, const TensorField& beta,
                               DerivativeScheme scheme = {});
BackgroundData flat_background(const ChartGrid& grid);

/// Upsilon = Gamma(G) - Gamma~, slots (Holo, Gen, Gen^).
TensorField upsilon(const TensorField& G, const BackgroundData& background,
                    DerivativeScheme scheme = {});
TensorField upsilon_from_connection(const TensorField& gamma_G, const BackgroundData& background);

/// g^{jbar i} G^{Cbar A} M_{B Dbar} Upsilon_{iA}^B conj(Upsilon_{jC}^D); pass M = G or M = G~.
RealField upsilon_norm(const TensorField& ups, const TensorField& g, const TensorField& G,
                       const TensorField& third);

/// Classical metric read off the WW block of G.
TensorField classical_metric_from_G(const TensorField& G);

/// |nabla^j Upsilon|^2 for j = 0..k. nabla^j runs over all 2^j words in (nabla, nabla-bar),
/// with the Chern connection of g on chart slots and of G on generalized slots.
std::vector<RealField> upsilon_derivative_norms(const TensorField& ups, const TensorField& g,
                                                const TensorField& G, int k,
                                                DerivativeScheme scheme = {});

/// f_k = sum_j (|nabla^j Upsilon|^2)^(1/(1+j)).
RealField f_k(const TensorField& G, const BackgroundData& background, int k,
              DerivativeScheme scheme = {});
RealField f_k_from_norms(const std::vector<RealField>& norms, int k);

/// tr_G G~ = G^{Bbar A} G~_{A Bbar}.
RealField trace_background(const TensorField& G, const TensorField& Gtilde);

/// max over points of max(lambda_max(G~^{-1} G), 1 / lambda_min(G~^{-1} G)).
double equivalence_constant(const TensorField& G, const TensorField& Gtilde);

/// eta(r) = 1 on [0, R/2], quintic smoothstep down to 0 on [R/2, R], 0 beyond.
struct CutoffField {
  RealField eta;
  std::vector<double> center;
  double R = 0.0;
  double C = 0.0;  // |eta'| <= C/R and |Hess eta| <= C/R^2
};

double cutoff_profile(double r, double R);
double cutoff_profile_d1(double r, double R);
double cutoff_profile_d2(double r, double R);
/// Smallest C with sup|grad eta| R <= C and sup|Hess eta| R^2 <= C for the profile.
double cutoff_constant();

/// Throws ResolutionError when R < 4 h_min or R >= half the minimal period.
CutoffField cutoff(const ChartGrid& grid, const std::vector<double>& center, double R);

/// Phi = t eta^p |Upsilon|^2 + A eta^(p-2) tr_G G~. For p < 2 the second term is taken
/// as zero where eta vanishes.
RealField phi_test(double t, const RealField& eta, double p, double A, const RealField& ups_norm,
                   const RealField& trace);

/// sup |(d_t - Delta) tr_G G~ + |Upsilon|^2_{g^-1,G^-1,G~} - G^{Bbar A} g^{jbar i} Omega~_{i jbar A Bbar}|,
/// with d_t taken from (g_dot, beta_dot) by the chain rule.
double heat_residual_trace(const FlowState& state, const FlowRhs& rhs,
                           const BackgroundData& background, DerivativeScheme scheme = {});

/// sup |(d_t - Delta)|Upsilon|^2 + |nabla Upsilon|^2 + |nabla-bar Upsilon + T.Upsilon|^2| for a
/// constant background, where (T.Upsilon)_{pbar n A}^B = g^{ibar j} conj(T_{i p nbar}) Upsilon_{jA}^B.
/// Throws InvalidArgumentError for a non-constant background.
double heat_residual_upsilon_flat(const FlowState& state, const FlowRhs& rhs,
                                  const BackgroundData& background, DerivativeScheme scheme = {},
                                  bool torsion_term = true);

struct GradientInequality {
  double lambda = 1.0;
  double C = 0.0;          // 2n lambda^3
  double max_excess = 0.0; // max of |grad tr|^2 - C |Upsilon|^2 (<= 0 when it holds)
  double max_ratio = 0.0;  // max of |grad tr|^2 / (C |Upsilon|^2) where |Upsilon|^2 > 0
  bool holds = true;
};

/// |grad tr_G G~|^2_g <= 2n lambda^3 |Upsilon|^2_{g^-1,G^-1,G} pointwise.
GradientInequality gradient_inequality(const TensorField& g, const TensorField& G,
                                       const TensorField& ups, const BackgroundData& background,
                                       DerivativeScheme scheme = {});

struct MonitorRecord {
  double t = 0.0;
  long step = 0;
  double detG_drift = 0.0;
  double sup_upsilon_sq = 0.0;
  double f1 = 0.0;
  double f2 = 0.0;
  double tr_G_Gtilde_sup = 0.0;
  double phi_sup = 0.0;
  double res_prop32 = 0.0;   // evolution identity residual
  double res_lemma34 = 0.0;  // heat identity residual for tr_G G~
  double calabi_ratio = 0.0;
  double ball_upsilon_sq = 0.0;  // sup over B(center, R/2)
  double lambda = 1.0;
  double gradient_excess = 0.0;
  bool gradient_holds = true;
};

class MonitorSeries {
 public:
  /// Throws InvalidArgumentError unless t is strictly larger than the last record's.
  void append(const MonitorRecord& r);
  const std::vector<MonitorRecord>& records() const { return records_; }
  std::size_t size() const { return records_.size(); }
  bool empty() const { return records_.empty(); }

 private:
  std::vector<MonitorRecord> records_;
};

/// sup_{B(R/2)} |Upsilon|^2 / (1/t + R^-4); zero at t = 0.
double calabi_ratio(double ball_sup, double t, double R);

struct CalabiReport {
  std::vector<double> ratios;
  double K = 0.0;  // max ratio
  double first_half_max = 0.0;
  double second_half_max = 0.0;
  bool unbounded = false;  // second half exceeds 10x the first
};

/// Samples with t > 0 are split at the midpoint in time. Throws InvalidArgumentError
/// with fewer than four such samples.
CalabiReport calabi_monitor(const MonitorSeries& series, double R);

struct MonitorSettings {
  double R = 0.4;
  double p = 2.0;
  double A = 1.0;
  std::vector<double> center;  // empty: the origin
  int k_max = 2;
  DerivativeScheme scheme{};

  void validate(const ChartGrid& grid) const;
};

/// Full estimate record for one state; the evolution residual and step are left to the caller.
MonitorRecord evaluate_monitors(const FlowState& state, const FlowRhs& rhs, const TensorField& G,
                                const BackgroundData& background, const MonitorSettings& settings,
                                const CutoffField& eta);

/// Flow monitor appending one record per sample.
FlowMonitor estimate_monitor(const BackgroundData& background, const MonitorSettings& settings,
                             MonitorSeries& out);

}  // namespace pluriflow
