#include "pluriflow/estimates/estimates.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <limits>

#include "pluriflow/detail/small_matrix.hpp"

namespace pluriflow {

namespace {

double sup(const RealField& f) { return f.values.empty() ? 0.0 : f.max(); }

TensorField scalar_field(const ChartGrid& grid) { return TensorField(grid, {}); }

bool is_constant(const TensorField& f) {
  for (std::size_t p = 1; p < f.num_points(); ++p)
    for (std::size_t c = 0; c < f.components(); ++c) {
      if (std::abs(f(p, c) - f(0, c)) > 1e-14 * (1.0 + std::abs(f(0, c)))) return false;
    }
  return true;
}

/// Fields of the evolving state shared by several estimates.
struct StateFields {
  TensorField g;
  TensorField ginv;
  TensorField G;
  TensorField Ginv;
  TensorField gamma_G;
};

StateFields state_fields(const TensorField& g, const TensorField& G, DerivativeScheme scheme) {
  StateFields s{g, inverse_metric(g), G, inverse_G(G), {}};
  s.gamma_G = chern_connection_G(s.G, s.Ginv, scheme);
  return s;
}

NormMetrics norm_metrics(const StateFields& s, const TensorField& third) {
  return {&s.g, &s.ginv, &s.Ginv, &third};
}

/// tr(H X) at every point for (Gen, GenConj) fields, H = G^{-1}.
TensorField trace_against(const TensorField& Ginv, const TensorField& X) {
  const int N2 = 2 * X.grid().n();
  TensorField out = scalar_field(X.grid());
#pragma omp parallel for schedule(static)
  for (std::size_t p = 0; p < X.num_points(); ++p) {
    const cplx* h = Ginv.at(p);
    const cplx* x = X.at(p);
    cplx acc = 0.0;
    for (int a = 0; a < N2; ++a)
      for (int b = 0; b < N2; ++b) acc += h[b * N2 + a] * x[a * N2 + b];
    out(p, 0) = acc;
  }
  return out;
}

std::vector<RealField> derivative_norms(const StateFields& s, const TensorField& ups, int k,
                                        DerivativeScheme scheme) {
  if (k < 0) throw InvalidArgumentError("derivative order must be non-negative");
  const NormMetrics m = norm_metrics(s, s.G);
  std::vector<RealField> norms;
  norms.push_back(tensor_norm_sq(ups, m));
  for (int j = 1; j <= k; ++j) norms.emplace_back(ups.grid());
  if (k == 0) return norms;

  const TensorField gamma_g = chern_connection_classical(s.g, scheme);
  const ConnectionSet conn{&gamma_g, &s.gamma_G};
  auto visit = [&](auto&& self, const TensorField& X, int depth) -> void {
    TensorField stacks[2];
    {
      const Differentiator D(X, scheme);
      stacks[0] = D.gradient(Dir::Holo);
      stacks[1] = D.gradient(Dir::Antiholo);
    }
    const Dir dirs[2] = {Dir::Holo, Dir::Antiholo};
    for (int d = 0; d < 2; ++d) {
      add_connection_terms(stacks[d], X, dirs[d], conn);
      const RealField nrm = tensor_norm_sq(stacks[d], m);
      for (std::size_t p = 0; p < nrm.values.size(); ++p) norms[depth].values[p] += nrm.values[p];
      if (depth < k) self(self, stacks[d], depth + 1);
      stacks[d] = TensorField{};
    }
  };
  visit(visit, ups, 1);
  return norms;
}

/// (d_t - Delta) tr_G G~ against its closed form, from precomputed state fields.
double trace_residual(const StateFields& s, const TensorField& G_dot,
                      const BackgroundData& bg, const TensorField& ups, DerivativeScheme scheme) {
  const ChartGrid& grid = s.G.grid();
  const int n = grid.n();
  TensorField tr = scalar_field(grid);
  TensorField tr_dot = scalar_field(grid);
  detail::with_dim(n, [&](auto nc) {
    constexpr int D = 2 * decltype(nc)::value;
#pragma omp parallel for schedule(static)
    for (std::size_t p = 0; p < grid.num_points(); ++p) {
      const detail::Mat<D> H = detail::CMap<D>(s.Ginv.at(p));
      const detail::Mat<D> Gt = detail::CMap<D>(bg.G.at(p));
      const detail::Mat<D> HGt = H * Gt;
      tr(p, 0) = HGt.trace();
      tr_dot(p, 0) = -(H * detail::CMap<D>(G_dot.at(p)) * HGt).trace();
    }
  });
  const TensorField lap = chern_laplacian(tr, s.ginv, {}, scheme);
  const RealField ups_norm = tensor_norm_sq(ups, norm_metrics(s, bg.G));
  TensorField curv = scalar_field(grid);
  if (!bg.constant) curv = trace_against(s.Ginv, s_tensor_from_inverse(bg.omega, s.ginv));
  double r = 0.0;
  for (std::size_t p = 0; p < grid.num_points(); ++p) {
    const cplx want = -ups_norm.values[p] + curv(p, 0);
    r = std::max(r, std::abs(tr_dot(p, 0) - lap(p, 0) - want));
  }
  return r;
}

GradientInequality gradient_check(const StateFields& s, const TensorField& ups,
                                  const BackgroundData& bg, DerivativeScheme scheme) {
  const ChartGrid& grid = s.G.grid();
  const int n = grid.n();
  GradientInequality out;
  out.lambda = equivalence_constant(s.G, bg.G);
  out.C = 2.0 * n * std::pow(out.lambda, 3);
  const RealField tr = trace_background(s.G, bg.G);
  const TensorField grad = partial(to_complex(tr), Dir::Holo, scheme);
  const RealField lhs = tensor_norm_sq(grad, norm_metrics(s, s.G));
  const RealField rhs = tensor_norm_sq(ups, norm_metrics(s, s.G));
  out.max_excess = -std::numeric_limits<double>::infinity();
  for (std::size_t p = 0; p < grid.num_points(); ++p) {
    const double bound = out.C * rhs.values[p];
    out.max_excess = std::max(out.max_excess, lhs.values[p] - bound);
    if (bound > 0.0) out.max_ratio = std::max(out.max_ratio, lhs.values[p] / bound);
  }
  // absolute slack for roundoff in the spectral gradient where Upsilon vanishes
  out.holds = out.max_excess <= 1e-14;
  return out;
}

}  // namespace

BackgroundData make_background(const TensorField& g, const TensorField& beta,
                               DerivativeScheme scheme) {
  validate_metric(g);
  validate_torsion_potential(beta);
  require_same_grid(g.grid(), beta.grid(), "make_background");
  BackgroundData bg;
  bg.g = g;
  bg.beta = beta;
  bg.G = assemble_G(g, beta);
  bg.Ginv = inverse_G(bg.G);
  bg.constant = is_constant(bg.G);
  if (bg.constant) {
    bg.gamma = TensorField(g.grid(), gen_connection_signature());
    bg.omega = TensorField(g.grid(), gen_curvature_signature());
  } else {
    bg.gamma = chern_connection_G(bg.G, bg.Ginv, scheme);
    bg.omega = chern_curvature_G_direct(bg.G, scheme);
  }
  return bg;
}

BackgroundData flat_background(const ChartGrid& grid) {
  return make_background(identity_metric(grid), zero_form(grid));
}

TensorField upsilon_from_connection(const TensorField& gamma_G, const BackgroundData& background) {
  require_same_grid(gamma_G.grid(), background.G.grid(), "upsilon");
  if (background.constant) return gamma_G;
  return gamma_G - background.gamma;
}

TensorField upsilon(const TensorField& G, const BackgroundData& background,
                    DerivativeScheme scheme) {
  return upsilon_from_connection(chern_connection_G(G, scheme), background);
}

RealField upsilon_norm(const TensorField& ups, const TensorField& g, const TensorField& G,
                       const TensorField& third) {
  const TensorField ginv = inverse_metric(g);
  const TensorField Ginv = inverse_G(G);
  return tensor_norm_sq(ups, NormMetrics{&g, &ginv, &Ginv, &third});
}

TensorField classical_metric_from_G(const TensorField& G) {
  const int n = G.grid().n();
  const int N2 = 2 * n;
  TensorField g(G.grid(), metric_signature());
#pragma omp parallel for schedule(static)
  for (std::size_t p = 0; p < G.num_points(); ++p) {
    // G_{W^a Wbar^b} = g^{bbar a}
    cplx ginv[4];
    for (int b = 0; b < n; ++b)
      for (int a = 0; a < n; ++a) ginv[b * n + a] = G(p, (n + a) * N2 + n + b);
    pointwise::invert(ginv, g.at(p), n);
  }
  return g;
}

std::vector<RealField> upsilon_derivative_norms(const TensorField& ups, const TensorField& g,
                                                const TensorField& G, int k,
                                                DerivativeScheme scheme) {
  return derivative_norms(state_fields(g, G, scheme), ups, k, scheme);
}

RealField f_k_from_norms(const std::vector<RealField>& norms, int k) {
  if (k < 0 || static_cast<std::size_t>(k) >= norms.size()) {
    throw InvalidArgumentError("f_k: order exceeds the available derivative norms");
  }
  RealField out(norms[0].grid);
  for (int j = 0; j <= k; ++j) {
    const double e = 1.0 / (1.0 + j);
    for (std::size_t p = 0; p < out.values.size(); ++p) {
      out.values[p] += j == 0 ? norms[0].values[p] : std::pow(std::max(norms[j].values[p], 0.0), e);
    }
  }
  return out;
}

RealField f_k(const TensorField& G, const BackgroundData& background, int k,
              DerivativeScheme scheme) {
  const StateFields s = state_fields(classical_metric_from_G(G), G, scheme);
  const TensorField ups = upsilon_from_connection(s.gamma_G, background);
  return f_k_from_norms(derivative_norms(s, ups, k, scheme), k);
}

RealField trace_background(const TensorField& G, const TensorField& Gtilde) {
  require_same_grid(G.grid(), Gtilde.grid(), "trace_background");
  RealField out(G.grid());
  detail::with_dim(G.grid().n(), [&](auto nc) {
    constexpr int D = 2 * decltype(nc)::value;
#pragma omp parallel for schedule(static)
    for (std::size_t p = 0; p < G.num_points(); ++p) {
      const detail::Mat<D> M = detail::CMap<D>(G.at(p));
      out.values[p] = M.partialPivLu().solve(detail::CMap<D>(Gtilde.at(p))).trace().real();
    }
  });
  return out;
}

double equivalence_constant(const TensorField& G, const TensorField& Gtilde) {
  require_same_grid(G.grid(), Gtilde.grid(), "equivalence_constant");
  double lam = 1.0;
  detail::with_dim(G.grid().n(), [&](auto nc) {
    constexpr int D = 2 * decltype(nc)::value;
#pragma omp parallel for schedule(static) reduction(max : lam)
    for (std::size_t p = 0; p < G.num_points(); ++p) {
      const detail::Mat<D> Gt = detail::CMap<D>(Gtilde.at(p));
      const Eigen::LLT<detail::Mat<D>> llt(Gt);
      if (llt.info() != Eigen::Success) {
        lam = std::numeric_limits<double>::infinity();
        continue;
      }
      // eigenvalues of G~^{-1} G are those of L^{-1} G L^{-H}
      const detail::Mat<D> Linv = llt.matrixL().solve(detail::Mat<D>::Identity());
      detail::Mat<D> M = Linv * detail::CMap<D>(G.at(p)) * Linv.adjoint();
      M = 0.5 * (M + M.adjoint()).eval();
      const Eigen::SelfAdjointEigenSolver<detail::Mat<D>> es(M, Eigen::EigenvaluesOnly);
      const double lo = es.eigenvalues()(0);
      const double hi = es.eigenvalues()(D - 1);
      lam = std::max(lam, lo > 0.0 ? std::max(hi, 1.0 / lo) : std::numeric_limits<double>::infinity());
    }
  });
  return lam;
}

double cutoff_profile(double r, double R) {
  if (r <= 0.5 * R) return 1.0;
  if (r >= R) return 0.0;
  const double s = (r - 0.5 * R) / (0.5 * R);
  return 1.0 - s * s * s * (10.0 - 15.0 * s + 6.0 * s * s);
}

double cutoff_profile_d1(double r, double R) {
  if (r <= 0.5 * R || r >= R) return 0.0;
  const double s = (r - 0.5 * R) / (0.5 * R);
  return -30.0 * s * s * (1.0 - s) * (1.0 - s) * (2.0 / R);
}

double cutoff_profile_d2(double r, double R) {
  if (r <= 0.5 * R || r >= R) return 0.0;
  const double s = (r - 0.5 * R) / (0.5 * R);
  return -60.0 * s * (1.0 - s) * (1.0 - 2.0 * s) * (4.0 / R / R);
}

double cutoff_constant() {
  // scale-free: evaluate at R = 1. The Hessian of a radial profile has eigenvalues
  // eta'' and eta'/r.
  static const double C = [] {
    const int samples = 200000;
    double c = 0.0;
    for (int k = 0; k <= samples; ++k) {
      const double r = 0.5 + 0.5 * k / samples;
      const double d1 = std::abs(cutoff_profile_d1(r, 1.0));
      const double d2 = std::abs(cutoff_profile_d2(r, 1.0));
      c = std::max({c, d1, d2, d1 / r});
    }
    return c * (1.0 + 1e-6);
  }();
  return C;
}

CutoffField cutoff(const ChartGrid& grid, const std::vector<double>& center, double R) {
  if (center.size() != static_cast<std::size_t>(grid.real_dim())) {
    throw InvalidArgumentError("cutoff: center needs one coordinate per real axis");
  }
  if (R < 4.0 * grid.min_spacing()) {
    throw ResolutionError("cutoff: R must span at least 4 grid spacings");
  }
  if (!(R < 0.5 * grid.min_period())) {
    throw ResolutionError("cutoff: R must be below half the minimal period");
  }
  CutoffField out{RealField(grid), center, R, cutoff_constant()};
  for (std::size_t p = 0; p < grid.num_points(); ++p) {
    out.eta.values[p] = cutoff_profile(grid.distance(p, center), R);
  }
  return out;
}

RealField phi_test(double t, const RealField& eta, double p, double A, const RealField& ups_norm,
                   const RealField& trace) {
  if (!(p >= 1.0)) throw InvalidArgumentError("phi_test: exponent p must be at least 1");
  if (!(A >= 0.0)) throw InvalidArgumentError("phi_test: A must be non-negative");
  if (!(t >= 0.0)) throw InvalidArgumentError("phi_test: t must be non-negative");
  require_same_grid(eta.grid, ups_norm.grid, "phi_test");
  require_same_grid(eta.grid, trace.grid, "phi_test");
  RealField out(eta.grid);
  for (std::size_t q = 0; q < out.values.size(); ++q) {
    const double e = eta.values[q];
    const double second = (e == 0.0 && p < 2.0) ? 0.0 : A * std::pow(e, p - 2.0) * trace.values[q];
    out.values[q] = t * std::pow(e, p) * ups_norm.values[q] + second;
  }
  return out;
}

double heat_residual_trace(const FlowState& state, const FlowRhs& rhs,
                           const BackgroundData& background, DerivativeScheme scheme) {
  require_same_grid(state.g.grid(), background.G.grid(), "heat_residual_trace");
  const StateFields s = state_fields(state.g, assemble_G(state.g, state.beta), scheme);
  const TensorField G_dot = assemble_G_dot(state, rhs.g_dot, rhs.beta_dot);
  return trace_residual(s, G_dot, background, upsilon_from_connection(s.gamma_G, background),
                        scheme);
}

double heat_residual_upsilon_flat(const FlowState& state, const FlowRhs& rhs,
                                  const BackgroundData& background, DerivativeScheme scheme,
                                  bool torsion_term) {
  if (!background.constant) {
    throw InvalidArgumentError("heat_residual_upsilon_flat needs a constant background");
  }
  require_same_grid(state.g.grid(), background.G.grid(), "heat_residual_upsilon_flat");
  const ChartGrid& grid = state.g.grid();
  const int n = grid.n();
  const int N2 = 2 * n;
  const std::size_t bs = static_cast<std::size_t>(N2) * N2;
  const StateFields s = state_fields(state.g, assemble_G(state.g, state.beta), scheme);
  const TensorField& ups = s.gamma_G;
  const TensorField G_dot = assemble_G_dot(state, rhs.g_dot, rhs.beta_dot);
  const TensorField dG_dot = partial(G_dot, Dir::Holo, scheme);

  // |Upsilon|^2 and its time derivative by the product rule
  TensorField N = scalar_field(grid);
  TensorField N_dot = scalar_field(grid);
  detail::with_dim(n, [&](auto nc) {
    constexpr int nn = decltype(nc)::value;
    constexpr int D = 2 * nn;
    using M = detail::Mat<D>;
#pragma omp parallel for schedule(static)
    for (std::size_t p = 0; p < grid.num_points(); ++p) {
      const M H = detail::CMap<D>(s.Ginv.at(p));
      const M G = detail::CMap<D>(s.G.at(p));
      const M Gd = detail::CMap<D>(G_dot.at(p));
      const M Hd = -H * Gd * H;
      const detail::Mat<nn> gi = detail::CMap<nn>(s.ginv.at(p));
      const detail::Mat<nn> gid = -gi * detail::CMap<nn>(rhs.g_dot.at(p)) * gi;
      M U[nn], Ud[nn];
      for (int i = 0; i < nn; ++i) {
        U[i] = detail::CMap<D>(ups.at(p) + i * bs);
        Ud[i] = (detail::CMap<D>(dG_dot.at(p) + i * bs) - U[i] * Gd) * H;
      }
      cplx v = 0.0, vd = 0.0;
      for (int i = 0; i < nn; ++i)
        for (int j = 0; j < nn; ++j) {
          const M Uj = U[j].adjoint();
          const cplx base = (H * U[i] * G * Uj).trace();
          v += gi(j, i) * base;
          vd += gid(j, i) * base +
                gi(j, i) * ((Hd * U[i] * G * Uj).trace() + (H * Ud[i] * G * Uj).trace() +
                            (H * U[i] * Gd * Uj).trace() + (H * U[i] * G * Ud[j].adjoint()).trace());
        }
      N(p, 0) = v;
      N_dot(p, 0) = vd;
    }
  });
  const TensorField lap = chern_laplacian(N, s.ginv, {}, scheme);

  const TensorField gamma_g = chern_connection_classical(state.g, scheme);
  const ConnectionSet conn{&gamma_g, &s.gamma_G};
  TensorField grad, grad_bar;
  {
    const Differentiator D(ups, scheme);
    grad = D.gradient(Dir::Holo);
    grad_bar = D.gradient(Dir::Antiholo);
  }
  add_connection_terms(grad, ups, Dir::Holo, conn);
  add_connection_terms(grad_bar, ups, Dir::Antiholo, conn);
  if (torsion_term) {
    const TensorField T = chern_torsion(state.g, scheme);
#pragma omp parallel for schedule(static)
    for (std::size_t p = 0; p < grid.num_points(); ++p) {
      const cplx* t = T.at(p);
      const cplx* gi = s.ginv.at(p);
      const cplx* u = ups.at(p);
      cplx* out = grad_bar.at(p);
      for (int q = 0; q < n; ++q)
        for (int m = 0; m < n; ++m) {
          cplx* blk = out + (static_cast<std::size_t>(q) * n + m) * bs;
          for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) {
              // g^{ibar j} conj(T_{i q mbar})
              const cplx w = gi[i * n + j] * std::conj(t[(i * n + q) * n + m]);
              const cplx* uj = u + static_cast<std::size_t>(j) * bs;
              for (std::size_t c = 0; c < bs; ++c) blk[c] += w * uj[c];
            }
        }
    }
  }
  const NormMetrics m = norm_metrics(s, s.G);
  const RealField ng = tensor_norm_sq(grad, m);
  const RealField nb = tensor_norm_sq(grad_bar, m);
  double r = 0.0;
  for (std::size_t p = 0; p < grid.num_points(); ++p) {
    r = std::max(r, std::abs(N_dot(p, 0) - lap(p, 0) + ng.values[p] + nb.values[p]));
  }
  return r;
}

GradientInequality gradient_inequality(const TensorField& g, const TensorField& G,
                                       const TensorField& ups, const BackgroundData& background,
                                       DerivativeScheme scheme) {
  return gradient_check(state_fields(g, G, scheme), ups, background, scheme);
}

void MonitorSeries::append(const MonitorRecord& r) {
  if (!records_.empty() && !(r.t > records_.back().t)) {
    throw InvalidArgumentError("monitor series timestamps must increase strictly");
  }
  records_.push_back(r);
}

double calabi_ratio(double ball_sup, double t, double R) {
  if (!(t > 0.0)) return 0.0;
  return ball_sup / (1.0 / t + std::pow(R, -4.0));
}

CalabiReport calabi_monitor(const MonitorSeries& series, double R) {
  if (!(R > 0.0)) throw InvalidArgumentError("calabi_monitor: R must be positive");
  std::vector<const MonitorRecord*> live;
  for (const MonitorRecord& r : series.records())
    if (r.t > 0.0) live.push_back(&r);
  if (live.size() < 4) {
    throw InvalidArgumentError("calabi_monitor: too few samples with t > 0 (need at least 4)");
  }
  CalabiReport rep;
  const double mid = 0.5 * (live.front()->t + live.back()->t);
  for (const MonitorRecord* r : live) {
    const double rho = calabi_ratio(r->ball_upsilon_sq, r->t, R);
    rep.ratios.push_back(rho);
    rep.K = std::max(rep.K, rho);
    double& half = r->t <= mid ? rep.first_half_max : rep.second_half_max;
    half = std::max(half, rho);
  }
  rep.unbounded = !std::isfinite(rep.K) || rep.second_half_max > 10.0 * rep.first_half_max;
  return rep;
}

void MonitorSettings::validate(const ChartGrid& grid) const {
  if (!(p >= 1.0)) throw ConfigError("monitor.p must be at least 1");
  if (!(A >= 1.0)) throw ConfigError("monitor.A must be at least 1");
  if (k_max < 0 || k_max > 2) throw ConfigError("monitor k_max must lie in 0..2");
  if (!center.empty() && center.size() != static_cast<std::size_t>(grid.real_dim())) {
    throw ConfigError("monitor center needs one coordinate per real axis");
  }
  if (R < 4.0 * grid.min_spacing() || !(R < 0.5 * grid.min_period())) {
    throw ConfigError("monitor.R must lie in [4h, half the minimal period)");
  }
}

MonitorRecord evaluate_monitors(const FlowState& state, const FlowRhs& rhs, const TensorField& G,
                                const BackgroundData& background, const MonitorSettings& settings,
                                const CutoffField& eta) {
  const ChartGrid& grid = state.g.grid();
  require_same_grid(grid, background.G.grid(), "evaluate_monitors");
  const DerivativeScheme sc = settings.scheme;
  const StateFields s = state_fields(state.g, G, sc);
  const TensorField ups = upsilon_from_connection(s.gamma_G, background);
  const std::vector<RealField> norms = derivative_norms(s, ups, settings.k_max, sc);
  const RealField tr = trace_background(G, background.G);

  MonitorRecord r;
  r.t = state.t;
  r.detG_drift = det_G_deviation(G);
  r.sup_upsilon_sq = sup(norms[0]);
  if (settings.k_max >= 1) r.f1 = sup(f_k_from_norms(norms, 1));
  if (settings.k_max >= 2) r.f2 = sup(f_k_from_norms(norms, 2));
  r.tr_G_Gtilde_sup = sup(tr);
  r.phi_sup = sup(phi_test(state.t, eta.eta, settings.p, settings.A, norms[0], tr));
  r.res_lemma34 = trace_residual(s, assemble_G_dot(state, rhs.g_dot, rhs.beta_dot), background,
                                 ups, sc);
  r.ball_upsilon_sq = sup_ball(norms[0], eta.center, 0.5 * eta.R);
  r.calabi_ratio = calabi_ratio(r.ball_upsilon_sq, state.t, eta.R);
  const GradientInequality gi = gradient_check(s, ups, background, sc);
  r.lambda = gi.lambda;
  r.gradient_excess = gi.max_excess;
  r.gradient_holds = gi.holds;
  return r;
}

FlowMonitor estimate_monitor(const BackgroundData& background, const MonitorSettings& settings,
                             MonitorSeries& out) {
  const ChartGrid& grid = background.G.grid();
  settings.validate(grid);
  std::vector<double> center = settings.center;
  if (center.empty()) center.assign(grid.real_dim(), 0.0);
  const CutoffField eta = cutoff(grid, center, settings.R);
  return [&background, settings, eta, &out](const FlowState& s, const SampleContext& ctx) {
    MonitorRecord r = evaluate_monitors(s, ctx.rhs, ctx.G, background, settings, eta);
    r.step = ctx.sample.step;
    r.res_prop32 = ctx.sample.evolution_residual;
    out.append(r);
  };
}

}  // namespace pluriflow
