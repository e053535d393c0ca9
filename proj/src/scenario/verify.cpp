#include "pluriflow/scenario/verify.hpp"

#include <Eigen/Dense>
#include <chrono>
#include <cstring>
#include <cmath>
#include <functional>
#include <iomanip>
#include <limits>
#include <optional>
#include <sstream>

#include "pluriflow/scenario/snapshot.hpp"

namespace pluriflow {

namespace {

using Mat = Eigen::Matrix<cplx, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

constexpr const char* kNoBeta = "β ≡ 0 in n=1";

Mat load(const TensorField& f, std::size_t p, std::size_t offset, int m) {
  Mat out(m, m);
  const cplx* src = f.at(p) + offset;
  for (int a = 0; a < m; ++a)
    for (int b = 0; b < m; ++b) out(a, b) = src[a * m + b];
  return out;
}

Mat shift(const cplx* form, int n, double sign) {
  Mat U = Mat::Identity(2 * n, 2 * n);
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b) U(a, n + b) = sign * form[a * n + b];
  return U;
}

struct Outcome {
  double measured = 0.0;
  bool ok = false;
  std::string detail;
};

std::string fmt(double v) {
  std::ostringstream os;
  os << std::setprecision(3) << std::scientific << v;
  return os.str();
}

/// Every grid sample equals the first one.
bool constant_field(const TensorField& f) {
  for (std::size_t p = 1; p < f.num_points(); ++p)
    for (std::size_t c = 0; c < f.components(); ++c)
      if (f(p, c) != f(0, c)) return false;
  return true;
}

double sup_abs_diff(const RealField& a, const RealField& b) {
  double r = 0.0;
  for (std::size_t p = 0; p < a.values.size(); ++p) r = std::max(r, std::abs(a.values[p] - b.values[p]));
  return r;
}

}  // namespace

TensorField random_form_field(const ChartGrid& grid, int cutoff, std::mt19937_64& rng) {
  const int n = grid.n();
  TensorField coef(grid, {});
  std::normal_distribution<double> nd(0.0, 1.0);
  const int d = grid.real_dim();
  std::vector<int> q(d, -cutoff);
  double bound = 0.0;
  while (true) {
    std::size_t idx = 0;
    for (int a = 0; a < d; ++a) {
      const int N = grid.points(a);
      idx += static_cast<std::size_t>((q[a] + N) % N) * grid.stride(a);
    }
    const double re = nd(rng);
    const double im = nd(rng);
    coef(idx, 0) = cplx(re, im);
    bound += std::abs(coef(idx, 0));
    int a = d - 1;
    while (a >= 0 && q[a] == cutoff) q[a--] = -cutoff;
    if (a < 0) break;
    ++q[a];
  }
  fft_inverse(coef);
  coef *= static_cast<double>(grid.num_points()) / bound;
  TensorField out = zero_form(grid);
  if (n == 2) {
    for (std::size_t p = 0; p < grid.num_points(); ++p) {
      out(p, 1) = coef(p, 0);
      out(p, 2) = -coef(p, 0);
    }
  }
  return out;
}

double bfield_christoffel_residual(const TensorField& G, const TensorField& gamma,
                                   DerivativeScheme scheme) {
  const ChartGrid& grid = G.grid();
  require_same_grid(grid, gamma.grid(), "bfield_christoffel_residual");
  const int n = grid.n();
  const int m = 2 * n;
  const std::size_t mm = static_cast<std::size_t>(m * m);

  TensorField Gt(grid, gen_metric_signature());
  for (std::size_t p = 0; p < grid.num_points(); ++p) {
    const Mat U = shift(gamma.at(p), n, 1.0);
    const Mat X = U * load(G, p, 0, m) * U.adjoint();
    for (int a = 0; a < m; ++a)
      for (int b = 0; b < m; ++b) Gt(p, a * m + b) = X(a, b);
  }
  const TensorField lhs = chern_connection_G(Gt, scheme);
  const TensorField Ginv = inverse_G(G);
  const TensorField gam = chern_connection_G(G, Ginv, scheme);
  const Differentiator D(gamma, scheme);
  const TensorField dgam = D.gradient(Dir::Holo);       // d_i gamma_ab
  const TensorField dbgam = D.gradient(Dir::Antiholo);  // d_ibar gamma_ab

  double worst = 0.0;
  for (std::size_t p = 0; p < grid.num_points(); ++p) {
    const Mat U = shift(gamma.at(p), n, 1.0);
    const Mat Uinv = shift(gamma.at(p), n, -1.0);
    const Mat Gp = load(G, p, 0, m);
    const Mat H = load(Ginv, p, 0, m);
    for (int i = 0; i < n; ++i) {
      Mat dU = Mat::Zero(m, m);
      Mat dUh = Mat::Zero(m, m);
      for (int a = 0; a < n; ++a)
        for (int b = 0; b < n; ++b) {
          dU(a, n + b) = dgam(p, (i * n + a) * n + b);
          dUh(n + b, a) = std::conj(dbgam(p, (i * n + a) * n + b));
        }
      const Mat rhs = dU * Uinv + U * load(gam, p, i * mm, m) * Uinv +
                      U * Gp * dUh * Uinv.adjoint() * H * Uinv;
      const Mat l = load(lhs, p, i * mm, m);
      worst = std::max(worst, (l - rhs).cwiseAbs().maxCoeff());
    }
  }
  return worst;
}

KahlerReduction kahler_reduction(const TensorField& g0, double t_end, double dt) {
  const ChartGrid& grid = g0.grid();
  const int n = grid.n();
  KahlerReduction out;

  FlowConfig cfg;
  cfg.integrator = Integrator::Euler;
  cfg.dt = dt;
  cfg.t_end = t_end;
  cfg.sample_interval = 10;
  const FlowMonitor mon = [&](const FlowState& s, const SampleContext& ctx) {
    out.beta_sup = std::max(out.beta_sup, s.beta.sup_norm());
    out.torsion_sup = std::max(out.torsion_sup, ctx.geometry.torsion.sup_norm());
    out.evolution_residual = std::max(out.evolution_residual, ctx.sample.evolution_residual);
  };
  const FlowRun run = run_flow(FlowState{0.0, g0, zero_form(grid)}, cfg, {mon});

  // potential route: g = g0 + ddbar phi, d_t phi = log det g
  const long steps = std::max<long>(1, std::lround(std::ceil(t_end / dt - 1e-9)));
  const double h = t_end / static_cast<double>(steps);
  TensorField phi(grid, {});
  auto metric_of = [&](const TensorField& f) {
    return g0 + Differentiator(f, DerivativeScheme::spectral()).mixed_hessian();
  };
  for (long k = 0; k < steps; ++k) {
    const TensorField g = metric_of(phi);
    for (std::size_t p = 0; p < grid.num_points(); ++p) {
      const cplx* m = g.at(p);
      const double det = n == 1 ? m[0].real() : (m[0] * m[3] - m[1] * m[2]).real();
      phi(p, 0) += h * std::log(det);
    }
  }
  out.g_gap = sup_diff(run.final_state.g, metric_of(phi));
  return out;
}

bool VerifyReport::all_passed() const {
  for (const VerifyCheck& c : checks)
    if (c.status == CheckStatus::Fail) return false;
  return true;
}

const VerifyCheck* VerifyReport::find(const std::string& name) const {
  for (const VerifyCheck& c : checks)
    if (c.name == name) return &c;
  return nullptr;
}

std::string VerifyReport::to_text() const {
  std::ostringstream os;
  os << "pluriflow verify  seed=" << seed << " n=" << n << " mode=" << (quick ? "quick" : "full")
     << "\n";
  int pass = 0, fail = 0, skip = 0;
  for (const VerifyCheck& c : checks) {
    const char* tag = c.status == CheckStatus::Pass ? "PASS" : c.status == CheckStatus::Fail ? "FAIL" : "SKIP";
    os << tag << "  " << std::left << std::setw(30) << c.name;
    if (c.status == CheckStatus::Skip) {
      os << "  (" << c.detail << ")\n";
      ++skip;
      continue;
    }
    os << "  " << fmt(c.measured) << ' ' << c.relation << ' ' << fmt(c.threshold) << "  ["
       << std::fixed << std::setprecision(1) << c.seconds << " s]";
    os.unsetf(std::ios::fixed);
    if (!c.detail.empty()) os << "  " << c.detail;
    os << "\n";
    (c.status == CheckStatus::Pass ? pass : fail)++;
  }
  os << "summary: " << pass << " passed, " << fail << " failed, " << skip << " skipped\n";
  return os.str();
}

VerifyReport verify_suite(const VerifyOptions& options) {
  if (options.n != 1 && options.n != 2) throw InvalidArgumentError("verify: n must be 1 or 2");
  ScopedTorsionFault fault(options.torsion_fault);
  VerifyReport rep;
  rep.seed = options.seed;
  rep.n = options.n;
  rep.quick = options.quick;
  const bool n1 = options.n == 1;

  ScenarioSpec base;
  base.n = options.n;
  base.seed = options.seed;
  const ChartGrid grid = base.grid();

  std::optional<InitialData> kahler, compatible;
  auto kahler_data = [&]() -> const InitialData& {
    if (!kahler) {
      ScenarioSpec s = base;
      s.kind = ScenarioKind::KahlerPerturbation;
      kahler = build_initial_data(s);
    }
    return *kahler;
  };
  auto compatible_data = [&]() -> const InitialData& {
    if (!compatible) {
      ScenarioSpec s = base;
      s.kind = ScenarioKind::CompatibleFourier;
      compatible = build_initial_data(s);
    }
    return *compatible;
  };
  auto pairs = [&]() {
    std::vector<FlowState> out;
    const int count = options.quick ? 2 : 5;
    for (int k = 0; k < count; ++k) {
      std::mt19937_64 rng(options.seed + 1000 + k);
      auto [g, beta] = compatible_fourier(grid, 0.05, 1, rng);
      out.push_back({0.0, g, beta});
    }
    return out;
  };
  auto states = [&]() {
    std::vector<const FlowState*> out{&kahler_data().state};
    if (!n1) out.push_back(&compatible_data().state);
    return out;
  };
  const BackgroundData flat_bg = flat_background(grid);
  std::optional<BackgroundData> curved_bg;
  auto curved = [&]() -> const BackgroundData& {
    if (!curved_bg) curved_bg = build_background(grid, BackgroundRequest{{BackgroundKind::KahlerPerturbation, 0.05, 1}, options.seed});
    return *curved_bg;
  };

  auto run = [&](const std::string& name, const std::string& rel, double threshold,
                 const std::function<Outcome()>& body, const char* skip = nullptr) {
    VerifyCheck c;
    c.name = name;
    c.relation = rel;
    c.threshold = threshold;
    if (skip) {
      c.status = CheckStatus::Skip;
      c.detail = skip;
      rep.checks.push_back(c);
      return;
    }
    const auto t0 = std::chrono::steady_clock::now();
    try {
      const Outcome o = body();
      c.measured = o.measured;
      c.detail = o.detail;
      c.status = o.ok ? CheckStatus::Pass : CheckStatus::Fail;
    } catch (const std::exception& e) {
      c.status = CheckStatus::Fail;
      c.measured = std::numeric_limits<double>::quiet_NaN();
      c.detail = std::string("error: ") + e.what();
    }
    c.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    rep.checks.push_back(c);
  };
  auto below = [](double v, double t) { return v < t; };

  run("scenario_gates", "<", 1e-9, [&] {
    ScenarioSpec s = base;
    s.kind = ScenarioKind::Flat;
    const InitialData flat = build_initial_data(s);
    double worst = std::max({flat.checks.compat, kahler_data().checks.compat,
                             kahler_data().checks.pluriclosed});
    std::string detail = "kahler torsion " + fmt(kahler_data().checks.torsion);
    bool ok = kahler_data().checks.torsion < 1e-10;
    if (!n1) {
      const ScenarioChecks& c = compatible_data().checks;
      worst = std::max({worst, c.compat, c.pluriclosed});
      detail += ", compatible min eigenvalue " + fmt(c.min_eigenvalue);
      ok = ok && c.min_eigenvalue > 0.5;
    }
    return Outcome{worst, ok && below(worst, 1e-9), detail};
  });

  run("unit_determinant", "<", 1e-12, [&] {
    double worst = 0.0;
    for (const FlowState* s : states()) worst = std::max(worst, det_G_deviation(assemble_G(s->g, s->beta)));
    if (!n1)
      for (const FlowState& s : pairs()) worst = std::max(worst, det_G_deviation(assemble_G(s.g, s.beta)));
    return Outcome{worst, below(worst, 1e-12), ""};
  });

  run("two_route_curvature", "<", 1e-8, [&] {
    double worst = 0.0;
    for (const FlowState& s : pairs()) {
      const CurvatureGap gap =
          curvature_two_route_gap(s.g, s.beta, {}, std::numeric_limits<double>::infinity());
      worst = std::max(worst, gap.relative());
    }
    return Outcome{worst, below(worst, 1e-8), ""};
  }, n1 ? kNoBeta : nullptr);

  run("two_route_central4_order", ">=", 3.7, [&] {
    std::vector<int> Ns{16, 24, 32};
    std::vector<double> gaps;
    for (int N : Ns) {
      const ChartGrid gN(2, N);
      std::mt19937_64 rng(options.seed + 1000);
      auto [g, beta] = compatible_fourier(gN, 0.05, 1, rng);
      gaps.push_back(curvature_two_route_gap(g, beta, DerivativeScheme::central4(),
                                             std::numeric_limits<double>::infinity())
                         .abs_gap);
    }
    double order = std::numeric_limits<double>::infinity();
    std::string detail = "gaps";
    for (double v : gaps) detail += " " + fmt(v);
    for (std::size_t k = 0; k + 1 < Ns.size(); ++k) {
      order = std::min(order, std::log(gaps[k] / gaps[k + 1]) /
                                  std::log(static_cast<double>(Ns[k + 1]) / Ns[k]));
    }
    return Outcome{order, order >= 3.7, detail};
  }, n1 ? kNoBeta : options.quick ? "quick mode" : nullptr);

  run("trace_identity", "<", 1e-8, [&] {
    double worst = 0.0;
    for (const FlowState& s : pairs()) {
      const ClassicalGeometry geo = classical_geometry(s.g, s.beta);
      const TensorField direct = s_tensor(chern_curvature_G_direct(assemble_G(s.g, s.beta)), s.g);
      worst = std::max(worst, sup_diff(s_tensor_blocks(geo), direct) / direct.sup_norm());
    }
    return Outcome{worst, below(worst, 1e-8), ""};
  }, n1 ? kNoBeta : nullptr);

  run("evolution_identity", "<", 1e-7, [&] {
    double worst = 0.0;
    for (const FlowState* s : states()) worst = std::max(worst, evolution_identity_residual(*s));
    return Outcome{worst, below(worst, 1e-7), ""};
  });

  run("bfield_equivariance", "<", 1e-9, [&] {
    const FlowState& s = compatible_data().state;
    const TensorField G = assemble_G(s.g, s.beta);
    std::mt19937_64 rng(options.seed + 2000);
    std::normal_distribution<double> nd(0.0, 0.3);
    double worst = 0.0;
    for (int k = 0; k < 3; ++k) {
      FormMatrix gam(2, 2);
      const double re = nd(rng);
      const double im = nd(rng);
      const cplx c(re, im);
      gam << 0.0, c, -c, 0.0;
      const BFieldResult r = bfield_transform(G, gam);
      const TensorField om = chern_curvature_G_direct(r.G);
      worst = std::max({worst, sup_diff(r.omega, om), sup_diff(r.s, s_tensor(om, s.g))});
    }
    return Outcome{worst, below(worst, 1e-9), "3 constant shifts"};
  }, n1 ? kNoBeta : nullptr);

  run("beta_shift_invariance", "<", 1e-12, [&] {
    const FlowState& s = compatible_data().state;
    TensorField shifted = s.beta;
    for (std::size_t p = 0; p < grid.num_points(); ++p) {
      shifted(p, 1) += cplx(0.3, -0.2);
      shifted(p, 2) -= cplx(0.3, -0.2);
    }
    const double gap = sup_diff(curvature_gauge_blocks(s.g, s.beta), curvature_gauge_blocks(s.g, shifted));
    return Outcome{gap, below(gap, 1e-12), ""};
  }, n1 ? kNoBeta : nullptr);

  run("bfield_christoffel_law", "<", 1e-9, [&] {
    const FlowState& s = compatible_data().state;
    std::mt19937_64 rng(options.seed + 3000);
    TensorField gam = random_form_field(grid, 1, rng);
    gam *= 0.2;
    const double r = bfield_christoffel_residual(assemble_G(s.g, s.beta), gam);
    return Outcome{r, below(r, 1e-9) && !constant_field(gam), "non-constant gamma"};
  }, n1 ? kNoBeta : nullptr);

  run("heat_trace_identity", "<", 1e-6, [&] {
    double worst = 0.0;
    for (const FlowState* s : states()) {
      const FlowRhs rhs = flow_rhs(*s);
      worst = std::max({worst, heat_residual_trace(*s, rhs, flat_bg), heat_residual_trace(*s, rhs, curved())});
    }
    return Outcome{worst, below(worst, 1e-6), "flat and curved backgrounds"};
  });

  run("perfect_square_kahler", "<", 1e-6, [&] {
    const FlowState& s = kahler_data().state;
    const double r = heat_residual_upsilon_flat(s, flow_rhs(s), flat_bg);
    return Outcome{r, below(r, 1e-6), ""};
  });

  run("perfect_square_nonkahler", "<", 1e-5, [&] {
    const FlowState& s = compatible_data().state;
    const FlowRhs rhs = flow_rhs(s);
    const double r = heat_residual_upsilon_flat(s, rhs, flat_bg);
    const double without = heat_residual_upsilon_flat(s, rhs, flat_bg, {}, false);
    return Outcome{r, below(r, 1e-5) && without > 1e3 * r, "without torsion term " + fmt(without)};
  }, n1 ? kNoBeta : nullptr);

  run("block_norm_identity", "<", 1e-9, [&] {
    double worst = 0.0;
    std::vector<TensorField> metrics{kahler_data().state.g};
    if (!n1) metrics.push_back(compatible_data().state.g);
    for (const TensorField& g : metrics) {
      const TensorField G = assemble_G(g, zero_form(grid));
      const RealField lhs = upsilon_norm(upsilon(G, flat_bg), g, G, G);
      const TensorField ginv = inverse_metric(g);
      RealField rhs = tensor_norm_sq(chern_connection_classical(g), {&g, &ginv, nullptr, nullptr});
      for (double& v : rhs.values) v *= 2.0;
      worst = std::max(worst, sup_abs_diff(lhs, rhs));
    }
    return Outcome{worst, below(worst, 1e-9), ""};
  });

  run("gradient_inequality", "<=", 1.0, [&] {
    double ratio = 0.0;
    bool holds = true;
    for (const FlowState* s : states()) {
      const TensorField G = assemble_G(s->g, s->beta);
      for (const BackgroundData* bg : {&flat_bg, &curved()}) {
        const GradientInequality gi = gradient_inequality(s->g, G, upsilon(G, *bg), *bg);
        ratio = std::max(ratio, gi.max_ratio);
        holds = holds && gi.holds;
      }
    }
    return Outcome{ratio, holds && ratio <= 1.0, "max of |grad tr|^2 / (C |Upsilon|^2)"};
  });

  run("f0_identity", "==", 0.0, [&] {
    const FlowState& s = n1 ? kahler_data().state : compatible_data().state;
    const TensorField G = assemble_G(s.g, s.beta);
    const RealField f0 = f_k(G, curved(), 0);
    const RealField u = upsilon_norm(upsilon(G, curved()), classical_metric_from_G(G), G, G);
    const double d = sup_abs_diff(f0, u);
    return Outcome{d, d == 0.0, ""};
  });

  run("kahler_reduction", "<", 1e-6, [&] {
    const double t_end = options.quick ? 0.01 : 0.1;
    const FlowState& s = kahler_data().state;
    const KahlerReduction k = kahler_reduction(s.g, t_end, step_size(s, FlowConfig{}));
    std::ostringstream d;
    d << "t_end " << t_end << ", beta " << fmt(k.beta_sup) << ", torsion " << fmt(k.torsion_sup);
    return Outcome{k.g_gap,
                   below(k.g_gap, 1e-6) && k.beta_sup < 1e-12 && k.torsion_sup < 1e-9 &&
                       k.evolution_residual < 1e-7,
                   d.str()};
  });

  run("integrator_orders", "~", 1.0, [&] {
    const FlowState& s0 = kahler_data().state;
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
    const double pe = order(Integrator::Euler, 1e-3);
    const double pr = order(Integrator::RK4, 2e-3);
    std::ostringstream d;
    d << "euler " << std::setprecision(4) << pe << ", rk4 " << pr;
    return Outcome{pe, std::abs(pe - 1.0) < 0.1 && pr >= 3.0, d.str()};
  }, options.quick ? "quick mode" : nullptr);

  run("flat_fixed_point", "<", 1e-14, [&] {
    const FlowState flat{0.0, identity_metric(grid), zero_form(grid)};
    double worst = 0.0;
    for (Integrator integ : {Integrator::Euler, Integrator::RK4}) {
      FlowConfig cfg;
      cfg.integrator = integ;
      const FlowState next = step(flat, cfg);
      worst = std::max({worst, sup_diff(next.g, flat.g), sup_diff(next.beta, flat.beta)});
    }
    return Outcome{worst, below(worst, 1e-14), ""};
  });

  run("snapshot_round_trip", "==", 0.0, [&] {
    const FlowState& s = n1 ? kahler_data().state : compatible_data().state;
    const FlowState in{0.0123, s.g, s.beta};
    const Snapshot back = decode_snapshot(encode_snapshot(in, "verify"));
    double mismatches = back.state.t != in.t;
    for (const auto* pr : {&in.g, &in.beta}) {
      const TensorField& b = pr == &in.g ? back.state.g : back.state.beta;
      if (b.grid() != pr->grid()) return Outcome{1.0, false, "grid mismatch"};
      for (std::size_t i = 0; i < pr->data().size(); ++i) {
        mismatches += std::memcmp(&pr->data()[i], &b.data()[i], sizeof(cplx)) != 0;
      }
    }
    return Outcome{mismatches, mismatches == 0.0, "differing values"};
  });

  run("torsion_mutation_detected", ">", 1e-3, [&] {
    std::mt19937_64 rng(options.seed + 1000);
    auto [g, beta] = compatible_fourier(grid, 0.05, 1, rng);
    ScopedTorsionFault mutate(TorsionFault::SecondTermSign);
    const double gap =
        curvature_two_route_gap(g, beta, {}, std::numeric_limits<double>::infinity()).relative();
    return Outcome{gap, gap > 1e-3, "two-route gap under a flipped torsion sign"};
  }, n1 ? kNoBeta : nullptr);

  return rep;
}

}  // namespace pluriflow
