#include "pluriflow/scenario/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "pluriflow/scenario/snapshot.hpp"

namespace pluriflow {

namespace {

constexpr std::uint64_t kBackgroundStream = 0x9e3779b97f4a7c15ull;

/// Visits every frequency vector with |q_a| <= cutoff in lexicographic order and
/// hands back the flat FFT index of that mode.
template <class F>
void for_each_mode(const ChartGrid& grid, int cutoff, F&& f) {
  const int d = grid.real_dim();
  std::vector<int> q(d, -cutoff);
  while (true) {
    std::size_t idx = 0;
    bool zero = true;
    for (int a = 0; a < d; ++a) {
      const int N = grid.points(a);
      idx += static_cast<std::size_t>((q[a] + N) % N) * grid.stride(a);
      zero = zero && q[a] == 0;
    }
    f(idx, zero);
    int a = d - 1;
    while (a >= 0 && q[a] == cutoff) q[a--] = -cutoff;
    if (a < 0) break;
    ++q[a];
  }
}

cplx draw(std::mt19937_64& rng) {
  std::normal_distribution<double> nd(0.0, 1.0);
  const double re = nd(rng);
  const double im = nd(rng);
  return {re, im};
}

void symmetrize_metric(TensorField& g) {
  const int n = g.grid().n();
  for (std::size_t p = 0; p < g.num_points(); ++p)
    for (int i = 0; i < n; ++i)
      for (int j = i; j < n; ++j) {
        const cplx a = 0.5 * (g(p, i * n + j) + std::conj(g(p, j * n + i)));
        g(p, i * n + j) = a;
        g(p, j * n + i) = std::conj(a);
      }
}

void check_cutoff(const ChartGrid& grid, int cutoff) {
  if (cutoff < 1) throw ConfigError("mode cutoff must be at least 1");
  for (int a = 0; a < grid.real_dim(); ++a) {
    if (4 * cutoff > grid.points(a)) {
      throw ConfigError("mode cutoff " + std::to_string(cutoff) + " exceeds resolution/4");
    }
  }
}

/// Largest e in eps, eps/2, ... (at most kMaxEpsilonRetries halvings) keeping delta + e h positive.
double positive_scale(const TensorField& h, double eps, ScenarioChecks* checks) {
  double e = eps;
  for (int attempt = 0; attempt <= kMaxEpsilonRetries; ++attempt) {
    TensorField g = identity_metric(h.grid()) + cplx(e) * h;
    if (min_eigenvalue(g) > kDegenerateEigenvalue) {
      if (checks) {
        checks->epsilon_used = e;
        checks->retries = attempt;
      }
      return e;
    }
    e *= 0.5;
  }
  std::ostringstream os;
  os << "initial metric not positive definite after " << kMaxEpsilonRetries
     << " epsilon reductions (epsilon " << eps << ")";
  throw ConfigError(os.str());
}

/// max over components of sum |coefficient|, a bound on the sup norm that does not
/// depend on where the grid samples a bandlimited field.
double spectral_bound(TensorField f) {
  fft_forward(f);
  const double scale = 1.0 / static_cast<double>(f.num_points());
  std::vector<double> acc(f.components(), 0.0);
  for (std::size_t p = 0; p < f.num_points(); ++p)
    for (std::size_t c = 0; c < f.components(); ++c) acc[c] += std::abs(f(p, c)) * scale;
  return *std::max_element(acc.begin(), acc.end());
}

/// ddbar phi for a random real trigonometric polynomial phi, scaled to spectral bound 1.
TensorField kahler_shape(const ChartGrid& grid, int cutoff, std::mt19937_64& rng) {
  check_cutoff(grid, cutoff);
  TensorField phi(grid, {});
  for_each_mode(grid, cutoff, [&](std::size_t idx, bool zero) {
    const cplx c = draw(rng);
    if (!zero) phi(idx, 0) = c;
  });
  fft_inverse(phi);
  for (cplx& v : phi.data()) v = v.real();
  TensorField h = Differentiator(phi, DerivativeScheme::spectral()).mixed_hessian();
  h *= 1.0 / spectral_bound(h);
  symmetrize_metric(h);
  return h;
}

struct CompatibleShape {
  TensorField h;
  TensorField beta;
};

CompatibleShape compatible_shape(const ChartGrid& grid, int cutoff, std::mt19937_64& rng) {
  if (grid.n() != 2) throw ConfigError("compatible-fourier scenario requires n = 2");
  check_cutoff(grid, cutoff);
  const std::vector<cplx> s1 = wirtinger_symbol(grid, Dir::Holo, 0);
  const std::vector<cplx> s2 = wirtinger_symbol(grid, Dir::Holo, 1);
  const cplx I(0.0, 1.0);

  // beta_12 = i (d_1 theta_2 - d_2 theta_1) + b0 reproduces every drawn mode; per mode the
  // minimal-norm theta solves the row equation (-i s2, i s1) . theta = b.
  TensorField theta(grid, {lower(IndexKind::Holo)});
  cplx b0 = 0.0;
  for_each_mode(grid, cutoff, [&](std::size_t idx, bool zero) {
    const cplx b = draw(rng);
    if (zero) {
      b0 = b;
      return;
    }
    const cplx a1 = -I * s2[idx];
    const cplx a2 = I * s1[idx];
    const double norm2 = std::norm(a1) + std::norm(a2);
    // a vanishing row cannot carry this mode with zero-mean h; drop it
    if (norm2 < 1e-24) return;
    theta(idx, 0) = std::conj(a1) * b / norm2;
    theta(idx, 1) = std::conj(a2) * b / norm2;
  });
  fft_inverse(theta);

  const Differentiator D(theta, DerivativeScheme::spectral());
  const TensorField d = D.gradient(Dir::Holo);       // d[i][j] = d_i theta_j
  const TensorField db = D.gradient(Dir::Antiholo);  // db[k][j] = d_kbar theta_j
  CompatibleShape out{TensorField(grid, metric_signature()), zero_form(grid)};
  for (std::size_t p = 0; p < grid.num_points(); ++p) {
    for (int j = 0; j < 2; ++j)
      for (int k = 0; k < 2; ++k) out.h(p, j * 2 + k) = db(p, k * 2 + j) + std::conj(db(p, j * 2 + k));
    const cplx b12 = I * (d(p, 1) - d(p, 2));
    out.beta(p, 1) = b12;
    out.beta(p, 2) = -b12;
  }
  const double s = 1.0 / spectral_bound(out.h);
  out.h *= s;
  out.beta *= s;
  const cplx shift = 0.25 * b0;
  for (std::size_t p = 0; p < grid.num_points(); ++p) {
    out.beta(p, 1) += shift;
    out.beta(p, 2) -= shift;
  }
  symmetrize_metric(out.h);
  return out;
}

void gate(bool ok, const std::string& what, double value, double limit) {
  if (!ok) {
    std::ostringstream os;
    os << "scenario gate failed: " << what << " = " << value << " (limit " << limit << ")";
    throw IncompatiblePairError(os.str());
  }
}

std::string format_provenance(const ScenarioSpec& spec, double eps_used) {
  std::ostringstream os;
  os << "kind=" << to_string(spec.kind) << " n=" << spec.n << " N=" << spec.points_per_axis()
     << " epsilon=" << eps_used << " seed=" << spec.seed << " cutoff=" << spec.cutoff
     << " background=" << to_string(spec.background.kind);
  if (spec.kind == ScenarioKind::FromSnapshot) os << " source=" << spec.snapshot;
  return os.str();
}

}  // namespace

std::string to_string(ScenarioKind k) {
  switch (k) {
    case ScenarioKind::Flat: return "flat";
    case ScenarioKind::KahlerPerturbation: return "kahler-perturbation";
    case ScenarioKind::CompatibleFourier: return "compatible-fourier";
    case ScenarioKind::FromSnapshot: return "from-snapshot";
  }
  return "?";
}

std::string to_string(BackgroundKind k) {
  return k == BackgroundKind::Flat ? "flat" : "kahler-perturbation";
}

ScenarioKind parse_scenario_kind(const std::string& s) {
  for (ScenarioKind k : {ScenarioKind::Flat, ScenarioKind::KahlerPerturbation,
                         ScenarioKind::CompatibleFourier, ScenarioKind::FromSnapshot}) {
    if (s == to_string(k)) return k;
  }
  throw ConfigError("unknown scenario kind '" + s + "'");
}

BackgroundKind parse_background_kind(const std::string& s) {
  if (s == "flat") return BackgroundKind::Flat;
  if (s == "kahler-perturbation") return BackgroundKind::KahlerPerturbation;
  throw ConfigError("unknown background kind '" + s + "'");
}

void ScenarioSpec::validate() const {
  if (n != 1 && n != 2) throw ConfigError("scenario.n must be 1 or 2");
  if (resolution && *resolution < 4) throw ConfigError("scenario.resolution must be at least 4");
  if (!(period > 0.0)) throw ConfigError("scenario.period must be positive");
  if (!(epsilon > 0.0) || epsilon > 10.0) throw ConfigError("scenario.epsilon must lie in (0, 10]");
  if (cutoff < 1 || 4 * cutoff > points_per_axis()) {
    throw ConfigError("scenario.cutoff must lie in [1, resolution/4]");
  }
  if (kind == ScenarioKind::CompatibleFourier && n != 2) {
    throw ConfigError("compatible-fourier scenario requires n = 2");
  }
  if (kind == ScenarioKind::FromSnapshot && snapshot.empty()) {
    throw ConfigError("from-snapshot scenario needs scenario.snapshot");
  }
  if (!(background.epsilon > 0.0) || background.epsilon > 10.0) {
    throw ConfigError("background.epsilon must lie in (0, 10]");
  }
  if (background.cutoff < 1 || 4 * background.cutoff > points_per_axis()) {
    throw ConfigError("background.cutoff must lie in [1, resolution/4]");
  }
}

TensorField kahler_perturbation(const ChartGrid& grid, double eps, int cutoff, std::mt19937_64& rng) {
  const TensorField h = kahler_shape(grid, cutoff, rng);
  return identity_metric(grid) + cplx(positive_scale(h, eps, nullptr)) * h;
}

std::pair<TensorField, TensorField> compatible_fourier(const ChartGrid& grid, double eps, int cutoff,
                                                       std::mt19937_64& rng) {
  const CompatibleShape c = compatible_shape(grid, cutoff, rng);
  const double e = positive_scale(c.h, eps, nullptr);
  return {identity_metric(grid) + cplx(e) * c.h, cplx(e) * c.beta};
}

BackgroundData build_background(const ChartGrid& grid, const BackgroundSpec& spec,
                                std::mt19937_64& rng) {
  if (spec.kind == BackgroundKind::Flat) return flat_background(grid);
  return make_background(kahler_perturbation(grid, spec.epsilon, spec.cutoff, rng), zero_form(grid));
}

InitialData build_initial_data(const ScenarioSpec& spec) {
  spec.validate();
  InitialData out;
  ScenarioChecks& ck = out.checks;
  ck.epsilon_used = spec.epsilon;
  std::mt19937_64 rng(spec.seed);

  ChartGrid grid;
  switch (spec.kind) {
    case ScenarioKind::Flat:
      grid = spec.grid();
      out.state = {0.0, identity_metric(grid), zero_form(grid)};
      break;
    case ScenarioKind::KahlerPerturbation: {
      grid = spec.grid();
      const TensorField h = kahler_shape(grid, spec.cutoff, rng);
      const double e = positive_scale(h, spec.epsilon, &ck);
      out.state = {0.0, identity_metric(grid) + cplx(e) * h, zero_form(grid)};
      break;
    }
    case ScenarioKind::CompatibleFourier: {
      grid = spec.grid();
      const CompatibleShape c = compatible_shape(grid, spec.cutoff, rng);
      const double e = positive_scale(c.h, spec.epsilon, &ck);
      out.state = {0.0, identity_metric(grid) + cplx(e) * c.h, cplx(e) * c.beta};
      break;
    }
    case ScenarioKind::FromSnapshot: {
      Snapshot snap = read_snapshot(spec.snapshot);
      out.state = std::move(snap.state);
      grid = out.state.g.grid();
      if (grid.n() != spec.n) throw ConfigError("snapshot dimension differs from scenario.n");
      break;
    }
  }

  validate_metric(out.state.g);
  validate_torsion_potential(out.state.beta);
  const MetricJet jet = metric_jet(out.state.g);
  ck.compat = compatibility_residual(jet, form_jet(out.state.beta));
  ck.pluriclosed = pluriclosed_residual(jet);
  ck.torsion = chern_torsion(jet).sup_norm();
  ck.min_eigenvalue = min_eigenvalue(out.state.g);
  ck.detG = det_G_deviation(assemble_G(out.state.g, out.state.beta));

  gate(ck.detG < 1e-12, "det G - 1", ck.detG, 1e-12);
  switch (spec.kind) {
    case ScenarioKind::Flat:
    case ScenarioKind::KahlerPerturbation:
      gate(ck.compat < 1e-10, "compatibility residual", ck.compat, 1e-10);
      gate(ck.pluriclosed < 1e-10, "pluriclosed residual", ck.pluriclosed, 1e-10);
      gate(ck.torsion < 1e-10, "torsion", ck.torsion, 1e-10);
      break;
    case ScenarioKind::CompatibleFourier:
      gate(ck.compat < 1e-9, "compatibility residual", ck.compat, 1e-9);
      gate(ck.pluriclosed < 1e-9, "pluriclosed residual", ck.pluriclosed, 1e-9);
      break;
    case ScenarioKind::FromSnapshot:
      gate(ck.compat < 1e-6, "compatibility residual", ck.compat, 1e-6);
      break;
  }

  out.background = build_background(grid, BackgroundRequest{spec.background, spec.seed});
  out.provenance = format_provenance(spec, ck.epsilon_used);
  return out;
}

BackgroundData build_background(const ChartGrid& grid, const BackgroundRequest& request) {
  std::mt19937_64 rng(request.seed ^ kBackgroundStream);
  return build_background(grid, request.spec, rng);
}

BackgroundRequest parse_background_request(const std::string& text) {
  BackgroundRequest req;
  std::istringstream is(text);
  std::string item;
  bool first = true;
  while (std::getline(is, item, ',')) {
    if (first) {
      req.spec.kind = parse_background_kind(item);
      first = false;
      continue;
    }
    const std::size_t eq = item.find('=');
    if (eq == std::string::npos) throw ConfigError("background option '" + item + "' needs key=value");
    const std::string key = item.substr(0, eq);
    const std::string val = item.substr(eq + 1);
    try {
      if (key == "epsilon") {
        req.spec.epsilon = std::stod(val);
      } else if (key == "cutoff") {
        req.spec.cutoff = std::stoi(val);
      } else if (key == "seed") {
        req.seed = std::stoull(val);
      } else {
        throw ConfigError("unknown background option '" + key + "'");
      }
    } catch (const std::logic_error&) {
      throw ConfigError("bad value for background option '" + key + "'");
    }
  }
  if (first) throw ConfigError("empty background spec");
  return req;
}

}  // namespace pluriflow
