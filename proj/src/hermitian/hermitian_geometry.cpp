#include "pluriflow/hermitian/hermitian_geometry.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace pluriflow {

using MatX = Eigen::Matrix<cplx, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor, 4, 4>;

namespace pointwise {

double min_eigenvalue_hermitian(const cplx* m, int n) {
  if (n == 1) return m[0].real();
  if (n == 2) {
    const double a = m[0].real(), d = m[3].real();
    const cplx b = 0.5 * (m[1] + std::conj(m[2]));
    const double half = 0.5 * (a - d);
    return 0.5 * (a + d) - std::sqrt(half * half + std::norm(b));
  }
  MatX A = Eigen::Map<const MatX>(m, n, n);
  A = 0.5 * (A + A.adjoint()).eval();
  Eigen::SelfAdjointEigenSolver<MatX> es(A, Eigen::EigenvaluesOnly);
  return es.eigenvalues()(0);
}

void invert(const cplx* m, cplx* out, int n) {
  if (n == 1) {
    out[0] = 1.0 / m[0];
    return;
  }
  if (n == 2) {
    const cplx det = m[0] * m[3] - m[1] * m[2];
    out[0] = m[3] / det;
    out[1] = -m[1] / det;
    out[2] = -m[2] / det;
    out[3] = m[0] / det;
    return;
  }
  const MatX A = Eigen::Map<const MatX>(m, n, n);
  Eigen::Map<MatX>(out, n, n) = A.partialPivLu().inverse();
}

}  // namespace pointwise

namespace {

thread_local TorsionFault g_torsion_fault = TorsionFault::None;

inline std::size_t idx2(int n, int a, int b) { return static_cast<std::size_t>(a * n + b); }
inline std::size_t idx3(int n, int a, int b, int c) {
  return static_cast<std::size_t>((a * n + b) * n + c);
}
inline std::size_t idx4(int n, int a, int b, int c, int d) {
  return static_cast<std::size_t>(((a * n + b) * n + c) * n + d);
}

void require_signature(const TensorField& f, const Signature& sig, const char* what) {
  if (f.signature() != sig) {
    throw InvalidArgumentError(std::string(what) + ": expected signature " + to_string(sig) +
                               ", got " + to_string(f.signature()));
  }
}

}  // namespace

TorsionFault active_torsion_fault() { return g_torsion_fault; }

ScopedTorsionFault::ScopedTorsionFault(TorsionFault fault) : previous_(g_torsion_fault) {
  g_torsion_fault = fault;
}

ScopedTorsionFault::~ScopedTorsionFault() { g_torsion_fault = previous_; }

Signature metric_signature() { return {lower(IndexKind::Holo), lower(IndexKind::Antiholo)}; }
Signature inverse_metric_signature() {
  return {upper(IndexKind::Antiholo), upper(IndexKind::Holo)};
}
Signature form_signature() { return {lower(IndexKind::Holo), lower(IndexKind::Holo)}; }

TensorField identity_metric(const ChartGrid& grid) {
  TensorField g(grid, metric_signature());
  const int n = grid.n();
  for (std::size_t p = 0; p < grid.num_points(); ++p) {
    for (int i = 0; i < n; ++i) g(p, idx2(n, i, i)) = 1.0;
  }
  return g;
}

TensorField zero_form(const ChartGrid& grid) { return TensorField(grid, form_signature()); }

double min_eigenvalue(const TensorField& g) {
  const int n = g.grid().n();
  double m = std::numeric_limits<double>::infinity();
#pragma omp parallel for reduction(min : m) schedule(static)
  for (std::size_t p = 0; p < g.num_points(); ++p) {
    m = std::min(m, pointwise::min_eigenvalue_hermitian(g.at(p), n));
  }
  return m;
}

double max_eigenvalue(const TensorField& g) {
  const int n = g.grid().n();
  double m = 0.0;
#pragma omp parallel for reduction(max : m) schedule(static)
  for (std::size_t p = 0; p < g.num_points(); ++p) {
    cplx neg[4];
    for (int k = 0; k < n * n; ++k) neg[k] = -g.at(p)[k];
    m = std::max(m, -pointwise::min_eigenvalue_hermitian(neg, n));
  }
  return m;
}

void validate_metric(const TensorField& g) {
  require_signature(g, metric_signature(), "metric");
  const int n = g.grid().n();
  double asym = 0.0, scale = 0.0;
  for (std::size_t p = 0; p < g.num_points(); ++p) {
    const cplx* m = g.at(p);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        asym = std::max(asym, std::abs(m[idx2(n, i, j)] - std::conj(m[idx2(n, j, i)])));
        scale = std::max(scale, std::abs(m[idx2(n, i, j)]));
      }
  }
  if (asym > 1e-12 * std::max(1.0, scale)) {
    throw InvalidArgumentError("metric is not Hermitian (defect " + std::to_string(asym) + ")");
  }
  const double lam = min_eigenvalue(g);
  if (lam < kDegenerateEigenvalue) {
    std::ostringstream os;
    os << "degenerate metric: smallest eigenvalue " << lam << " below " << kDegenerateEigenvalue;
    throw DegenerateMetricError(os.str());
  }
}

void validate_torsion_potential(const TensorField& beta) {
  require_signature(beta, form_signature(), "torsion potential");
  const int n = beta.grid().n();
  for (std::size_t p = 0; p < beta.num_points(); ++p) {
    const cplx* b = beta.at(p);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j <= i; ++j) {
        if (std::abs(b[idx2(n, i, j)] + b[idx2(n, j, i)]) > 1e-14 * (1.0 + std::abs(b[idx2(n, i, j)]))) {
          throw InvalidArgumentError("torsion potential is not antisymmetric");
        }
      }
  }
}

TensorField inverse_metric(const TensorField& g) {
  validate_metric(g);
  const int n = g.grid().n();
  TensorField ginv(g.grid(), inverse_metric_signature());
#pragma omp parallel for schedule(static)
  for (std::size_t p = 0; p < g.num_points(); ++p) {
    // (g^{-1})[j][i] = g^{jbar i}: the matrix inverse of g[i][j] read with swapped roles
    pointwise::invert(g.at(p), ginv.at(p), n);
  }
  return ginv;
}

MetricJet metric_jet(const TensorField& g, DerivativeScheme scheme) {
  MetricJet jet;
  jet.g = g;
  jet.ginv = inverse_metric(g);
  Differentiator D(g, scheme);
  jet.dg = D.gradient(Dir::Holo);
  jet.dbg = D.gradient(Dir::Antiholo);
  jet.ddg = D.mixed_hessian();
  return jet;
}

FormJet form_jet(const TensorField& beta, DerivativeScheme scheme) {
  validate_torsion_potential(beta);
  FormJet jet;
  jet.beta = beta;
  Differentiator D(beta, scheme);
  jet.dbeta = D.gradient(Dir::Holo);
  jet.dbbeta = D.gradient(Dir::Antiholo);
  jet.ddbeta = D.mixed_hessian();
  return jet;
}

TensorField chern_connection_classical(const MetricJet& jet) {
  const ChartGrid& grid = jet.g.grid();
  const int n = grid.n();
  TensorField gam(grid, {lower(IndexKind::Holo), lower(IndexKind::Holo), upper(IndexKind::Holo)});
#pragma omp parallel for schedule(static)
  for (std::size_t p = 0; p < grid.num_points(); ++p) {
    const cplx* dg = jet.dg.at(p);
    const cplx* gi = jet.ginv.at(p);
    cplx* out = gam.at(p);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        for (int k = 0; k < n; ++k) {
          cplx acc = 0.0;
          for (int l = 0; l < n; ++l) acc += dg[idx3(n, i, j, l)] * gi[idx2(n, l, k)];
          out[idx3(n, i, j, k)] = acc;
        }
  }
  return gam;
}

TensorField chern_connection_classical(const TensorField& g, DerivativeScheme scheme) {
  return chern_connection_classical(metric_jet(g, scheme));
}

TensorField chern_curvature_classical(const MetricJet& jet) {
  const ChartGrid& grid = jet.g.grid();
  const int n = grid.n();
  TensorField om(grid, {lower(IndexKind::Holo), lower(IndexKind::Antiholo), lower(IndexKind::Holo),
                        lower(IndexKind::Antiholo)});
#pragma omp parallel for schedule(static)
  for (std::size_t p = 0; p < grid.num_points(); ++p) {
    const cplx* dg = jet.dg.at(p);
    const cplx* dbg = jet.dbg.at(p);
    const cplx* ddg = jet.ddg.at(p);
    const cplx* gi = jet.ginv.at(p);
    cplx* out = om.at(p);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        for (int a = 0; a < n; ++a)
          for (int b = 0; b < n; ++b) {
            cplx acc = -ddg[idx4(n, i, j, a, b)];
            for (int c = 0; c < n; ++c)
              for (int d = 0; d < n; ++d) {
                acc += dg[idx3(n, i, a, c)] * gi[idx2(n, c, d)] * dbg[idx3(n, j, d, b)];
              }
            out[idx4(n, i, j, a, b)] = acc;
          }
  }
  return om;
}

TensorField chern_curvature_classical(const TensorField& g, DerivativeScheme scheme) {
  return chern_curvature_classical(metric_jet(g, scheme));
}

TensorField chern_torsion(const MetricJet& jet) {
  const ChartGrid& grid = jet.g.grid();
  const int n = grid.n();
  const double second = active_torsion_fault() == TorsionFault::SecondTermSign ? 1.0 : -1.0;
  TensorField T(grid, {lower(IndexKind::Holo), lower(IndexKind::Holo), lower(IndexKind::Antiholo)});
#pragma omp parallel for schedule(static)
  for (std::size_t p = 0; p < grid.num_points(); ++p) {
    const cplx* dg = jet.dg.at(p);
    cplx* out = T.at(p);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        for (int k = 0; k < n; ++k) {
          out[idx3(n, i, j, k)] = dg[idx3(n, i, j, k)] + second * dg[idx3(n, j, i, k)];
        }
  }
  return T;
}

TensorField chern_torsion(const TensorField& g, DerivativeScheme scheme) {
  return chern_torsion(metric_jet(g, scheme));
}

TensorField torsion_square_from_inverse(const TensorField& T, const TensorField& ginv) {
  require_same_grid(T.grid(), ginv.grid(), "torsion_square");
  const ChartGrid& grid = T.grid();
  const int n = grid.n();
  TensorField t2(grid, metric_signature());
#pragma omp parallel for schedule(static)
  for (std::size_t p = 0; p < grid.num_points(); ++p) {
    const cplx* t = T.at(p);
    const cplx* gi = ginv.at(p);
    cplx* out = t2.at(p);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        cplx acc = 0.0;
        for (int l = 0; l < n; ++l)
          for (int nn = 0; nn < n; ++nn)
            for (int k = 0; k < n; ++k)
              for (int m = 0; m < n; ++m) {
                acc += t[idx3(n, i, l, nn)] * std::conj(t[idx3(n, j, k, m)]) * gi[idx2(n, k, l)] *
                       gi[idx2(n, nn, m)];
              }
        out[idx2(n, i, j)] = acc;
      }
  }
  return t2;
}

TensorField torsion_square(const TensorField& T, const TensorField& g) {
  return torsion_square_from_inverse(T, inverse_metric(g));
}

TensorField trace_curvature(const TensorField& omega, const TensorField& ginv) {
  require_same_grid(omega.grid(), ginv.grid(), "trace_curvature");
  const ChartGrid& grid = omega.grid();
  const int n = grid.n();
  // trailing block: everything after the (Holo, Antiholo) pair
  Signature sig(omega.signature().begin() + 2, omega.signature().end());
  TensorField s(grid, sig);
  const std::size_t nc = s.components();
#pragma omp parallel for schedule(static)
  for (std::size_t p = 0; p < grid.num_points(); ++p) {
    const cplx* om = omega.at(p);
    const cplx* gi = ginv.at(p);
    cplx* out = s.at(p);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        const cplx w = gi[idx2(n, j, i)];
        const cplx* blk = om + idx2(n, i, j) * nc;
        for (std::size_t c = 0; c < nc; ++c) out[c] += w * blk[c];
      }
  }
  return s;
}

TensorField s_classical(const MetricJet& jet) {
  return trace_curvature(chern_curvature_classical(jet), jet.ginv);
}

TensorField s_classical(const TensorField& g, DerivativeScheme scheme) {
  return s_classical(metric_jet(g, scheme));
}

double pluriclosed_residual(const MetricJet& jet) {
  const int n = jet.g.grid().n();
  double r = 0.0;
#pragma omp parallel for reduction(max : r) schedule(static)
  for (std::size_t p = 0; p < jet.g.num_points(); ++p) {
    const cplx* dd = jet.ddg.at(p);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        for (int k = 0; k < n; ++k)
          for (int l = 0; l < n; ++l) {
            // d_lbar T_{ij kbar} - d_kbar T_{ij lbar}
            const cplx v = dd[idx4(n, i, l, j, k)] - dd[idx4(n, j, l, i, k)] -
                           dd[idx4(n, i, k, j, l)] + dd[idx4(n, j, k, i, l)];
            r = std::max(r, std::abs(v));
          }
  }
  return r;
}

double pluriclosed_residual(const TensorField& g, DerivativeScheme scheme) {
  return pluriclosed_residual(metric_jet(g, scheme));
}

double compatibility_residual(const MetricJet& jet, const FormJet& bjet) {
  require_same_grid(jet.g.grid(), bjet.beta.grid(), "compatibility_residual");
  const TensorField T = chern_torsion(jet);
  const int n = jet.g.grid().n();
  double r = 0.0;
#pragma omp parallel for reduction(max : r) schedule(static)
  for (std::size_t p = 0; p < T.num_points(); ++p) {
    const cplx* t = T.at(p);
    const cplx* db = bjet.dbbeta.at(p);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        for (int k = 0; k < n; ++k) {
          const cplx v = cplx(0.0, 1.0) * t[idx3(n, i, j, k)] - db[idx3(n, k, i, j)];
          r = std::max(r, std::abs(v));
        }
  }
  return r;
}

double compatibility_residual(const TensorField& g, const TensorField& beta,
                              DerivativeScheme scheme) {
  return compatibility_residual(metric_jet(g, scheme), form_jet(beta, scheme));
}

TensorField form_hessian(const FormJet& bjet, const TensorField& gamma) {
  const ChartGrid& grid = bjet.beta.grid();
  const int n = grid.n();
  TensorField H(grid, {lower(IndexKind::Holo), lower(IndexKind::Antiholo), lower(IndexKind::Holo),
                       lower(IndexKind::Holo)});
#pragma omp parallel for schedule(static)
  for (std::size_t p = 0; p < grid.num_points(); ++p) {
    const cplx* dd = bjet.ddbeta.at(p);
    const cplx* db = bjet.dbbeta.at(p);
    const cplx* gm = gamma.at(p);
    cplx* out = H.at(p);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        for (int a = 0; a < n; ++a)
          for (int q = 0; q < n; ++q) {
            cplx acc = dd[idx4(n, i, j, a, q)];
            for (int l = 0; l < n; ++l) {
              acc -= gm[idx3(n, i, a, l)] * db[idx3(n, j, l, q)];
              acc -= gm[idx3(n, i, q, l)] * db[idx3(n, j, a, l)];
            }
            out[idx4(n, i, j, a, q)] = acc;
          }
  }
  return H;
}

TensorField form_laplacian(const TensorField& hessian, const TensorField& ginv) {
  return trace_curvature(hessian, ginv);
}

ClassicalGeometry classical_geometry(const TensorField& g, const TensorField& beta,
                                     DerivativeScheme scheme) {
  require_same_grid(g.grid(), beta.grid(), "classical_geometry");
  ClassicalGeometry geo;
  geo.metric = metric_jet(g, scheme);
  geo.form = form_jet(beta, scheme);
  geo.gamma = chern_connection_classical(geo.metric);
  geo.omega = chern_curvature_classical(geo.metric);
  geo.torsion = chern_torsion(geo.metric);
  geo.t2 = torsion_square_from_inverse(geo.torsion, geo.metric.ginv);
  geo.s = trace_curvature(geo.omega, geo.metric.ginv);
  geo.beta_hessian = form_hessian(geo.form, geo.gamma);
  geo.beta_laplacian = form_laplacian(geo.beta_hessian, geo.metric.ginv);
  return geo;
}

}  // namespace pluriflow
