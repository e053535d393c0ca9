#include "pluriflow/generalized/generalized_geometry.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "pluriflow/detail/small_matrix.hpp"

namespace pluriflow {

namespace {

using GM = Eigen::Matrix<cplx, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor, 4, 4>;

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

GM shift_matrix(const FormMatrix& gamma) {
  const int n = static_cast<int>(gamma.rows());
  GM U = GM::Identity(2 * n, 2 * n);
  U.block(0, n, n, n) = gamma;
  return U;
}

/// out <- U X U^H on every trailing (2n)^2 block.
template <int D>
void conjugate_blocks(const detail::Mat<D>& U, cplx* data, std::size_t blocks) {
  for (std::size_t b = 0; b < blocks; ++b) {
    detail::MMap<D> X(data + b * D * D);
    const detail::Mat<D> Y = U * X * U.adjoint();
    X = Y;
  }
}

template <int n>
void assemble_point(const cplx* g, const cplx* beta, cplx* out) {
  const detail::Mat<n> M = detail::CMap<n>(g);
  detail::Mat<2 * n> D = detail::Mat<2 * n>::Zero();
  D.template block<n, n>(0, 0) = M;
  D.template block<n, n>(n, n) = M.inverse().transpose();
  const detail::Mat<2 * n> U = detail::shift<n>(beta);
  detail::MMap<2 * n> dst(out);
  dst = U * D * U.adjoint();
}

/// Gauge-frame curvature block for the (i, jbar) pair at one point.
void gauge_block(int n, const cplx* gi, const cplx* om, const cplx* T, const cplx* H, int i, int j,
                 cplx* out) {
  const int N2 = 2 * n;
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b) {
      cplx zz = om[idx4(n, i, j, a, b)];
      for (int k = 0; k < n; ++k)
        for (int l = 0; l < n; ++l)
          zz -= T[idx3(n, a, k, j)] * std::conj(T[idx3(n, b, l, i)]) * gi[idx2(n, l, k)];
      out[a * N2 + b] = zz;

      cplx ww = 0.0;
      for (int m = 0; m < n; ++m)
        for (int nn = 0; nn < n; ++nn) {
          cplx inner = om[idx4(n, i, j, m, nn)];
          for (int k = 0; k < n; ++k)
            for (int l = 0; l < n; ++l)
              inner -= gi[idx2(n, k, l)] * T[idx3(n, l, m, j)] * std::conj(T[idx3(n, k, nn, i)]);
          ww -= gi[idx2(n, b, m)] * gi[idx2(n, nn, a)] * inner;
        }
      out[(n + a) * N2 + n + b] = ww;

      cplx zw = 0.0, wz = 0.0;
      for (int p = 0; p < n; ++p) {
        zw -= gi[idx2(n, b, p)] * H[idx4(n, i, j, a, p)];
        wz -= gi[idx2(n, a, p)] * H[idx4(n, j, i, b, p)];
      }
      out[a * N2 + n + b] = zw;
      out[(n + a) * N2 + b] = std::conj(wz);
    }
}

/// Direct-route curvature block for one (i, jbar) pair at one point.
template <int D>
void direct_block(const cplx* dGi, const cplx* Gi, const cplx* dbGj, const cplx* ddG, cplx* out) {
  detail::MMap<D> dst(out);
  dst = -detail::CMap<D>(ddG) +
                         detail::CMap<D>(dGi) * detail::CMap<D>(Gi) * detail::CMap<D>(dbGj);
}

Signature single_block_signature() { return gen_metric_signature(); }

/// Everything the block route needs, kept separate from the metric/form jets.
struct BlockInputs {
  TensorField ginv, omega, torsion, hessian, beta;
};

BlockInputs block_inputs(const TensorField& g, const TensorField& beta, DerivativeScheme scheme,
                         double compat_tol) {
  require_same_grid(g.grid(), beta.grid(), "curvature blocks");
  MetricJet mj = metric_jet(g, scheme);
  FormJet fj = form_jet(beta, scheme);
  const double compat = compatibility_residual(mj, fj);
  if (compat > compat_tol) {
    std::ostringstream os;
    os << "pair (g, beta) is not compatible: residual " << compat << " exceeds " << compat_tol;
    throw IncompatiblePairError(os.str());
  }
  BlockInputs in;
  in.omega = chern_curvature_classical(mj);
  in.torsion = chern_torsion(mj);
  const TensorField gamma = chern_connection_classical(mj);
  in.ginv = std::move(mj.ginv);
  mj = MetricJet{};
  in.hessian = form_hessian(fj, gamma);
  in.beta = beta;
  return in;
}

}  // namespace

Signature gen_metric_signature() { return {lower(IndexKind::Gen), lower(IndexKind::GenConj)}; }
Signature gen_inverse_signature() { return {upper(IndexKind::GenConj), upper(IndexKind::Gen)}; }
Signature gen_connection_signature() {
  return {lower(IndexKind::Holo), lower(IndexKind::Gen), upper(IndexKind::Gen)};
}
Signature gen_curvature_signature() {
  return {lower(IndexKind::Holo), lower(IndexKind::Antiholo), lower(IndexKind::Gen),
          lower(IndexKind::GenConj)};
}

TensorField assemble_G(const TensorField& g, const TensorField& beta) {
  require_same_grid(g.grid(), beta.grid(), "assemble_G");
  validate_metric(g);
  validate_torsion_potential(beta);
  TensorField G(g.grid(), gen_metric_signature());
  detail::with_dim(g.grid().n(), [&](auto nc) {
    constexpr int n = decltype(nc)::value;
#pragma omp parallel for schedule(static)
    for (std::size_t p = 0; p < g.num_points(); ++p) assemble_point<n>(g.at(p), beta.at(p), G.at(p));
  });
  return G;
}

TensorField inverse_G_blocks(const TensorField& g, const TensorField& beta) {
  require_same_grid(g.grid(), beta.grid(), "inverse_G_blocks");
  const TensorField ginv = inverse_metric(g);
  validate_torsion_potential(beta);
  const int n = g.grid().n();
  const int N2 = 2 * n;
  TensorField out(g.grid(), gen_inverse_signature());
#pragma omp parallel for schedule(static)
  for (std::size_t p = 0; p < g.num_points(); ++p) {
    const GM Mi = Eigen::Map<const GM>(ginv.at(p), n, n);
    const GM M = Eigen::Map<const GM>(g.at(p), n, n);
    const GM b = Eigen::Map<const GM>(beta.at(p), n, n);
    Eigen::Map<GM> R(out.at(p), N2, N2);
    R.block(0, 0, n, n) = Mi;
    R.block(0, n, n, n) = -Mi * b;
    R.block(n, 0, n, n) = -b.adjoint() * Mi;
    R.block(n, n, n, n) = b.adjoint() * Mi * b + M.transpose();
  }
  return out;
}

TensorField inverse_G(const TensorField& G) {
  require_signature(G, gen_metric_signature(), "inverse_G");
  TensorField out(G.grid(), gen_inverse_signature());
  detail::with_dim(G.grid().n(), [&](auto nc) {
    constexpr int D = 2 * decltype(nc)::value;
#pragma omp parallel for schedule(static)
    for (std::size_t p = 0; p < G.num_points(); ++p) {
      detail::MMap<D> dst(out.at(p));
      dst = detail::CMap<D>(G.at(p)).partialPivLu().inverse();
    }
  });
  return out;
}

double det_G_deviation(const TensorField& G) {
  require_signature(G, gen_metric_signature(), "det_G_deviation");
  return detail::with_dim(G.grid().n(), [&](auto nc) {
    constexpr int D = 2 * decltype(nc)::value;
    double r = 0.0;
#pragma omp parallel for reduction(max : r) schedule(static)
    for (std::size_t p = 0; p < G.num_points(); ++p) {
      r = std::max(r, std::abs(detail::CMap<D>(G.at(p)).determinant() - 1.0));
    }
    return r;
  });
}

double min_eigenvalue_G(const TensorField& G) {
  require_signature(G, gen_metric_signature(), "min_eigenvalue_G");
  const int N2 = 2 * G.grid().n();
  double m = std::numeric_limits<double>::infinity();
#pragma omp parallel for reduction(min : m) schedule(static)
  for (std::size_t p = 0; p < G.num_points(); ++p)
    m = std::min(m, pointwise::min_eigenvalue_hermitian(G.at(p), N2));
  return m;
}

TensorField chern_connection_G(const TensorField& G, const TensorField& Ginv,
                               DerivativeScheme scheme) {
  require_signature(G, gen_metric_signature(), "chern_connection_G");
  require_same_grid(G.grid(), Ginv.grid(), "chern_connection_G");
  const int n = G.grid().n();
  const int N2 = 2 * n;
  const std::size_t bs = static_cast<std::size_t>(N2) * N2;
  const TensorField dG = Differentiator(G, scheme).gradient(Dir::Holo);
  TensorField gam(G.grid(), gen_connection_signature());
  detail::with_dim(n, [&](auto nc) {
    constexpr int D = 2 * decltype(nc)::value;
#pragma omp parallel for schedule(static)
    for (std::size_t p = 0; p < G.num_points(); ++p) {
      const detail::CMap<D> I(Ginv.at(p));
      for (int i = 0; i < n; ++i) {
        detail::MMap<D> dst(gam.at(p) + i * bs);
        dst = detail::CMap<D>(dG.at(p) + i * bs) * I;
      }
    }
  });
  return gam;
}

TensorField chern_connection_G(const TensorField& G, DerivativeScheme scheme) {
  return chern_connection_G(G, inverse_G(G), scheme);
}

TensorField chern_curvature_G_direct(const TensorField& G, DerivativeScheme scheme) {
  require_signature(G, gen_metric_signature(), "chern_curvature_G_direct");
  const int n = G.grid().n();
  const int N2 = 2 * n;
  const std::size_t bs = static_cast<std::size_t>(N2) * N2;
  const TensorField Gi = inverse_G(G);
  const Differentiator D(G, scheme);
  const TensorField dG = D.gradient(Dir::Holo);
  const TensorField dbG = D.gradient(Dir::Antiholo);
  TensorField om(G.grid(), gen_curvature_signature());
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      const TensorField dd = D.dd(Dir::Holo, i, Dir::Antiholo, j);
      const std::size_t off = idx2(n, i, j) * bs;
      detail::with_dim(n, [&](auto nc) {
        constexpr int DD = 2 * decltype(nc)::value;
#pragma omp parallel for schedule(static)
        for (std::size_t p = 0; p < G.num_points(); ++p) {
          direct_block<DD>(dG.at(p) + i * bs, Gi.at(p), dbG.at(p) + j * bs, dd.at(p),
                           om.at(p) + off);
        }
      });
    }
  return om;
}

TensorField curvature_gauge_blocks(const ClassicalGeometry& geo) {
  const ChartGrid& grid = geo.metric.g.grid();
  const int n = grid.n();
  const std::size_t bs = static_cast<std::size_t>(4 * n * n);
  TensorField B(grid, gen_curvature_signature());
#pragma omp parallel for schedule(static)
  for (std::size_t p = 0; p < grid.num_points(); ++p) {
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        gauge_block(n, geo.metric.ginv.at(p), geo.omega.at(p), geo.torsion.at(p),
                    geo.beta_hessian.at(p), i, j, B.at(p) + idx2(n, i, j) * bs);
      }
  }
  return B;
}

TensorField curvature_gauge_blocks(const TensorField& g, const TensorField& beta,
                                   DerivativeScheme scheme) {
  return curvature_gauge_blocks(classical_geometry(g, beta, scheme));
}

TensorField chern_curvature_G_blocks(const ClassicalGeometry& geo, double compat_tol) {
  const double compat = compatibility_residual(geo.metric, geo.form);
  if (compat > compat_tol) {
    std::ostringstream os;
    os << "pair (g, beta) is not compatible: residual " << compat << " exceeds " << compat_tol;
    throw IncompatiblePairError(os.str());
  }
  return conjugate_by_shift(curvature_gauge_blocks(geo), geo.form.beta);
}

TensorField chern_curvature_G_blocks(const TensorField& g, const TensorField& beta,
                                     DerivativeScheme scheme, double compat_tol) {
  return chern_curvature_G_blocks(classical_geometry(g, beta, scheme), compat_tol);
}

TensorField s_tensor_from_inverse(const TensorField& omega, const TensorField& ginv) {
  require_signature(omega, gen_curvature_signature(), "s_tensor");
  return trace_curvature(omega, ginv);
}

TensorField s_tensor(const TensorField& omega, const TensorField& g) {
  return s_tensor_from_inverse(omega, inverse_metric(g));
}

TensorField s_gauge_blocks(const ClassicalGeometry& geo) {
  const ChartGrid& grid = geo.metric.g.grid();
  const int n = grid.n();
  const int N2 = 2 * n;
  TensorField S(grid, single_block_signature());
#pragma omp parallel for schedule(static)
  for (std::size_t p = 0; p < grid.num_points(); ++p) {
    const cplx* gi = geo.metric.ginv.at(p);
    const cplx* sg = geo.s.at(p);
    const cplx* t2 = geo.t2.at(p);
    const cplx* L = geo.beta_laplacian.at(p);
    cplx* out = S.at(p);
    for (int a = 0; a < n; ++a)
      for (int b = 0; b < n; ++b) {
        out[a * N2 + b] = sg[idx2(n, a, b)] - t2[idx2(n, a, b)];
        cplx ww = 0.0;
        for (int m = 0; m < n; ++m)
          for (int nn = 0; nn < n; ++nn)
            ww -= gi[idx2(n, b, m)] * gi[idx2(n, nn, a)] * (sg[idx2(n, m, nn)] - t2[idx2(n, m, nn)]);
        out[(n + a) * N2 + n + b] = ww;
        cplx zw = 0.0, wz = 0.0;
        for (int q = 0; q < n; ++q) {
          zw -= gi[idx2(n, b, q)] * L[idx2(n, a, q)];
          wz -= gi[idx2(n, a, q)] * L[idx2(n, b, q)];
        }
        out[a * N2 + n + b] = zw;
        out[(n + a) * N2 + b] = std::conj(wz);
      }
  }
  return S;
}

TensorField s_tensor_blocks(const ClassicalGeometry& geo) {
  return conjugate_by_shift(s_gauge_blocks(geo), geo.form.beta);
}

TensorField conjugate_by_shift(const TensorField& X, const FormMatrix& gamma) {
  const int n = X.grid().n();
  validate_constant_form(gamma, n);
  const int N2 = 2 * n;
  const std::size_t bs = static_cast<std::size_t>(N2) * N2;
  if (X.components() % bs != 0) throw InvalidArgumentError("conjugate_by_shift: bad trailing block");
  TensorField out = X;
  detail::with_dim(n, [&](auto nc) {
    constexpr int D = 2 * decltype(nc)::value;
    const detail::Mat<D> U = shift_matrix(gamma);
#pragma omp parallel for schedule(static)
    for (std::size_t p = 0; p < X.num_points(); ++p) conjugate_blocks<D>(U, out.at(p), X.components() / bs);
  });
  return out;
}

TensorField conjugate_by_shift(const TensorField& X, const TensorField& gamma) {
  require_same_grid(X.grid(), gamma.grid(), "conjugate_by_shift");
  require_signature(gamma, form_signature(), "conjugate_by_shift");
  const int n = X.grid().n();
  const int N2 = 2 * n;
  const std::size_t bs = static_cast<std::size_t>(N2) * N2;
  if (X.components() % bs != 0) throw InvalidArgumentError("conjugate_by_shift: bad trailing block");
  TensorField out = X;
  detail::with_dim(n, [&](auto nc) {
    constexpr int nn = decltype(nc)::value;
#pragma omp parallel for schedule(static)
    for (std::size_t p = 0; p < X.num_points(); ++p)
      conjugate_blocks<2 * nn>(detail::shift<nn>(gamma.at(p)), out.at(p), X.components() / bs);
  });
  return out;
}

void validate_constant_form(const FormMatrix& gamma, int n) {
  if (gamma.rows() != n || gamma.cols() != n) {
    throw InvalidArgumentError("B-field must be an n x n matrix");
  }
  for (int i = 0; i < n; ++i)
    for (int j = 0; j <= i; ++j) {
      if (std::abs(gamma(i, j) + gamma(j, i)) > 1e-14 * (1.0 + std::abs(gamma(i, j)))) {
        throw InvalidArgumentError("B-field must be antisymmetric");
      }
    }
}

BFieldResult bfield_transform(const TensorField& G, const FormMatrix& gamma,
                              DerivativeScheme scheme) {
  require_signature(G, gen_metric_signature(), "bfield_transform");
  const int n = G.grid().n();
  validate_constant_form(gamma, n);
  const int N2 = 2 * n;
  const std::size_t bs = static_cast<std::size_t>(N2) * N2;
  const GM U = shift_matrix(gamma);
  GM Uinv = GM::Identity(N2, N2);
  Uinv.block(0, n, n, n) = -gamma;

  const TensorField Gi = inverse_G(G);
  const TensorField gam = chern_connection_G(G, Gi, scheme);
  const TensorField om = chern_curvature_G_direct(G, scheme);
  // the classical metric is recovered from the WW block, which a B-shift leaves fixed
  TensorField ginv(G.grid(), inverse_metric_signature());
  for (std::size_t p = 0; p < G.num_points(); ++p)
    for (int a = 0; a < n; ++a)
      for (int b = 0; b < n; ++b) ginv(p, idx2(n, a, b)) = G(p, (n + b) * N2 + n + a);

  BFieldResult r;
  r.G = conjugate_by_shift(G, gamma);
  r.omega = conjugate_by_shift(om, gamma);
  r.s = conjugate_by_shift(s_tensor_from_inverse(om, ginv), gamma);
  r.gamma = gam;
#pragma omp parallel for schedule(static)
  for (std::size_t p = 0; p < G.num_points(); ++p)
    for (int i = 0; i < n; ++i) {
      Eigen::Map<GM> X(r.gamma.at(p) + i * bs, N2, N2);
      const GM Y = U * X * Uinv;
      X = Y;
    }
  return r;
}

BFieldResult bfield_transform(const TensorField& G, const TensorField& gamma,
                              DerivativeScheme scheme) {
  require_same_grid(G.grid(), gamma.grid(), "bfield_transform");
  require_signature(gamma, form_signature(), "bfield_transform");
  const int n = G.grid().n();
  for (std::size_t p = 1; p < gamma.num_points(); ++p)
    for (std::size_t c = 0; c < gamma.components(); ++c) {
      if (std::abs(gamma(p, c) - gamma(0, c)) > 1e-14 * (1.0 + std::abs(gamma(0, c)))) {
        throw InvalidArgumentError("B-field must be constant; non-constant shifts are not supported");
      }
    }
  FormMatrix m(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) m(i, j) = gamma(0, idx2(n, i, j));
  return bfield_transform(G, m, scheme);
}

CurvatureGap curvature_two_route_gap(const TensorField& g, const TensorField& beta,
                                     DerivativeScheme scheme, double compat_tol) {
  const ChartGrid& grid = g.grid();
  const int n = grid.n();
  const int N2 = 2 * n;
  const std::size_t bs = static_cast<std::size_t>(N2) * N2;
  const std::size_t npts = grid.num_points();

  const BlockInputs in = block_inputs(g, beta, scheme, compat_tol);
  const TensorField G = assemble_G(g, beta);
  const TensorField Gi = inverse_G(G);
  const Differentiator D(G, scheme);

  CurvatureGap gap;
  double abs_gap = 0.0, norm = 0.0;
  for (int i = 0; i < n; ++i) {
    const TensorField dGi = D.d(Dir::Holo, i);
    for (int j = 0; j < n; ++j) {
      const TensorField dbGj = D.d(Dir::Antiholo, j);
      const TensorField dd = D.dd(Dir::Holo, i, Dir::Antiholo, j);
      detail::with_dim(n, [&](auto nc) {
        constexpr int nn = decltype(nc)::value;
#pragma omp parallel for reduction(max : abs_gap, norm) schedule(static)
        for (std::size_t p = 0; p < npts; ++p) {
          cplx direct[16], blocks[16];
          direct_block<2 * nn>(dGi.at(p), Gi.at(p), dbGj.at(p), dd.at(p), direct);
          gauge_block(n, in.ginv.at(p), in.omega.at(p), in.torsion.at(p), in.hessian.at(p), i, j,
                      blocks);
          conjugate_blocks<2 * nn>(detail::shift<nn>(in.beta.at(p)), blocks, 1);
          for (std::size_t c = 0; c < bs; ++c) {
            abs_gap = std::max(abs_gap, std::abs(blocks[c] - direct[c]));
            norm = std::max(norm, std::abs(direct[c]));
          }
        }
      });
    }
  }
  gap.abs_gap = abs_gap;
  gap.direct_norm = norm;
  return gap;
}

}  // namespace pluriflow
