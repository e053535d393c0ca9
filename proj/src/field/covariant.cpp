#include "pluriflow/field/covariant.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace pluriflow {

namespace {

struct SlotLayout {
  std::vector<std::size_t> stride;
  std::vector<int> range;
};

SlotLayout layout_of(const TensorField& f) {
  SlotLayout L;
  const std::size_t r = f.rank();
  L.stride.assign(r, 1);
  L.range.assign(r, 0);
  for (std::size_t s = 0; s < r; ++s) L.range[s] = f.range(s);
  for (std::size_t s = r; s-- > 1;) L.stride[s - 1] = L.stride[s] * L.range[s];
  return L;
}

bool slot_touched(const Slot& slot, Dir dir) {
  if (dir == Dir::Holo) return slot.kind == IndexKind::Holo || slot.kind == IndexKind::Gen;
  return slot.kind == IndexKind::Antiholo || slot.kind == IndexKind::GenConj;
}

void require_connections(const TensorField& f, Dir dir, const ConnectionSet& conn) {
  for (const Slot& slot : f.signature()) {
    if (!slot_touched(slot, dir)) continue;
    const bool gen = slot.kind == IndexKind::Gen || slot.kind == IndexKind::GenConj;
    if (gen && !conn.generalized) {
      throw InvalidArgumentError("missing generalized connection for a generalized index");
    }
    if (!gen && !conn.classical) {
      throw InvalidArgumentError("missing classical connection for a chart index");
    }
  }
}

}  // namespace

void add_connection_terms(TensorField& stack, const TensorField& f, Dir dir,
                          const ConnectionSet& conn) {
  require_connections(f, dir, conn);
  const ChartGrid& grid = f.grid();
  const int n = grid.n();
  const std::size_t nc = f.components();
  const SlotLayout L = layout_of(f);
  const Signature& sig = f.signature();
  const bool conj_dir = dir == Dir::Antiholo;
  if (conn.classical) require_same_grid(conn.classical->grid(), grid, "classical connection");
  if (conn.generalized) require_same_grid(conn.generalized->grid(), grid, "generalized connection");

#pragma omp parallel for schedule(static)
  for (std::size_t p = 0; p < grid.num_points(); ++p) {
    const cplx* fp = f.at(p);
    cplx* out = stack.at(p);
    for (std::size_t s = 0; s < sig.size(); ++s) {
      if (!slot_touched(sig[s], dir)) continue;
      const bool gen = sig[s].kind == IndexKind::Gen || sig[s].kind == IndexKind::GenConj;
      const TensorField& gam = gen ? *conn.generalized : *conn.classical;
      const int r = L.range[s];
      const cplx* gp = gam.at(p);
      const double sign = sig[s].variance == Variance::Lower ? -1.0 : 1.0;
      const bool up = sig[s].variance == Variance::Upper;
      const std::size_t st = L.stride[s];
      const std::size_t outer = nc / (st * r);
      for (int l = 0; l < n; ++l) {
        const cplx* gl = gp + static_cast<std::size_t>(l) * r * r;
        cplx* ol = out + static_cast<std::size_t>(l) * nc;
        for (int i = 0; i < r; ++i)
          for (int q = 0; q < r; ++q) {
            // lower: Gamma_{l i}^{q};  upper: Gamma_{l q}^{i}
            cplx coef = up ? gl[q * r + i] : gl[i * r + q];
            if (conj_dir) coef = std::conj(coef);
            coef *= sign;
            for (std::size_t o = 0; o < outer; ++o) {
              const cplx* src = fp + (o * r + q) * st;
              cplx* dst = ol + (o * r + i) * st;
              for (std::size_t in = 0; in < st; ++in) dst[in] += coef * src[in];
            }
          }
      }
    }
  }
}

TensorField covariant_derivative(const TensorField& f, Dir dir, const ConnectionSet& conn,
                                 DerivativeScheme scheme) {
  require_connections(f, dir, conn);
  TensorField stack = partial(f, dir, scheme);
  add_connection_terms(stack, f, dir, conn);
  return stack;
}

TensorField chern_laplacian(const TensorField& f, const TensorField& ginv,
                            const ConnectionSet& conn, DerivativeScheme scheme) {
  require_same_grid(f.grid(), ginv.grid(), "chern_laplacian metric");
  const TensorField dbar = covariant_derivative(f, Dir::Antiholo, conn, scheme);
  const TensorField ddbar = covariant_derivative(dbar, Dir::Holo, conn, scheme);
  TensorField out(f.grid(), f.signature());
  const int n = f.grid().n();
  const std::size_t nc = f.components();
#pragma omp parallel for schedule(static)
  for (std::size_t p = 0; p < out.num_points(); ++p) {
    const cplx* gi = ginv.at(p);
    const cplx* d2 = ddbar.at(p);
    cplx* o = out.at(p);
    for (int k = 0; k < n; ++k) {
      for (int l = 0; l < n; ++l) {
        const cplx w = gi[k * n + l];
        const cplx* blk = d2 + (static_cast<std::size_t>(l) * n + k) * nc;
        for (std::size_t c = 0; c < nc; ++c) o[c] += w * blk[c];
      }
    }
  }
  return out;
}

RealField tensor_norm_sq(const TensorField& X, const NormMetrics& m) {
  const ChartGrid& grid = X.grid();
  const Signature& sig = X.signature();
  const SlotLayout L = layout_of(X);
  const std::size_t nc = X.components();
  for (const Slot& slot : sig) {
    const bool gen = slot.kind == IndexKind::Gen || slot.kind == IndexKind::GenConj;
    const TensorField* need = gen ? (slot.variance == Variance::Lower ? m.Ginv : m.third)
                                  : (slot.variance == Variance::Lower ? m.ginv : m.metric);
    if (!need) throw InvalidArgumentError("tensor_norm_sq: missing metric for slot kind");
    require_same_grid(need->grid(), grid, "tensor_norm_sq metric");
  }
  RealField out(grid);
#pragma omp parallel
  {
    std::vector<cplx> y(nc), tmp(nc);
#pragma omp for schedule(static)
    for (std::size_t p = 0; p < grid.num_points(); ++p) {
      const cplx* x = X.at(p);
      for (std::size_t c = 0; c < nc; ++c) y[c] = std::conj(x[c]);
      for (std::size_t s = 0; s < sig.size(); ++s) {
        const bool gen = sig[s].kind == IndexKind::Gen || sig[s].kind == IndexKind::GenConj;
        const bool lowered = sig[s].variance == Variance::Lower;
        const TensorField& W = gen ? (lowered ? *m.Ginv : *m.third) : (lowered ? *m.ginv : *m.metric);
        const cplx* w = W.at(p);
        const int r = L.range[s];
        // weight W_s(I, J) as an entry of the stored matrix
        const bool transpose = (sig[s].kind == IndexKind::Holo || sig[s].kind == IndexKind::Gen)
                                   ? lowered
                                   : !lowered;
        const std::size_t st = L.stride[s];
        const std::size_t outer = nc / (st * r);
        if (st == 1) {
          for (std::size_t o = 0; o < outer; ++o) {
            const cplx* src = y.data() + o * r;
            for (int i = 0; i < r; ++i) {
              cplx acc = 0.0;
              for (int j = 0; j < r; ++j) acc += (transpose ? w[j * r + i] : w[i * r + j]) * src[j];
              tmp[o * r + i] = acc;
            }
          }
          std::swap(y, tmp);
          continue;
        }
        std::fill(tmp.begin(), tmp.end(), cplx(0.0));
        for (int i = 0; i < r; ++i)
          for (int j = 0; j < r; ++j) {
            const cplx wij = transpose ? w[j * r + i] : w[i * r + j];
            for (std::size_t o = 0; o < outer; ++o) {
              const cplx* src = y.data() + (o * r + j) * st;
              cplx* dst = tmp.data() + (o * r + i) * st;
              for (std::size_t in = 0; in < st; ++in) dst[in] += wij * src[in];
            }
          }
        std::swap(y, tmp);
      }
      double acc = 0.0;
      for (std::size_t c = 0; c < nc; ++c) acc += (x[c] * y[c]).real();
      out.values[p] = acc;
    }
  }
  return out;
}

double sup_ball(const RealField& f, const std::vector<double>& center, double radius) {
  const ChartGrid& grid = f.grid;
  if (center.size() != static_cast<std::size_t>(grid.real_dim())) {
    throw InvalidArgumentError("sup_ball: center needs one coordinate per real axis");
  }
  if (!(radius < 0.5 * grid.min_period())) {
    throw ResolutionError("sup_ball: radius must be below half the minimal period");
  }
  double best = -std::numeric_limits<double>::infinity();
  bool any = false;
  for (std::size_t p = 0; p < grid.num_points(); ++p) {
    if (grid.distance(p, center) <= radius) {
      best = std::max(best, f.values[p]);
      any = true;
    }
  }
  if (!any) throw ResolutionError("sup_ball: no grid point inside the ball; resolution too coarse");
  return best;
}

double sup_ball(const RealField& f, const std::vector<double>& center, double radius,
                const TensorField& gtilde) {
  require_same_grid(f.grid, gtilde.grid(), "sup_ball background");
  return sup_ball(f, center, radius);
}

}  // namespace pluriflow
