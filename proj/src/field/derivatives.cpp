#include "pluriflow/field/derivatives.hpp"

#include <fftw3.h>

#include <algorithm>
#include <map>
#include <mutex>
#include <tuple>

#include "pluriflow/simd/kernels.hpp"

namespace pluriflow {

namespace {

using PlanKey = std::tuple<std::vector<int>, std::size_t, int>;

fftw_plan plan_for(const ChartGrid& grid, std::size_t ncomp, int sign, cplx* data) {
  static std::mutex mutex;
  static std::map<PlanKey, fftw_plan> plans;
  std::lock_guard<std::mutex> lock(mutex);
  PlanKey key{grid.points_per_axis(), ncomp, sign};
  auto it = plans.find(key);
  if (it != plans.end()) return it->second;
  auto* buf = reinterpret_cast<fftw_complex*>(data);
  const int howmany = static_cast<int>(ncomp);
  fftw_plan plan = fftw_plan_many_dft(grid.real_dim(), grid.points_per_axis().data(), howmany, buf,
                                      nullptr, howmany, 1, buf, nullptr, howmany, 1, sign,
                                      FFTW_ESTIMATE | FFTW_UNALIGNED);
  if (!plan) throw Error("FFTW planning failed");
  plans.emplace(key, plan);
  return plan;
}

void transform(TensorField& f, int sign) {
  if (f.data().empty()) return;
  fftw_plan plan = plan_for(f.grid(), f.components(), sign, f.data().data());
  auto* buf = reinterpret_cast<fftw_complex*>(f.data().data());
  fftw_execute_dft(plan, buf, buf);
}

double wavenumber(const ChartGrid& grid, std::size_t point, int axis) {
  const int N = grid.points(axis);
  const int idx = grid.coordinate_index(point, axis);
  if (idx == N / 2) return 0.0;  // Nyquist: odd derivatives are not representable
  const int q = idx < N / 2 ? idx : idx - N;
  return 2.0 * kPi * q / grid.period(axis);
}

using SymbolKey = std::tuple<std::vector<int>, std::vector<double>, int, int, int, int>;

/// Normalized symbols depend only on the grid and the directions; cache them across calls.
const std::vector<cplx>& cached_symbol(const ChartGrid& grid, int code_a, int code_b) {
  static std::mutex mutex;
  static std::map<SymbolKey, std::vector<cplx>> cache;
  std::lock_guard<std::mutex> lock(mutex);
  SymbolKey key{grid.points_per_axis(), grid.periods(), code_a / 2, code_a % 2, code_b / 2,
                code_b % 2};
  auto it = cache.find(key);
  if (it != cache.end()) return it->second;
  const Dir da = code_a % 2 ? Dir::Antiholo : Dir::Holo;
  std::vector<cplx> sym = wirtinger_symbol(grid, da, code_a / 2);
  if (code_b >= 0) {
    const Dir db = code_b % 2 ? Dir::Antiholo : Dir::Holo;
    const std::vector<cplx> sb = wirtinger_symbol(grid, db, code_b / 2);
    for (std::size_t p = 0; p < sym.size(); ++p) sym[p] *= sb[p];
  }
  // fold the inverse-transform normalization into the symbol
  const double scale = 1.0 / static_cast<double>(grid.num_points());
  for (auto& z : sym) z *= scale;
  return cache.emplace(key, std::move(sym)).first->second;
}

int direction_code(Dir dir, int index) { return 2 * index + (dir == Dir::Antiholo ? 1 : 0); }

void check_direction(const ChartGrid& grid, int index) {
  if (index < 0 || index >= grid.n()) {
    throw InvalidArgumentError("derivative direction " + std::to_string(index) +
                               " out of range for n = " + std::to_string(grid.n()));
  }
}

}  // namespace

void fft_forward(TensorField& f) { transform(f, FFTW_FORWARD); }

void fft_inverse(TensorField& f) {
  transform(f, FFTW_BACKWARD);
  const double scale = 1.0 / static_cast<double>(f.num_points());
  for (auto& z : f.data()) z *= scale;
}

std::vector<cplx> wirtinger_symbol(const ChartGrid& grid, Dir dir, int index) {
  check_direction(grid, index);
  std::vector<cplx> sym(grid.num_points());
  const double sy = dir == Dir::Holo ? 1.0 : -1.0;
#pragma omp parallel for schedule(static)
  for (std::size_t p = 0; p < sym.size(); ++p) {
    const double kx = wavenumber(grid, p, 2 * index);
    const double ky = wavenumber(grid, p, 2 * index + 1);
    // (d_x -+ i d_y)/2 with d_x -> i kx
    sym[p] = 0.5 * cplx(sy * ky, kx);
  }
  return sym;
}

TensorField central4_axis(const TensorField& f, int axis) {
  const ChartGrid& grid = f.grid();
  TensorField out(grid, f.signature());
  const std::size_t N = grid.points(axis);
  const std::size_t row = grid.stride(axis) * f.components() * 2;  // doubles per row
  const std::size_t outer = grid.num_points() / (N * grid.stride(axis));
  double c[5];
  for (int s = 0; s < 5; ++s) c[s] = kCentral4Coefficients[s] / grid.spacing(axis);
  const double* in = f.raw();
  double* dst = out.raw();
#pragma omp parallel for collapse(2) schedule(static)
  for (std::size_t o = 0; o < outer; ++o) {
    for (std::size_t r = 0; r < N; ++r) {
      const double* taps[5];
      for (int s = 0; s < 5; ++s) {
        const std::size_t rr = (r + N + static_cast<std::size_t>(s) - 2) % N;
        taps[s] = in + (o * N + rr) * row;
      }
      simd::stencil5(taps, c, dst + (o * N + r) * row, row);
    }
  }
  return out;
}

Differentiator::Differentiator(const TensorField& f, DerivativeScheme scheme)
    : scheme_(scheme), data_(f) {
  zero_ = std::all_of(data_.data().begin(), data_.data().end(), [](cplx z) { return z == 0.0; });
  if (scheme_.kind == SchemeKind::Spectral && !zero_) fft_forward(data_);
}

TensorField Differentiator::apply_symbol(const std::vector<cplx>& symbol) const {
  TensorField out = data_;
  if (zero_) return out;
  simd::complex_scale(out.raw(), reinterpret_cast<const double*>(symbol.data()), out.num_points(),
                      out.components());
  transform(out, FFTW_BACKWARD);
  return out;
}

TensorField Differentiator::stencil(const TensorField& in, Dir dir, int index) const {
  check_direction(in.grid(), index);
  if (zero_) return in;
  TensorField dx = central4_axis(in, 2 * index);
  TensorField dy = central4_axis(in, 2 * index + 1);
  const cplx wy = dir == Dir::Holo ? cplx(0.0, -0.5) : cplx(0.0, 0.5);
  auto& a = dx.data();
  const auto& b = dy.data();
#pragma omp parallel for schedule(static)
  for (std::size_t k = 0; k < a.size(); ++k) a[k] = 0.5 * a[k] + wy * b[k];
  return dx;
}

TensorField Differentiator::d(Dir dir, int index) const {
  if (scheme_.kind == SchemeKind::Spectral) {
    check_direction(data_.grid(), index);
    return apply_symbol(cached_symbol(data_.grid(), direction_code(dir, index), -1));
  }
  return stencil(data_, dir, index);
}

TensorField Differentiator::dd(Dir dir_a, int a, Dir dir_b, int b) const {
  if (scheme_.kind == SchemeKind::Spectral) {
    check_direction(data_.grid(), a);
    check_direction(data_.grid(), b);
    return apply_symbol(cached_symbol(data_.grid(), direction_code(dir_a, a), direction_code(dir_b, b)));
  }
  return stencil(stencil(data_, dir_b, b), dir_a, a);
}

TensorField Differentiator::gradient(Dir dir) const {
  std::vector<TensorField> parts;
  for (int i = 0; i < data_.grid().n(); ++i) parts.push_back(d(dir, i));
  return embed_leading(parts, index_kind(dir));
}

TensorField Differentiator::mixed_hessian() const {
  const int n = data_.grid().n();
  std::vector<TensorField> rows;
  for (int i = 0; i < n; ++i) {
    std::vector<TensorField> cols;
    for (int j = 0; j < n; ++j) cols.push_back(dd(Dir::Holo, i, Dir::Antiholo, j));
    rows.push_back(embed_leading(cols, IndexKind::Antiholo));
  }
  return embed_leading(rows, IndexKind::Holo);
}

TensorField partial(const TensorField& f, Dir dir, DerivativeScheme scheme) {
  return Differentiator(f, scheme).gradient(dir);
}

TensorField partial(const TensorField& f, Dir dir, int index, DerivativeScheme scheme) {
  check_direction(f.grid(), index);
  return Differentiator(f, scheme).d(dir, index);
}

TensorField embed_leading(const std::vector<TensorField>& parts, IndexKind kind) {
  if (parts.empty()) throw InvalidArgumentError("embed_leading: no parts");
  const TensorField& first = parts.front();
  Signature sig{lower(kind)};
  sig.insert(sig.end(), first.signature().begin(), first.signature().end());
  TensorField out(first.grid(), sig);
  if (static_cast<int>(parts.size()) != out.range(0)) {
    throw InvalidArgumentError("embed_leading: part count does not match index range");
  }
  const std::size_t nc = first.components();
  for (const auto& part : parts) {
    require_same_grid(part.grid(), first.grid(), "embed_leading");
    if (part.signature() != first.signature()) {
      throw InvalidArgumentError("embed_leading: parts differ in signature");
    }
  }
#pragma omp parallel for schedule(static)
  for (std::size_t p = 0; p < out.num_points(); ++p) {
    cplx* dst = out.at(p);
    for (std::size_t k = 0; k < parts.size(); ++k) {
      const cplx* src = parts[k].at(p);
      for (std::size_t c = 0; c < nc; ++c) dst[k * nc + c] = src[c];
    }
  }
  return out;
}

}  // namespace pluriflow
