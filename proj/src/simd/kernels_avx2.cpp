#include "pluriflow/simd/kernels.hpp"

#include <immintrin.h>

#include <algorithm>
#include <cmath>

namespace pluriflow::simd::avx2 {

void axpby(double a, const double* x, double b, double* y, std::size_t len) {
  const __m256d va = _mm256_set1_pd(a);
  const __m256d vb = _mm256_set1_pd(b);
  std::size_t k = 0;
  for (; k + 4 <= len; k += 4) {
    const __m256d ax = _mm256_mul_pd(va, _mm256_loadu_pd(x + k));
    const __m256d by = _mm256_mul_pd(vb, _mm256_loadu_pd(y + k));
    _mm256_storeu_pd(y + k, _mm256_add_pd(ax, by));
  }
  for (; k < len; ++k) y[k] = a * x[k] + b * y[k];
}

void stencil5(const double* const in[5], const double c[5], double* out, std::size_t len) {
  const __m256d c0 = _mm256_set1_pd(c[0]);
  const __m256d c1 = _mm256_set1_pd(c[1]);
  const __m256d c2 = _mm256_set1_pd(c[2]);
  const __m256d c3 = _mm256_set1_pd(c[3]);
  const __m256d c4 = _mm256_set1_pd(c[4]);
  std::size_t k = 0;
  for (; k + 4 <= len; k += 4) {
    // same accumulation order as the scalar loop
    __m256d acc = _mm256_mul_pd(c0, _mm256_loadu_pd(in[0] + k));
    acc = _mm256_add_pd(acc, _mm256_mul_pd(c1, _mm256_loadu_pd(in[1] + k)));
    acc = _mm256_add_pd(acc, _mm256_mul_pd(c2, _mm256_loadu_pd(in[2] + k)));
    acc = _mm256_add_pd(acc, _mm256_mul_pd(c3, _mm256_loadu_pd(in[3] + k)));
    acc = _mm256_add_pd(acc, _mm256_mul_pd(c4, _mm256_loadu_pd(in[4] + k)));
    _mm256_storeu_pd(out + k, acc);
  }
  for (; k < len; ++k) {
    double acc = 0.0;
    for (int s = 0; s < 5; ++s) acc += c[s] * in[s][k];
    out[k] = acc;
  }
}

void complex_scale(double* data, const double* symbol, std::size_t npoints, std::size_t ncomp) {
  for (std::size_t p = 0; p < npoints; ++p) {
    const double sr = symbol[2 * p];
    const double si = symbol[2 * p + 1];
    const __m256d vsr = _mm256_set1_pd(sr);
    const __m256d vsi = _mm256_setr_pd(-si, si, -si, si);
    double* z = data + 2 * p * ncomp;
    std::size_t c = 0;
    for (; c + 2 <= ncomp; c += 2) {
      const __m256d vz = _mm256_loadu_pd(z + 2 * c);
      const __m256d swapped = _mm256_permute_pd(vz, 0b0101);
      // (zr*sr - zi*si, zi*sr + zr*si)
      const __m256d res = _mm256_add_pd(_mm256_mul_pd(vz, vsr), _mm256_mul_pd(swapped, vsi));
      _mm256_storeu_pd(z + 2 * c, res);
    }
    for (; c < ncomp; ++c) {
      const double zr = z[2 * c];
      const double zi = z[2 * c + 1];
      z[2 * c] = zr * sr - zi * si;
      z[2 * c + 1] = zr * si + zi * sr;
    }
  }
}

double max_abs_complex(const double* data, std::size_t count) {
  __m256d best = _mm256_setzero_pd();
  std::size_t k = 0;
  for (; k + 2 <= count; k += 2) {
    const __m256d v = _mm256_loadu_pd(data + 2 * k);
    const __m256d sq = _mm256_mul_pd(v, v);
    const __m256d pair = _mm256_hadd_pd(sq, sq);  // (|z0|^2, |z0|^2, |z1|^2, |z1|^2)
    best = _mm256_max_pd(best, pair);
  }
  alignas(32) double lanes[4];
  _mm256_store_pd(lanes, best);
  double m2 = std::max(std::max(lanes[0], lanes[1]), std::max(lanes[2], lanes[3]));
  double m = std::sqrt(m2);
  for (; k < count; ++k) m = std::max(m, std::hypot(data[2 * k], data[2 * k + 1]));
  return m;
}

}  // namespace pluriflow::simd::avx2
