#include "pluriflow/simd/kernels.hpp"

#include <algorithm>
#include <cmath>

namespace pluriflow::simd::scalar {

void axpby(double a, const double* x, double b, double* y, std::size_t len) {
  for (std::size_t k = 0; k < len; ++k) y[k] = a * x[k] + b * y[k];
}

void stencil5(const double* const in[5], const double c[5], double* out, std::size_t len) {
  for (std::size_t k = 0; k < len; ++k) {
    double acc = 0.0;
    for (int s = 0; s < 5; ++s) acc += c[s] * in[s][k];
    out[k] = acc;
  }
}

void complex_scale(double* data, const double* symbol, std::size_t npoints, std::size_t ncomp) {
  for (std::size_t p = 0; p < npoints; ++p) {
    const double sr = symbol[2 * p];
    const double si = symbol[2 * p + 1];
    double* z = data + 2 * p * ncomp;
    for (std::size_t c = 0; c < ncomp; ++c) {
      const double zr = z[2 * c];
      const double zi = z[2 * c + 1];
      z[2 * c] = zr * sr - zi * si;
      z[2 * c + 1] = zr * si + zi * sr;
    }
  }
}

double max_abs_complex(const double* data, std::size_t count) {
  double m = 0.0;
  for (std::size_t k = 0; k < count; ++k) {
    m = std::max(m, std::hypot(data[2 * k], data[2 * k + 1]));
  }
  return m;
}

}  // namespace pluriflow::simd::scalar
