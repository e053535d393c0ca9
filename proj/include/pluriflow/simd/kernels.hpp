#pragma once

#include <cstddef>
#include <string_view>

namespace pluriflow::simd {

enum class Level { Scalar, AVX2 };

/// Level chosen at first use: AVX2 when the CPU supports it and the variant was
/// compiled in. PLURIFLOW_SIMD=scalar|avx2 overrides.
Level active_level();
void set_level(Level level);
bool level_available(Level level);
std::string_view level_name(Level level);

// y <- a*x + b*y
void axpby(double a, const double* x, double b, double* y, std::size_t len);

// out[k] = sum_s c[s] * in[s][k], five taps
void stencil5(const double* const in[5], const double c[5], double* out, std::size_t len);

// data[p*ncomp + c] *= symbol[p]; interleaved complex doubles
void complex_scale(double* data, const double* symbol, std::size_t npoints, std::size_t ncomp);

// max_k |z_k| over interleaved complex doubles
double max_abs_complex(const double* data, std::size_t count);

namespace scalar {
void axpby(double a, const double* x, double b, double* y, std::size_t len);
void stencil5(const double* const in[5], const double c[5], double* out, std::size_t len);
void complex_scale(double* data, const double* symbol, std::size_t npoints, std::size_t ncomp);
double max_abs_complex(const double* data, std::size_t count);
}  // namespace scalar

namespace avx2 {
void axpby(double a, const double* x, double b, double* y, std::size_t len);
void stencil5(const double* const in[5], const double c[5], double* out, std::size_t len);
void complex_scale(double* data, const double* symbol, std::size_t npoints, std::size_t ncomp);
double max_abs_complex(const double* data, std::size_t count);
}  // namespace avx2

}  // namespace pluriflow::simd
