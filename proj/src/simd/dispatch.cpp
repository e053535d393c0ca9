#include <atomic>
#include <cstdlib>
#include <string>

#include "pluriflow/simd/kernels.hpp"

namespace pluriflow::simd {

namespace {

bool avx2_compiled() {
#ifdef PLURIFLOW_HAVE_AVX2
  return true;
#else
  return false;
#endif
}

bool avx2_cpu() {
#if defined(__x86_64__) || defined(__i386__)
  __builtin_cpu_init();
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

Level detect() {
  Level level = level_available(Level::AVX2) ? Level::AVX2 : Level::Scalar;
  if (const char* env = std::getenv("PLURIFLOW_SIMD")) {
    const std::string v(env);
    if (v == "scalar") level = Level::Scalar;
    if (v == "avx2" && level_available(Level::AVX2)) level = Level::AVX2;
  }
  return level;
}

std::atomic<int>& current() {
  static std::atomic<int> level{static_cast<int>(detect())};
  return level;
}

}  // namespace

bool level_available(Level level) {
  if (level == Level::Scalar) return true;
  return avx2_compiled() && avx2_cpu();
}

Level active_level() { return static_cast<Level>(current().load(std::memory_order_relaxed)); }

void set_level(Level level) {
  if (!level_available(level)) level = Level::Scalar;
  current().store(static_cast<int>(level), std::memory_order_relaxed);
}

std::string_view level_name(Level level) { return level == Level::AVX2 ? "avx2" : "scalar"; }

#ifdef PLURIFLOW_HAVE_AVX2
#define PLURIFLOW_DISPATCH(fn, ...) \
  (active_level() == Level::AVX2 ? avx2::fn(__VA_ARGS__) : scalar::fn(__VA_ARGS__))
#else
#define PLURIFLOW_DISPATCH(fn, ...) scalar::fn(__VA_ARGS__)
#endif

void axpby(double a, const double* x, double b, double* y, std::size_t len) {
  PLURIFLOW_DISPATCH(axpby, a, x, b, y, len);
}

void stencil5(const double* const in[5], const double c[5], double* out, std::size_t len) {
  PLURIFLOW_DISPATCH(stencil5, in, c, out, len);
}

void complex_scale(double* data, const double* symbol, std::size_t npoints, std::size_t ncomp) {
  PLURIFLOW_DISPATCH(complex_scale, data, symbol, npoints, ncomp);
}

double max_abs_complex(const double* data, std::size_t count) {
  return PLURIFLOW_DISPATCH(max_abs_complex, data, count);
}

}  // namespace pluriflow::simd
