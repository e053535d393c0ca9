#pragma once

#include <array>
#include <limits>
#include <optional>

#include "pluriflow/field/tensor_field.hpp"

namespace pluriflow {

enum class SchemeKind { Spectral, Central4 };

struct DerivativeScheme {
  SchemeKind kind = SchemeKind::Spectral;

  /// Expected convergence order; infinity for spectral on bandlimited data.
  double expected_order() const {
    return kind == SchemeKind::Spectral ? std::numeric_limits<double>::infinity() : 4.0;
  }
  static DerivativeScheme spectral() { return {SchemeKind::Spectral}; }
  static DerivativeScheme central4() { return {SchemeKind::Central4}; }
};

/// Coefficients of f(x-2h), f(x-h), f(x), f(x+h), f(x+2h) for d/dx, times h.
inline constexpr std::array<double, 5> kCentral4Coefficients = {1.0 / 12.0, -8.0 / 12.0, 0.0,
                                                                8.0 / 12.0, -1.0 / 12.0};

/// Direction of a Wirtinger derivative: d_i = (d_x - i d_y)/2, d_ibar = (d_x + i d_y)/2.
enum class Dir { Holo, Antiholo };

inline IndexKind index_kind(Dir d) { return d == Dir::Holo ? IndexKind::Holo : IndexKind::Antiholo; }

/// Caches the transform of a field so several derivatives can be taken cheaply.
class Differentiator {
 public:
  Differentiator(const TensorField& f, DerivativeScheme scheme);

  /// d_i f (or d_ibar f); same signature as f.
  TensorField d(Dir dir, int index) const;
  /// d_a d_b f, first the b derivative then a (they commute).
  TensorField dd(Dir dir_a, int a, Dir dir_b, int b) const;

  /// All directions, new leading slot of the derivative kind.
  TensorField gradient(Dir dir) const;
  /// d_i d_jbar f with leading slots (Holo, Antiholo).
  TensorField mixed_hessian() const;

 private:
  TensorField apply_symbol(const std::vector<cplx>& symbol) const;
  TensorField stencil(const TensorField& in, Dir dir, int index) const;

  DerivativeScheme scheme_;
  TensorField data_;  // spectrum (spectral) or a copy of the field (central-4th)
  bool zero_ = false;  // identically zero input: every derivative is zero
};

TensorField partial(const TensorField& f, Dir dir, DerivativeScheme scheme = {});
TensorField partial(const TensorField& f, Dir dir, int index, DerivativeScheme scheme = {});

/// Wirtinger symbol of d_i / d_ibar on the FFT grid (Nyquist entries zeroed).
std::vector<cplx> wirtinger_symbol(const ChartGrid& grid, Dir dir, int index);

/// Forward/inverse transforms over all real axes, per component. Inverse is normalized.
void fft_forward(TensorField& f);
void fft_inverse(TensorField& f);

/// Central-4th derivative along one real axis (d/dx, not Wirtinger).
TensorField central4_axis(const TensorField& f, int axis);

/// Stacks equally-shaped fields under a new leading slot.
TensorField embed_leading(const std::vector<TensorField>& parts, IndexKind kind);

}  // namespace pluriflow
