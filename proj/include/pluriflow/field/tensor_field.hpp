#pragma once

#include <initializer_list>
#include <string>
#include <vector>

#include "pluriflow/common.hpp"
#include "pluriflow/field/chart_grid.hpp"

namespace pluriflow {

/// Index alphabet. Holo/Antiholo range over 1..n, Gen/GenConj over
/// Z^1..Z^n, W^1..W^n (2n letters, in that order).
enum class IndexKind { Holo, Antiholo, Gen, GenConj };
enum class Variance { Lower, Upper };

struct Slot {
  IndexKind kind = IndexKind::Holo;
  Variance variance = Variance::Lower;
  bool operator==(const Slot&) const = default;
};

using Signature = std::vector<Slot>;

inline Slot lower(IndexKind k) { return {k, Variance::Lower}; }
inline Slot upper(IndexKind k) { return {k, Variance::Upper}; }

std::string to_string(const Signature& sig);

/// Complex tensor field. Component layout: data[point * components() + c],
/// with c row-major over the slots (first slot slowest).
class TensorField {
 public:
  TensorField() = default;
  TensorField(const ChartGrid& grid, Signature signature);

  const ChartGrid& grid() const { return grid_; }
  const Signature& signature() const { return signature_; }
  std::size_t rank() const { return signature_.size(); }
  std::size_t components() const { return ncomp_; }
  std::size_t num_points() const { return grid_.num_points(); }
  int range(std::size_t slot) const;

  cplx* at(std::size_t point) { return data_.data() + point * ncomp_; }
  const cplx* at(std::size_t point) const { return data_.data() + point * ncomp_; }
  cplx& operator()(std::size_t point, std::size_t comp) { return data_[point * ncomp_ + comp]; }
  const cplx& operator()(std::size_t point, std::size_t comp) const {
    return data_[point * ncomp_ + comp];
  }

  std::vector<cplx>& data() { return data_; }
  const std::vector<cplx>& data() const { return data_; }
  double* raw() { return reinterpret_cast<double*>(data_.data()); }
  const double* raw() const { return reinterpret_cast<const double*>(data_.data()); }

  double sup_norm() const;

  TensorField& operator+=(const TensorField& other);
  TensorField& operator-=(const TensorField& other);
  TensorField& operator*=(cplx s);

 private:
  ChartGrid grid_;
  Signature signature_;
  std::size_t ncomp_ = 1;
  std::vector<cplx> data_;
};

TensorField operator+(TensorField a, const TensorField& b);
TensorField operator-(TensorField a, const TensorField& b);
TensorField operator*(cplx s, TensorField a);

/// sup over points and components of |a - b|.
double sup_diff(const TensorField& a, const TensorField& b);

/// Real scalar field on a chart.
struct RealField {
  ChartGrid grid;
  std::vector<double> values;

  RealField() = default;
  explicit RealField(const ChartGrid& g, double fill = 0.0)
      : grid(g), values(g.num_points(), fill) {}
  double max() const;
  double min() const;
};

RealField real_part(const TensorField& scalar);
TensorField to_complex(const RealField& f);

}  // namespace pluriflow
