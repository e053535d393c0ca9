#include "pluriflow/field/tensor_field.hpp"

#include <algorithm>
#include <limits>

#if defined(__GLIBC__)
#include <malloc.h>
#endif

#include "pluriflow/simd/kernels.hpp"

namespace pluriflow {

namespace {
// Field buffers are large and short-lived; serving them from the heap instead of
// fresh mmap pages avoids a page-fault storm on every allocation.
[[maybe_unused]] const bool kHeapTuned = [] {
#if defined(__GLIBC__)
  mallopt(M_MMAP_THRESHOLD, 1 << 30);
  mallopt(M_TRIM_THRESHOLD, 1 << 30);
#endif
  return true;
}();
}  // namespace

std::string to_string(const Signature& sig) {
  std::string s = "(";
  for (std::size_t k = 0; k < sig.size(); ++k) {
    if (k) s += ",";
    switch (sig[k].kind) {
      case IndexKind::Holo: s += "i"; break;
      case IndexKind::Antiholo: s += "jbar"; break;
      case IndexKind::Gen: s += "A"; break;
      case IndexKind::GenConj: s += "Bbar"; break;
    }
    if (sig[k].variance == Variance::Upper) s += "^";
  }
  return s + ")";
}

TensorField::TensorField(const ChartGrid& grid, Signature signature)
    : grid_(grid), signature_(std::move(signature)) {
  ncomp_ = 1;
  for (std::size_t s = 0; s < signature_.size(); ++s) ncomp_ *= static_cast<std::size_t>(range(s));
  data_.assign(grid_.num_points() * ncomp_, cplx(0.0, 0.0));
}

int TensorField::range(std::size_t slot) const {
  const IndexKind k = signature_.at(slot).kind;
  return (k == IndexKind::Holo || k == IndexKind::Antiholo) ? grid_.n() : 2 * grid_.n();
}

double TensorField::sup_norm() const { return simd::max_abs_complex(raw(), data_.size()); }

namespace {
void require_compatible(const TensorField& a, const TensorField& b) {
  require_same_grid(a.grid(), b.grid(), "tensor arithmetic");
  if (a.signature() != b.signature()) {
    throw InvalidArgumentError("signature mismatch: " + to_string(a.signature()) + " vs " +
                               to_string(b.signature()));
  }
}
}  // namespace

TensorField& TensorField::operator+=(const TensorField& other) {
  require_compatible(*this, other);
  simd::axpby(1.0, other.raw(), 1.0, raw(), 2 * data_.size());
  return *this;
}

TensorField& TensorField::operator-=(const TensorField& other) {
  require_compatible(*this, other);
  simd::axpby(-1.0, other.raw(), 1.0, raw(), 2 * data_.size());
  return *this;
}

TensorField& TensorField::operator*=(cplx s) {
  for (auto& z : data_) z *= s;
  return *this;
}

TensorField operator+(TensorField a, const TensorField& b) { return a += b; }
TensorField operator-(TensorField a, const TensorField& b) { return a -= b; }
TensorField operator*(cplx s, TensorField a) { return a *= s; }

double sup_diff(const TensorField& a, const TensorField& b) { return (a - b).sup_norm(); }

double RealField::max() const {
  return values.empty() ? -std::numeric_limits<double>::infinity()
                        : *std::max_element(values.begin(), values.end());
}

double RealField::min() const {
  return values.empty() ? std::numeric_limits<double>::infinity()
                        : *std::min_element(values.begin(), values.end());
}

RealField real_part(const TensorField& scalar) {
  if (scalar.components() != 1) throw InvalidArgumentError("real_part expects a scalar field");
  RealField out(scalar.grid());
  for (std::size_t p = 0; p < out.values.size(); ++p) out.values[p] = scalar(p, 0).real();
  return out;
}

TensorField to_complex(const RealField& f) {
  TensorField out(f.grid, {});
  for (std::size_t p = 0; p < f.values.size(); ++p) out(p, 0) = f.values[p];
  return out;
}

}  // namespace pluriflow
