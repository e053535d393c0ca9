#include "pluriflow/field/chart_grid.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "pluriflow/common.hpp"

namespace pluriflow {

ChartGrid::ChartGrid(int n, int points_per_axis, double period)
    : ChartGrid(n, std::vector<int>(2 * n, points_per_axis), std::vector<double>(2 * n, period)) {}

ChartGrid::ChartGrid(int n, std::vector<int> points_per_axis, std::vector<double> periods)
    : n_(n), points_(std::move(points_per_axis)), periods_(std::move(periods)) {
  if (n_ < 1 || n_ > 2) throw InvalidArgumentError("complex dimension must be 1 or 2");
  if (points_.size() != static_cast<std::size_t>(2 * n_) ||
      periods_.size() != static_cast<std::size_t>(2 * n_)) {
    throw InvalidArgumentError("need one resolution and one period per real axis");
  }
  for (int a = 0; a < 2 * n_; ++a) {
    if (points_[a] < 8 || points_[a] % 2 != 0) {
      throw InvalidArgumentError("points per axis must be even and at least 8, got " +
                                 std::to_string(points_[a]));
    }
    if (!(periods_[a] > 0.0)) throw InvalidArgumentError("periods must be positive");
  }
  finalize();
}

void ChartGrid::finalize() {
  const int d = 2 * n_;
  strides_.assign(d, 1);
  for (int a = d - 2; a >= 0; --a) strides_[a] = strides_[a + 1] * points_[a + 1];
  total_ = strides_[0] * points_[0];
}

double ChartGrid::min_spacing() const {
  double h = spacing(0);
  for (int a = 1; a < real_dim(); ++a) h = std::min(h, spacing(a));
  return h;
}

double ChartGrid::min_period() const {
  return *std::min_element(periods_.begin(), periods_.end());
}

double ChartGrid::distance(std::size_t point, const std::vector<double>& center) const {
  double r2 = 0.0;
  for (int a = 0; a < real_dim(); ++a) {
    double dx = coordinate(point, a) - center[a];
    dx -= periods_[a] * std::round(dx / periods_[a]);
    r2 += dx * dx;
  }
  return std::sqrt(r2);
}

void require_same_grid(const ChartGrid& a, const ChartGrid& b, const char* what) {
  if (a != b) throw GridMismatchError(std::string("grid mismatch: ") + what);
}

}  // namespace pluriflow
