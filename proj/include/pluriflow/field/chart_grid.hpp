#pragma once

#include <array>
#include <cstddef>
#include <vector>

namespace pluriflow {

/// Periodic complex chart. Real axes are ordered (x1, y1, x2, y2, ...), with
/// z^i = x^i + i y^i. Points are stored row-major, last axis fastest.
class ChartGrid {
 public:
  ChartGrid() = default;

  /// Same resolution and period on every real axis.
  ChartGrid(int n, int points_per_axis, double period = 1.0);
  ChartGrid(int n, std::vector<int> points_per_axis, std::vector<double> periods);

  int n() const { return n_; }
  int real_dim() const { return 2 * n_; }
  int points(int axis) const { return points_[axis]; }
  double period(int axis) const { return periods_[axis]; }
  double spacing(int axis) const { return periods_[axis] / points_[axis]; }
  double min_spacing() const;
  double min_period() const;
  std::size_t num_points() const { return total_; }
  std::size_t stride(int axis) const { return strides_[axis]; }

  const std::vector<int>& points_per_axis() const { return points_; }
  const std::vector<double>& periods() const { return periods_; }

  int coordinate_index(std::size_t point, int axis) const {
    return static_cast<int>((point / strides_[axis]) % static_cast<std::size_t>(points_[axis]));
  }
  double coordinate(std::size_t point, int axis) const {
    return coordinate_index(point, axis) * spacing(axis);
  }

  /// Minimal-image flat distance between a grid point and an arbitrary location.
  double distance(std::size_t point, const std::vector<double>& center) const;

  bool operator==(const ChartGrid& other) const {
    return n_ == other.n_ && points_ == other.points_ && periods_ == other.periods_;
  }
  bool operator!=(const ChartGrid& other) const { return !(*this == other); }

 private:
  void finalize();

  int n_ = 0;
  std::vector<int> points_;
  std::vector<double> periods_;
  std::vector<std::size_t> strides_;
  std::size_t total_ = 0;
};

void require_same_grid(const ChartGrid& a, const ChartGrid& b, const char* what);

}  // namespace pluriflow
