#pragma once

#include <cstddef>
#include <vector>

#include "taskgeo/mdp.hpp"

namespace taskgeo {

/// Regular tensor-product grid over task parameters. Node coordinates include
/// both range endpoints; node index order is lexicographic with axis 0 slowest.
struct LambdaGrid {
  std::vector<double> lower;
  std::vector<double> upper;
  std::vector<int> resolution;

  /// `dim` axes over [lo, hi] with `nodes` nodes each.
  static LambdaGrid uniform(int dim, double lo, double hi, int nodes);

  void validate() const;

  int dim() const noexcept { return static_cast<int>(resolution.size()); }
  std::size_t size() const;
  double spacing(int axis) const;
  double coordinate(int axis, int index) const;

  std::vector<int> unravel(std::size_t node) const;
  std::size_t ravel(const std::vector<int>& index) const;
  TaskParams point(std::size_t node) const;

  bool contains(const TaskParams& lambda, double tol = 1e-12) const;
  /// Closest node (per-axis rounding). Throws DomainError outside the grid.
  std::size_t nearest(const TaskParams& lambda) const;
};

}  // namespace taskgeo
