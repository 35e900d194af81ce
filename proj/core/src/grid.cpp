#include "taskgeo/grid.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "taskgeo/error.hpp"

namespace taskgeo {

LambdaGrid LambdaGrid::uniform(int dim, double lo, double hi, int nodes) {
  LambdaGrid grid;
  grid.lower.assign(static_cast<std::size_t>(dim), lo);
  grid.upper.assign(static_cast<std::size_t>(dim), hi);
  grid.resolution.assign(static_cast<std::size_t>(dim), nodes);
  grid.validate();
  return grid;
}

void LambdaGrid::validate() const {
  if (resolution.empty()) throw ConfigError("lambda grid needs at least one axis");
  if (lower.size() != resolution.size() || upper.size() != resolution.size()) {
    throw ConfigError("lambda grid bounds and resolution disagree in dimension");
  }
  for (std::size_t axis = 0; axis < resolution.size(); ++axis) {
    if (resolution[axis] < 2) throw ConfigError("lambda grid needs >= 2 nodes per axis");
    if (!(upper[axis] > lower[axis]) || !std::isfinite(lower[axis]) ||
        !std::isfinite(upper[axis])) {
      throw ConfigError("degenerate lambda range on axis " + std::to_string(axis));
    }
  }
}

std::size_t LambdaGrid::size() const {
  std::size_t n = 1;
  for (int r : resolution) n *= static_cast<std::size_t>(r);
  return n;
}

double LambdaGrid::spacing(int axis) const {
  const auto a = static_cast<std::size_t>(axis);
  return (upper[a] - lower[a]) / (resolution[a] - 1);
}

double LambdaGrid::coordinate(int axis, int index) const {
  const auto a = static_cast<std::size_t>(axis);
  if (index == resolution[a] - 1) return upper[a];
  return lower[a] + index * spacing(axis);
}

std::vector<int> LambdaGrid::unravel(std::size_t node) const {
  std::vector<int> index(resolution.size());
  for (std::size_t axis = resolution.size(); axis-- > 0;) {
    const auto r = static_cast<std::size_t>(resolution[axis]);
    index[axis] = static_cast<int>(node % r);
    node /= r;
  }
  return index;
}

std::size_t LambdaGrid::ravel(const std::vector<int>& index) const {
  if (index.size() != resolution.size()) throw DimensionError("grid index dimension mismatch");
  std::size_t node = 0;
  for (std::size_t axis = 0; axis < resolution.size(); ++axis) {
    if (index[axis] < 0 || index[axis] >= resolution[axis]) {
      throw DomainError("grid index out of range");
    }
    node = node * static_cast<std::size_t>(resolution[axis]) +
           static_cast<std::size_t>(index[axis]);
  }
  return node;
}

TaskParams LambdaGrid::point(std::size_t node) const {
  const auto index = unravel(node);
  TaskParams lambda(dim());
  for (int axis = 0; axis < dim(); ++axis) {
    lambda(axis) = coordinate(axis, index[static_cast<std::size_t>(axis)]);
  }
  return lambda;
}

bool LambdaGrid::contains(const TaskParams& lambda, double tol) const {
  if (lambda.size() != dim()) return false;
  for (int axis = 0; axis < dim(); ++axis) {
    const auto a = static_cast<std::size_t>(axis);
    if (!(lambda(axis) >= lower[a] - tol && lambda(axis) <= upper[a] + tol)) return false;
  }
  return true;
}

std::size_t LambdaGrid::nearest(const TaskParams& lambda) const {
  if (lambda.size() != dim()) throw DimensionError("task parameter dimension mismatch");
  if (!contains(lambda, 1e-9)) throw DomainError("point lies outside the lambda grid");
  std::vector<int> index(resolution.size());
  for (int axis = 0; axis < dim(); ++axis) {
    const auto a = static_cast<std::size_t>(axis);
    const double u = (lambda(axis) - lower[a]) / spacing(axis);
    index[a] = std::clamp(static_cast<int>(std::lround(u)), 0, resolution[a] - 1);
  }
  return ravel(index);
}

}  // namespace taskgeo
