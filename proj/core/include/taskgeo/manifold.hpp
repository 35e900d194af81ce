#pragma once

#include <Eigen/Dense>
#include <functional>
#include <vector>

#include "taskgeo/friction.hpp"
#include "taskgeo/grid.hpp"
#include "taskgeo/maxent.hpp"
#include "taskgeo/mdp.hpp"

namespace taskgeo {

/// Metric tensor as a function of task parameters.
using MetricFn = std::function<Eigen::MatrixXd(const TaskParams&)>;

/// Time-ordered curriculum lambda(t_k).
struct Protocol {
  std::vector<double> times;
  std::vector<TaskParams> points;

  std::size_t size() const noexcept { return times.size(); }
  int dim() const { return points.empty() ? 0 : static_cast<int>(points.front().size()); }
  double duration() const { return times.empty() ? 0.0 : times.back() - times.front(); }

  /// Throws ConfigError unless times are strictly increasing and all points
  /// share one dimension.
  void validate() const;

  /// Same path traversed end to start, on the mirrored time axis.
  Protocol reversed() const;
  /// Affine time rescaling onto [0, duration].
  Protocol rescaled(double duration) const;
};

struct FieldOptions {
  double alpha = 0.2;
  int max_lag = 2000;
  double beta = 1.0;
  SolverOptions solver{};
  StationaryOptions stationary{};
  /// Worker threads for node solves; 0 means hardware concurrency.
  int threads = 0;
};

/// Solve, find the stationary pair distribution and compute friction_exact at
/// one task point.
FrictionTensor friction_at(const TabularMdp& mdp, const TaskParams& lambda,
                           const FieldOptions& options, NodeDiagnostics* diagnostics = nullptr);

/// Friction tensor at every grid node, solved in parallel. Output does not
/// depend on the thread count. A node failure is rethrown naming the node.
FrictionField build_metric_field(const TabularMdp& mdp, const LambdaGrid& grid,
                                 const FieldOptions& options = {});

MetricFn field_metric(const FrictionField& field);

struct GraphOptions {
  /// Also allow moves that change several coordinates by one cell.
  bool diagonal_moves = false;
};

struct GraphPath {
  std::vector<std::size_t> nodes;
  std::vector<TaskParams> points;
  double length = 0.0;
};

/// Riemannian length of the straight edge between two nodes, using the mean
/// of the endpoint tensors.
double edge_length(const FrictionField& field, std::size_t from, std::size_t to);

/// Dijkstra shortest path between the grid nodes nearest to `start` and `end`.
/// Equal-cost ties resolve to the lower node index.
GraphPath geodesic_graph(const FrictionField& field, const TaskParams& start,
                         const TaskParams& end, const GraphOptions& options = {});

/// Riemannian length of a polyline, each segment weighted by the mean metric
/// of its endpoints.
double path_length(const std::vector<TaskParams>& points, const MetricFn& metric);

/// Resample a polyline on `n_steps` uniform time steps over [0, 1] so that
/// metric speed is constant: each segment receives time proportional to its
/// Riemannian length. A single-point path yields a single-sample protocol.
/// Segments shorter than one time step may receive no sample of their own.
Protocol constant_speed_reparam(const std::vector<TaskParams>& path, const MetricFn& metric,
                                int n_steps);
Protocol constant_speed_reparam(const GraphPath& path, const FrictionField& field, int n_steps);

/// Christoffel symbols of the second kind: result[k](i, j) = Gamma^k_ij.
using Christoffel = std::vector<Eigen::MatrixXd>;

constexpr double kMaxMetricCondition = 1e12;

/// Gamma^k_ij = 1/2 g^{kl} (d_i g_lj + d_j g_li - d_l g_ij) with central
/// differences of step h. Throws DegenerateMetricError when g(lambda) is not
/// positive definite or its condition number exceeds kMaxMetricCondition.
Christoffel christoffel_fd(const MetricFn& metric, const TaskParams& lambda, double h);

struct ShootResult {
  Protocol protocol;
  std::vector<TaskParams> velocities;
  /// True when integration stopped because the next step would leave the
  /// domain (shrunk by the finite-difference step).
  bool exited = false;
};

/// Integrates lambda'' + Gamma(lambda)[lambda', lambda'] = 0 with classical RK4.
ShootResult geodesic_shoot(const MetricFn& metric, const LambdaGrid& domain,
                           const TaskParams& start, const TaskParams& velocity, double dt,
                           int n_steps, double h);

/// sqrt(v^T g(lambda) v)
double metric_speed(const MetricFn& metric, const TaskParams& lambda, const TaskParams& velocity);

}  // namespace taskgeo
