#pragma once

#include <Eigen/Dense>
#include <span>
#include <vector>

#include "taskgeo/grid.hpp"
#include "taskgeo/maxent.hpp"
#include "taskgeo/mdp.hpp"

namespace taskgeo {

/// Lag-summed covariance of the conjugate forces, i.e. the metric on task space.
struct FrictionTensor {
  Eigen::MatrixXd zeta;
  int truncation_lag = 0;
  double beta = 1.0;
  /// Smallest eigenvalue of the symmetrized sum before negative eigenvalues
  /// were clamped to zero.
  double min_eigenvalue_raw = 0.0;
  /// Frobenius norm of the last lag term; small values mean the truncated
  /// sum has converged.
  double tail = 0.0;

  double trace() const { return zeta.trace(); }
};

/// zeta_ij = beta * sum_{t=0}^{T} E_rho[ dphi_i(s_t,a_t) dphi_j(s_0,a_0) ], with
/// features centered under rho and the pair chain driven by solution.policy.
/// Throws DomainError when rho is not stationary (TV residual above
/// `stationarity_tol`).
FrictionTensor friction_exact(const TabularMdp& mdp, const SoftSolution& solution,
                              const StationaryDist& stationary, int max_lag, double beta = 1.0,
                              double stationarity_tol = 1e-8);

/// Population-convention lagged covariances of a centered multivariate
/// series (rows are time steps):
///   c_ij(t) = (1/N) sum_{k=0}^{N-1-t} dx_i(k+t) dx_j(k),  t = 0..max_lag.
/// Computed through zero-padded FFTs.
std::vector<Eigen::MatrixXd> lagged_covariances(const Eigen::MatrixXd& series, int max_lag);

/// Scalar version of lagged_covariances.
std::vector<double> autocovariance(std::span<const double> series, int max_lag);

/// Empirical friction: symmetrized sum_{t=0}^{T} c(t). Requires N > T >= 1.
FrictionTensor friction_sampled(const Eigen::MatrixXd& series, int max_lag);
double friction_sampled(std::span<const double> series, int max_lag);

/// Per-node diagnostics recorded while building a friction field.
struct NodeDiagnostics {
  double theta = 0.0;
  double solver_residual = 0.0;
  long solver_iterations = 0;
  double stationary_residual = 0.0;
  double min_eigenvalue_raw = 0.0;
  double tail = 0.0;
};

/// One friction tensor per node of a LambdaGrid.
struct FrictionField {
  LambdaGrid grid;
  std::vector<Eigen::MatrixXd> tensors;
  std::vector<NodeDiagnostics> diagnostics;  // empty for imported fields

  void validate() const;
  int dim() const noexcept { return grid.dim(); }

  /// Multilinear interpolation of the tensor field. DomainError outside the grid.
  Eigen::MatrixXd interpolate(const TaskParams& lambda) const;
};

struct ScalarField {
  std::vector<double> trace;
  std::vector<double> log_trace;
  std::vector<double> log_trace_smoothed;
};

constexpr double kTraceFloor = 1e-12;

/// Reduces each tensor to log Tr(zeta) (trace floored at kTraceFloor). The
/// smoothed channel is log of the Gaussian-filtered trace field, with `sigma`
/// in lambda units and reflective boundaries.
ScalarField scalar_field(const FrictionField& field, double sigma);

/// Separable Gaussian filter over an N-d grid (reflect boundary, kernel
/// truncated at four standard deviations). `sigma_cells` is per axis.
std::vector<double> gaussian_filter(const std::vector<double>& values,
                                    const std::vector<int>& shape,
                                    const std::vector<double>& sigma_cells);

}  // namespace taskgeo
