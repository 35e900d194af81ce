#pragma once

#include <Eigen/Dense>
#include <vector>

#include "taskgeo/friction.hpp"
#include "taskgeo/manifold.hpp"
#include "taskgeo/maxent.hpp"
#include "taskgeo/mdp.hpp"

namespace taskgeo {

/// n_steps + 1 evenly spaced samples on the segment, times in [0, 1].
Protocol linear_protocol(const TaskParams& start, const TaskParams& end, int n_steps);

/// Trapezoid rule for int lambda_dot^T g(lambda) lambda_dot dt, with velocities
/// from second-order central differences (one-sided at the ends).
double excess_work_quadratic(const Protocol& protocol, const MetricFn& metric);
double excess_work_quadratic(const Protocol& protocol, const FrictionField& field);

enum class Driving {
  /// Policy held at the stage's optimum for all relaxation steps.
  kStepwise,
  /// Relaxation step j of stage k uses the optimum at
  /// lambda_{k-1} + (j+1)/m (lambda_k - lambda_{k-1}).
  kContinuous,
};

struct RolloutOptions {
  double alpha = 0.2;
  int relax_steps = 20;
  Driving driving = Driving::kStepwise;
  SolverOptions solver{};
  StationaryOptions stationary{};
};

/// Entry k describes the end of curriculum stage k; entry 0 is the
/// equilibrium start.
struct RolloutRecord {
  std::vector<Eigen::VectorXd> occupancy;
  std::vector<Eigen::VectorXd> equilibrium_means;
  std::vector<Eigen::VectorXd> instantaneous_means;
  std::vector<double> theta_star;

  std::size_t size() const noexcept { return occupancy.size(); }
};

/// Propagates the pair occupancy through the curriculum, starting from the
/// stationary distribution at the first sample.
RolloutRecord nonequilibrium_rollout(const TabularMdp& mdp, const Protocol& protocol,
                                     const RolloutOptions& options = {});

/// sum_k dlambda_k^T (E_eq[phi](lambda_k) - E_{p_k}[phi]).
double excess_work_direct(const RolloutRecord& record, const Protocol& protocol);

struct RegretTrace {
  std::vector<double> stage;
  std::vector<double> cumulative;
  std::vector<double> theta_star;

  double total() const { return cumulative.empty() ? 0.0 : cumulative.back(); }
};

/// Lag regret theta*(lambda_k) - theta^{pi_{k-1}}(lambda_k), where pi_{k-1} is
/// optimal for the previous stage. Stage 0 has zero regret.
RegretTrace regret_along_protocol(const TabularMdp& mdp, const Protocol& protocol, double alpha,
                                  const SolverOptions& solver = {},
                                  const StationaryOptions& stationary = {});

}  // namespace taskgeo
