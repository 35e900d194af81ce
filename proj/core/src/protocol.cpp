#include "taskgeo/protocol.hpp"

#include <string>

#include "taskgeo/error.hpp"

namespace taskgeo {

namespace {

// Stages are solved from the caller's starting bias rather than the previous
// stage's: on the symmetric ridge the antisymmetric bias mode contracts only
// sublinearly, so warm starts from an off-ridge neighbour can stall.
SoftSolution solve_stage(const TabularMdp& mdp, const TaskParams& lambda, double alpha,
                         const SolverOptions& options, std::size_t stage) {
  try {
    return solve_soft_avg(mdp, lambda, alpha, options);
  } catch (const ConvergenceError& e) {
    throw ConvergenceError("stage " + std::to_string(stage) + ": " + e.what(), e.residual(),
                           e.iterations());
  }
}

void check_dimension(const TabularMdp& mdp, const Protocol& protocol) {
  protocol.validate();
  if (protocol.dim() != mdp.feature_dim()) {
    throw DimensionError("protocol dimension differs from the MDP feature dimension");
  }
}

}  // namespace

Protocol linear_protocol(const TaskParams& start, const TaskParams& end, int n_steps) {
  if (start.size() != end.size()) throw DimensionError("protocol endpoints differ in dimension");
  if (n_steps < 1) throw ConfigError("linear protocol needs at least one step");
  Protocol out;
  for (int k = 0; k <= n_steps; ++k) {
    const double t = static_cast<double>(k) / n_steps;
    out.times.push_back(t);
    out.points.push_back(k == n_steps ? end : TaskParams(start + t * (end - start)));
  }
  return out;
}

double excess_work_quadratic(const Protocol& protocol, const MetricFn& metric) {
  protocol.validate();
  const std::size_t n = protocol.size();
  if (n < 2) return 0.0;
  const auto& t = protocol.times;
  const auto& x = protocol.points;

  std::vector<double> integrand(n);
  for (std::size_t k = 0; k < n; ++k) {
    Eigen::VectorXd velocity;
    if (k == 0) {
      velocity = (x[1] - x[0]) / (t[1] - t[0]);
    } else if (k + 1 == n) {
      velocity = (x[k] - x[k - 1]) / (t[k] - t[k - 1]);
    } else {
      // three-point derivative on a non-uniform mesh
      const double hl = t[k] - t[k - 1];
      const double hr = t[k + 1] - t[k];
      velocity = (hl * hl * (x[k + 1] - x[k]) + hr * hr * (x[k] - x[k - 1])) /
                 (hl * hr * (hl + hr));
    }
    integrand[k] = velocity.dot(metric(x[k]) * velocity);
  }
  double total = 0.0;
  for (std::size_t k = 1; k < n; ++k) {
    total += 0.5 * (t[k] - t[k - 1]) * (integrand[k] + integrand[k - 1]);
  }
  return total;
}

double excess_work_quadratic(const Protocol& protocol, const FrictionField& field) {
  return excess_work_quadratic(protocol, field_metric(field));
}

RolloutRecord nonequilibrium_rollout(const TabularMdp& mdp, const Protocol& protocol,
                                     const RolloutOptions& options) {
  check_dimension(mdp, protocol);
  if (options.relax_steps < 1) throw ConfigError("relax_steps must be at least 1");

  RolloutRecord record;
  SoftSolution current =
      solve_stage(mdp, protocol.points.front(), options.alpha, options.solver, 0);
  Eigen::VectorXd rho =
      stationary_distribution(PolicyChain(mdp, current.policy), options.stationary).rho;
  Eigen::VectorXd occupancy = rho;
  record.occupancy.push_back(occupancy);
  record.equilibrium_means.push_back(feature_means(mdp, rho));
  record.instantaneous_means.push_back(feature_means(mdp, occupancy));
  record.theta_star.push_back(current.theta);

  const int m = options.relax_steps;
  for (std::size_t k = 1; k < protocol.size(); ++k) {
    const TaskParams& from = protocol.points[k - 1];
    const TaskParams& to = protocol.points[k];
    if (options.driving == Driving::kContinuous) {
      for (int j = 1; j <= m; ++j) {
        const TaskParams lambda =
            j == m ? to : TaskParams(from + (static_cast<double>(j) / m) * (to - from));
        current = solve_stage(mdp, lambda, options.alpha, options.solver, k);
        occupancy = PolicyChain(mdp, current.policy).push_forward(occupancy);
      }
    } else {
      current = solve_stage(mdp, to, options.alpha, options.solver, k);
      const PolicyChain chain(mdp, current.policy);
      for (int j = 0; j < m; ++j) occupancy = chain.push_forward(occupancy);
    }
    occupancy /= occupancy.sum();
    rho = stationary_distribution(PolicyChain(mdp, current.policy), options.stationary).rho;
    record.occupancy.push_back(occupancy);
    record.equilibrium_means.push_back(feature_means(mdp, rho));
    record.instantaneous_means.push_back(feature_means(mdp, occupancy));
    record.theta_star.push_back(current.theta);
  }
  return record;
}

double excess_work_direct(const RolloutRecord& record, const Protocol& protocol) {
  if (record.size() != protocol.size()) {
    throw DimensionError("rollout record and protocol have different stage counts");
  }
  double total = 0.0;
  for (std::size_t k = 1; k < protocol.size(); ++k) {
    const Eigen::VectorXd step = protocol.points[k] - protocol.points[k - 1];
    total += step.dot(record.equilibrium_means[k] - record.instantaneous_means[k]);
  }
  return total;
}

RegretTrace regret_along_protocol(const TabularMdp& mdp, const Protocol& protocol, double alpha,
                                  const SolverOptions& solver,
                                  const StationaryOptions& stationary) {
  check_dimension(mdp, protocol);
  RegretTrace trace;
  SoftSolution previous = solve_stage(mdp, protocol.points.front(), alpha, solver, 0);
  trace.stage.push_back(0.0);
  trace.cumulative.push_back(0.0);
  trace.theta_star.push_back(previous.theta);
  for (std::size_t k = 1; k < protocol.size(); ++k) {
    SoftSolution current = solve_stage(mdp, protocol.points[k], alpha, solver, k);
    const double lagged =
        policy_reward_rate(mdp, protocol.points[k], alpha, previous.policy, stationary);
    const double regret = current.theta - lagged;
    trace.stage.push_back(regret);
    trace.cumulative.push_back(trace.cumulative.back() + regret);
    trace.theta_star.push_back(current.theta);
    previous = std::move(current);
  }
  return trace;
}

}  // namespace taskgeo
