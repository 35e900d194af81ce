#pragma once

#include <Eigen/Dense>
#include <optional>

#include "taskgeo/mdp.hpp"

namespace taskgeo {

struct SolverOptions {
  double tol = 1e-10;
  long max_iter = 100000;
  int anchor_state = 0;
  /// Warm start for the relative values; re-anchored before use.
  std::optional<Eigen::VectorXd> initial_bias;
};

/// Solution of the average-reward soft Bellman optimality system
///
///   Q(s,a) = r(s,a) - theta + sum_s' P(s'|s,a) V(s')
///   V(s)   = alpha * log sum_a exp(Q(s,a) / alpha)
///   pi(a|s) = exp((Q(s,a) - V(s)) / alpha),  V(anchor) = 0.
struct SoftSolution {
  double theta = 0.0;
  Eigen::VectorXd bias;
  Eigen::MatrixXd policy;  // states x actions
  double alpha = 0.0;
  double residual = 0.0;
  long iterations = 0;
};

/// Soft relative value iteration. Throws DomainError for alpha <= 0 and
/// ConvergenceError (carrying the last residual) when max_iter is exhausted.
SoftSolution solve_soft_avg(const TabularMdp& mdp, const TaskParams& lambda, double alpha,
                            const SolverOptions& options = {});

/// Sup-norm residual of the soft Bellman system at (theta, V).
double soft_bellman_residual(const TabularMdp& mdp, const TaskParams& lambda,
                             const SoftSolution& solution);

/// Throws unless every row of `policy` is a probability vector over actions.
void validate_policy(const TabularMdp& mdp, const Eigen::MatrixXd& policy);

/// State-action Markov chain M[(s,a) -> (s',a')] = P(s'|s,a) pi(a'|s'), kept
/// in factored form so that a step costs O(nnz(P) + S*A).
class PolicyChain {
 public:
  PolicyChain(const TabularMdp& mdp, Eigen::MatrixXd policy);

  int size() const noexcept { return static_cast<int>(kernel_.rows()); }
  const Eigen::MatrixXd& policy() const noexcept { return policy_; }

  /// Row-vector propagation: returns p M.
  Eigen::VectorXd push_forward(const Eigen::VectorXd& occupancy) const;

  /// Column-vector propagation: returns M f, i.e. E[f(s_1,a_1) | s_0, a_0].
  Eigen::VectorXd pull_back(const Eigen::VectorXd& f) const;

  Eigen::MatrixXd dense() const;

 private:
  TransitionKernel kernel_;
  Eigen::MatrixXd policy_;
  int n_actions_;
};

/// Dense chain matrix; rows sum to one.
Eigen::MatrixXd policy_chain(const TabularMdp& mdp, const Eigen::MatrixXd& policy);

struct StationaryOptions {
  /// Total-variation distance between successive iterates.
  double tol = 1e-12;
  long max_iter = 1000000;
  /// Lazy-chain mixing weight d: iterates with (1-d) M + d I. Same fixed points.
  double damping = 0.0;
};

struct StationaryDist {
  Eigen::VectorXd rho;  // over state-action pairs
  double residual = 0.0;
  long iterations = 0;
};

/// Power iteration from the uniform distribution.
StationaryDist stationary_distribution(const PolicyChain& chain,
                                       const StationaryOptions& options = {});
StationaryDist stationary_distribution(const Eigen::MatrixXd& chain,
                                       const StationaryOptions& options = {});

/// Total-variation distance between rho and rho M.
double stationarity_residual(const PolicyChain& chain, const Eigen::VectorXd& rho);

/// Entropy-regularized reward rate of an arbitrary (not necessarily optimal)
/// policy: sum_{s,a} rho(s,a) [r(s,a) - alpha log pi(a|s)].
double policy_reward_rate(const TabularMdp& mdp, const TaskParams& lambda, double alpha,
                          const Eigen::MatrixXd& policy, const StationaryOptions& options = {});

/// E_p[phi] for an occupancy over state-action pairs.
Eigen::VectorXd feature_means(const TabularMdp& mdp, const Eigen::VectorXd& occupancy);

}  // namespace taskgeo
