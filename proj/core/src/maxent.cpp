#include "taskgeo/maxent.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "taskgeo/error.hpp"

namespace taskgeo {

namespace {

constexpr double kPolicyRowTolerance = 1e-10;

// W[s] = alpha * logsumexp_a(Q[s,a] / alpha), evaluated with a max shift.
Eigen::VectorXd soft_max_values(const Eigen::VectorXd& q, int n_states, int n_actions,
                                double alpha) {
  Eigen::VectorXd out(n_states);
  for (int s = 0; s < n_states; ++s) {
    const auto row = q.segment(static_cast<Eigen::Index>(s) * n_actions, n_actions);
    const double top = row.maxCoeff();
    out(s) = top + alpha * std::log(((row.array() - top) / alpha).exp().sum());
  }
  return out;
}

void check_temperature(double alpha) {
  if (!(alpha > 0.0) || !std::isfinite(alpha)) {
    throw DomainError("temperature must be positive and finite, got " + std::to_string(alpha));
  }
}

template <typename Step>
StationaryDist power_iterate(int size, Step&& step, const StationaryOptions& options) {
  if (!(options.damping >= 0.0 && options.damping < 1.0)) {
    throw DomainError("damping must lie in [0, 1)");
  }
  StationaryDist out;
  Eigen::VectorXd rho = Eigen::VectorXd::Constant(size, 1.0 / size);
  double residual = 0.0;
  for (long it = 1; it <= options.max_iter; ++it) {
    Eigen::VectorXd next = step(rho);
    if (options.damping > 0.0) next = (1.0 - options.damping) * next + options.damping * rho;
    next /= next.sum();
    residual = 0.5 * (next - rho).cwiseAbs().sum();
    rho.swap(next);
    if (residual <= options.tol) {
      out.rho = std::move(rho);
      out.residual = residual;
      out.iterations = it;
      return out;
    }
  }
  throw ConvergenceError("stationary distribution did not converge", residual, options.max_iter);
}

}  // namespace

SoftSolution solve_soft_avg(const TabularMdp& mdp, const TaskParams& lambda, double alpha,
                            const SolverOptions& options) {
  check_temperature(alpha);
  const int n_states = mdp.n_states();
  const int n_actions = mdp.n_actions();
  const int anchor = options.anchor_state;
  if (anchor < 0 || anchor >= n_states) throw ConfigError("anchor state out of range");

  const Eigen::VectorXd rewards = pair_rewards(mdp, lambda);
  const auto& kernel = mdp.kernel();

  Eigen::VectorXd bias = Eigen::VectorXd::Zero(n_states);
  if (options.initial_bias) {
    if (options.initial_bias->size() != n_states) {
      throw DimensionError("initial bias must have one entry per state");
    }
    bias = options.initial_bias->array() - (*options.initial_bias)(anchor);
  }

  double residual = std::numeric_limits<double>::infinity();
  for (long it = 1; it <= options.max_iter; ++it) {
    const Eigen::VectorXd q = rewards + kernel * bias;
    const Eigen::VectorXd w = soft_max_values(q, n_states, n_actions, alpha);
    const double theta = w(anchor);
    const Eigen::VectorXd next = w.array() - theta;
    // sup |W(V) - theta - V| is exactly the Bellman residual at (theta, V)
    residual = (next - bias).cwiseAbs().maxCoeff();
    if (residual <= options.tol) {
      SoftSolution sol;
      sol.theta = theta;
      sol.alpha = alpha;
      sol.residual = residual;
      sol.iterations = it;
      sol.policy.resize(n_states, n_actions);
      for (int s = 0; s < n_states; ++s) {
        const auto row = q.segment(static_cast<Eigen::Index>(s) * n_actions, n_actions);
        const double top = row.maxCoeff();
        Eigen::ArrayXd e = ((row.array() - top) / alpha).exp();
        sol.policy.row(s) = (e / e.sum()).matrix().transpose();
      }
      sol.bias = bias;
      return sol;
    }
    bias = next;
  }
  throw ConvergenceError("soft relative value iteration did not converge", residual,
                         options.max_iter);
}

double soft_bellman_residual(const TabularMdp& mdp, const TaskParams& lambda,
                             const SoftSolution& solution) {
  check_temperature(solution.alpha);
  const Eigen::VectorXd q = pair_rewards(mdp, lambda).array() - solution.theta +
                            (mdp.kernel() * solution.bias).array();
  const Eigen::VectorXd w =
      soft_max_values(q, mdp.n_states(), mdp.n_actions(), solution.alpha);
  return (w - solution.bias).cwiseAbs().maxCoeff();
}

void validate_policy(const TabularMdp& mdp, const Eigen::MatrixXd& policy) {
  if (policy.rows() != mdp.n_states() || policy.cols() != mdp.n_actions()) {
    throw DimensionError("policy must be a states x actions table");
  }
  for (int s = 0; s < policy.rows(); ++s) {
    if ((policy.row(s).array() < 0.0).any() || !policy.row(s).allFinite()) {
      throw DomainError("policy row " + std::to_string(s) + " has invalid probabilities");
    }
    if (std::abs(policy.row(s).sum() - 1.0) > kPolicyRowTolerance) {
      throw DomainError("policy row " + std::to_string(s) + " does not sum to one");
    }
  }
}

PolicyChain::PolicyChain(const TabularMdp& mdp, Eigen::MatrixXd policy)
    : kernel_(mdp.kernel()), policy_(std::move(policy)), n_actions_(mdp.n_actions()) {
  validate_policy(mdp, policy_);
}

Eigen::VectorXd PolicyChain::push_forward(const Eigen::VectorXd& occupancy) const {
  if (occupancy.size() != size()) throw DimensionError("occupancy size mismatch");
  const Eigen::VectorXd state_mass = kernel_.transpose() * occupancy;
  Eigen::VectorXd out(size());
  for (Eigen::Index s = 0; s < state_mass.size(); ++s) {
    out.segment(s * n_actions_, n_actions_) = state_mass(s) * policy_.row(s).transpose();
  }
  return out;
}

Eigen::VectorXd PolicyChain::pull_back(const Eigen::VectorXd& f) const {
  if (f.size() != size()) throw DimensionError("function size mismatch");
  Eigen::VectorXd state_value(policy_.rows());
  for (Eigen::Index s = 0; s < state_value.size(); ++s) {
    state_value(s) = policy_.row(s).dot(f.segment(s * n_actions_, n_actions_));
  }
  return kernel_ * state_value;
}

Eigen::MatrixXd PolicyChain::dense() const {
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(size(), size());
  for (int row = 0; row < kernel_.outerSize(); ++row) {
    for (TransitionKernel::InnerIterator it(kernel_, row); it; ++it) {
      const Eigen::Index next = it.col();
      m.row(row).segment(next * n_actions_, n_actions_) += it.value() * policy_.row(next);
    }
  }
  return m;
}

Eigen::MatrixXd policy_chain(const TabularMdp& mdp, const Eigen::MatrixXd& policy) {
  return PolicyChain(mdp, policy).dense();
}

StationaryDist stationary_distribution(const PolicyChain& chain,
                                       const StationaryOptions& options) {
  return power_iterate(
      chain.size(), [&](const Eigen::VectorXd& rho) { return chain.push_forward(rho); }, options);
}

StationaryDist stationary_distribution(const Eigen::MatrixXd& chain,
                                       const StationaryOptions& options) {
  if (chain.rows() != chain.cols() || chain.rows() == 0) {
    throw DimensionError("chain matrix must be square and non-empty");
  }
  const Eigen::MatrixXd transposed = chain.transpose();
  return power_iterate(
      static_cast<int>(chain.rows()),
      [&](const Eigen::VectorXd& rho) -> Eigen::VectorXd { return transposed * rho; }, options);
}

double stationarity_residual(const PolicyChain& chain, const Eigen::VectorXd& rho) {
  return 0.5 * (chain.push_forward(rho) - rho).cwiseAbs().sum();
}

double policy_reward_rate(const TabularMdp& mdp, const TaskParams& lambda, double alpha,
                          const Eigen::MatrixXd& policy, const StationaryOptions& options) {
  check_temperature(alpha);
  const PolicyChain chain(mdp, policy);
  const StationaryDist stationary = stationary_distribution(chain, options);
  const Eigen::VectorXd rewards = pair_rewards(mdp, lambda);

  double rate = 0.0;
  for (int s = 0; s < mdp.n_states(); ++s) {
    for (int a = 0; a < mdp.n_actions(); ++a) {
      const double mass = stationary.rho(mdp.pair_index(s, a));
      const double p = policy(s, a);
      // 0 log 0 = 0
      const double entropy_term = p > 0.0 ? -alpha * std::log(p) : 0.0;
      rate += mass * (rewards(mdp.pair_index(s, a)) + entropy_term);
    }
  }
  return rate;
}

Eigen::VectorXd feature_means(const TabularMdp& mdp, const Eigen::VectorXd& occupancy) {
  if (occupancy.size() != mdp.n_pairs()) throw DimensionError("occupancy size mismatch");
  return mdp.features().transpose() * occupancy;
}

}  // namespace taskgeo
