#pragma once

#include <Eigen/Dense>
#include <Eigen/SparseCore>
#include <vector>

namespace taskgeo {

/// Reward weights lambda; one entry per feature.
using TaskParams = Eigen::VectorXd;

/// Rewards indexed as (state, action).
using RewardTable = Eigen::MatrixXd;

/// Transition kernel stored as a (states*actions) x states sparse matrix.
/// Row s*n_actions + a holds P(.|s, a).
using TransitionKernel = Eigen::SparseMatrix<double, Eigen::RowMajor>;

/// Finite MDP with a linear reward parameterization r(s,a) = lambda . phi(s,a).
///
/// State-action pairs are flattened as s * n_actions + a everywhere in the
/// library (features, occupancies, chain matrices). Instances are immutable.
class TabularMdp {
 public:
  /// `transitions` is a dense row-major P[s][a][s'] buffer of size S*A*S;
  /// `features` has one row per state-action pair.
  TabularMdp(int n_states, int n_actions, const std::vector<double>& transitions,
             Eigen::MatrixXd features);

  TabularMdp(int n_states, int n_actions, TransitionKernel kernel, Eigen::MatrixXd features);

  int n_states() const noexcept { return n_states_; }
  int n_actions() const noexcept { return n_actions_; }
  int n_pairs() const noexcept { return n_states_ * n_actions_; }
  int feature_dim() const noexcept { return static_cast<int>(features_.cols()); }

  int pair_index(int s, int a) const noexcept { return s * n_actions_ + a; }

  double transition(int s, int a, int next) const;
  const TransitionKernel& kernel() const noexcept { return kernel_; }
  const Eigen::MatrixXd& features() const noexcept { return features_; }

  /// Dense P[s][a][s'] buffer, row-major.
  std::vector<double> dense_transitions() const;

 private:
  void validate() const;

  int n_states_;
  int n_actions_;
  TransitionKernel kernel_;
  Eigen::MatrixXd features_;
};

struct GridCell {
  int row = 0;
  int col = 0;

  friend bool operator==(const GridCell&, const GridCell&) = default;
};

/// Deterministic cardinal-move gridworld; feature i is the one-hot indicator of
/// the cell feature_corners[i].
struct GridWorldSpec {
  int width = 7;
  int height = 7;
  std::vector<GridCell> feature_corners{{0, 0}, {6, 6}};

  void validate() const;
};

/// Action order used by build_gridworld.
enum class Move : int { kUp = 0, kDown = 1, kLeft = 2, kRight = 3 };

TabularMdp build_gridworld(const GridWorldSpec& spec);

/// r[s][a] = sum_i lambda_i phi_i(s, a).
RewardTable linear_reward(const TabularMdp& mdp, const TaskParams& lambda);

/// Same rewards flattened over state-action pairs.
Eigen::VectorXd pair_rewards(const TabularMdp& mdp, const TaskParams& lambda);

}  // namespace taskgeo
