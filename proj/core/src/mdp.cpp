#include "taskgeo/mdp.hpp"

#include <cmath>
#include <string>

#include "taskgeo/error.hpp"

namespace taskgeo {

namespace {

constexpr double kRowSumTolerance = 1e-12;

TransitionKernel kernel_from_dense(int n_states, int n_actions,
                                   const std::vector<double>& transitions) {
  if (n_states <= 0 || n_actions <= 0) {
    throw ConfigError("MDP needs at least one state and one action");
  }
  const auto expected = static_cast<std::size_t>(n_states) * n_actions * n_states;
  if (transitions.size() != expected) {
    throw DimensionError("transition buffer has " + std::to_string(transitions.size()) +
                         " entries, expected " + std::to_string(expected));
  }
  std::vector<Eigen::Triplet<double>> triplets;
  for (int row = 0; row < n_states * n_actions; ++row) {
    for (int next = 0; next < n_states; ++next) {
      const double p = transitions[static_cast<std::size_t>(row) * n_states + next];
      if (p != 0.0) triplets.emplace_back(row, next, p);
    }
  }
  TransitionKernel kernel(n_states * n_actions, n_states);
  kernel.setFromTriplets(triplets.begin(), triplets.end());
  kernel.makeCompressed();
  return kernel;
}

}  // namespace

TabularMdp::TabularMdp(int n_states, int n_actions, const std::vector<double>& transitions,
                       Eigen::MatrixXd features)
    : TabularMdp(n_states, n_actions, kernel_from_dense(n_states, n_actions, transitions),
                 std::move(features)) {}

TabularMdp::TabularMdp(int n_states, int n_actions, TransitionKernel kernel,
                       Eigen::MatrixXd features)
    : n_states_(n_states),
      n_actions_(n_actions),
      kernel_(std::move(kernel)),
      features_(std::move(features)) {
  kernel_.makeCompressed();
  validate();
}

void TabularMdp::validate() const {
  if (n_states_ <= 0 || n_actions_ <= 0) {
    throw ConfigError("MDP needs at least one state and one action");
  }
  if (kernel_.rows() != n_pairs() || kernel_.cols() != n_states_) {
    throw DimensionError("transition kernel must be (states*actions) x states");
  }
  if (features_.rows() != n_pairs()) {
    throw DimensionError("feature matrix needs one row per state-action pair");
  }
  if (features_.cols() == 0) throw DimensionError("feature dimension must be positive");
  if (!features_.allFinite()) throw DomainError("features must be finite");

  for (int row = 0; row < kernel_.outerSize(); ++row) {
    double sum = 0.0;
    for (TransitionKernel::InnerIterator it(kernel_, row); it; ++it) {
      if (!(it.value() >= 0.0) || !std::isfinite(it.value())) {
        throw ConfigError("negative or non-finite transition probability in row " +
                          std::to_string(row));
      }
      sum += it.value();
    }
    if (std::abs(sum - 1.0) > kRowSumTolerance) {
      throw ConfigError("transition row " + std::to_string(row) + " sums to " +
                        std::to_string(sum));
    }
  }
}

double TabularMdp::transition(int s, int a, int next) const {
  return kernel_.coeff(pair_index(s, a), next);
}

std::vector<double> TabularMdp::dense_transitions() const {
  std::vector<double> dense(static_cast<std::size_t>(n_pairs()) * n_states_, 0.0);
  for (int row = 0; row < kernel_.outerSize(); ++row) {
    for (TransitionKernel::InnerIterator it(kernel_, row); it; ++it) {
      dense[static_cast<std::size_t>(row) * n_states_ + it.col()] = it.value();
    }
  }
  return dense;
}

void GridWorldSpec::validate() const {
  if (width <= 0 || height <= 0) throw ConfigError("grid dimensions must be positive");
  if (feature_corners.empty()) throw ConfigError("gridworld needs at least one feature cell");
  for (std::size_t i = 0; i < feature_corners.size(); ++i) {
    const auto& c = feature_corners[i];
    if (c.row < 0 || c.row >= height || c.col < 0 || c.col >= width) {
      throw ConfigError("feature cell (" + std::to_string(c.row) + "," + std::to_string(c.col) +
                        ") lies outside the grid");
    }
    for (std::size_t j = 0; j < i; ++j) {
      if (feature_corners[j] == c) throw ConfigError("duplicate feature cell");
    }
  }
}

TabularMdp build_gridworld(const GridWorldSpec& spec) {
  spec.validate();
  constexpr int kActions = 4;
  constexpr int kRowStep[kActions] = {-1, 1, 0, 0};
  constexpr int kColStep[kActions] = {0, 0, -1, 1};

  const int n_states = spec.width * spec.height;
  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(static_cast<std::size_t>(n_states) * kActions);
  for (int row = 0; row < spec.height; ++row) {
    for (int col = 0; col < spec.width; ++col) {
      const int s = row * spec.width + col;
      for (int a = 0; a < kActions; ++a) {
        int r = row + kRowStep[a];
        int c = col + kColStep[a];
        // walls clamp
        if (r < 0 || r >= spec.height || c < 0 || c >= spec.width) {
          r = row;
          c = col;
        }
        triplets.emplace_back(s * kActions + a, r * spec.width + c, 1.0);
      }
    }
  }
  TransitionKernel kernel(n_states * kActions, n_states);
  kernel.setFromTriplets(triplets.begin(), triplets.end());

  const int dim = static_cast<int>(spec.feature_corners.size());
  Eigen::MatrixXd features = Eigen::MatrixXd::Zero(n_states * kActions, dim);
  for (int i = 0; i < dim; ++i) {
    const auto& cell = spec.feature_corners[static_cast<std::size_t>(i)];
    const int s = cell.row * spec.width + cell.col;
    for (int a = 0; a < kActions; ++a) features(s * kActions + a, i) = 1.0;
  }
  return TabularMdp(n_states, kActions, std::move(kernel), std::move(features));
}

Eigen::VectorXd pair_rewards(const TabularMdp& mdp, const TaskParams& lambda) {
  if (lambda.size() != mdp.feature_dim()) {
    throw DimensionError("task parameters have dimension " + std::to_string(lambda.size()) +
                         ", MDP features have " + std::to_string(mdp.feature_dim()));
  }
  return mdp.features() * lambda;
}

RewardTable linear_reward(const TabularMdp& mdp, const TaskParams& lambda) {
  const Eigen::VectorXd flat = pair_rewards(mdp, lambda);
  RewardTable table(mdp.n_states(), mdp.n_actions());
  for (int s = 0; s < mdp.n_states(); ++s) {
    for (int a = 0; a < mdp.n_actions(); ++a) table(s, a) = flat(mdp.pair_index(s, a));
  }
  return table;
}

}  // namespace taskgeo
