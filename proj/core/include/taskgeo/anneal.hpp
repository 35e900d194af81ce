#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "taskgeo/maxent.hpp"
#include "taskgeo/mdp.hpp"

namespace taskgeo {

struct AnnealConfig {
  /// Thermodynamic speed.
  double eta = 1e-5;
  /// Ring-buffer capacity in transitions.
  int recency_n = 5000;
  double epsilon = 1e-8;
  double alpha_0 = 0.2;
  /// Autocovariance truncation; 0 selects recency_n / 2.
  int max_lag = 0;
  int steps_between_updates = 1;
  /// Runs stop once alpha falls to or below this floor.
  double alpha_min = 1e-3;
  /// Relative change in alpha that triggers a fresh policy solve.
  double resolve_threshold = 1e-3;

  int effective_max_lag() const { return max_lag > 0 ? max_lag : recency_n / 2; }
  /// Throws ConfigError unless eta >= 0, epsilon > 0, alpha_0 > 0 and
  /// recency_n > max_lag >= 1.
  void validate() const;
};

/// beta + eta / (beta * sqrt(zeta + epsilon)).
double mew_step(double beta, double zeta, double eta, double epsilon);

/// Lag-summed autocovariance of the centered reward window.
double scalar_friction(std::span<const double> rewards, int max_lag);

/// Temperature controller fed one reward per environment step. Updates start
/// once the recency buffer is full.
class MewController {
 public:
  explicit MewController(const AnnealConfig& config);

  void observe(double reward);
  bool ready() const noexcept { return filled_ == buffer_.size(); }

  struct Update {
    double zeta_raw;
    double zeta;  // clamped at zero
    double mean_reward;
    double delta_beta;
  };
  /// Estimates friction over the window and advances beta.
  Update update();

  double beta() const noexcept { return beta_; }
  double alpha() const noexcept { return 1.0 / beta_; }
  /// Rewards in arrival order.
  std::vector<double> window() const;

 private:
  AnnealConfig config_;
  std::vector<double> buffer_;
  std::size_t head_ = 0;
  std::size_t filled_ = 0;
  double beta_;
};

struct AnnealRecord {
  long step = 0;
  double alpha = 0.0;
  double beta = 0.0;
  double zeta = 0.0;
  double mean_reward = 0.0;
  double delta_beta = 0.0;
};

struct AnnealTrace {
  std::vector<AnnealRecord> records;
  double final_alpha = 0.0;
  /// "alpha_min" or "steps".
  std::string stop_reason;
  /// Policy in force at the end of the run.
  Eigen::MatrixXd final_policy;
  double mean_reward = 0.0;
};

/// Tabular MEW loop: sample transitions under the soft-optimal policy at the
/// current temperature, feed rewards to the controller, and re-solve when
/// alpha has drifted by resolve_threshold. Starts in state 0.
AnnealTrace run_anneal(const TabularMdp& mdp, const TaskParams& lambda,
                       const AnnealConfig& config, long total_env_steps, std::uint64_t seed);

/// Same loop driven by a fixed temperature schedule alpha(step).
AnnealTrace run_schedule(const TabularMdp& mdp, const TaskParams& lambda,
                         const std::function<double(long)>& alpha_of_step, long total_env_steps,
                         std::uint64_t seed, double resolve_threshold = 1e-3);

struct ScheduleResult {
  std::string schedule;
  std::uint64_t seed = 0;
  double final_alpha = 0.0;
  double target_alpha = 0.0;
  /// Reward rate of the final policy evaluated at target_alpha.
  double theta_at_target = 0.0;
  double mean_reward = 0.0;
};

struct ScheduleComparison {
  std::vector<ScheduleResult> rows;
  std::vector<AnnealTrace> mew_traces;  // one per seed
};

/// For each seed: MEW, a schedule linear in beta sharing MEW's start and end
/// temperatures, and one constant schedule per entry of `constant_alphas`.
/// The target temperature is MEW's final alpha for that seed.
ScheduleComparison compare_schedules(const TabularMdp& mdp, const TaskParams& lambda,
                                     const AnnealConfig& mew, const std::vector<double>& constant_alphas,
                                     long total_env_steps, const std::vector<std::uint64_t>& seeds,
                                     int threads = 0);

}  // namespace taskgeo
