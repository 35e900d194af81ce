#include "taskgeo/anneal.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <random>
#include <sstream>
#include <thread>

#include "taskgeo/error.hpp"
#include "taskgeo/friction.hpp"

namespace taskgeo {

void AnnealConfig::validate() const {
  if (!(eta >= 0.0) || !std::isfinite(eta)) throw ConfigError("eta must be finite and >= 0");
  if (!(epsilon > 0.0)) throw ConfigError("epsilon must be positive");
  if (!(alpha_0 > 0.0) || !std::isfinite(alpha_0)) throw ConfigError("alpha_0 must be positive");
  if (!(alpha_min >= 0.0)) throw ConfigError("alpha_min must be non-negative");
  if (steps_between_updates < 1) throw ConfigError("steps_between_updates must be >= 1");
  if (!(resolve_threshold >= 0.0)) throw ConfigError("resolve_threshold must be non-negative");
  const int lag = effective_max_lag();
  if (lag < 1 || recency_n <= lag) throw ConfigError("need recency_n > max_lag >= 1");
}

double mew_step(double beta, double zeta, double eta, double epsilon) {
  if (!std::isfinite(beta) || !std::isfinite(zeta) || !std::isfinite(eta) ||
      !std::isfinite(epsilon)) {
    throw DomainError("mew_step received a non-finite input");
  }
  if (!(beta > 0.0)) throw DomainError("beta must be positive");
  if (zeta < 0.0) throw DomainError("friction estimate must be non-negative");
  if (!(zeta + epsilon > 0.0)) throw DomainError("zeta + epsilon must be positive");
  return beta + eta / (beta * std::sqrt(zeta + epsilon));
}

double scalar_friction(std::span<const double> rewards, int max_lag) {
  return friction_sampled(rewards, max_lag);
}

MewController::MewController(const AnnealConfig& config)
    : config_(config), buffer_(static_cast<std::size_t>(config.recency_n), 0.0),
      beta_(1.0 / config.alpha_0) {
  config_.validate();
}

void MewController::observe(double reward) {
  buffer_[head_] = reward;
  head_ = (head_ + 1) % buffer_.size();
  filled_ = std::min(filled_ + 1, buffer_.size());
}

std::vector<double> MewController::window() const {
  std::vector<double> out;
  out.reserve(filled_);
  const std::size_t start = ready() ? head_ : 0;
  for (std::size_t i = 0; i < filled_; ++i) out.push_back(buffer_[(start + i) % buffer_.size()]);
  return out;
}

MewController::Update MewController::update() {
  if (!ready()) throw Error("recency buffer is not full yet");
  const std::vector<double> rewards = window();
  Update out{};
  out.zeta_raw = scalar_friction(rewards, config_.effective_max_lag());
  // truncated lag sums of noisy streams can dip below zero
  out.zeta = std::max(out.zeta_raw, 0.0);
  double sum = 0.0;
  for (double r : rewards) sum += r;
  out.mean_reward = sum / static_cast<double>(rewards.size());
  const double next = mew_step(beta_, out.zeta, config_.eta, config_.epsilon);
  out.delta_beta = next - beta_;
  beta_ = next;
  return out;
}

namespace {

// Single walker on the MDP, drawing uniforms from the top 53 bits so the
// sample path does not depend on the standard library's distributions.
class Walker {
 public:
  Walker(const TabularMdp& mdp, const TaskParams& lambda, double alpha, std::uint64_t seed,
         double resolve_threshold)
      : mdp_(mdp), lambda_(lambda), rewards_(pair_rewards(mdp, lambda)), rng_(seed),
        threshold_(resolve_threshold) {
    solve(alpha);
  }

  double step() {
    const int n_actions = mdp_.n_actions();
    int action = n_actions - 1;
    double u = uniform();
    for (int a = 0; a < n_actions; ++a) {
      u -= solution_.policy(state_, a);
      if (u < 0.0) {
        action = a;
        break;
      }
    }
    const int pair = mdp_.pair_index(state_, action);
    const double reward = rewards_(pair);
    double v = uniform();
    int next = -1;
    for (TransitionKernel::InnerIterator it(mdp_.kernel(), pair); it; ++it) {
      next = static_cast<int>(it.col());
      v -= it.value();
      if (v < 0.0) break;
    }
    state_ = next;
    return reward;
  }

  bool set_alpha(double alpha) {
    if (std::abs(alpha - solved_alpha_) < threshold_ * solved_alpha_) return false;
    solve(alpha);
    return true;
  }

  void solve(double alpha) {
    try {
      solution_ = solve_soft_avg(mdp_, lambda_, alpha);
    } catch (const ConvergenceError& e) {
      std::ostringstream os;
      os << "solve failed at alpha = " << alpha << ": " << e.context();
      throw ConvergenceError(os.str(), e.residual(), e.iterations());
    }
    solved_alpha_ = alpha;
  }

  const SoftSolution& solution() const noexcept { return solution_; }

 private:
  double uniform() { return static_cast<double>(rng_() >> 11) * 0x1.0p-53; }

  const TabularMdp& mdp_;
  TaskParams lambda_;
  Eigen::VectorXd rewards_;
  std::mt19937_64 rng_;
  double threshold_;
  SoftSolution solution_;
  double solved_alpha_ = 0.0;
  int state_ = 0;
};

void finish(AnnealTrace& trace, Walker& walker, double alpha, double reward_sum, long steps) {
  walker.solve(alpha);
  trace.final_alpha = alpha;
  trace.final_policy = walker.solution().policy;
  trace.mean_reward = steps > 0 ? reward_sum / static_cast<double>(steps) : 0.0;
}

}  // namespace

AnnealTrace run_anneal(const TabularMdp& mdp, const TaskParams& lambda,
                       const AnnealConfig& config, long total_env_steps, std::uint64_t seed) {
  config.validate();
  if (total_env_steps < 0) throw ConfigError("total_env_steps must be non-negative");
  MewController controller(config);
  Walker walker(mdp, lambda, config.alpha_0, seed, config.resolve_threshold);
  AnnealTrace trace;
  trace.stop_reason = "steps";
  double reward_sum = 0.0;
  long step = 0;
  while (step < total_env_steps) {
    const double reward = walker.step();
    ++step;
    reward_sum += reward;
    controller.observe(reward);
    if (!controller.ready() || step % config.steps_between_updates != 0) continue;
    const auto update = controller.update();
    trace.records.push_back({step, controller.alpha(), controller.beta(), update.zeta,
                             update.mean_reward, update.delta_beta});
    if (controller.alpha() <= config.alpha_min) {
      trace.stop_reason = "alpha_min";
      break;
    }
    walker.set_alpha(controller.alpha());
  }
  finish(trace, walker, controller.alpha(), reward_sum, step);
  return trace;
}

AnnealTrace run_schedule(const TabularMdp& mdp, const TaskParams& lambda,
                         const std::function<double(long)>& alpha_of_step, long total_env_steps,
                         std::uint64_t seed, double resolve_threshold) {
  if (total_env_steps < 0) throw ConfigError("total_env_steps must be non-negative");
  double alpha = alpha_of_step(0);
  if (!(alpha > 0.0)) throw DomainError("schedule temperature must be positive");
  Walker walker(mdp, lambda, alpha, seed, resolve_threshold);
  AnnealTrace trace;
  trace.stop_reason = "steps";
  double reward_sum = 0.0;
  for (long step = 0; step < total_env_steps; ++step) {
    alpha = alpha_of_step(step);
    if (!(alpha > 0.0)) throw DomainError("schedule temperature must be positive");
    if (walker.set_alpha(alpha)) {
      trace.records.push_back({step, alpha, 1.0 / alpha, 0.0, 0.0, 0.0});
    }
    reward_sum += walker.step();
  }
  finish(trace, walker, alpha, reward_sum, total_env_steps);
  return trace;
}

ScheduleComparison compare_schedules(const TabularMdp& mdp, const TaskParams& lambda,
                                     const AnnealConfig& mew,
                                     const std::vector<double>& constant_alphas,
                                     long total_env_steps, const std::vector<std::uint64_t>& seeds,
                                     int threads) {
  mew.validate();
  for (double a : constant_alphas) {
    if (!(a > 0.0)) throw ConfigError("constant schedule temperatures must be positive");
  }
  const std::size_t per_seed = 2 + constant_alphas.size();
  ScheduleComparison out;
  out.rows.resize(seeds.size() * per_seed);
  out.mew_traces.resize(seeds.size());

  auto run_seed = [&](std::size_t i) {
    const std::uint64_t seed = seeds[i];
    AnnealTrace trace = run_anneal(mdp, lambda, mew, total_env_steps, seed);
    const double target = trace.final_alpha;
    auto row = [&](const std::string& name, const AnnealTrace& t) {
      ScheduleResult r;
      r.schedule = name;
      r.seed = seed;
      r.final_alpha = t.final_alpha;
      r.target_alpha = target;
      r.theta_at_target = policy_reward_rate(mdp, lambda, target, t.final_policy);
      r.mean_reward = t.mean_reward;
      return r;
    };
    std::size_t slot = i * per_seed;
    out.rows[slot++] = row("mew", trace);

    const double beta_0 = 1.0 / mew.alpha_0;
    const double beta_1 = 1.0 / target;
    const long last = std::max(total_env_steps - 1, 1L);
    auto linear_beta = [&](long step) {
      return 1.0 / (beta_0 + (beta_1 - beta_0) * static_cast<double>(step) / last);
    };
    out.rows[slot++] = row("linear_beta", run_schedule(mdp, lambda, linear_beta, total_env_steps,
                                                       seed, mew.resolve_threshold));
    for (double a : constant_alphas) {
      std::ostringstream name;
      name << "constant_" << a;
      out.rows[slot++] = row(name.str(), run_schedule(mdp, lambda, [a](long) { return a; },
                                                      total_env_steps, seed, mew.resolve_threshold));
    }
    out.mew_traces[i] = std::move(trace);
  };

  std::atomic<std::size_t> next{0};
  std::mutex failure_mutex;
  std::size_t failed = seeds.size();
  std::exception_ptr failure;
  auto worker = [&] {
    for (std::size_t i = next++; i < seeds.size(); i = next++) {
      try {
        run_seed(i);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (i < failed) {
          failed = i;
          failure = std::current_exception();
        }
      }
    }
  };
  unsigned count = threads > 0 ? static_cast<unsigned>(threads)
                               : std::max(1u, std::thread::hardware_concurrency());
  count = static_cast<unsigned>(std::min<std::size_t>(count, std::max<std::size_t>(seeds.size(), 1)));
  std::vector<std::thread> pool;
  for (unsigned i = 1; i < count; ++i) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
  return out;
}

}  // namespace taskgeo
