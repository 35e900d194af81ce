// One PASS/FAIL line per acceptance criterion; exit status 1 if any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "taskgeo/taskgeo.hpp"

using namespace taskgeo;

namespace {

// criterion 1
constexpr double kAlpha = 0.2;
constexpr int kMaxLag = 2000;
constexpr int kGridNodes = 41;
constexpr double kRidgeThreshold = 0.2;
constexpr double kRidgeContrast = 10.0;
constexpr double kSmoothingSigma = 0.1;
// criterion 2
constexpr double kLengthMargin = 0.05;
// criterion 3
constexpr int kRegretStages = 100;
// criterion 4
constexpr double kRatioLow = 0.8;
constexpr double kRatioHigh = 1.25;
constexpr double kRatioNoise = 0.05;
const std::vector<int> kRelaxLadder{20, 40, 80, 160};
// criterion 5
constexpr double kEstimatorRelTol = 1e-8;
// criterion 6
constexpr double kResidualTol = 1e-10;
constexpr double kShiftTol = 1e-9;
constexpr double kClosedFormTol = 1e-12;
// criterion 7
constexpr double kSlopeLow = 0.45;
constexpr double kSlopeHigh = 0.55;
// criterion 8
const std::vector<double> kEtaSweep{1e-7, 1e-6, 1e-5, 1e-4};
// criterion 9
constexpr double kSpeedDrift = 0.01;
constexpr int kSpeedSteps = 1000;

int failures = 0;

void report(int id, bool pass, const std::string& what, const std::string& detail) {
  std::printf("%s criterion %d: %s [%s]\n", pass ? "PASS" : "FAIL", id, what.c_str(), detail.c_str());
  std::fflush(stdout);
  if (!pass) ++failures;
}

std::string fmt(const char* pattern, auto... args) {
  char buffer[512];
  std::snprintf(buffer, sizeof buffer, pattern, args...);
  return buffer;
}

TaskParams vec(std::initializer_list<double> v) {
  TaskParams out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out(i++) = x;
  return out;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

struct Manifold {
  TabularMdp mdp;
  FrictionField field;
  ScalarField scalars;
  double seconds;
};

Manifold build_manifold() {
  const auto t0 = std::chrono::steady_clock::now();
  TabularMdp mdp = build_gridworld({});
  FieldOptions opts;
  opts.alpha = kAlpha;
  opts.max_lag = kMaxLag;
  FrictionField field = build_metric_field(mdp, LambdaGrid::uniform(2, -1.0, 1.0, kGridNodes), opts);
  ScalarField scalars = scalar_field(field, kSmoothingSigma);
  return {std::move(mdp), std::move(field), std::move(scalars), seconds_since(t0)};
}

void criterion1(const Manifold& m) {
  const auto& grid = m.field.grid;
  const auto& smooth = m.scalars.log_trace_smoothed;
  const auto peak = static_cast<std::size_t>(std::max_element(smooth.begin(), smooth.end()) - smooth.begin());
  const auto pi = grid.unravel(peak);
  const TaskParams p = grid.point(peak);
  const bool on_ridge = pi[0] == pi[1] && p(0) > kRidgeThreshold;

  double best = -1.0;
  double reflected = 0.0;
  TaskParams where;
  for (int i = 0; i < kGridNodes; ++i) {
    const std::size_t node = grid.ravel({i, i});
    if (grid.point(node)(0) <= kRidgeThreshold) continue;
    const double tr = m.scalars.trace[node];
    if (tr > best) {
      best = tr;
      reflected = m.scalars.trace[grid.ravel({i, kGridNodes - 1 - i})];
      where = grid.point(node);
    }
  }
  const double contrast = reflected > 0.0 ? best / reflected : INFINITY;
  report(1, on_ridge && contrast > kRidgeContrast,
         "smoothed log-trace peak on the positive ridge, ridge/reflected raw trace > 10",
         fmt("peak (%.3f, %.3f), ridge max %.4g at (%.2f, %.2f), reflected %.4g, contrast %.4g, field %.1f s",
             p(0), p(1), best, where(0), where(1), reflected, contrast, m.seconds));
}

void criterion2(const Manifold& m) {
  const auto& grid = m.field.grid;
  const TaskParams start = grid.point(grid.nearest(vec({0.8, -0.2})));
  const TaskParams end = grid.point(grid.nearest(vec({-0.2, 0.8})));
  const GraphPath path = geodesic_graph(m.field, start, end);
  const auto metric = field_metric(m.field);
  const double linear = path_length(linear_protocol(start, end, 100).points, metric);
  const bool shorter = path.length <= (1.0 - kLengthMargin) * linear;
  int touches = 0;
  std::string first;
  for (auto node : path.nodes) {
    const auto idx = grid.unravel(node);
    if (idx[0] == idx[1] && grid.point(node)(0) > 0.0) {
      if (touches++ == 0) first = fmt("(%.2f, %.2f)", grid.point(node)(0), grid.point(node)(1));
    }
  }
  report(2, shorter && touches == 0,
         "graph geodesic >= 5% shorter than the linear path and avoids positive diagonal cells",
         fmt("geodesic %.4f, linear %.4f, ratio %.4f, positive diagonal nodes on path %d%s%s", path.length,
             linear, path.length / linear, touches, touches ? ", first " : "", first.c_str()));
}

void criterion3(const Manifold& m) {
  const auto& grid = m.field.grid;
  const TaskParams start = grid.point(grid.nearest(vec({0.8, -0.2})));
  const TaskParams end = grid.point(grid.nearest(vec({-0.2, 0.8})));
  const Protocol geodesic = constant_speed_reparam(geodesic_graph(m.field, start, end), m.field, kRegretStages);
  const Protocol linear = linear_protocol(start, end, kRegretStages);
  const double geo = regret_along_protocol(m.mdp, geodesic, kAlpha).total();
  const double lin = regret_along_protocol(m.mdp, linear, kAlpha).total();
  report(3, geo < lin, "cumulative lag regret over 100 stages: geodesic < linear",
         fmt("geodesic %.6g, linear %.6g, ratio %.4f", geo, lin, geo / lin));
}

void criterion4(const Manifold& m) {
  const Protocol base = linear_protocol(vec({0.3, -0.3}), vec({0.8, 0.2}), 10);
  FieldOptions fo;
  fo.alpha = kAlpha;
  fo.max_lag = kMaxLag;
  fo.beta = 1.0 / kAlpha;
  std::vector<Eigen::MatrixXd> zeta;
  for (const auto& p : base.points) zeta.push_back(friction_at(m.mdp, p, fo).zeta);
  std::vector<double> ratios;
  std::string detail;
  for (int relax : kRelaxLadder) {
    const Protocol timed = base.rescaled(10.0 * relax);
    const MetricFn metric = [&](const TaskParams& p) {
      for (std::size_t k = 0; k < base.size(); ++k) {
        if (base.points[k] == p) return zeta[k];
      }
      return friction_at(m.mdp, p, fo).zeta;
    };
    RolloutOptions ro;
    ro.alpha = kAlpha;
    ro.relax_steps = relax;
    ro.driving = Driving::kContinuous;
    const double direct = excess_work_direct(nonequilibrium_rollout(m.mdp, timed, ro), timed);
    const double quadratic = excess_work_quadratic(timed, metric);
    ratios.push_back(direct / quadratic);
    detail += fmt("%sm=%d: %.4f", detail.empty() ? "" : ", ", relax, direct / quadratic);
  }
  bool pass = true;
  for (std::size_t i = 0; i < ratios.size(); ++i) {
    pass = pass && ratios[i] >= kRatioLow && ratios[i] <= kRatioHigh;
    if (i > 0) pass = pass && std::abs(ratios[i] - 1.0) <= std::abs(ratios[i - 1] - 1.0) + kRatioNoise;
  }
  report(4, pass, "W_direct/W_quadratic in [0.8, 1.25] for m >= 20, |ratio - 1| non-increasing within 0.05",
         detail);
}

void criterion5() {
  std::mt19937_64 rng(11);
  std::normal_distribution<double> normal(0.0, 1.0);
  double worst = 0.0;
  int cases = 0;
  auto check = [&](const std::vector<double>& x, int lag) {
    const double got = friction_sampled(x, lag);
    const double ref = oracle::lag_sum_direct(x, lag);
    const double scale = std::max(std::abs(ref), 1e-300);
    worst = std::max(worst, std::abs(got - ref) / scale);
    ++cases;
  };
  for (int n : {16, 100, 1000}) {
    std::vector<double> noise(static_cast<std::size_t>(n));
    double prev = 0.0;
    for (auto& v : noise) v = prev = 0.6 * prev + normal(rng);
    std::vector<double> alternating(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) alternating[static_cast<std::size_t>(i)] = i % 2 ? -1.0 : 1.0;
    for (int lag : {1, 10, n / 2}) {
      check(noise, lag);
      check(alternating, lag);
    }
  }
  const double constant = friction_sampled(std::vector<double>(256, 3.0), 64);
  report(5, worst <= kEstimatorRelTol && constant == 0.0,
         "FFT lag-sum estimator matches the direct sum within 1e-8 relative",
         fmt("%d cases, worst relative error %.3g, constant series %.3g", cases, worst, constant));
}

void criterion6() {
  const auto mdp = build_gridworld({});
  double residual = 0.0;
  for (auto l : {vec({1, 1}), vec({1, -1}), vec({-0.5, 0.3}), vec({0.2, 0.2}), vec({0, 0})}) {
    residual = std::max(residual, solve_soft_avg(mdp, l, kAlpha).residual);
  }
  Eigen::MatrixXd phi(mdp.n_pairs(), 3);
  phi << mdp.features(), Eigen::VectorXd::Ones(mdp.n_pairs());
  const TabularMdp shifted(mdp.n_states(), mdp.n_actions(), mdp.kernel(), phi);
  double shift = 0.0;
  for (double c : {-2.0, 0.5, 7.0}) {
    const auto a = solve_soft_avg(mdp, vec({0.6, -0.3}), kAlpha);
    const auto b = solve_soft_avg(shifted, vec({0.6, -0.3, c}), kAlpha);
    shift = std::max(shift, (a.policy - b.policy).cwiseAbs().maxCoeff());
  }
  const TabularMdp single(1, 2, std::vector<double>{1.0, 1.0}, Eigen::MatrixXd::Ones(2, 1));
  double closed = 0.0;
  for (double r0 : {-1.0, 0.0, 2.5}) {
    for (double alpha : {0.05, 0.2, 1.0}) {
      closed = std::max(closed, std::abs(solve_soft_avg(single, vec({r0}), alpha).theta - (r0 + alpha * std::log(2.0))));
    }
  }
  report(6, residual <= kResidualTol && shift <= kShiftTol && closed <= kClosedFormTol,
         "soft Bellman residual, shift invariance, single-state closed form",
         fmt("residual %.3g, policy shift %.3g, closed form %.3g", residual, shift, closed));
}

void criterion7() {
  AnnealConfig cfg;
  cfg.recency_n = 1000;
  cfg.max_lag = 50;
  cfg.eta = 1.0;
  cfg.alpha_0 = kAlpha;
  MewController controller(cfg);
  std::mt19937_64 rng(2024);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (int i = 0; i < cfg.recency_n; ++i) controller.observe(normal(rng));
  std::vector<double> xs;
  std::vector<double> ys;
  long next_sample = 1000;
  for (long k = 1; k <= 100000; ++k) {
    controller.observe(normal(rng));
    controller.update();
    if (k == next_sample) {
      xs.push_back(std::log(static_cast<double>(k)));
      ys.push_back(std::log(controller.beta()));
      next_sample = static_cast<long>(std::llround(static_cast<double>(next_sample) * 1.2589254117941673));
    }
  }
  const double n = static_cast<double>(xs.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sx += xs[i];
    sy += ys[i];
    sxx += xs[i] * xs[i];
    sxy += xs[i] * ys[i];
  }
  const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  report(7, slope >= kSlopeLow && slope <= kSlopeHigh,
         "log-log slope of beta vs update count on a constant-variance stream in [0.45, 0.55]",
         fmt("slope %.4f over %zu samples, k in [1e3, 1e5]", slope, xs.size()));
}

void criterion8() {
  const auto mdp = build_gridworld({});
  bool monotone = true;
  bool ordered = true;
  std::string detail;
  for (std::uint64_t seed : {0u, 1u, 2u}) {
    std::vector<double> finals;
    for (double eta : kEtaSweep) {
      AnnealConfig cfg;
      cfg.eta = eta;
      cfg.steps_between_updates = 10;
      const auto trace = run_anneal(mdp, vec({1.0, 0.5}), cfg, 20000, seed);
      for (std::size_t i = 1; i < trace.records.size(); ++i) {
        monotone = monotone && trace.records[i].alpha < trace.records[i - 1].alpha;
      }
      monotone = monotone && !trace.records.empty() && trace.records.front().alpha < cfg.alpha_0;
      finals.push_back(trace.final_alpha);
    }
    for (std::size_t i = 1; i < finals.size(); ++i) ordered = ordered && finals[i] < finals[i - 1];
    detail += fmt("%sseed %d:", detail.empty() ? "" : "; ", static_cast<int>(seed));
    for (double a : finals) detail += fmt(" %.6g", a);
  }
  report(8, monotone && ordered, "alpha strictly decreasing per run, final alpha strictly ordered in eta",
         fmt("monotone %s, ordered %s, final alpha per eta {1e-7..1e-4}: %s", monotone ? "yes" : "no",
             ordered ? "yes" : "no", detail.c_str()));
}

void criterion9() {
  const auto domain = LambdaGrid::uniform(2, -3.0, 3.0, 3);
  const TaskParams x0 = vec({0.0, 0.0});
  const TaskParams v0 = vec({0.3, 0.4});
  constexpr double h = 1e-5;
  // local one-step error from several points on the analytic geodesic
  auto local_error = [&](double dt) {
    double worst = 0.0;
    for (double t0 : {0.0, 1.0, 3.0, 6.0}) {
      const auto s = oracle::conformal_geodesic(x0, v0, t0);
      const auto shot = geodesic_shoot(oracle::conformal_metric, domain, s.x, s.v, dt, 1, h);
      worst = std::max(worst, (shot.protocol.points.back() - oracle::conformal_geodesic(x0, v0, t0 + dt).x).norm());
    }
    return worst;
  };
  const double dt = 0.1;
  const double e1 = local_error(dt);
  const double e2 = local_error(dt / 2);
  const auto shot = geodesic_shoot(oracle::conformal_metric, domain, x0, v0, 0.01, kSpeedSteps, h);
  const double s0 = metric_speed(oracle::conformal_metric, x0, v0);
  double drift = 0.0;
  for (std::size_t k = 0; k < shot.protocol.size(); ++k) {
    drift = std::max(drift, std::abs(metric_speed(oracle::conformal_metric, shot.protocol.points[k], shot.velocities[k]) - s0) / s0);
  }
  const bool complete = !shot.exited && shot.protocol.size() == static_cast<std::size_t>(kSpeedSteps) + 1;
  report(9, e1 <= std::pow(dt, 4) && e1 / e2 >= 16.0 && complete && drift <= kSpeedDrift,
         "conformal geodesic: per-step error O(dt^4), metric speed conserved within 1% over 1000 steps",
         fmt("step error %.3g at dt=0.1 (bound %.3g), order ratio %.1f, speed drift %.3g, steps %zu",
             e1, std::pow(dt, 4), e1 / e2, drift, shot.protocol.size() - 1));
}

}  // namespace

int main() {
  const auto t0 = std::chrono::steady_clock::now();
  const Manifold manifold = build_manifold();
  criterion1(manifold);
  criterion2(manifold);
  criterion3(manifold);
  criterion4(manifold);
  criterion5();
  criterion6();
  criterion7();
  criterion8();
  criterion9();
  std::printf("%d of 9 criteria failed, %.1f s\n", failures, seconds_since(t0));
  return failures == 0 ? 0 : 1;
}
