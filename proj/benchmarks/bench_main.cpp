#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "taskgeo/taskgeo.hpp"

using namespace taskgeo;

namespace {

TaskParams point(double a, double b) {
  TaskParams p(2);
  p << a, b;
  return p;
}

std::vector<double> ar1(int n) {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> x(static_cast<std::size_t>(n));
  double prev = 0.0;
  for (auto& v : x) v = prev = 0.8 * prev + normal(rng);
  return x;
}

void BM_SolveGridworld(benchmark::State& state) {
  GridWorldSpec spec;
  spec.width = spec.height = static_cast<int>(state.range(0));
  spec.feature_corners = {{0, 0}, {spec.height - 1, spec.width - 1}};
  const auto mdp = build_gridworld(spec);
  for (auto _ : state) benchmark::DoNotOptimize(solve_soft_avg(mdp, point(0.6, -0.3), 0.2).theta);
}
BENCHMARK(BM_SolveGridworld)->Arg(3)->Arg(7)->Arg(15)->Unit(benchmark::kMillisecond);

void BM_FrictionAtNode(benchmark::State& state) {
  const auto mdp = build_gridworld({});
  FieldOptions opts;
  opts.max_lag = static_cast<int>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(friction_at(mdp, point(0.5, 0.5), opts).zeta(0, 0));
}
BENCHMARK(BM_FrictionAtNode)->Arg(200)->Arg(2000)->Unit(benchmark::kMillisecond);

void BM_ScalarAutocovariance(benchmark::State& state) {
  const auto x = ar1(static_cast<int>(state.range(0)));
  const int lag = static_cast<int>(state.range(0) / 2);
  for (auto _ : state) benchmark::DoNotOptimize(friction_sampled(x, lag));
}
BENCHMARK(BM_ScalarAutocovariance)->Arg(1000)->Arg(5000)->Arg(50000)->Unit(benchmark::kMicrosecond);

void BM_MultivariateFriction(benchmark::State& state) {
  const auto a = ar1(static_cast<int>(state.range(0)));
  Eigen::MatrixXd series(a.size(), 2);
  for (std::size_t i = 0; i < a.size(); ++i) {
    series(static_cast<Eigen::Index>(i), 0) = a[i];
    series(static_cast<Eigen::Index>(i), 1) = a[(i * 7) % a.size()];
  }
  for (auto _ : state) benchmark::DoNotOptimize(friction_sampled(series, 100).zeta(0, 1));
}
BENCHMARK(BM_MultivariateFriction)->Arg(1000)->Arg(10000)->Unit(benchmark::kMicrosecond);

void BM_GraphGeodesic(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  FrictionField field;
  field.grid = LambdaGrid::uniform(2, -1.0, 1.0, n);
  for (std::size_t i = 0; i < field.grid.size(); ++i) {
    const TaskParams p = field.grid.point(i);
    field.tensors.push_back((1.0 + 4.0 * std::exp(-p.squaredNorm() / 0.1)) * Eigen::MatrixXd::Identity(2, 2));
  }
  for (auto _ : state) {
    benchmark::DoNotOptimize(geodesic_graph(field, point(-1, -0.5), point(1, 0.5)).length);
  }
}
BENCHMARK(BM_GraphGeodesic)->Arg(41)->Arg(101)->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();
