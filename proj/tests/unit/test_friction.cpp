#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "taskgeo/taskgeo.hpp"

using namespace taskgeo;

namespace {

TaskParams vec(std::initializer_list<double> v) {
  TaskParams out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out(i++) = x;
  return out;
}

TabularMdp with_extra_column(const TabularMdp& mdp, const Eigen::VectorXd& column) {
  Eigen::MatrixXd phi(mdp.n_pairs(), mdp.feature_dim() + 1);
  phi << mdp.features(), column;
  return TabularMdp(mdp.n_states(), mdp.n_actions(), mdp.kernel(), phi);
}

FrictionTensor exact_at(const TabularMdp& mdp, const TaskParams& l, int max_lag, double alpha = 0.2) {
  FieldOptions opts;
  opts.alpha = alpha;
  opts.max_lag = max_lag;
  return friction_at(mdp, l, opts);
}

std::vector<double> noise(std::size_t n, unsigned seed, double sigma = 1.0) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> dist(0.0, sigma);
  std::vector<double> x(n);
  for (auto& v : x) v = dist(rng);
  return x;
}

}  // namespace

TEST(FrictionExact, ConstantFeatureHasZeroRowAndColumn) {
  const auto mdp = with_extra_column(build_gridworld({}), Eigen::VectorXd::Constant(196, 2.0));
  const auto z = exact_at(mdp, vec({0.4, -0.3, 1.0}), 200).zeta;
  for (int k = 0; k < 3; ++k) {
    EXPECT_NEAR(z(2, k), 0.0, 1e-14);
    EXPECT_NEAR(z(k, 2), 0.0, 1e-14);
  }
}

TEST(FrictionExact, SingleStateActionIndicators) {
  Eigen::MatrixXd phi(2, 2);
  phi << 1, 0, 0, 1;
  const TabularMdp mdp(1, 2, std::vector<double>{1, 1}, phi);
  SoftSolution sol = solve_soft_avg(mdp, vec({0.0, 0.0}), 0.5);
  const PolicyChain chain(mdp, sol.policy);
  const auto rho = stationary_distribution(chain);
  const auto z = friction_exact(mdp, sol, rho, 25);
  Eigen::MatrixXd expected(2, 2);
  expected << 0.25, -0.25, -0.25, 0.25;
  EXPECT_LT((z.zeta - expected).cwiseAbs().maxCoeff(), 1e-15);
  const auto ref = oracle::friction_by_powers(chain.dense(), rho.rho, phi, 25);
  EXPECT_LT((z.zeta - ref).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(FrictionExact, GridworldMatchesMatrixPowers) {
  const auto mdp = build_gridworld({});
  for (auto l : {vec({0.3, 0.3}), vec({0.6, -0.4}), vec({0.05, 0.1})}) {
    const auto sol = solve_soft_avg(mdp, l, 0.2);
    const PolicyChain chain(mdp, sol.policy);
    const auto rho = stationary_distribution(chain);
    for (double beta : {1.0, 5.0}) {
      const auto z = friction_exact(mdp, sol, rho, 60, beta);
      const auto ref = oracle::friction_by_powers(chain.dense(), rho.rho, mdp.features(), 60, beta);
      EXPECT_LT((z.zeta - ref).cwiseAbs().maxCoeff(), 1e-10 * std::max(1.0, ref.norm()))
          << l.transpose();
      EXPECT_EQ(z.truncation_lag, 60);
      EXPECT_EQ(z.beta, beta);
    }
  }
}

TEST(FrictionExact, RejectsNonStationaryRho) {
  const auto mdp = build_gridworld({});
  const auto sol = solve_soft_avg(mdp, vec({1, -1}), 0.2);
  StationaryDist bogus;
  bogus.rho = Eigen::VectorXd::Constant(196, 1.0 / 196);
  EXPECT_THROW(friction_exact(mdp, sol, bogus, 10), DomainError);
}

TEST(FrictionExact, DiagonalDominatesReflectedPoint) {
  const auto mdp = build_gridworld({});
  for (double x : {0.2, 0.4, 0.6, 0.8, 1.0}) {
    const double diag = exact_at(mdp, vec({x, x}), 2000).trace();
    const double off = exact_at(mdp, vec({x, -x}), 2000).trace();
    EXPECT_GE(diag, 10.0 * off) << x;
  }
}

TEST(FrictionExact, SymmetricAndPositiveSemidefinite) {
  const auto mdp = build_gridworld({});
  for (auto l : {vec({0.5, 0.5}), vec({-0.3, 0.8}), vec({0.0, 0.0})}) {
    const auto z = exact_at(mdp, l, 2000);
    EXPECT_LT((z.zeta - z.zeta.transpose()).cwiseAbs().maxCoeff(), 1e-9);
    EXPECT_GE(z.min_eigenvalue_raw, -1e-8 * z.trace());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(z.zeta);
    EXPECT_GE(eig.eigenvalues().minCoeff(), -1e-15 * z.trace());
  }
}

TEST(FrictionExact, TruncationSelfConsistent) {
  const auto mdp = build_gridworld({});
  const auto l = vec({1.0, -1.0});
  const auto a = exact_at(mdp, l, 2000);
  const auto b = exact_at(mdp, l, 3000);
  ASSERT_LT(a.tail, 1e-12);
  EXPECT_LT((a.zeta - b.zeta).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(FrictionExact, DependentFeatureGivesSingularTensor) {
  const auto base = build_gridworld({});
  const Eigen::VectorXd sum = base.features().col(0) + base.features().col(1);
  const auto mdp = with_extra_column(base, sum);
  const auto z = exact_at(mdp, vec({0.3, -0.2, 0.1}), 2000).zeta;
  const double scale = std::pow(z.trace(), 3);
  EXPECT_LE(std::abs(z.determinant()), 1e-10 * scale);
}

TEST(FrictionExact, TwoStateClosedForm) {
  for (double stay : {0.1, 0.5, 0.9}) {
    const auto mdp = oracle::two_state_flip(stay);
    for (auto l : {vec({0.2, 0.3}), vec({-1.0, -0.5}), vec({0.0, 0.0})}) {
      const auto z = exact_at(mdp, l, 40, 0.25).zeta;
      const auto ref = oracle::two_state_flip_friction(stay, l, 0.25, 40);
      EXPECT_LT((z - ref).cwiseAbs().maxCoeff(), 1e-12) << stay << " " << l.transpose();
    }
  }
}

TEST(FrictionSampled, ConstantSeriesIsZero) {
  const std::vector<double> x(64, 3.5);
  EXPECT_EQ(friction_sampled(x, 10), 0.0);
}

TEST(FrictionSampled, AlternatingSeries) {
  // population convention: c(0) = 1, c(1) = -(N-1)/N, so the sum is 1/N
  for (std::size_t n : {16u, 100u, 1000u}) {
    std::vector<double> x(n);
    for (std::size_t k = 0; k < n; ++k) x[k] = k % 2 == 0 ? 1.0 : -1.0;
    const auto c = autocovariance(x, 1);
    EXPECT_NEAR(c[0], 1.0, 1e-12);
    EXPECT_NEAR(c[1], -static_cast<double>(n - 1) / static_cast<double>(n), 1e-12);
    EXPECT_NEAR(friction_sampled(x, 1), 1.0 / static_cast<double>(n), 1e-12);
    EXPECT_NEAR(friction_sampled(x, 1), oracle::lag_sum_direct(x, 1), 1e-12);
  }
}

TEST(FrictionSampled, MatchesDirectSum) {
  unsigned seed = 1;
  for (int n : {16, 100, 1000}) {
    for (int t : {1, 10, n / 2}) {
      const auto x = noise(static_cast<std::size_t>(n), seed++, 2.0);
      const double fft = friction_sampled(x, t);
      const double direct = oracle::lag_sum_direct(x, t);
      EXPECT_LE(std::abs(fft - direct), 1e-8 * std::abs(direct)) << n << " " << t;
      const auto c = autocovariance(x, t);
      const auto cd = oracle::autocov_direct(x, t);
      for (int k = 0; k <= t; ++k) {
        EXPECT_NEAR(c[static_cast<std::size_t>(k)], cd[static_cast<std::size_t>(k)], 1e-11);
      }
    }
  }
}

TEST(FrictionSampled, MultivariateMatchesDirectSum) {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> d;
  Eigen::MatrixXd x(300, 3);
  for (Eigen::Index k = 0; k < x.rows(); ++k) {
    x(k, 0) = d(rng);
    x(k, 1) = 0.5 * x(k, 0) + d(rng);
    x(k, 2) = k > 0 ? 0.8 * x(k - 1, 2) + d(rng) : d(rng);
  }
  const auto lags = lagged_covariances(x, 20);
  Eigen::MatrixXd sum = Eigen::MatrixXd::Zero(3, 3);
  for (const auto& c : lags) sum += c;
  const Eigen::MatrixXd ref = oracle::lag_sum_direct(x, 20);
  EXPECT_LT((sum - ref).cwiseAbs().maxCoeff(), 1e-8 * ref.norm());
  const auto z = friction_sampled(x, 20);
  EXPECT_LT((z.zeta - z.zeta.transpose()).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(FrictionSampled, WhiteNoiseRecoversVariance) {
  const double sigma = 1.7;
  const std::size_t n = 200000;
  const auto x = noise(n, 99, sigma);
  const double est = friction_sampled(x, 50);
  // the 51 lag terms are roughly independent, each with sd sigma^2 / sqrt(N)
  const double se = sigma * sigma * std::sqrt(51.0 / static_cast<double>(n));
  EXPECT_NEAR(est, sigma * sigma, 3.0 * se);
}

TEST(FrictionSampled, RejectsShortSeries) {
  EXPECT_ANY_THROW(friction_sampled(std::vector<double>(10, 1.0), 10));
  EXPECT_ANY_THROW(friction_sampled(std::vector<double>{}, 1));
  EXPECT_ANY_THROW(friction_sampled(std::vector<double>(10, 1.0), 0));
}

TEST(GaussianFilter, MatchesDirectReflectConvolution) {
  const std::vector<int> shape{9, 7};
  std::vector<double> values(63);
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (auto& v : values) v = u(rng);
  const std::vector<double> sigma{1.3, 0.8};
  const auto out = gaussian_filter(values, shape, sigma);

  auto kernel = [](double s) {
    const int radius = static_cast<int>(4.0 * s + 0.5);
    std::vector<double> w;
    double total = 0.0;
    for (int k = -radius; k <= radius; ++k) {
      w.push_back(std::exp(-0.5 * k * k / (s * s)));
      total += w.back();
    }
    for (auto& x : w) x /= total;
    return w;
  };
  // half-sample symmetric reflection: d c b a | a b c d | d c b a
  auto reflect = [](int i, int n) {
    while (i < 0 || i >= n) i = i < 0 ? -i - 1 : 2 * n - i - 1;
    return i;
  };
  const auto k0 = kernel(sigma[0]);
  const auto k1 = kernel(sigma[1]);
  const int r0 = static_cast<int>(k0.size() / 2);
  const int r1 = static_cast<int>(k1.size() / 2);
  for (int i = 0; i < 9; ++i) {
    for (int j = 0; j < 7; ++j) {
      double acc = 0.0;
      for (int a = -r0; a <= r0; ++a)
        for (int b = -r1; b <= r1; ++b)
          acc += k0[static_cast<std::size_t>(a + r0)] * k1[static_cast<std::size_t>(b + r1)] *
                 values[static_cast<std::size_t>(reflect(i + a, 9) * 7 + reflect(j + b, 7))];
      EXPECT_NEAR(out[static_cast<std::size_t>(i * 7 + j)], acc, 1e-13);
    }
  }
}

TEST(ScalarField, IdentityFieldIsLogL) {
  FrictionField field;
  field.grid = LambdaGrid::uniform(2, -1.0, 1.0, 9);
  field.tensors.assign(field.grid.size(), Eigen::MatrixXd::Identity(2, 2));
  const auto s = scalar_field(field, 0.1);
  for (std::size_t k = 0; k < field.grid.size(); ++k) {
    EXPECT_NEAR(s.log_trace[k], std::log(2.0), 1e-15);
    EXPECT_NEAR(s.log_trace_smoothed[k], std::log(2.0), 1e-14);
  }
}

TEST(ScalarField, SpikeIsSpreadButConserved) {
  FrictionField field;
  field.grid = LambdaGrid::uniform(2, -1.0, 1.0, 21);
  field.tensors.assign(field.grid.size(), Eigen::MatrixXd::Identity(2, 2));
  const std::size_t centre = field.grid.ravel({10, 10});
  field.tensors[centre] *= 50.0;
  const auto s = scalar_field(field, 0.2);
  EXPECT_LT(s.log_trace_smoothed[centre], s.log_trace[centre]);
  double raw = 0.0;
  double smooth = 0.0;
  for (std::size_t k = 0; k < field.grid.size(); ++k) {
    raw += s.trace[k];
    smooth += std::exp(s.log_trace_smoothed[k]);
  }
  EXPECT_NEAR(smooth, raw, 1e-9 * raw);
}

TEST(ScalarField, TraceFloor) {
  FrictionField field;
  field.grid = LambdaGrid::uniform(1, 0.0, 1.0, 3);
  field.tensors.assign(3, Eigen::MatrixXd::Zero(1, 1));
  const auto s = scalar_field(field, 0.5);
  for (double v : s.log_trace) EXPECT_DOUBLE_EQ(v, std::log(kTraceFloor));
}

TEST(MetricField, ConstantFeaturesGiveZeroTensors) {
  const TabularMdp mdp(1, 2, std::vector<double>{1, 1}, Eigen::MatrixXd::Constant(2, 2, 1.0));
  const auto field = build_metric_field(mdp, LambdaGrid::uniform(2, -1, 1, 2));
  ASSERT_EQ(field.tensors.size(), 4u);
  for (const auto& z : field.tensors) EXPECT_EQ(z.cwiseAbs().maxCoeff(), 0.0);
}

TEST(MetricField, TwoStateClosedForm) {
  const auto mdp = oracle::two_state_flip(0.7);
  FieldOptions opts;
  opts.alpha = 0.3;
  opts.max_lag = 100;
  const auto grid = LambdaGrid::uniform(2, -1, 1, 5);
  const auto field = build_metric_field(mdp, grid, opts);
  for (std::size_t n = 0; n < grid.size(); ++n) {
    const auto ref = oracle::two_state_flip_friction(0.7, grid.point(n), 0.3, 100);
    EXPECT_LT((field.tensors[n] - ref).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(MetricField, ThreadCountDoesNotChangeResult) {
  const auto mdp = build_gridworld({});
  const auto grid = LambdaGrid::uniform(2, -1, 1, 5);
  FieldOptions one;
  one.threads = 1;
  FieldOptions three = one;
  three.threads = 3;
  const auto a = build_metric_field(mdp, grid, one);
  const auto b = build_metric_field(mdp, grid, three);
  for (std::size_t n = 0; n < grid.size(); ++n) {
    EXPECT_EQ(a.tensors[n], b.tensors[n]);
    EXPECT_EQ(a.diagnostics[n].theta, b.diagnostics[n].theta);
  }
}

TEST(MetricField, FailureNamesNode) {
  const auto mdp = build_gridworld({});
  FieldOptions opts;
  opts.solver.max_iter = 2;
  opts.threads = 2;
  try {
    build_metric_field(mdp, LambdaGrid::uniform(2, -1, 1, 3), opts);
    FAIL() << "expected a convergence failure";
  } catch (const ConvergenceError& e) {
    EXPECT_NE(std::string(e.what()).find("grid node 0"), std::string::npos) << e.what();
  }
}

TEST(MetricField, RidgeOnPositiveDiagonal) {
  const auto mdp = build_gridworld({});
  const auto grid = LambdaGrid::uniform(2, -1, 1, 11);
  const auto field = build_metric_field(mdp, grid);
  const auto s = scalar_field(field, 0.1);
  const auto peak = static_cast<std::size_t>(
      std::max_element(s.log_trace_smoothed.begin(), s.log_trace_smoothed.end()) -
      s.log_trace_smoothed.begin());
  const auto p = grid.point(peak);
  EXPECT_NEAR(p(0), p(1), 1e-12);
  EXPECT_GT(p(0), 0.2);
}

TEST(MetricField, InterpolationReproducesNodesAndIsBilinear) {
  FrictionField field;
  field.grid = LambdaGrid::uniform(2, 0.0, 1.0, 3);
  for (std::size_t n = 0; n < field.grid.size(); ++n) {
    const auto p = field.grid.point(n);
    Eigen::MatrixXd z(2, 2);
    z << 1 + p(0) + 2 * p(1), p(0) * p(1), p(0) * p(1), 3 - p(1);
    field.tensors.push_back(z);
  }
  for (std::size_t n = 0; n < field.grid.size(); ++n) {
    EXPECT_LT((field.interpolate(field.grid.point(n)) - field.tensors[n]).cwiseAbs().maxCoeff(), 1e-15);
  }
  const auto z = field.interpolate(vec({0.3, 0.8}));
  EXPECT_NEAR(z(0, 0), 1 + 0.3 + 1.6, 1e-14);
  EXPECT_NEAR(z(0, 1), 0.24, 1e-14);  // bilinear reproduces xy exactly
  EXPECT_NEAR(z(1, 1), 3 - 0.8, 1e-14);
  EXPECT_THROW(field.interpolate(vec({1.1, 0.5})), DomainError);
}
