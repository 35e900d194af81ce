#include "taskgeo/manifold.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <mutex>
#include <queue>
#include <sstream>
#include <string>
#include <thread>

#include "taskgeo/error.hpp"

namespace taskgeo {

namespace {

std::string describe(const TaskParams& lambda) {
  std::ostringstream os;
  os << '(';
  for (Eigen::Index i = 0; i < lambda.size(); ++i) os << (i ? ", " : "") << lambda(i);
  os << ')';
  return os.str();
}

double quadratic_length(const Eigen::VectorXd& step, const Eigen::MatrixXd& metric) {
  return std::sqrt(std::max(step.dot(metric * step), 0.0));
}

}  // namespace

void Protocol::validate() const {
  if (times.size() != points.size()) throw ConfigError("protocol times and points differ in size");
  if (times.empty()) throw ConfigError("protocol is empty");
  for (std::size_t k = 0; k < points.size(); ++k) {
    if (points[k].size() != points.front().size()) {
      throw ConfigError("protocol points differ in dimension");
    }
    if (!std::isfinite(times[k]) || !points[k].allFinite()) {
      throw ConfigError("protocol contains non-finite values");
    }
    if (k > 0 && !(times[k] > times[k - 1])) {
      throw ConfigError("protocol times must be strictly increasing");
    }
  }
}

Protocol Protocol::reversed() const {
  Protocol out;
  const double t0 = times.front();
  const double t1 = times.back();
  for (std::size_t k = times.size(); k-- > 0;) {
    out.times.push_back(t0 + (t1 - times[k]));
    out.points.push_back(points[k]);
  }
  return out;
}

Protocol Protocol::rescaled(double duration) const {
  if (!(duration > 0.0)) throw DomainError("protocol duration must be positive");
  Protocol out = *this;
  const double span = this->duration();
  for (auto& t : out.times) t = span > 0.0 ? (t - times.front()) * duration / span : 0.0;
  return out;
}

FrictionTensor friction_at(const TabularMdp& mdp, const TaskParams& lambda,
                           const FieldOptions& options, NodeDiagnostics* diagnostics) {
  const SoftSolution solution = solve_soft_avg(mdp, lambda, options.alpha, options.solver);
  const PolicyChain chain(mdp, solution.policy);
  const StationaryDist stationary = stationary_distribution(chain, options.stationary);
  FrictionTensor tensor = friction_exact(mdp, solution, stationary, options.max_lag, options.beta);
  if (diagnostics != nullptr) {
    diagnostics->theta = solution.theta;
    diagnostics->solver_residual = solution.residual;
    diagnostics->solver_iterations = solution.iterations;
    diagnostics->stationary_residual = stationary.residual;
    diagnostics->min_eigenvalue_raw = tensor.min_eigenvalue_raw;
    diagnostics->tail = tensor.tail;
  }
  return tensor;
}

FrictionField build_metric_field(const TabularMdp& mdp, const LambdaGrid& grid,
                                 const FieldOptions& options) {
  grid.validate();
  if (grid.dim() != mdp.feature_dim()) {
    throw DimensionError("lambda grid dimension differs from the MDP feature dimension");
  }
  FrictionField field;
  field.grid = grid;
  const std::size_t n = grid.size();
  field.tensors.resize(n);
  field.diagnostics.resize(n);

  std::atomic<std::size_t> next{0};
  std::mutex failure_mutex;
  std::size_t failed_node = std::numeric_limits<std::size_t>::max();
  std::exception_ptr failure;

  auto worker = [&] {
    for (std::size_t node = next++; node < n; node = next++) {
      try {
        field.tensors[node] =
            friction_at(mdp, grid.point(node), options, &field.diagnostics[node]).zeta;
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        // keep the lowest failing node so the reported error is deterministic
        if (node < failed_node) {
          failed_node = node;
          failure = std::current_exception();
        }
      }
    }
  };

  unsigned threads = options.threads > 0 ? static_cast<unsigned>(options.threads)
                                         : std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, n));
  std::vector<std::thread> pool;
  for (unsigned i = 1; i < threads; ++i) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();

  if (failure) {
    const std::string where =
        "grid node " + std::to_string(failed_node) + " at lambda " + describe(grid.point(failed_node));
    try {
      std::rethrow_exception(failure);
    } catch (const ConvergenceError& e) {
      throw ConvergenceError(where + ": " + e.context(), e.residual(), e.iterations());
    } catch (const std::exception& e) {
      throw Error(where + ": " + e.what());
    }
  }
  return field;
}

MetricFn field_metric(const FrictionField& field) {
  return [&field](const TaskParams& lambda) { return field.interpolate(lambda); };
}

double edge_length(const FrictionField& field, std::size_t from, std::size_t to) {
  const Eigen::VectorXd step = field.grid.point(to) - field.grid.point(from);
  return quadratic_length(step, 0.5 * (field.tensors[from] + field.tensors[to]));
}

GraphPath geodesic_graph(const FrictionField& field, const TaskParams& start,
                         const TaskParams& end, const GraphOptions& options) {
  field.validate();
  const auto& grid = field.grid;
  const std::size_t source = grid.nearest(start);
  const std::size_t target = grid.nearest(end);
  const std::size_t n = grid.size();
  const int dim = grid.dim();

  std::vector<std::vector<int>> offsets;
  if (options.diagonal_moves) {
    std::vector<int> off(static_cast<std::size_t>(dim), -1);
    while (true) {
      if (std::any_of(off.begin(), off.end(), [](int v) { return v != 0; })) offsets.push_back(off);
      int axis = dim - 1;
      while (axis >= 0 && off[static_cast<std::size_t>(axis)] == 1) {
        off[static_cast<std::size_t>(axis)] = -1;
        --axis;
      }
      if (axis < 0) break;
      ++off[static_cast<std::size_t>(axis)];
    }
  } else {
    for (int axis = 0; axis < dim; ++axis) {
      for (int sign : {-1, 1}) {
        std::vector<int> off(static_cast<std::size_t>(dim), 0);
        off[static_cast<std::size_t>(axis)] = sign;
        offsets.push_back(off);
      }
    }
  }

  constexpr double kInf = std::numeric_limits<double>::infinity();
  constexpr std::size_t kNone = std::numeric_limits<std::size_t>::max();
  std::vector<double> dist(n, kInf);
  std::vector<std::size_t> prev(n, kNone);
  std::vector<char> done(n, 0);
  using Entry = std::pair<double, std::size_t>;
  std::priority_queue<Entry, std::vector<Entry>, std::greater<>> queue;
  dist[source] = 0.0;
  queue.emplace(0.0, source);

  std::vector<int> neighbour(static_cast<std::size_t>(dim));
  while (!queue.empty()) {
    const auto [d, u] = queue.top();
    queue.pop();
    if (done[u]) continue;
    done[u] = 1;
    if (u == target) break;
    const auto index = grid.unravel(u);
    for (const auto& off : offsets) {
      bool inside = true;
      for (int axis = 0; axis < dim; ++axis) {
        const auto a = static_cast<std::size_t>(axis);
        neighbour[a] = index[a] + off[a];
        if (neighbour[a] < 0 || neighbour[a] >= grid.resolution[a]) inside = false;
      }
      if (!inside) continue;
      const std::size_t v = grid.ravel(neighbour);
      if (done[v]) continue;
      const double candidate = d + edge_length(field, u, v);
      if (candidate < dist[v]) {
        dist[v] = candidate;
        prev[v] = u;
        queue.emplace(candidate, v);
      }
    }
  }
  if (!std::isfinite(dist[target])) throw Error("target node unreachable in the lambda grid");

  GraphPath path;
  path.length = dist[target];
  for (std::size_t v = target; v != kNone; v = prev[v]) path.nodes.push_back(v);
  std::reverse(path.nodes.begin(), path.nodes.end());
  for (std::size_t v : path.nodes) path.points.push_back(grid.point(v));
  return path;
}

double path_length(const std::vector<TaskParams>& points, const MetricFn& metric) {
  if (points.size() < 2) return 0.0;
  double total = 0.0;
  Eigen::MatrixXd previous = metric(points.front());
  for (std::size_t k = 1; k < points.size(); ++k) {
    Eigen::MatrixXd current = metric(points[k]);
    total += quadratic_length(points[k] - points[k - 1], 0.5 * (previous + current));
    previous = std::move(current);
  }
  return total;
}

namespace {

Protocol resample(const std::vector<TaskParams>& path, const std::vector<double>& segment,
                  int n_steps) {
  std::vector<double> cumulative(path.size(), 0.0);
  for (std::size_t k = 1; k < path.size(); ++k) cumulative[k] = cumulative[k - 1] + segment[k - 1];
  const double total = cumulative.back();
  for (auto& c : cumulative) c /= total;
  cumulative.back() = 1.0;

  Protocol out;
  out.times.reserve(static_cast<std::size_t>(n_steps) + 1);
  out.points.reserve(static_cast<std::size_t>(n_steps) + 1);
  for (int k = 0; k <= n_steps; ++k) {
    const double t = static_cast<double>(k) / n_steps;
    out.times.push_back(t);
    if (k == 0) {
      out.points.push_back(path.front());
      continue;
    }
    if (k == n_steps) {
      out.points.push_back(path.back());
      continue;
    }
    // first node strictly after t; zero-length segments are crossed instantly
    const auto upper = std::upper_bound(cumulative.begin(), cumulative.end(), t);
    const auto hi = static_cast<std::size_t>(upper - cumulative.begin());
    const std::size_t lo = hi - 1;
    const double width = cumulative[hi] - cumulative[lo];
    const double w = width > 0.0 ? (t - cumulative[lo]) / width : 0.0;
    out.points.push_back(path[lo] + w * (path[hi] - path[lo]));
  }
  return out;
}

Protocol reparam_from_segments(const std::vector<TaskParams>& path,
                               std::vector<double> segment, int n_steps) {
  if (path.empty()) throw ConfigError("cannot reparameterize an empty path");
  if (path.size() == 1) return Protocol{{0.0}, {path.front()}};
  if (n_steps < 1) throw ConfigError("n_steps must be positive");
  double total = 0.0;
  for (double s : segment) total += s;
  if (!(total > 0.0)) {
    // no metric length at all: fall back to Euclidean allocation
    total = 0.0;
    for (std::size_t k = 1; k < path.size(); ++k) {
      segment[k - 1] = (path[k] - path[k - 1]).norm();
      total += segment[k - 1];
    }
    if (!(total > 0.0)) return Protocol{{0.0}, {path.front()}};
  }
  return resample(path, segment, n_steps);
}

}  // namespace

Protocol constant_speed_reparam(const std::vector<TaskParams>& path, const MetricFn& metric,
                                int n_steps) {
  std::vector<double> segment;
  if (path.size() > 1) {
    Eigen::MatrixXd previous = metric(path.front());
    for (std::size_t k = 1; k < path.size(); ++k) {
      Eigen::MatrixXd current = metric(path[k]);
      segment.push_back(quadratic_length(path[k] - path[k - 1], 0.5 * (previous + current)));
      previous = std::move(current);
    }
  }
  return reparam_from_segments(path, std::move(segment), n_steps);
}

Protocol constant_speed_reparam(const GraphPath& path, const FrictionField& field, int n_steps) {
  std::vector<double> segment;
  for (std::size_t k = 1; k < path.nodes.size(); ++k) {
    segment.push_back(edge_length(field, path.nodes[k - 1], path.nodes[k]));
  }
  return reparam_from_segments(path.points, std::move(segment), n_steps);
}

double metric_speed(const MetricFn& metric, const TaskParams& lambda, const TaskParams& velocity) {
  return quadratic_length(velocity, metric(lambda));
}

Christoffel christoffel_fd(const MetricFn& metric, const TaskParams& lambda, double h) {
  if (!(h > 0.0)) throw DomainError("finite-difference step must be positive");
  const auto dim = lambda.size();
  const Eigen::MatrixXd g = metric(lambda);
  if (g.rows() != dim || g.cols() != dim) throw DimensionError("metric dimension mismatch");

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(0.5 * (g + g.transpose()));
  const double lo = eig.eigenvalues().minCoeff();
  const double hi = eig.eigenvalues().maxCoeff();
  if (!(lo > 0.0) || hi / lo > kMaxMetricCondition) {
    throw DegenerateMetricError("metric at " + describe(lambda) +
                                " is singular or too ill-conditioned");
  }
  const Eigen::MatrixXd inverse = g.inverse();

  // dg[l] = d g / d lambda_l
  std::vector<Eigen::MatrixXd> dg(static_cast<std::size_t>(dim));
  for (Eigen::Index l = 0; l < dim; ++l) {
    TaskParams plus = lambda;
    TaskParams minus = lambda;
    plus(l) += h;
    minus(l) -= h;
    dg[static_cast<std::size_t>(l)] = (metric(plus) - metric(minus)) / (2.0 * h);
  }

  Christoffel gamma(static_cast<std::size_t>(dim), Eigen::MatrixXd::Zero(dim, dim));
  for (Eigen::Index i = 0; i < dim; ++i) {
    for (Eigen::Index j = i; j < dim; ++j) {
      // first-kind symbols [ij, l]
      Eigen::VectorXd first(dim);
      for (Eigen::Index l = 0; l < dim; ++l) {
        first(l) = 0.5 * (dg[static_cast<std::size_t>(i)](l, j) +
                          dg[static_cast<std::size_t>(j)](l, i) -
                          dg[static_cast<std::size_t>(l)](i, j));
      }
      const Eigen::VectorXd second = inverse * first;
      for (Eigen::Index k = 0; k < dim; ++k) {
        gamma[static_cast<std::size_t>(k)](i, j) = second(k);
        gamma[static_cast<std::size_t>(k)](j, i) = second(k);
      }
    }
  }
  return gamma;
}

ShootResult geodesic_shoot(const MetricFn& metric, const LambdaGrid& domain,
                           const TaskParams& start, const TaskParams& velocity, double dt,
                           int n_steps, double h) {
  domain.validate();
  if (start.size() != domain.dim() || velocity.size() != domain.dim()) {
    throw DimensionError("initial point and velocity must match the domain dimension");
  }
  if (!(dt > 0.0) || n_steps < 0) throw DomainError("invalid integration step settings");

  auto inside = [&](const TaskParams& p) {
    for (int axis = 0; axis < domain.dim(); ++axis) {
      const auto a = static_cast<std::size_t>(axis);
      if (!(p(axis) >= domain.lower[a] + h && p(axis) <= domain.upper[a] - h)) return false;
    }
    return true;
  };
  if (!inside(start)) throw DomainError("geodesic start must be at least h inside the domain");

  auto acceleration = [&](const TaskParams& x, const TaskParams& v) {
    const Christoffel gamma = christoffel_fd(metric, x, h);
    Eigen::VectorXd a(x.size());
    for (Eigen::Index k = 0; k < x.size(); ++k) {
      a(k) = -v.dot(gamma[static_cast<std::size_t>(k)] * v);
    }
    return a;
  };

  ShootResult out;
  TaskParams x = start;
  TaskParams v = velocity;
  out.protocol.times.push_back(0.0);
  out.protocol.points.push_back(x);
  out.velocities.push_back(v);

  for (int step = 1; step <= n_steps; ++step) {
    const TaskParams k1x = v;
    const TaskParams k1v = acceleration(x, v);
    const TaskParams x2 = x + 0.5 * dt * k1x;
    const TaskParams v2 = v + 0.5 * dt * k1v;
    if (!inside(x2)) {
      out.exited = true;
      break;
    }
    const TaskParams k2v = acceleration(x2, v2);
    const TaskParams x3 = x + 0.5 * dt * v2;
    const TaskParams v3 = v + 0.5 * dt * k2v;
    if (!inside(x3)) {
      out.exited = true;
      break;
    }
    const TaskParams k3v = acceleration(x3, v3);
    const TaskParams x4 = x + dt * v3;
    const TaskParams v4 = v + dt * k3v;
    if (!inside(x4)) {
      out.exited = true;
      break;
    }
    const TaskParams k4v = acceleration(x4, v4);

    const TaskParams x_next = x + dt / 6.0 * (k1x + 2.0 * v2 + 2.0 * v3 + v4);
    const TaskParams v_next = v + dt / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v);
    if (!inside(x_next)) {
      out.exited = true;
      break;
    }
    x = x_next;
    v = v_next;
    out.protocol.times.push_back(step * dt);
    out.protocol.points.push_back(x);
    out.velocities.push_back(v);
  }
  return out;
}

}  // namespace taskgeo
