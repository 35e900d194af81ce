#include "commands.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <string>

#include "taskgeo/taskgeo.hpp"

namespace taskgeo::cli {

using nlohmann::json;

json default_config() {
  return json::parse(R"({
    "environment": {
      "mdp_file": "",
      "width": 7,
      "height": 7,
      "feature_corners": [[0, 0], [6, 6]]
    },
    "alpha": 0.2,
    "max_lag": 2000,
    "beta": 1.0,
    "sigma": 0.1,
    "threads": 0,
    "seed": 0,
    "grid": {"lower": -1.0, "upper": 1.0, "resolution": 41},
    "field_file": "",
    "geodesic": {
      "start": [0.8, -0.2],
      "end": [-0.2, 0.8],
      "n_steps": 100,
      "diagonal_moves": false
    },
    "excess_work": {
      "start": [0.3, -0.3],
      "end": [0.8, 0.2],
      "stages": 10,
      "relax_steps": [20, 40, 80, 160],
      "driving": "continuous",
      "metric_beta": 0.0
    },
    "anneal": {
      "lambda": [1.0, 0.5],
      "eta": 1e-5,
      "recency_n": 5000,
      "epsilon": 1e-8,
      "alpha_0": 0.2,
      "max_lag": 0,
      "steps_between_updates": 1,
      "alpha_min": 1e-3,
      "total_env_steps": 20000,
      "seeds": [0],
      "constant_alphas": [],
      "compare": false
    }
  })");
}

namespace {

std::ofstream open_output(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write " + path.string());
  return out;
}

TaskParams to_params(const json& value) {
  const auto v = value.get<std::vector<double>>();
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

json to_json(const TaskParams& p) { return std::vector<double>(p.data(), p.data() + p.size()); }

TabularMdp load_mdp(const json& config) {
  const auto& env = config.at("environment");
  const auto file = env.at("mdp_file").get<std::string>();
  if (!file.empty()) {
    std::ifstream in(file);
    if (!in) throw ConfigError("cannot open MDP file " + file);
    json doc;
    try {
      in >> doc;
    } catch (const json::exception& e) {
      throw ConfigError("cannot parse MDP file " + file + ": " + e.what());
    }
    return mdp_from_json(doc);
  }
  GridWorldSpec spec;
  spec.width = env.at("width").get<int>();
  spec.height = env.at("height").get<int>();
  spec.feature_corners.clear();
  for (const auto& c : env.at("feature_corners")) {
    if (!c.is_array() || c.size() != 2) throw ConfigError("feature corners are [row, col] pairs");
    spec.feature_corners.push_back({c[0].get<int>(), c[1].get<int>()});
  }
  return build_gridworld(spec);
}

std::vector<double> per_axis_double(const json& value, int dim) {
  if (value.is_array()) {
    auto v = value.get<std::vector<double>>();
    if (static_cast<int>(v.size()) != dim) throw ConfigError("grid entry has wrong dimension");
    return v;
  }
  return std::vector<double>(static_cast<std::size_t>(dim), value.get<double>());
}

LambdaGrid load_grid(const json& config, int dim) {
  const auto& g = config.at("grid");
  LambdaGrid grid;
  grid.lower = per_axis_double(g.at("lower"), dim);
  grid.upper = per_axis_double(g.at("upper"), dim);
  const auto& res = g.at("resolution");
  if (res.is_array()) {
    grid.resolution = res.get<std::vector<int>>();
    if (static_cast<int>(grid.resolution.size()) != dim) {
      throw ConfigError("grid resolution has wrong dimension");
    }
  } else {
    grid.resolution.assign(static_cast<std::size_t>(dim), res.get<int>());
  }
  grid.validate();
  return grid;
}

FieldOptions field_options(const json& config) {
  FieldOptions opts;
  opts.alpha = config.at("alpha").get<double>();
  opts.max_lag = config.at("max_lag").get<int>();
  opts.beta = config.at("beta").get<double>();
  opts.threads = config.at("threads").get<int>();
  if (!(opts.alpha > 0.0)) throw ConfigError("alpha must be positive");
  if (opts.max_lag < 0) throw ConfigError("max_lag must be non-negative");
  return opts;
}

FrictionField load_or_build_field(const json& config, const TabularMdp& mdp) {
  const auto file = config.at("field_file").get<std::string>();
  if (!file.empty()) {
    std::ifstream in(file, std::ios::binary);
    if (!in) throw ConfigError("cannot open field file " + file);
    FrictionField field = read_field_csv(in);
    if (field.dim() != mdp.feature_dim()) {
      throw ConfigError("field dimension differs from the MDP feature dimension");
    }
    return field;
  }
  return build_metric_field(mdp, load_grid(config, mdp.feature_dim()), field_options(config));
}

}  // namespace

json cmd_friction_map(const RunContext& ctx) {
  const auto& config = ctx.config;
  const TabularMdp mdp = load_mdp(config);
  const LambdaGrid grid = load_grid(config, mdp.feature_dim());
  const FrictionField field = build_metric_field(mdp, grid, field_options(config));
  const double sigma = config.at("sigma").get<double>();
  const ScalarField scalars = scalar_field(field, sigma);
  {
    auto out = open_output(ctx.out / "field.csv");
    write_field_csv(out, field, scalars);
  }
  {
    auto out = open_output(ctx.out / "field_diagnostics.csv");
    out << "node,theta,solver_residual,solver_iterations,stationary_residual,min_eigenvalue_raw,"
           "tail\n";
    for (std::size_t n = 0; n < field.diagnostics.size(); ++n) {
      const auto& d = field.diagnostics[n];
      out << n << ',' << format_double(d.theta) << ',' << format_double(d.solver_residual) << ','
          << d.solver_iterations << ',' << format_double(d.stationary_residual) << ','
          << format_double(d.min_eigenvalue_raw) << ',' << format_double(d.tail) << '\n';
    }
  }
  double max_residual = 0.0;
  double max_stationary = 0.0;
  double max_tail = 0.0;
  for (const auto& d : field.diagnostics) {
    max_residual = std::max(max_residual, d.solver_residual);
    max_stationary = std::max(max_stationary, d.stationary_residual);
    max_tail = std::max(max_tail, d.tail);
  }
  const auto peak = std::max_element(scalars.log_trace_smoothed.begin(),
                                     scalars.log_trace_smoothed.end()) -
                    scalars.log_trace_smoothed.begin();
  return {{"nodes", field.tensors.size()},
          {"max_solver_residual", max_residual},
          {"max_stationary_residual", max_stationary},
          {"max_tail", max_tail},
          {"smoothed_peak", to_json(grid.point(static_cast<std::size_t>(peak)))}};
}

json cmd_geodesic(const RunContext& ctx) {
  const auto& config = ctx.config;
  const auto& g = config.at("geodesic");
  const TabularMdp mdp = load_mdp(config);
  const FrictionField field = load_or_build_field(config, mdp);
  const int n_steps = g.at("n_steps").get<int>();
  GraphOptions options;
  options.diagonal_moves = g.at("diagonal_moves").get<bool>();
  const TaskParams start = field.grid.point(field.grid.nearest(to_params(g.at("start"))));
  const TaskParams end = field.grid.point(field.grid.nearest(to_params(g.at("end"))));

  const GraphPath path = geodesic_graph(field, start, end, options);
  const Protocol geodesic = constant_speed_reparam(path, field, n_steps);
  const Protocol linear = linear_protocol(start, end, n_steps);
  const MetricFn metric = field_metric(field);
  const double linear_length = path_length(linear.points, metric);
  {
    auto out = open_output(ctx.out / "geodesic.csv");
    write_protocol_csv(out, geodesic);
  }
  {
    auto out = open_output(ctx.out / "linear.csv");
    write_protocol_csv(out, linear);
  }
  {
    auto out = open_output(ctx.out / "geodesic_nodes.csv");
    out << "node";
    for (int i = 1; i <= field.dim(); ++i) out << ",lambda" << i;
    out << '\n';
    for (std::size_t k = 0; k < path.nodes.size(); ++k) {
      out << path.nodes[k];
      for (Eigen::Index i = 0; i < path.points[k].size(); ++i) {
        out << ',' << format_double(path.points[k](i));
      }
      out << '\n';
    }
  }
  return {{"start", to_json(start)},
          {"end", to_json(end)},
          {"geodesic_length", path.length},
          {"linear_length", linear_length},
          {"geodesic_excess_work", excess_work_quadratic(geodesic, metric)},
          {"linear_excess_work", excess_work_quadratic(linear, metric)}};
}

json cmd_regret(const RunContext& ctx) {
  const auto& config = ctx.config;
  const auto& g = config.at("geodesic");
  const TabularMdp mdp = load_mdp(config);
  const FrictionField field = load_or_build_field(config, mdp);
  const double alpha = config.at("alpha").get<double>();
  const int n_steps = g.at("n_steps").get<int>();
  GraphOptions options;
  options.diagonal_moves = g.at("diagonal_moves").get<bool>();
  const TaskParams start = field.grid.point(field.grid.nearest(to_params(g.at("start"))));
  const TaskParams end = field.grid.point(field.grid.nearest(to_params(g.at("end"))));

  const Protocol geodesic =
      constant_speed_reparam(geodesic_graph(field, start, end, options), field, n_steps);
  const Protocol linear = linear_protocol(start, end, n_steps);
  const RegretTrace geo_regret = regret_along_protocol(mdp, geodesic, alpha);
  const RegretTrace lin_regret = regret_along_protocol(mdp, linear, alpha);
  {
    auto out = open_output(ctx.out / "regret_geodesic.csv");
    write_regret_csv(out, geodesic, geo_regret);
  }
  {
    auto out = open_output(ctx.out / "regret_linear.csv");
    write_regret_csv(out, linear, lin_regret);
  }
  const double ratio =
      lin_regret.total() > 0.0 ? geo_regret.total() / lin_regret.total() : 0.0;
  return {{"start", to_json(start)},
          {"end", to_json(end)},
          {"stages", n_steps},
          {"geodesic_cumulative_regret", geo_regret.total()},
          {"linear_cumulative_regret", lin_regret.total()},
          {"regret_ratio", ratio}};
}

json cmd_excess_work(const RunContext& ctx) {
  const auto& config = ctx.config;
  const auto& e = config.at("excess_work");
  const TabularMdp mdp = load_mdp(config);
  const double alpha = config.at("alpha").get<double>();
  const int max_lag = config.at("max_lag").get<int>();
  double metric_beta = e.at("metric_beta").get<double>();
  if (metric_beta <= 0.0) metric_beta = 1.0 / alpha;
  const int stages = e.at("stages").get<int>();
  const auto ladder = e.at("relax_steps").get<std::vector<int>>();
  const auto driving_name = e.at("driving").get<std::string>();
  Driving driving;
  if (driving_name == "continuous") {
    driving = Driving::kContinuous;
  } else if (driving_name == "stepwise") {
    driving = Driving::kStepwise;
  } else {
    throw ConfigError("driving must be 'continuous' or 'stepwise'");
  }
  if (ladder.empty()) throw ConfigError("relax_steps ladder is empty");

  const Protocol base = linear_protocol(to_params(e.at("start")), to_params(e.at("end")), stages);

  // exact friction at each protocol sample, in units of beta = metric_beta
  FieldOptions fo;
  fo.alpha = alpha;
  fo.max_lag = max_lag;
  fo.beta = metric_beta;
  std::vector<Eigen::MatrixXd> zeta;
  for (const auto& p : base.points) zeta.push_back(friction_at(mdp, p, fo).zeta);
  std::map<std::vector<double>, Eigen::MatrixXd> lookup;
  for (std::size_t k = 0; k < base.size(); ++k) {
    const auto& p = base.points[k];
    lookup[std::vector<double>(p.data(), p.data() + p.size())] = zeta[k];
  }
  const MetricFn metric = [&lookup, &mdp, &fo](const TaskParams& p) -> Eigen::MatrixXd {
    const auto it = lookup.find(std::vector<double>(p.data(), p.data() + p.size()));
    return it != lookup.end() ? it->second : friction_at(mdp, p, fo).zeta;
  };

  std::vector<ExcessWorkRow> rows;
  for (int m : ladder) {
    RolloutOptions ro;
    ro.alpha = alpha;
    ro.relax_steps = m;
    ro.driving = driving;
    const Protocol timed = base.rescaled(static_cast<double>(stages) * m);
    const RolloutRecord record = nonequilibrium_rollout(mdp, timed, ro);
    rows.push_back({m, excess_work_direct(record, timed), excess_work_quadratic(timed, metric)});
  }
  {
    auto out = open_output(ctx.out / "excess_work.csv");
    write_excess_work_csv(out, rows);
  }
  json ratios = json::array();
  for (const auto& r : rows) ratios.push_back(r.ratio());
  return {{"metric_beta", metric_beta}, {"driving", driving_name}, {"ratios", ratios}};
}

json cmd_anneal(const RunContext& ctx) {
  const auto& config = ctx.config;
  const auto& a = config.at("anneal");
  const TabularMdp mdp = load_mdp(config);
  AnnealConfig ac;
  ac.eta = a.at("eta").get<double>();
  ac.recency_n = a.at("recency_n").get<int>();
  ac.epsilon = a.at("epsilon").get<double>();
  ac.alpha_0 = a.at("alpha_0").get<double>();
  ac.max_lag = a.at("max_lag").get<int>();
  ac.steps_between_updates = a.at("steps_between_updates").get<int>();
  ac.alpha_min = a.at("alpha_min").get<double>();
  ac.validate();
  const TaskParams lambda = to_params(a.at("lambda"));
  const long total = a.at("total_env_steps").get<long>();
  const auto seeds = a.at("seeds").get<std::vector<std::uint64_t>>();
  const auto constants = a.at("constant_alphas").get<std::vector<double>>();
  if (seeds.empty()) throw ConfigError("anneal needs at least one seed");

  json summary = json::array();
  if (a.at("compare").get<bool>()) {
    const ScheduleComparison cmp = compare_schedules(mdp, lambda, ac, constants, total, seeds,
                                                     config.at("threads").get<int>());
    auto out = open_output(ctx.out / "schedules.csv");
    write_comparison_csv(out, cmp.rows);
    for (std::size_t i = 0; i < seeds.size(); ++i) {
      auto trace_out = open_output(ctx.out / ("trace_seed" + std::to_string(seeds[i]) + ".csv"));
      write_trace_csv(trace_out, cmp.mew_traces[i]);
      summary.push_back({{"seed", seeds[i]},
                         {"final_alpha", cmp.mew_traces[i].final_alpha},
                         {"stop_reason", cmp.mew_traces[i].stop_reason}});
    }
  } else {
    for (auto seed : seeds) {
      const AnnealTrace trace = run_anneal(mdp, lambda, ac, total, seed);
      auto out = open_output(ctx.out / ("trace_seed" + std::to_string(seed) + ".csv"));
      write_trace_csv(out, trace);
      summary.push_back({{"seed", seed},
                         {"final_alpha", trace.final_alpha},
                         {"stop_reason", trace.stop_reason},
                         {"updates", trace.records.size()}});
    }
  }
  return {{"runs", summary}};
}

}  // namespace taskgeo::cli
