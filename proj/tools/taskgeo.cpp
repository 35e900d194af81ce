#include <CLI11.hpp>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "commands.hpp"
#include "taskgeo/error.hpp"
#include "taskgeo/io.hpp"

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitNumerical = 3;

struct Overrides {
  std::string config_path;
  std::string out = "out";
  std::optional<std::uint64_t> seed;
  std::optional<double> alpha;
  std::optional<int> grid_res;
  std::optional<double> speed;
  std::optional<int> recency;
  std::optional<int> max_lag;
  std::vector<int> relax_steps;
  std::optional<int> threads;
};

nlohmann::json effective_config(const std::string& command, const Overrides& o) {
  nlohmann::json config = taskgeo::cli::default_config();
  if (!o.config_path.empty()) {
    std::ifstream in(o.config_path);
    if (!in) throw taskgeo::ConfigError("cannot open config " + o.config_path);
    nlohmann::json user;
    try {
      in >> user;
    } catch (const nlohmann::json::exception& e) {
      throw taskgeo::ConfigError("cannot parse config: " + std::string(e.what()));
    }
    if (!user.is_object()) throw taskgeo::ConfigError("config must be a JSON object");
    config.merge_patch(user);
  }
  if (o.seed) {
    config["seed"] = *o.seed;
    config["anneal"]["seeds"] = {*o.seed};
  }
  if (o.alpha) {
    config["alpha"] = *o.alpha;
    config["anneal"]["alpha_0"] = *o.alpha;
  }
  if (o.grid_res) config["grid"]["resolution"] = *o.grid_res;
  if (o.speed) config["anneal"]["eta"] = *o.speed;
  if (o.recency) config["anneal"]["recency_n"] = *o.recency;
  if (o.max_lag) {
    if (command == "anneal") {
      config["anneal"]["max_lag"] = *o.max_lag;
    } else {
      config["max_lag"] = *o.max_lag;
    }
  }
  if (!o.relax_steps.empty()) config["excess_work"]["relax_steps"] = o.relax_steps;
  if (o.threads) config["threads"] = *o.threads;
  return config;
}

int run(const std::string& command, const Overrides& o,
        const std::function<nlohmann::json(const taskgeo::cli::RunContext&)>& body) {
  const auto started = std::chrono::steady_clock::now();
  try {
    taskgeo::cli::RunContext ctx;
    ctx.config = effective_config(command, o);
    ctx.out = o.out;
    std::error_code ec;
    std::filesystem::create_directories(ctx.out, ec);
    if (ec) throw taskgeo::ConfigError("cannot create output directory " + o.out);

    nlohmann::json extra = body(ctx);

    taskgeo::RunMetadata meta;
    meta.command = command;
    meta.config_hash = taskgeo::fnv1a_hex(command + "\n" + ctx.config.dump());
    meta.seed = ctx.config.at("seed").get<std::uint64_t>();
    meta.wall_time_s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    meta.extra = std::move(extra);
    meta.extra["config"] = ctx.config;
    std::ofstream out(ctx.out / "metadata.json", std::ios::binary);
    out << taskgeo::metadata_to_json(meta).dump(2) << '\n';
    return 0;
  } catch (const taskgeo::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const taskgeo::DimensionError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const taskgeo::ConvergenceError& e) {
    std::cerr << "numerical failure: " << e.what() << " (residual " << e.residual() << ")\n";
    return kExitNumerical;
  } catch (const std::exception& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return kExitNumerical;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Thermodynamic curriculum geometry on tabular MaxEnt MDPs"};
  app.require_subcommand(1);
  Overrides o;

  auto add_common = [&o](CLI::App* sub) {
    sub->add_option("--config", o.config_path, "JSON run configuration");
    sub->add_option("--out", o.out, "Output directory")->capture_default_str();
    sub->add_option("--seed", o.seed, "RNG seed");
    sub->add_option("--alpha", o.alpha, "Temperature");
    sub->add_option("--grid-res", o.grid_res, "Nodes per lambda axis");
    sub->add_option("--speed", o.speed, "MEW thermodynamic speed eta");
    sub->add_option("--recency", o.recency, "MEW recency window in transitions");
    sub->add_option("--max-lag", o.max_lag, "Autocovariance truncation lag");
    sub->add_option("--relax-steps", o.relax_steps, "Relaxation steps per stage (ladder)");
    sub->add_option("--threads", o.threads, "Worker threads (0 = all cores)");
  };

  struct Entry {
    const char* name;
    const char* help;
    nlohmann::json (*body)(const taskgeo::cli::RunContext&);
  };
  const Entry entries[] = {
      {"friction-map", "Friction tensor field and log-trace map", taskgeo::cli::cmd_friction_map},
      {"geodesic", "Graph geodesic and linear protocols", taskgeo::cli::cmd_geodesic},
      {"regret", "Lag regret along geodesic and linear protocols", taskgeo::cli::cmd_regret},
      {"excess-work", "Direct vs quadratic excess work over relaxation steps",
       taskgeo::cli::cmd_excess_work},
      {"anneal", "MEW temperature annealing runs", taskgeo::cli::cmd_anneal},
  };
  int code = 0;
  for (const auto& e : entries) {
    CLI::App* sub = app.add_subcommand(e.name, e.help);
    add_common(sub);
    sub->callback([&code, &o, e] { code = run(e.name, o, e.body); });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& err) {
    const int status = app.exit(err);
    return status == 0 ? 0 : kExitConfig;
  }
  return code;
}
