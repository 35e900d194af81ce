#pragma once

#include <cstdint>
#include <filesystem>
#include <nlohmann/json.hpp>

namespace taskgeo::cli {

/// Every key a run config may set, with the defaults used when absent.
nlohmann::json default_config();

struct RunContext {
  nlohmann::json config;
  std::filesystem::path out;
};

// Each command writes its data files into ctx.out and returns extra fields
// for the run metadata.
nlohmann::json cmd_friction_map(const RunContext& ctx);
nlohmann::json cmd_geodesic(const RunContext& ctx);
nlohmann::json cmd_regret(const RunContext& ctx);
nlohmann::json cmd_excess_work(const RunContext& ctx);
nlohmann::json cmd_anneal(const RunContext& ctx);

}  // namespace taskgeo::cli
