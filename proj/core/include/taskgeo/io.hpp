#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <nlohmann/json.hpp>
#include <string>
#include <vector>

#include "taskgeo/anneal.hpp"
#include "taskgeo/friction.hpp"
#include "taskgeo/manifold.hpp"
#include "taskgeo/maxent.hpp"
#include "taskgeo/mdp.hpp"
#include "taskgeo/protocol.hpp"

namespace taskgeo {

/// Shortest decimal text that round-trips the double.
std::string format_double(double value);

nlohmann::json mdp_to_json(const TabularMdp& mdp);
/// Throws ConfigError on malformed documents.
TabularMdp mdp_from_json(const nlohmann::json& doc);

nlohmann::json solution_to_json(const SoftSolution& solution);
SoftSolution solution_from_json(const nlohmann::json& doc);

/// Columns: lambda1..lambdaL, zeta_ij for i <= j, logtrace_raw,
/// logtrace_smoothed. Row order follows the grid's node order.
void write_field_csv(std::ostream& out, const FrictionField& field, const ScalarField& scalars);
/// Rebuilds the grid from the distinct coordinates on each axis.
FrictionField read_field_csv(std::istream& in);

/// Columns: t, lambda1..lambdaL.
void write_protocol_csv(std::ostream& out, const Protocol& protocol);
Protocol read_protocol_csv(std::istream& in);

/// Columns: stage, t, lambda1..lambdaL, stage_regret, cum_regret.
void write_regret_csv(std::ostream& out, const Protocol& protocol, const RegretTrace& trace);

struct ExcessWorkRow {
  int relax_steps = 0;
  double direct = 0.0;
  double quadratic = 0.0;
  double ratio() const { return direct / quadratic; }
};
/// Columns: m, W_direct, W_quadratic, ratio.
void write_excess_work_csv(std::ostream& out, const std::vector<ExcessWorkRow>& rows);

/// Columns: step, alpha, beta, zeta, mean_reward, delta_beta.
void write_trace_csv(std::ostream& out, const AnnealTrace& trace);

/// Columns: schedule, seed, final_alpha, target_alpha, theta_at_target, mean_reward.
void write_comparison_csv(std::ostream& out, const std::vector<ScheduleResult>& rows);

/// 64-bit FNV-1a, rendered as 16 hex digits.
std::string fnv1a_hex(const std::string& bytes);

struct RunMetadata {
  std::string command;
  std::string config_hash;
  std::uint64_t seed = 0;
  double wall_time_s = 0.0;
  nlohmann::json extra = nlohmann::json::object();
};
nlohmann::json metadata_to_json(const RunMetadata& meta);

std::string library_version();

}  // namespace taskgeo
