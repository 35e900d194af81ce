#include "taskgeo/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>

#include "taskgeo/error.hpp"

namespace taskgeo {

namespace {

constexpr const char* kVersion = "0.1.0";

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream is(line);
  while (std::getline(is, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

double parse_double(const std::string& text) {
  double value = 0.0;
  const char* first = text.data();
  const char* last = text.data() + text.size();
  while (first != last && *first == ' ') ++first;
  const auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last) throw ConfigError("cannot parse number '" + text + "'");
  return value;
}

bool read_row(std::istream& in, std::vector<double>& row, std::size_t expected) {
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto cells = split(line);
    if (cells.size() != expected) throw ConfigError("CSV row has the wrong number of columns");
    row.clear();
    for (const auto& c : cells) row.push_back(parse_double(c));
    return true;
  }
  return false;
}

std::vector<std::string> read_header(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw ConfigError("CSV is empty");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  return split(line);
}

void write_lambda_header(std::ostream& out, int dim) {
  for (int i = 1; i <= dim; ++i) out << ",lambda" << i;
}

void write_point(std::ostream& out, const TaskParams& point) {
  for (Eigen::Index i = 0; i < point.size(); ++i) out << ',' << format_double(point(i));
}

}  // namespace

std::string format_double(double value) {
  char buffer[64];
  const auto [ptr, ec] = std::to_chars(buffer, buffer + sizeof(buffer), value);
  if (ec != std::errc()) throw Error("failed to format number");
  return std::string(buffer, ptr);
}

nlohmann::json mdp_to_json(const TabularMdp& mdp) {
  nlohmann::json doc;
  doc["n_states"] = mdp.n_states();
  doc["n_actions"] = mdp.n_actions();
  const auto dense = mdp.dense_transitions();
  auto& transitions = doc["transitions"] = nlohmann::json::array();
  auto& features = doc["features"] = nlohmann::json::array();
  const int S = mdp.n_states();
  const int A = mdp.n_actions();
  for (int s = 0; s < S; ++s) {
    nlohmann::json per_state = nlohmann::json::array();
    nlohmann::json feature_state = nlohmann::json::array();
    for (int a = 0; a < A; ++a) {
      const auto begin = dense.begin() + static_cast<std::ptrdiff_t>((s * A + a) * S);
      per_state.push_back(std::vector<double>(begin, begin + S));
      const Eigen::VectorXd phi = mdp.features().row(mdp.pair_index(s, a));
      feature_state.push_back(std::vector<double>(phi.data(), phi.data() + phi.size()));
    }
    transitions.push_back(std::move(per_state));
    features.push_back(std::move(feature_state));
  }
  return doc;
}

TabularMdp mdp_from_json(const nlohmann::json& doc) {
  try {
    const int S = doc.at("n_states").get<int>();
    const int A = doc.at("n_actions").get<int>();
    if (S < 1 || A < 1) throw ConfigError("n_states and n_actions must be positive");
    const auto& transitions = doc.at("transitions");
    const auto& features = doc.at("features");
    if (transitions.size() != static_cast<std::size_t>(S) ||
        features.size() != static_cast<std::size_t>(S)) {
      throw ConfigError("transitions/features must have n_states entries");
    }
    std::vector<double> dense;
    dense.reserve(static_cast<std::size_t>(S) * A * S);
    int L = -1;
    Eigen::MatrixXd phi;
    for (int s = 0; s < S; ++s) {
      if (transitions[s].size() != static_cast<std::size_t>(A) ||
          features[s].size() != static_cast<std::size_t>(A)) {
        throw ConfigError("each state needs n_actions transition rows and feature vectors");
      }
      for (int a = 0; a < A; ++a) {
        const auto row = transitions[s][a].get<std::vector<double>>();
        if (row.size() != static_cast<std::size_t>(S)) {
          throw ConfigError("transition rows must have n_states entries");
        }
        dense.insert(dense.end(), row.begin(), row.end());
        const auto f = features[s][a].get<std::vector<double>>();
        if (L < 0) {
          L = static_cast<int>(f.size());
          phi = Eigen::MatrixXd::Zero(S * A, L);
        }
        if (f.size() != static_cast<std::size_t>(L)) {
          throw ConfigError("feature vectors differ in dimension");
        }
        for (int i = 0; i < L; ++i) phi(s * A + a, i) = f[static_cast<std::size_t>(i)];
      }
    }
    return TabularMdp(S, A, dense, std::move(phi));
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed MDP document: ") + e.what());
  } catch (const DimensionError& e) {
    throw ConfigError(e.what());
  } catch (const DomainError& e) {
    throw ConfigError(e.what());
  }
}

nlohmann::json solution_to_json(const SoftSolution& solution) {
  nlohmann::json doc;
  doc["theta"] = solution.theta;
  doc["alpha"] = solution.alpha;
  doc["residual"] = solution.residual;
  doc["iterations"] = solution.iterations;
  doc["bias"] = std::vector<double>(solution.bias.data(), solution.bias.data() + solution.bias.size());
  auto& policy = doc["policy"] = nlohmann::json::array();
  for (Eigen::Index s = 0; s < solution.policy.rows(); ++s) {
    const Eigen::VectorXd row = solution.policy.row(s);
    policy.push_back(std::vector<double>(row.data(), row.data() + row.size()));
  }
  return doc;
}

SoftSolution solution_from_json(const nlohmann::json& doc) {
  try {
    SoftSolution out;
    out.theta = doc.at("theta").get<double>();
    out.alpha = doc.at("alpha").get<double>();
    out.residual = doc.value("residual", 0.0);
    out.iterations = doc.value("iterations", 0L);
    const auto bias = doc.at("bias").get<std::vector<double>>();
    out.bias = Eigen::Map<const Eigen::VectorXd>(bias.data(), static_cast<Eigen::Index>(bias.size()));
    const auto policy = doc.at("policy").get<std::vector<std::vector<double>>>();
    const auto S = static_cast<Eigen::Index>(policy.size());
    const auto A = S > 0 ? static_cast<Eigen::Index>(policy.front().size()) : 0;
    out.policy.resize(S, A);
    for (Eigen::Index s = 0; s < S; ++s) {
      if (static_cast<Eigen::Index>(policy[static_cast<std::size_t>(s)].size()) != A) {
        throw ConfigError("policy rows differ in length");
      }
      for (Eigen::Index a = 0; a < A; ++a) {
        out.policy(s, a) = policy[static_cast<std::size_t>(s)][static_cast<std::size_t>(a)];
      }
    }
    return out;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed solution document: ") + e.what());
  }
}

void write_field_csv(std::ostream& out, const FrictionField& field, const ScalarField& scalars) {
  field.validate();
  const int L = field.dim();
  if (scalars.log_trace.size() != field.tensors.size() ||
      scalars.log_trace_smoothed.size() != field.tensors.size()) {
    throw DimensionError("scalar field does not match the friction field");
  }
  for (int i = 1; i <= L; ++i) out << (i > 1 ? "," : "") << "lambda" << i;
  for (int i = 1; i <= L; ++i) {
    for (int j = i; j <= L; ++j) out << ",zeta" << i << j;
  }
  out << ",logtrace_raw,logtrace_smoothed\n";
  for (std::size_t node = 0; node < field.tensors.size(); ++node) {
    const TaskParams p = field.grid.point(node);
    for (int i = 0; i < L; ++i) out << (i > 0 ? "," : "") << format_double(p(i));
    const auto& z = field.tensors[node];
    for (int i = 0; i < L; ++i) {
      for (int j = i; j < L; ++j) out << ',' << format_double(z(i, j));
    }
    out << ',' << format_double(scalars.log_trace[node]) << ','
        << format_double(scalars.log_trace_smoothed[node]) << '\n';
  }
}

FrictionField read_field_csv(std::istream& in) {
  const auto header = read_header(in);
  const auto columns = header.size();
  int L = 0;
  while (static_cast<std::size_t>(L + L * (L + 1) / 2 + 2) < columns) ++L;
  if (L < 1 || static_cast<std::size_t>(L + L * (L + 1) / 2 + 2) != columns) {
    throw ConfigError("field CSV header has an unexpected number of columns");
  }
  std::vector<std::vector<double>> rows;
  std::vector<double> row;
  while (read_row(in, row, columns)) rows.push_back(row);
  if (rows.empty()) throw ConfigError("field CSV has no rows");

  FrictionField field;
  for (int axis = 0; axis < L; ++axis) {
    std::set<double> values;
    for (const auto& r : rows) values.insert(r[static_cast<std::size_t>(axis)]);
    field.grid.lower.push_back(*values.begin());
    field.grid.upper.push_back(*values.rbegin());
    field.grid.resolution.push_back(static_cast<int>(values.size()));
  }
  field.grid.validate();
  if (field.grid.size() != rows.size()) throw ConfigError("field CSV does not cover a full grid");

  for (std::size_t node = 0; node < rows.size(); ++node) {
    const auto& r = rows[node];
    const TaskParams p = field.grid.point(node);
    for (int axis = 0; axis < L; ++axis) {
      const double scale = field.grid.upper[static_cast<std::size_t>(axis)] -
                           field.grid.lower[static_cast<std::size_t>(axis)];
      if (std::abs(p(axis) - r[static_cast<std::size_t>(axis)]) > 1e-9 * scale) {
        throw ConfigError("field CSV rows are not in grid order or not evenly spaced");
      }
    }
    Eigen::MatrixXd z(L, L);
    std::size_t c = static_cast<std::size_t>(L);
    for (int i = 0; i < L; ++i) {
      for (int j = i; j < L; ++j) {
        z(i, j) = r[c];
        z(j, i) = r[c];
        ++c;
      }
    }
    field.tensors.push_back(std::move(z));
  }
  return field;
}

void write_protocol_csv(std::ostream& out, const Protocol& protocol) {
  protocol.validate();
  out << 't';
  write_lambda_header(out, protocol.dim());
  out << '\n';
  for (std::size_t k = 0; k < protocol.size(); ++k) {
    out << format_double(protocol.times[k]);
    write_point(out, protocol.points[k]);
    out << '\n';
  }
}

Protocol read_protocol_csv(std::istream& in) {
  const auto header = read_header(in);
  if (header.size() < 2 || header.front() != "t") throw ConfigError("protocol CSV header must start with t");
  Protocol out;
  std::vector<double> row;
  while (read_row(in, row, header.size())) {
    out.times.push_back(row.front());
    out.points.push_back(Eigen::Map<const Eigen::VectorXd>(row.data() + 1,
                                                           static_cast<Eigen::Index>(row.size() - 1)));
  }
  out.validate();
  return out;
}

void write_regret_csv(std::ostream& out, const Protocol& protocol, const RegretTrace& trace) {
  if (trace.stage.size() != protocol.size()) {
    throw DimensionError("regret trace and protocol differ in length");
  }
  out << "stage,t";
  write_lambda_header(out, protocol.dim());
  out << ",stage_regret,cum_regret\n";
  for (std::size_t k = 0; k < protocol.size(); ++k) {
    out << k << ',' << format_double(protocol.times[k]);
    write_point(out, protocol.points[k]);
    out << ',' << format_double(trace.stage[k]) << ',' << format_double(trace.cumulative[k]) << '\n';
  }
}

void write_excess_work_csv(std::ostream& out, const std::vector<ExcessWorkRow>& rows) {
  out << "m,W_direct,W_quadratic,ratio\n";
  for (const auto& r : rows) {
    out << r.relax_steps << ',' << format_double(r.direct) << ',' << format_double(r.quadratic)
        << ',' << format_double(r.ratio()) << '\n';
  }
}

void write_trace_csv(std::ostream& out, const AnnealTrace& trace) {
  out << "step,alpha,beta,zeta,mean_reward,delta_beta\n";
  for (const auto& r : trace.records) {
    out << r.step << ',' << format_double(r.alpha) << ',' << format_double(r.beta) << ','
        << format_double(r.zeta) << ',' << format_double(r.mean_reward) << ','
        << format_double(r.delta_beta) << '\n';
  }
}

void write_comparison_csv(std::ostream& out, const std::vector<ScheduleResult>& rows) {
  out << "schedule,seed,final_alpha,target_alpha,theta_at_target,mean_reward\n";
  for (const auto& r : rows) {
    out << r.schedule << ',' << r.seed << ',' << format_double(r.final_alpha) << ','
        << format_double(r.target_alpha) << ',' << format_double(r.theta_at_target) << ','
        << format_double(r.mean_reward) << '\n';
  }
}

std::string fnv1a_hex(const std::string& bytes) {
  std::uint64_t hash = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    hash ^= c;
    hash *= 0x100000001b3ULL;
  }
  char buffer[17];
  std::snprintf(buffer, sizeof(buffer), "%016llx", static_cast<unsigned long long>(hash));
  return buffer;
}

nlohmann::json metadata_to_json(const RunMetadata& meta) {
  nlohmann::json doc;
  doc["command"] = meta.command;
  doc["config_hash"] = meta.config_hash;
  doc["seed"] = meta.seed;
  doc["wall_time_s"] = meta.wall_time_s;
  doc["module_versions"] = {{"mdp_core", kVersion},    {"maxent_solver", kVersion},
                            {"friction", kVersion},    {"manifold", kVersion},
                            {"protocol_eval", kVersion}, {"mew_anneal", kVersion},
                            {"cli", kVersion}};
  for (const auto& [key, value] : meta.extra.items()) doc[key] = value;
  return doc;
}

std::string library_version() { return kVersion; }

}  // namespace taskgeo
