#include "ilcl/crl/trajectory.hpp"

#include <fstream>
#include <istream>
#include <numeric>
#include <ostream>

#include "ilcl/automaton/dfa.hpp"
#include "ilcl/crl/cost.hpp"

namespace ilcl::crl {

using nlohmann::json;

double Trajectory::total_reward() const { return std::accumulate(rewards.begin(), rewards.end(), 0.0); }

void Trajectory::validate() const {
  if (state_dim == 0) throw TrajectoryError("trajectory has no state dimensions");
  if (states.size() % state_dim != 0) throw TrajectoryError("ragged state rows");
  const std::size_t n_states = states.size() / state_dim;
  if (n_states != rewards.size() + 1)
    throw TrajectoryError("expected " + std::to_string(rewards.size() + 1) + " states for " +
                          std::to_string(rewards.size()) + " rewards, got " + std::to_string(n_states));
  if (action_dim == 0 ? !actions.empty() : actions.size() != rewards.size() * action_dim)
    throw TrajectoryError("action count does not match reward count");
  if (!dfa_states.empty() && dfa_states.size() != n_states)
    throw TrajectoryError("dfa_states must have one entry per state");
}

void score(Trajectory& traj, const automaton::Dfa& dfa, const CostParams& cost) {
  const tl::Trace tr = traj.trace();
  const double rho = tl::robustness(tr, dfa.formula());
  traj.rho = rho;
  traj.traj_cost = dense_cost(rho, cost);
  traj.violation = rho < 0.0;
  traj.dfa_states = dfa.run(tr);
}

namespace {

json rows(const std::vector<double>& flat, std::size_t width) {
  json out = json::array();
  if (width == 0) return out;
  for (std::size_t i = 0; i < flat.size(); i += width)
    out.push_back(std::vector<double>(flat.begin() + i, flat.begin() + i + width));
  return out;
}

std::vector<double> flatten(const json& j, const char* field, std::size_t& width) {
  if (!j.is_array()) throw TrajectoryError(std::string("field '") + field + "' must be an array of rows");
  std::vector<double> out;
  for (const auto& row : j) {
    if (!row.is_array()) throw TrajectoryError(std::string("field '") + field + "' must be an array of rows");
    if (width == 0) width = row.size();
    if (row.size() != width) throw TrajectoryError(std::string("ragged rows in '") + field + "'");
    for (const auto& v : row) {
      if (!v.is_number()) throw TrajectoryError(std::string("non-numeric entry in '") + field + "'");
      out.push_back(v.get<double>());
    }
  }
  return out;
}

}  // namespace

json to_json(const Trajectory& traj) {
  json j;
  j["states"] = rows(traj.states, traj.state_dim);
  j["actions"] = rows(traj.actions, traj.action_dim);
  j["rewards"] = traj.rewards;
  if (!traj.dfa_states.empty()) j["dfa_states"] = traj.dfa_states;
  if (traj.rho) j["rho"] = *traj.rho;
  j["meta"] = traj.meta;
  return j;
}

Trajectory from_json(const json& j) {
  if (!j.is_object()) throw TrajectoryError("trajectory must be a JSON object");
  for (const char* f : {"states", "actions", "rewards"})
    if (!j.contains(f)) throw TrajectoryError(std::string("missing field '") + f + "'");
  Trajectory t;
  t.states = flatten(j["states"], "states", t.state_dim);
  t.actions = flatten(j["actions"], "actions", t.action_dim);
  try {
    t.rewards = j["rewards"].get<std::vector<double>>();
    if (j.contains("dfa_states")) t.dfa_states = j["dfa_states"].get<std::vector<std::size_t>>();
    if (j.contains("rho")) t.rho = j["rho"].get<double>();
  } catch (const json::exception& e) {
    throw TrajectoryError(e.what());
  }
  if (j.contains("meta")) t.meta = j["meta"];
  t.validate();
  if (t.rho) t.violation = *t.rho < 0.0;
  return t;
}

void write_jsonl(std::ostream& out, const std::vector<Trajectory>& trajs) {
  for (const auto& t : trajs) out << to_json(t).dump() << '\n';
}

std::vector<Trajectory> read_jsonl(std::istream& in) {
  std::vector<Trajectory> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(from_json(json::parse(line)));
    } catch (const json::exception& e) {
      throw TrajectoryError("line " + std::to_string(lineno) + ": " + e.what());
    } catch (const TrajectoryError& e) {
      throw TrajectoryError("line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

void save_jsonl(const std::string& path, const std::vector<Trajectory>& trajs) {
  std::ofstream out(path);
  if (!out) throw TrajectoryError("cannot write " + path);
  write_jsonl(out, trajs);
}

std::vector<Trajectory> load_jsonl(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw TrajectoryError("cannot read " + path);
  return read_jsonl(in);
}

std::vector<tl::Trace> traces_of(const std::vector<Trajectory>& trajs) {
  std::vector<tl::Trace> out;
  out.reserve(trajs.size());
  for (const auto& t : trajs) out.push_back(t.trace());
  return out;
}

}  // namespace ilcl::crl
