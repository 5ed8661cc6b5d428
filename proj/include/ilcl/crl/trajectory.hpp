#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "ilcl/tl/robustness.hpp"

namespace ilcl::automaton {
class Dfa;
}

namespace ilcl::crl {

class TrajectoryError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct CostParams;

/// One episode: T+1 states, T actions and rewards, plus the constraint
/// bookkeeping filled in by `score`.
struct Trajectory {
  std::size_t state_dim = 0;
  std::size_t action_dim = 0;
  std::vector<double> states;
  std::vector<double> actions;
  std::vector<double> rewards;
  /// Product DFA state after each state; empty when never scored.
  std::vector<std::size_t> dfa_states;
  std::optional<double> rho;
  double traj_cost = 0.0;
  bool violation = false;
  nlohmann::json meta = nlohmann::json::object();

  std::size_t steps() const { return rewards.size(); }
  std::span<const double> state(std::size_t t) const {
    return {states.data() + t * state_dim, state_dim};
  }
  std::span<const double> action(std::size_t t) const {
    return {actions.data() + t * action_dim, action_dim};
  }
  double total_reward() const;
  tl::Trace trace() const { return tl::Trace(state_dim, states); }

  /// Throws TrajectoryError when lengths disagree.
  void validate() const;
};

/// Recomputes ρ, cost, violation flag and DFA states of `traj` under the
/// concrete formula compiled into `dfa`.
void score(Trajectory& traj, const automaton::Dfa& dfa, const CostParams& cost);

nlohmann::json to_json(const Trajectory& traj);
/// Throws TrajectoryError on missing or malformed fields.
Trajectory from_json(const nlohmann::json& j);

void write_jsonl(std::ostream& out, const std::vector<Trajectory>& trajs);
/// One trajectory per non-empty line. Errors name the 1-based line number.
std::vector<Trajectory> read_jsonl(std::istream& in);

void save_jsonl(const std::string& path, const std::vector<Trajectory>& trajs);
std::vector<Trajectory> load_jsonl(const std::string& path);

std::vector<tl::Trace> traces_of(const std::vector<Trajectory>& trajs);

}  // namespace ilcl::crl
