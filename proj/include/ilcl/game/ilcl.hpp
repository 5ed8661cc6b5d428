#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "ilcl/crl/env.hpp"
#include "ilcl/crl/sac_lag.hpp"
#include "ilcl/crl/trajectory.hpp"
#include "ilcl/mining/miner.hpp"
#include "ilcl/tl/formula.hpp"
#include "ilcl/tl/parse.hpp"

namespace ilcl::game {

class GameError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct IlclConfig {
  std::size_t iterations = 3;
  /// Ξ_0 size from the reward-only policy.
  std::size_t bootstrap_count = 200;
  /// Zero-violation rollouts added to the pool per iteration.
  std::size_t samples_per_iteration = 200;
  std::size_t max_sample_attempts = 2000;
  /// Action samples per expert state in select_best.
  std::size_t select_samples = 8;
  mining::MiningConfig mining;
  crl::CrlConfig crl;
  std::size_t workers = 1;
  std::uint64_t seed = 0;

  void validate() const;
};

nlohmann::json to_json(const IlclConfig& cfg);
/// Nested "mining" and "crl" objects; unknown keys throw std::invalid_argument.
IlclConfig ilcl_config_from_json(const nlohmann::json& j, IlclConfig base = {});

struct IterationRecord {
  std::size_t k = 0;
  std::string formula;
  double fitness = 0.0;
  double reg_fitness = 0.0;
  std::size_t node_count = 0;
  std::size_t experts_accepted = 0;
  std::size_t negatives = 0;
  double final_lambda = 0.0;
  std::size_t sampled = 0;
  std::size_t attempts = 0;
  bool cap_hit = false;
  double mine_seconds = 0.0;
  double train_seconds = 0.0;
};

nlohmann::json to_json(const IterationRecord& r);

struct GameState {
  std::size_t k = 0;
  std::vector<tl::Formula> constraints;
  std::vector<std::shared_ptr<const crl::LagrangianPolicy>> policies;
  std::vector<crl::Trajectory> experts;
  /// pool[0] is Ξ_0 from the reward-only policy, pool[k] is Ξ_k.
  std::vector<std::vector<crl::Trajectory>> pool;
  std::vector<IterationRecord> records;

  std::size_t pool_size() const;
  /// Ξ_0 ∪ Ξ_1 ∪ ... in iteration order.
  std::vector<crl::Trajectory> pooled() const;
};

struct Selection {
  std::size_t index = 0;
  /// Mean E‖a − a'‖₂ over expert steps, per candidate.
  std::vector<double> errors;
};

/// Mean over every expert (s, q, t, a) of the Monte Carlo estimate of
/// E_{a'∼π}‖a − a'‖₂ with `samples` draws. Deterministic in `seed`.
double expert_action_error(const crl::LagrangianPolicy& policy, const std::vector<crl::Trajectory>& experts,
                           std::size_t samples, std::uint64_t seed);

/// Candidate with the lowest expert action error; ties go to the earlier one.
Selection select_best(const std::vector<std::shared_ptr<const crl::LagrangianPolicy>>& policies,
                      const std::vector<crl::Trajectory>& experts, std::size_t samples, std::uint64_t seed);

/// Trains a reward-only policy (constraint ⊤) and returns exactly m of its rollouts.
std::vector<crl::Trajectory> bootstrap_negatives(const crl::Env& env, std::size_t m, const crl::CrlConfig& cfg,
                                                 std::size_t workers = 1,
                                                 std::shared_ptr<const crl::LagrangianPolicy>* policy = nullptr);

struct GameResult {
  tl::Formula formula;
  std::shared_ptr<const crl::LagrangianPolicy> policy;
  Selection selection;
  GameState state;
};

/// Progress text, one line per event.
using GameProgress = std::function<void(const std::string&)>;

struct RunOptions {
  /// Run directory; nothing is written when empty.
  std::string out_dir;
  tl::FeatureTable features;
  /// Extra fields stored in run.json.
  nlohmann::json run_info = nlohmann::json::object();
  GameProgress progress;
  /// Ξ_0 to use instead of training the reward-only policy.
  std::optional<std::vector<crl::Trajectory>> bootstrap;
};

/// Alternates mining against Ξ_0 ∪ Ξ_{1:k-1} and Lagrangian CRL under the
/// mined constraint for cfg.iterations rounds, then picks the most
/// expert-like policy. Throws GameError when the first mined constraint has
/// fitness 0 or rejects an expert.
GameResult run(const crl::Env& env, const std::vector<crl::Trajectory>& experts, const IlclConfig& cfg,
               const RunOptions& opt = {});

/// Recomputes every logged fitness, expert ρ and pool ρ of a run directory
/// from its stored trajectories and constraint texts. Returns one message per
/// mismatch.
std::vector<std::string> replay_audit(const std::string& run_dir, double tolerance = 1e-12);

}  // namespace ilcl::game
