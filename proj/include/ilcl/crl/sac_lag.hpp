#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "ilcl/automaton/dfa.hpp"
#include "ilcl/crl/cost.hpp"
#include "ilcl/crl/env.hpp"
#include "ilcl/crl/mlp.hpp"
#include "ilcl/crl/trajectory.hpp"
#include "ilcl/tl/formula.hpp"

namespace ilcl::crl {

class DivergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct CrlConfig {
  CostParams cost;
  double discount = 0.99;
  double polyak = 0.005;
  std::size_t hidden = 64;
  std::size_t hidden_layers = 2;
  double actor_lr = 3e-4;
  double critic_lr = 3e-4;
  double temperature_lr = 3e-4;
  double lambda_lr = 1e-3;
  double initial_lambda = 0.0;
  double initial_temperature = 0.1;
  std::size_t batch_size = 256;
  std::size_t total_steps = 200000;
  /// Uniform random actions before this many environment steps.
  std::size_t random_steps = 2000;
  std::size_t update_after = 1000;
  /// Gradient updates per environment step.
  std::size_t updates_per_step = 1;
  std::size_t buffer_capacity = 1000000;
  std::uint64_t seed = 0;

  void validate() const;
};

nlohmann::json to_json(const CrlConfig& cfg);
/// Keys missing from `j` keep their defaults; unknown keys throw
/// std::invalid_argument.
CrlConfig crl_config_from_json(const nlohmann::json& j, CrlConfig base = {});

/// Squashed-Gaussian actor over (state, one-hot DFA state, t/T), twin reward
/// critics, twin cost critics with targets, entropy temperature and λ.
class LagrangianPolicy {
 public:
  LagrangianPolicy(std::size_t state_dim, std::size_t action_dim, double action_bound,
                   std::size_t horizon, const tl::Formula& constraint, const CrlConfig& cfg);

  std::size_t state_dim() const { return state_dim_; }
  std::size_t action_dim() const { return action_dim_; }
  double action_bound() const { return action_bound_; }
  std::size_t horizon() const { return horizon_; }
  std::size_t obs_dim() const { return state_dim_ + dfa_.state_count() + 1; }
  const tl::Formula& constraint() const { return dfa_.formula(); }
  const automaton::Dfa& dfa() const { return dfa_; }
  const CrlConfig& config() const { return cfg_; }

  double lambda() const { return lambda_; }
  double temperature() const;

  /// Writes the network input for (s, q, t) into `out` (obs_dim entries).
  void observe(std::span<const double> state, std::size_t q, std::size_t t, float* out) const;
  /// Samples a ~ π(·|s, q, t), or returns the squashed mean when deterministic.
  std::vector<double> act(std::span<const double> state, std::size_t q, std::size_t t, Rng& rng,
                          bool deterministic = false) const;

  /// Flat binary of every parameter array plus a JSON sidecar at path + ".json".
  void save(const std::string& path) const;
  static LagrangianPolicy load(const std::string& path);

 private:
  friend class Learner;
  std::size_t state_dim_, action_dim_;
  double action_bound_;
  std::size_t horizon_;
  automaton::Dfa dfa_;
  CrlConfig cfg_;

  Mlp actor_;
  Mlp reward_q_[2], reward_target_[2];
  Mlp cost_q_[2], cost_target_[2];
  double log_temperature_ = 0.0;
  double lambda_ = 0.0;
};

struct TrainLog {
  /// λ after each gradient update.
  std::vector<double> lambdas;
  std::vector<double> episode_returns;
  std::vector<double> episode_rhos;
  std::size_t updates = 0;
  std::size_t warm_start_inserted = 0;
  std::size_t warm_start_rejected = 0;
};

using TrainProgress = std::function<void(std::size_t step, const TrainLog&)>;

/// Off-policy Lagrangian actor-critic on redistributed trajectory costs.
/// Warm-start trajectories are re-scored under the constraint and kept only
/// when they do not violate it. Throws DivergenceError on a non-finite loss.
LagrangianPolicy train_policy(const Env& env, const tl::Formula& constraint,
                              const std::vector<Trajectory>& warm_start, const CrlConfig& cfg,
                              TrainLog* log = nullptr, const TrainProgress& progress = {});

/// One episode under the policy, scored against its own constraint.
Trajectory rollout(const LagrangianPolicy& policy, Env& env, Rng& rng, bool deterministic = false);

struct RolloutOptions {
  std::uint64_t seed = 0;
  std::size_t workers = 1;
  bool deterministic = false;
};

/// Episodes i = 0..n-1, each with its own seed stream, so the result does not
/// depend on the worker count.
std::vector<Trajectory> rollouts(const LagrangianPolicy& policy, const Env& env, std::size_t n,
                                 const RolloutOptions& opt = {});

struct ZeroViolationSample {
  std::vector<Trajectory> trajectories;
  std::size_t attempts = 0;
  bool cap_hit = false;
};

/// Rollouts re-scored under `constraint`, keeping those with ρ ≥ 0 until `n`
/// are collected or `max_attempts` episodes were run.
ZeroViolationSample sample_zero_violation(const LagrangianPolicy& policy, const Env& env,
                                          const tl::Formula& constraint, std::size_t n,
                                          std::size_t max_attempts, const RolloutOptions& opt = {});

/// VR / REW / TR of `episodes` rollouts per environment against `gt`.
Metrics evaluate_policy(const LagrangianPolicy& policy, const std::vector<const Env*>& envs,
                        const tl::Formula& gt, std::size_t episodes, const RolloutOptions& opt = {});

/// Metrics of recorded trajectories against `gt`.
Metrics evaluate_trajectories(const std::vector<Trajectory>& trajs, const tl::Formula& gt);

}  // namespace ilcl::crl
