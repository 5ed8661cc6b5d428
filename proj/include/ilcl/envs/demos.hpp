#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "ilcl/crl/sac_lag.hpp"
#include "ilcl/crl/trajectory.hpp"
#include "ilcl/envs/nav_env.hpp"
#include "ilcl/tl/formula.hpp"

namespace ilcl::envs {

struct DemoOptions {
  crl::CrlConfig crl;
  /// Demos need reward at or above this quantile of the reference pool.
  double quantile = 0.6;
  /// Rollouts drawn first to fix the reward cut.
  std::size_t pool_size = 200;
  std::size_t max_attempts = 4000;
  std::size_t workers = 1;
  std::uint64_t seed = 0;
};

struct DemoSet {
  std::vector<crl::Trajectory> demos;
  /// Episode rewards of the reference pool, in sampling order.
  std::vector<double> pool_rewards;
  double reward_cut = 0.0;
  std::size_t attempts = 0;
  /// Fewer than the requested count were found within max_attempts.
  bool partial = false;
};

/// Linear-interpolated quantile (q in [0, 1]) of unsorted values.
double quantile(std::vector<double> values, double q);

/// Rejection-samples rollouts of `policy` with ρ(ξ, gt) > 0 and reward at or
/// above the pool quantile. Demos carry meta {"spec": hash, "index": i}.
DemoSet sample_demos(const crl::LagrangianPolicy& policy, const NavEnv& env, const tl::Formula& gt,
                     std::size_t n, const DemoOptions& opt);

/// Trains a policy against `gt` on the layout, then samples demos from it.
DemoSet gen_expert_demos(const EnvSpec& spec, const tl::Formula& gt, std::size_t n,
                         const DemoOptions& opt, crl::TrainLog* log = nullptr,
                         const crl::TrainProgress& progress = {});

}  // namespace ilcl::envs
