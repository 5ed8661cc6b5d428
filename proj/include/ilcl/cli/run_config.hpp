#pragma once

#include <cstddef>
#include <cstdint>
#include <string>

#include <json.hpp>

#include "ilcl/envs/demos.hpp"
#include "ilcl/envs/nav_env.hpp"
#include "ilcl/game/ilcl.hpp"

namespace ilcl::cli {

/// Everything a command may need, read from one JSON document:
///
///   {
///     "task": "nav1",            navigation ground truth: nav1 | nav2
///     "seed": 0,                 base seed for training, sampling and mining
///     "layout_seed": 0,          training layout for randomize()
///     "workers": 1,
///     "demos": {"n": 20, "quantile": 0.6, "pool_size": 200, "max_attempts": 4000},
///     "mining": { MiningConfig keys },
///     "crl": { CrlConfig keys },
///     "ilcl": {"iterations": 3, "bootstrap_count": 200, "samples_per_iteration": 200,
///              "max_sample_attempts": 2000, "select_samples": 8}
///   }
///
/// Every section and key is optional; unknown keys are rejected.
struct RunConfig {
  std::string task = "nav1";
  std::uint64_t seed = 0;
  std::uint64_t layout_seed = 0;
  std::size_t workers = 1;
  std::size_t demo_count = 20;
  envs::DemoOptions demos;
  game::IlclConfig ilcl;

  /// Mining defaults to the region-distance dimensions (pR_dist, pG_dist,
  /// pB_dist); set mining.selected_dims to [] to choose them from the data.
  RunConfig();

  /// DemoOptions with the shared crl section, seed and workers filled in.
  envs::DemoOptions demo_options() const;
  /// IlclConfig with the shared seed and workers filled in.
  game::IlclConfig ilcl_config() const;
  const envs::GroundTruth& ground_truth() const;
  /// Training layout: feasible for the task's ground truth, with the
  /// straight-to-goal path violating it and a satisfying path worth at least
  /// half its reward.
  envs::EnvSpec training_layout() const;

  void validate() const;
};

nlohmann::json to_json(const RunConfig& cfg);
/// Throws std::invalid_argument on unknown keys or invalid values.
RunConfig run_config_from_json(const nlohmann::json& j);
RunConfig load_run_config(const std::string& path);

}  // namespace ilcl::cli
