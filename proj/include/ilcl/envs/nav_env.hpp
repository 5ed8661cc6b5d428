#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "ilcl/crl/env.hpp"
#include "ilcl/tl/formula.hpp"
#include "ilcl/tl/parse.hpp"

namespace ilcl::envs {

enum class Color { Red, Green, Blue };

std::string color_name(Color c);

struct Region {
  Color color = Color::Red;
  double x = 0.0;
  double y = 0.0;
  double radius = 0.0;
};

enum class Split { Train, Test };

/// Everything needed to rebuild a navigation layout.
struct EnvSpec {
  double side = 1.0;  // workspace is [0, side]²
  std::size_t horizon = 25;
  std::array<double, 2> start{0.1, 0.1};
  std::array<double, 2> goal{0.9, 0.9};
  /// Episode starts are drawn uniformly from start ± start_jitter per axis.
  double start_jitter = 0.0;
  std::vector<Region> regions;
  std::uint64_t seed = 0;
  Split split = Split::Train;

  nlohmann::json to_json() const;
  /// Throws std::invalid_argument on malformed documents.
  static EnvSpec from_json(const nlohmann::json& j);
  /// FNV-1a of the JSON text, as 16 hex digits.
  std::string hash() const;
};

/// x_agt, y_agt, x_goal, y_goal, then (dist, ang) for red, green, blue.
inline constexpr std::size_t kNavStateDim = 10;
const tl::FeatureTable& nav_features();

/// Navigation state at an agent position. dist is the distance to the
/// nearest region boundary of that color (0 inside), ang the bearing of that
/// region's center from the agent in (-π, π]. A missing color reads as the
/// workspace diagonal at angle 0.
std::array<double, kNavStateDim> nav_state(const EnvSpec& spec, double x, double y);

/// Point agent moving by Δx per step inside the workspace.
class NavEnv : public crl::Env {
 public:
  explicit NavEnv(EnvSpec spec);

  std::size_t state_dim() const override { return kNavStateDim; }
  std::size_t action_dim() const override { return 2; }
  /// 0.05 · side.
  double action_bound() const override { return 0.05 * spec_.side; }
  std::size_t horizon() const override { return spec_.horizon; }

  std::vector<double> reset(crl::Rng& rng) override;
  /// Starts at an exact position (clipped to the workspace).
  std::vector<double> reset_at(double x, double y);
  crl::StepResult step(std::span<const double> action) override;
  std::unique_ptr<crl::Env> clone() const override;

  const EnvSpec& spec() const { return spec_; }
  std::array<double, 2> position() const { return pos_; }
  std::size_t time() const { return t_; }
  double reward_at(double x, double y) const;

 private:
  std::vector<double> observe() const;

  EnvSpec spec_;
  std::array<double, 2> pos_{};
  std::size_t t_ = 0;
};

struct GroundTruth {
  std::string text;
  tl::Formula formula;
  tl::FeatureTable features;
};

/// "nav1", "nav2" over nav_features(); "wiping" and "peg" over their own
/// feature names (no environment behind them).
const std::map<std::string, GroundTruth>& gt_constraints();

struct RandomizeOptions {
  /// When set, only layouts where this formula can be satisfied from the
  /// nominal start are returned.
  std::optional<tl::Formula> feasible_for;
  /// With feasible_for: also require that heading straight for the goal at
  /// full speed violates it.
  bool require_greedy_violation = false;
  /// Feasibility is checked with every predicate tightened by this much.
  double margin = 0.03;
  /// With feasible_for: the best satisfying lattice path must collect at
  /// least this fraction of the straight-to-goal path's reward.
  double min_reward_ratio = 0.0;
  std::size_t max_attempts = 20000;
};

/// Train: side 1, T = 25, one region per color. Test: side 1.5, T = 50, one
/// or two regions per color. Deterministic in (seed, split, options).
EnvSpec randomize(std::uint64_t seed, Split split, const RandomizeOptions& opt = {});

/// Highest-reward action sequence on a lattice of half-box moves from the
/// nominal start whose trace satisfies the formula (strict predicates), as
/// the visited positions. Empty when none exists.
std::optional<std::vector<std::array<double, 2>>> plan_satisfying(const EnvSpec& spec,
                                                                  const tl::Formula& f);

/// Positions visited by moving straight toward the goal at full speed.
std::vector<std::array<double, 2>> greedy_path(const EnvSpec& spec);

}  // namespace ilcl::envs
