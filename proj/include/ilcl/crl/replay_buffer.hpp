#pragma once

#include <cstddef>
#include <cstdint>
#include <deque>
#include <random>
#include <vector>

#include "ilcl/crl/trajectory.hpp"

namespace ilcl::crl {

/// Whole trajectories kept in insertion order. Every stored step points back
/// to its trajectory, so a trajectory-level cost can be handed to each step.
class ReplayBuffer {
 public:
  struct StepRef {
    std::uint64_t traj = 0;
    std::size_t t = 0;
  };

  /// Oldest trajectories are evicted once more than `capacity_steps` steps
  /// are held.
  explicit ReplayBuffer(std::size_t capacity_steps);

  /// Returns the trajectory id.
  std::uint64_t add(Trajectory traj);

  bool contains(std::uint64_t id) const;
  /// Throws TrajectoryError for an evicted or unknown id.
  const Trajectory& trajectory(std::uint64_t id) const;
  /// Cost of the trajectory containing the step.
  double redistribute(StepRef step) const;

  std::size_t step_count() const { return steps_.size(); }
  std::size_t trajectory_count() const { return trajs_.size(); }
  const std::vector<StepRef>& steps() const { return steps_; }
  StepRef sample(std::mt19937_64& rng) const;

 private:
  std::size_t capacity_;
  std::uint64_t first_id_ = 0;
  std::deque<Trajectory> trajs_;
  std::vector<StepRef> steps_;
};

}  // namespace ilcl::crl
