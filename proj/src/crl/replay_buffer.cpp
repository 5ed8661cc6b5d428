#include "ilcl/crl/replay_buffer.hpp"

#include <algorithm>

namespace ilcl::crl {

ReplayBuffer::ReplayBuffer(std::size_t capacity_steps) : capacity_(capacity_steps) {
  if (capacity_ == 0) throw TrajectoryError("replay buffer capacity must be positive");
}

std::uint64_t ReplayBuffer::add(Trajectory traj) {
  traj.validate();
  const std::uint64_t id = first_id_ + trajs_.size();
  for (std::size_t t = 0; t < traj.steps(); ++t) steps_.push_back({id, t});
  trajs_.push_back(std::move(traj));
  std::size_t drop_steps = 0;
  while (steps_.size() - drop_steps > capacity_ && trajs_.size() > 1) {
    drop_steps += trajs_.front().steps();
    trajs_.pop_front();
    ++first_id_;
  }
  if (drop_steps > 0) steps_.erase(steps_.begin(), steps_.begin() + static_cast<std::ptrdiff_t>(drop_steps));
  return id;
}

bool ReplayBuffer::contains(std::uint64_t id) const {
  return id >= first_id_ && id < first_id_ + trajs_.size();
}

const Trajectory& ReplayBuffer::trajectory(std::uint64_t id) const {
  if (!contains(id)) throw TrajectoryError("trajectory " + std::to_string(id) + " is not in the buffer");
  return trajs_[id - first_id_];
}

double ReplayBuffer::redistribute(StepRef step) const {
  const Trajectory& t = trajectory(step.traj);
  if (step.t >= t.steps()) throw TrajectoryError("step index outside its trajectory");
  return t.traj_cost;
}

ReplayBuffer::StepRef ReplayBuffer::sample(std::mt19937_64& rng) const {
  if (steps_.empty()) throw TrajectoryError("cannot sample from an empty buffer");
  return steps_[std::uniform_int_distribution<std::size_t>(0, steps_.size() - 1)(rng)];
}

}  // namespace ilcl::crl
