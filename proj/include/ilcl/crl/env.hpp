#pragma once

#include <cstddef>
#include <memory>
#include <random>
#include <span>
#include <vector>

namespace ilcl::crl {

using Rng = std::mt19937_64;

struct StepResult {
  std::vector<double> state;
  double reward = 0.0;
  bool done = false;
};

/// Episodic continuous-control environment with a fixed horizon and a
/// symmetric box action space [-action_bound, action_bound]^action_dim.
class Env {
 public:
  virtual ~Env() = default;

  virtual std::size_t state_dim() const = 0;
  virtual std::size_t action_dim() const = 0;
  virtual double action_bound() const = 0;
  virtual std::size_t horizon() const = 0;

  /// Starts an episode; randomness (if any) is drawn from `rng`.
  virtual std::vector<double> reset(Rng& rng) = 0;
  /// Actions outside the box are clipped.
  virtual StepResult step(std::span<const double> action) = 0;

  virtual std::unique_ptr<Env> clone() const = 0;
};

}  // namespace ilcl::crl
