#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

namespace ilcl::mining {

struct AnnealingOptions {
  double visit = 2.62;            // q_v, tail of the visiting distribution
  double accept = -5.0;           // q_a
  double initial_temperature = 5230.0;
  double restart_temp_ratio = 2e-5;
  bool local_search = true;
};

struct AnnealingResult {
  std::vector<double> x;
  double energy = 0.0;
  std::size_t evaluations = 0;
};

using Energy = std::function<double(std::span<const double>)>;

/// Generalized simulated annealing (Tsallis visiting distribution and
/// acceptance) with temperature restarts, followed on every improvement by a
/// compass local search. Minimizes `energy` inside the box using at most
/// `budget` evaluations. `x0` may be empty (random start).
AnnealingResult dual_annealing(const Energy& energy, std::span<const double> lower,
                               std::span<const double> upper, std::span<const double> x0,
                               std::size_t budget, std::uint64_t seed,
                               const AnnealingOptions& opt = {});

}  // namespace ilcl::mining
