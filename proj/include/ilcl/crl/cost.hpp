#pragma once

#include <cstddef>
#include <span>

#include "ilcl/tl/formula.hpp"
#include "ilcl/tl/robustness.hpp"

namespace ilcl::crl {

struct CostParams {
  double alpha = 0.5;    // weight of the violation indicator
  double upsilon = 1.0;  // clip bound on -ρ
  double epsilon = 0.5;  // threshold factor
  std::size_t n_xi = 10;

  /// d = ε·α / N_ξ, applied per step.
  double threshold() const { return epsilon * alpha / static_cast<double>(n_xi); }
  /// Throws std::invalid_argument outside α ∈ [0,1], Υ > 0, 0 < ε < 1, N_ξ ≥ 1.
  void validate() const;
};

/// α·1[ρ<0] + ((1-α)/Υ)·clip(-ρ, 0, Υ).
double dense_cost(double rho, const CostParams& p);
double dense_cost(const tl::Trace& trace, const tl::Formula& f, const CostParams& p);

struct Metrics {
  double vr = 0.0;   // percent of episodes with ρ < 0
  double rew = 0.0;  // mean episode return
  double tr = 0.0;   // mean max(-ρ, 0)
  std::size_t episodes = 0;
};

/// `rhos` and `returns` are per episode and must have equal length.
Metrics compute_metrics(std::span<const double> rhos, std::span<const double> returns);

}  // namespace ilcl::crl
