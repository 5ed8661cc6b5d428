#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "ilcl/mining/annealing.hpp"
#include "ilcl/mining/dataset.hpp"
#include "ilcl/tl/formula.hpp"

namespace ilcl::mining {

/// Fraction of negatives with ρ < 0, times 1 if every expert has ρ > 0 and 0
/// otherwise. No negatives gives 0.
double fitness(const tl::Formula& f, const tl::ParamVector& theta, const Dataset& data);

/// Scores one skeleton against a dataset for many parameter vectors.
class SkeletonScorer {
 public:
  SkeletonScorer(const tl::Formula& skeleton, const Dataset& data);

  struct Score {
    double exact = 0.0;
    /// mean σ(-ρ/τ) over negatives times min σ(ρ/τ) over experts.
    double surrogate = 0.0;
  };

  std::size_t param_count() const { return params_.size(); }
  const std::vector<tl::ParamId>& params() const { return params_; }
  /// Threshold box of each parameter (the box of the dimension it reads).
  const std::vector<Bounds>& bounds() const { return bounds_; }
  /// Dimension read by each parameter.
  const std::vector<std::size_t>& param_dims() const { return dims_; }
  double tau() const { return tau_; }

  Score score(std::span<const double> theta) const;
  double exact(std::span<const double> theta) const;

 private:
  tl::RobustnessProgram program_;
  const Dataset* data_;
  std::vector<tl::ParamId> params_;
  std::vector<Bounds> bounds_;
  std::vector<std::size_t> dims_;
  double tau_ = 1.0;
};

struct FitOptions {
  AnnealingOptions annealing;
  /// Annealing minimises -(w * exact + surrogate).
  double exact_weight = 1.0;
  /// Coordinate sweeps over data cut points after annealing, on the exact
  /// fitness with the surrogate as tie-break. 0 disables.
  std::size_t polish_passes = 5;
  /// Evenly spaced cut points tried per coordinate, plus `polish_window`
  /// neighbours on each side of the current value.
  std::size_t polish_spread = 128;
  std::size_t polish_window = 32;
};

struct FitResult {
  tl::ParamVector theta;
  double fitness = 0.0;
  double surrogate = 0.0;
  std::size_t evaluations = 0;
};

/// Anneal the surrogate over the parameter box, then polish coordinate-wise
/// on the exact fitness. Returns the θ that is best by (exact fitness,
/// surrogate) among everything evaluated. `initial` seeds the search when it
/// covers the skeleton's parameters. `budget` bounds the annealing stage.
FitResult optimize_params(const tl::Formula& skeleton, const Dataset& data, std::size_t budget,
                          std::uint64_t seed, const tl::ParamVector& initial = {},
                          const FitOptions& opt = {});

}  // namespace ilcl::mining
