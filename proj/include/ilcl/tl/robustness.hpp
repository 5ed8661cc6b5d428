#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "ilcl/tl/formula.hpp"

namespace ilcl::tl {

/// Robustness of True; False and a strong next at the last step give -kBottom.
inline constexpr double kTop = 1e6;
inline constexpr double kBottom = 1e6;

/// Finite state sequence s_0..s_T stored row-major (T+1 rows of `dims` values).
class Trace {
 public:
  Trace() = default;
  Trace(std::size_t dims, std::vector<double> values);
  explicit Trace(const std::vector<std::vector<double>>& rows);

  std::size_t dims() const { return dims_; }
  std::size_t length() const { return dims_ == 0 ? 0 : values_.size() / dims_; }
  /// Last time index T.
  std::size_t last() const { return length() - 1; }
  std::span<const double> state(std::size_t t) const {
    return {values_.data() + t * dims_, dims_};
  }
  double at(std::size_t t, std::size_t dim) const { return values_[t * dims_ + dim]; }
  const std::vector<double>& values() const { return values_; }

 private:
  std::size_t dims_ = 0;
  std::vector<double> values_;
};

/// Robustness of a single predicate on one state, clamped to [-kBottom, kTop].
double ap_robustness(const Ap& ap, double state_value, double threshold);

/// ρ(f, t) for every t in [0, T]. The formula must be concrete.
std::vector<double> robustness_signal(const Trace& trace, const Formula& f);

double robustness(const Trace& trace, const Formula& f, std::size_t t = 0);

/// ρ(trace, f, 0) > 0.
bool satisfies(const Trace& trace, const Formula& f);

/// Textbook finite-trace Boolean semantics by direct quantification over time
/// indices. Independent of the robustness arithmetic.
bool boolean_eval(const Trace& trace, const Formula& f, std::size_t t = 0);

/// Flattened formula with parameter slots, evaluated many times against the
/// same traces while only thresholds change. Agrees exactly with
/// robustness_signal.
class RobustnessProgram {
 public:
  /// Thresholds that are parameters take their value from the slot of the same
  /// position in collect_params(f); concrete thresholds are baked in.
  explicit RobustnessProgram(const Formula& f);

  std::size_t param_count() const { return param_count_; }
  /// ρ at t = 0. `params` is indexed by parameter position.
  double evaluate(const Trace& trace, std::span<const double> params) const;

 private:
  struct Instr {
    Op op;
    std::size_t dim = 0;
    int sign = 1;
    double threshold = 0.0;
    int param_slot = -1;
    int lhs = -1;
    int rhs = -1;
  };
  int emit(const Formula& f, std::vector<ParamId>& order);

  std::vector<Instr> code_;
  std::size_t param_count_ = 0;
  std::size_t max_dim_ = 0;
};

}  // namespace ilcl::tl
