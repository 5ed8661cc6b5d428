#pragma once

#include <algorithm>
#include <cmath>
#include <memory>
#include <random>
#include <vector>

#include "ilcl/crl/env.hpp"
#include "ilcl/crl/trajectory.hpp"

#include "ilcl/tl/formula.hpp"
#include "ilcl/tl/robustness.hpp"

namespace ilcl::testing {

struct RandomFormulaOptions {
  std::size_t max_depth = 3;
  std::size_t dims = 3;
  bool allow_constants = true;
  bool parametric = false;
  /// Thresholds are drawn from a small grid so that distinct predicates
  /// sometimes coincide and exercise deduplication.
  bool grid_thresholds = false;
};

tl::Formula random_formula(std::mt19937_64& rng, const RandomFormulaOptions& opt = {});

/// Length uniform in [1, max_len], values uniform in [-1, 1].
tl::Trace random_trace(std::mt19937_64& rng, std::size_t dims, std::size_t max_len = 8);

// 1-D integrator: state (x), reward -|x - 1|, horizon 5.
class LineEnv : public crl::Env {
 public:
  std::size_t state_dim() const override { return 1; }
  std::size_t action_dim() const override { return 1; }
  double action_bound() const override { return 0.5; }
  std::size_t horizon() const override { return 5; }
  std::vector<double> reset(crl::Rng&) override {
    x_ = 0.0;
    t_ = 0;
    return {x_};
  }
  crl::StepResult step(std::span<const double> a) override {
    x_ += std::clamp(a[0], -0.5, 0.5);
    ++t_;
    return {{x_}, -std::abs(x_ - 1.0), t_ >= 5};
  }
  std::unique_ptr<crl::Env> clone() const override { return std::make_unique<LineEnv>(*this); }

 private:
  double x_ = 0.0;
  std::size_t t_ = 0;
};

inline crl::Trajectory line_traj(std::vector<double> xs, double cost = 0.0) {
  crl::Trajectory t;
  t.state_dim = 1;
  t.action_dim = 1;
  t.states = xs;
  for (std::size_t i = 0; i + 1 < xs.size(); ++i) {
    t.actions.push_back(xs[i + 1] - xs[i]);
    t.rewards.push_back(-std::abs(xs[i + 1] - 1.0));
  }
  t.traj_cost = cost;
  return t;
}

}  // namespace ilcl::testing
