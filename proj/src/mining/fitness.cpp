#include "ilcl/mining/fitness.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "ilcl/tl/robustness.hpp"

namespace ilcl::mining {

namespace {

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

}  // namespace

double fitness(const tl::Formula& f, const tl::ParamVector& theta, const Dataset& data) {
  const tl::Formula concrete = tl::instantiate(f, theta);
  for (const auto& tr : data.expert)
    if (!(tl::robustness(tr, concrete) > 0.0)) return 0.0;
  if (data.negatives.empty()) return 0.0;
  std::size_t rejected = 0;
  for (const auto& tr : data.negatives)
    if (tl::robustness(tr, concrete) < 0.0) ++rejected;
  return static_cast<double>(rejected) / static_cast<double>(data.negatives.size());
}

SkeletonScorer::SkeletonScorer(const tl::Formula& skeleton, const Dataset& data)
    : program_(skeleton), data_(&data), params_(tl::collect_params(skeleton)) {
  for (std::size_t d : tl::referenced_dims(skeleton))
    if (d >= data.dims()) throw MiningError("formula reads dimension " + std::to_string(d) +
                                            " but traces have " + std::to_string(data.dims()));
  bounds_.reserve(params_.size());
  tl::for_each_node(skeleton, [&](const tl::Formula& n) {
    if ((n.op() == tl::Op::Ap || n.op() == tl::Op::NotAp) && n.ap().is_param()) {
      bounds_.push_back(data.bounds[n.ap().dim]);
      dims_.push_back(n.ap().dim);
    }
  });

  std::vector<std::size_t> dims = tl::referenced_dims(skeleton);
  if (dims.empty())
    for (std::size_t d = 0; d < data.dims(); ++d) dims.push_back(d);
  double mean_range = 0.0;
  for (std::size_t d : dims) mean_range += data.bounds[d].range();
  mean_range /= static_cast<double>(dims.size());
  tau_ = 0.05 * (mean_range > 0 ? mean_range : 1.0);
}

SkeletonScorer::Score SkeletonScorer::score(std::span<const double> theta) const {
  Score s;
  bool experts_ok = true;
  double expert_term = 1.0;
  for (const auto& tr : data_->expert) {
    const double rho = program_.evaluate(tr, theta);
    if (!(rho > 0.0)) experts_ok = false;
    expert_term = std::min(expert_term, sigmoid(rho / tau_));
  }
  if (data_->negatives.empty()) return s;
  std::size_t rejected = 0;
  double neg_term = 0.0;
  for (const auto& tr : data_->negatives) {
    const double rho = program_.evaluate(tr, theta);
    if (rho < 0.0) ++rejected;
    neg_term += sigmoid(-rho / tau_);
  }
  const double n = static_cast<double>(data_->negatives.size());
  s.exact = experts_ok ? static_cast<double>(rejected) / n : 0.0;
  s.surrogate = expert_term * neg_term / n;
  return s;
}

double SkeletonScorer::exact(std::span<const double> theta) const {
  for (const auto& tr : data_->expert)
    if (!(program_.evaluate(tr, theta) > 0.0)) return 0.0;
  if (data_->negatives.empty()) return 0.0;
  std::size_t rejected = 0;
  for (const auto& tr : data_->negatives)
    if (program_.evaluate(tr, theta) < 0.0) ++rejected;
  return static_cast<double>(rejected) / static_cast<double>(data_->negatives.size());
}

FitResult optimize_params(const tl::Formula& skeleton, const Dataset& data, std::size_t budget,
                          std::uint64_t seed, const tl::ParamVector& initial, const FitOptions& opt) {
  if (budget == 0) throw MiningError("annealing budget must be positive");
  const SkeletonScorer scorer(skeleton, data);
  const std::size_t n = scorer.param_count();

  std::vector<double> lower(n), upper(n), x0;
  for (std::size_t i = 0; i < n; ++i) {
    lower[i] = scorer.bounds()[i].lo;
    upper[i] = scorer.bounds()[i].hi;
  }
  if (n > 0 && initial.size() == n) {
    bool covered = true;
    for (const auto& id : scorer.params()) {
      auto it = initial.find(id);
      if (it == initial.end()) {
        covered = false;
        break;
      }
      x0.push_back(it->second);
    }
    if (!covered) x0.clear();
  }

  FitResult best;
  best.fitness = -1.0;
  best.surrogate = -std::numeric_limits<double>::infinity();
  std::vector<double> best_x;
  std::size_t evaluations = 0;
  auto consider = [&](std::span<const double> x) {
    ++evaluations;
    const auto s = scorer.score(x);
    if (s.exact > best.fitness || (s.exact == best.fitness && s.surrogate > best.surrogate)) {
      best.fitness = s.exact;
      best.surrogate = s.surrogate;
      best_x.assign(x.begin(), x.end());
      return std::pair{s, true};
    }
    return std::pair{s, false};
  };
  auto energy = [&](std::span<const double> x) {
    const auto s = consider(x).first;
    return -(opt.exact_weight * s.exact + s.surrogate);
  };
  dual_annealing(energy, lower, upper, x0, n == 0 ? 1 : budget, seed, opt.annealing);

  for (std::size_t pass = 0; n > 0 && pass < opt.polish_passes && best.fitness < 1.0; ++pass) {
    bool moved = false;
    for (std::size_t k = 0; k < n; ++k) {
      const auto& cuts = data.cuts[scorer.param_dims()[k]];
      std::vector<std::size_t> picks;
      const std::size_t spread = std::min(opt.polish_spread, cuts.size());
      for (std::size_t i = 0; i < spread; ++i)
        picks.push_back(spread < 2 ? 0 : i * (cuts.size() - 1) / (spread - 1));
      const auto at = static_cast<std::size_t>(std::lower_bound(cuts.begin(), cuts.end(), best_x[k]) - cuts.begin());
      for (std::size_t w = 1; w <= opt.polish_window; ++w) {
        if (at >= w) picks.push_back(at - w);
        if (at + w - 1 < cuts.size()) picks.push_back(at + w - 1);
      }
      std::sort(picks.begin(), picks.end());
      picks.erase(std::unique(picks.begin(), picks.end()), picks.end());
      const std::vector<double> base = best_x;
      for (std::size_t idx : picks) {
        if (cuts[idx] == base[k]) continue;
        std::vector<double> y = base;
        y[k] = cuts[idx];
        if (consider(y).second) moved = true;
      }
      if (best.fitness >= 1.0) break;
    }
    if (!moved) break;
  }

  best.evaluations = evaluations;
  for (std::size_t i = 0; i < n; ++i) best.theta[scorer.params()[i]] = best_x[i];
  return best;
}

}  // namespace ilcl::mining
