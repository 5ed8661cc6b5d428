#include "ilcl/mining/annealing.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>

namespace ilcl::mining {

namespace {

constexpr double kTailLimit = 1e8;
constexpr double kMinVisitBound = 1e-10;

class Visitor {
 public:
  Visitor(double qv, std::span<const double> lower, std::span<const double> upper, std::mt19937_64& rng)
      : qv_(qv), lower_(lower), upper_(upper), rng_(rng) {
    const double pi = std::numbers::pi;
    factor2_ = std::exp((4.0 - qv) * std::log(qv - 1.0));
    factor3_ = std::exp((2.0 - qv) * std::log(2.0) / (qv - 1.0));
    factor4p_ = std::sqrt(pi) * factor2_ / (factor3_ * (3.0 - qv));
    factor5_ = 1.0 / (qv - 1.0) - 0.5;
    const double d1 = 2.0 - factor5_;
    factor6_ = pi * (1.0 - factor5_) / std::sin(pi * (1.0 - factor5_)) / std::exp(std::lgamma(d1));
  }

  std::vector<double> visit(std::span<const double> x, std::size_t step, double temperature) {
    const std::size_t dim = x.size();
    std::vector<double> out(x.begin(), x.end());
    if (step < dim) {
      for (std::size_t d = 0; d < dim; ++d) out[d] += draw(temperature);
      for (std::size_t d = 0; d < dim; ++d) out[d] = wrap(out[d], d);
    } else {
      const std::size_t d = step - dim;
      out[d] = wrap(out[d] + draw(temperature), d);
    }
    return out;
  }

 private:
  double draw(double temperature) {
    const double factor1 = std::exp(std::log(temperature) / (qv_ - 1.0));
    const double factor4 = factor4p_ * factor1;
    const double sigmax = std::exp(-(qv_ - 1.0) * std::log(factor6_ / factor4) / (3.0 - qv_));
    const double x = sigmax * normal_(rng_);
    const double y = normal_(rng_);
    const double den = std::exp((qv_ - 1.0) * std::log(std::abs(y)) / (3.0 - qv_));
    double v = x / den;
    if (!std::isfinite(v) || v > kTailLimit) v = kTailLimit * unit_(rng_);
    else if (v < -kTailLimit) v = -kTailLimit * unit_(rng_);
    return v;
  }

  double wrap(double v, std::size_t d) const {
    const double range = upper_[d] - lower_[d];
    if (range <= 0) return lower_[d];
    double a = std::fmod(v - lower_[d], range) + range;
    double out = std::fmod(a, range) + lower_[d];
    if (std::abs(out - lower_[d]) < kMinVisitBound) out += kMinVisitBound;
    return out;
  }

  double qv_;
  std::span<const double> lower_, upper_;
  std::mt19937_64& rng_;
  std::normal_distribution<double> normal_{0.0, 1.0};
  std::uniform_real_distribution<double> unit_{0.0, 1.0};
  double factor2_, factor3_, factor4p_, factor5_, factor6_;
};

struct Counter {
  const Energy& energy;
  std::size_t budget;
  std::size_t used = 0;
  bool exhausted() const { return used >= budget; }
  double operator()(std::span<const double> x) {
    ++used;
    return energy(x);
  }
};

// Compass search around x; returns true if it improved e.
bool local_search(Counter& f, std::vector<double>& x, double& e, std::span<const double> lower,
                  std::span<const double> upper) {
  const std::size_t dim = x.size();
  std::vector<double> step(dim);
  for (std::size_t d = 0; d < dim; ++d) step[d] = 0.1 * (upper[d] - lower[d]);
  const std::size_t cap = f.used + 20 * dim + 20;
  bool any = false;
  while (!f.exhausted() && f.used < cap) {
    bool moved = false;
    for (std::size_t d = 0; d < dim && !moved && !f.exhausted(); ++d) {
      for (double dir : {1.0, -1.0}) {
        if (f.exhausted()) break;
        std::vector<double> y = x;
        y[d] = std::clamp(y[d] + dir * step[d], lower[d], upper[d]);
        if (y[d] == x[d]) continue;
        const double ey = f(y);
        if (ey < e) {
          x = std::move(y);
          e = ey;
          moved = any = true;
          break;
        }
      }
    }
    if (!moved) {
      bool tiny = true;
      for (std::size_t d = 0; d < dim; ++d) {
        step[d] *= 0.5;
        if (step[d] > 1e-4 * (upper[d] - lower[d])) tiny = false;
      }
      if (tiny) break;
    }
  }
  return any;
}

}  // namespace

AnnealingResult dual_annealing(const Energy& energy, std::span<const double> lower,
                               std::span<const double> upper, std::span<const double> x0,
                               std::size_t budget, std::uint64_t seed, const AnnealingOptions& opt) {
  if (budget == 0) throw std::invalid_argument("annealing budget must be positive");
  const std::size_t dim = lower.size();
  if (upper.size() != dim) throw std::invalid_argument("bounds size mismatch");
  if (!x0.empty() && x0.size() != dim) throw std::invalid_argument("x0 size mismatch");
  for (std::size_t d = 0; d < dim; ++d)
    if (!(upper[d] >= lower[d])) throw std::invalid_argument("invalid bounds");

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  Counter f{energy, budget};

  auto random_point = [&] {
    std::vector<double> x(dim);
    for (std::size_t d = 0; d < dim; ++d) x[d] = lower[d] + unit(rng) * (upper[d] - lower[d]);
    return x;
  };

  std::vector<double> current;
  if (x0.empty()) {
    current = random_point();
  } else {
    current.assign(x0.begin(), x0.end());
    for (std::size_t d = 0; d < dim; ++d) current[d] = std::clamp(current[d], lower[d], upper[d]);
  }
  double current_e = f(current);
  AnnealingResult best{current, current_e, 0};
  if (dim == 0) {
    best.evaluations = f.used;
    return best;
  }

  Visitor visitor(opt.visit, lower, upper, rng);
  const double qv = opt.visit;
  const double t1 = std::exp((qv - 1.0) * std::log(2.0)) - 1.0;
  const double restart_below = opt.initial_temperature * opt.restart_temp_ratio;

  while (!f.exhausted()) {
    for (std::size_t i = 0; !f.exhausted(); ++i) {
      const double s = static_cast<double>(i) + 2.0;
      const double t2 = std::exp((qv - 1.0) * std::log(s)) - 1.0;
      const double temperature = opt.initial_temperature * t1 / t2;
      if (temperature < restart_below) {
        current = random_point();
        current_e = f(current);
        if (current_e < best.energy) {
          best.x = current;
          best.energy = current_e;
        }
        break;
      }
      const double temperature_step = temperature / static_cast<double>(i + 1);
      bool improved = false;
      for (std::size_t j = 0; j < 2 * dim && !f.exhausted(); ++j) {
        std::vector<double> xv = visitor.visit(current, j, temperature);
        const double e = f(xv);
        if (e < current_e) {
          current = std::move(xv);
          current_e = e;
          if (e < best.energy) {
            best.x = current;
            best.energy = e;
            improved = true;
          }
        } else {
          const double pqv = 1.0 - (1.0 - opt.accept) * (e - current_e) / temperature_step;
          const double r = pqv <= 0.0 ? 0.0 : std::exp(std::log(pqv) / (1.0 - opt.accept));
          if (unit(rng) <= r) {
            current = std::move(xv);
            current_e = e;
          }
        }
      }
      if (improved && opt.local_search && !f.exhausted()) {
        std::vector<double> x = best.x;
        double e = best.energy;
        if (local_search(f, x, e, lower, upper)) {
          best.x = x;
          best.energy = e;
          current = std::move(x);
          current_e = e;
        }
      }
    }
  }
  best.evaluations = f.used;
  return best;
}

}  // namespace ilcl::mining
