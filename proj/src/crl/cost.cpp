#include "ilcl/crl/cost.hpp"

#include <algorithm>
#include <stdexcept>

namespace ilcl::crl {

void CostParams::validate() const {
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw std::invalid_argument("alpha must lie in [0, 1]");
  if (!(upsilon > 0.0)) throw std::invalid_argument("upsilon must be positive");
  if (!(epsilon > 0.0 && epsilon < 1.0)) throw std::invalid_argument("epsilon must lie in (0, 1)");
  if (n_xi == 0) throw std::invalid_argument("n_xi must be at least 1");
}

double dense_cost(double rho, const CostParams& p) {
  const double indicator = rho < 0.0 ? 1.0 : 0.0;
  const double clipped = std::clamp(-rho, 0.0, p.upsilon);
  return p.alpha * indicator + (1.0 - p.alpha) / p.upsilon * clipped;
}

double dense_cost(const tl::Trace& trace, const tl::Formula& f, const CostParams& p) {
  return dense_cost(tl::robustness(trace, f), p);
}

Metrics compute_metrics(std::span<const double> rhos, std::span<const double> returns) {
  if (rhos.size() != returns.size())
    throw std::invalid_argument("metrics need one return per robustness value");
  Metrics m;
  m.episodes = rhos.size();
  if (m.episodes == 0) return m;
  std::size_t violated = 0;
  double tr = 0.0, rew = 0.0;
  for (std::size_t i = 0; i < rhos.size(); ++i) {
    if (rhos[i] < 0.0) ++violated;
    tr += std::max(-rhos[i], 0.0);
    rew += returns[i];
  }
  const double n = static_cast<double>(m.episodes);
  m.vr = 100.0 * static_cast<double>(violated) / n;
  m.rew = rew / n;
  m.tr = tr / n;
  return m;
}

}  // namespace ilcl::crl
