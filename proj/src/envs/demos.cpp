#include "ilcl/envs/demos.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "ilcl/automaton/dfa.hpp"
#include "ilcl/util/seed.hpp"

namespace ilcl::envs {

double quantile(std::vector<double> values, double q) {
  if (values.empty()) throw std::invalid_argument("quantile of an empty set");
  if (!(q >= 0.0 && q <= 1.0)) throw std::invalid_argument("quantile must be in [0, 1]");
  std::sort(values.begin(), values.end());
  const double pos = q * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (pos - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

DemoSet sample_demos(const crl::LagrangianPolicy& policy, const NavEnv& env, const tl::Formula& gt,
                     std::size_t n, const DemoOptions& opt) {
  if (n == 0) throw std::invalid_argument("demo count must be positive");
  if (opt.pool_size == 0) throw std::invalid_argument("pool_size must be positive");
  const automaton::Dfa dfa = automaton::to_dfa(gt);
  const std::string hash = env.spec().hash();
  DemoSet out;

  auto consider = [&](crl::Trajectory& tr) {
    ++out.attempts;
    crl::score(tr, dfa, opt.crl.cost);
    if (out.demos.size() < n && *tr.rho > 0.0 && tr.total_reward() >= out.reward_cut) {
      tr.meta = {{"spec", hash}, {"index", out.demos.size()}};
      out.demos.push_back(std::move(tr));
    }
  };

  crl::RolloutOptions ro;
  ro.workers = opt.workers;
  ro.seed = util::stream_seed(opt.seed, 0xde, 0);
  auto pool = crl::rollouts(policy, env, opt.pool_size, ro);
  for (const auto& tr : pool) out.pool_rewards.push_back(tr.total_reward());
  out.reward_cut = quantile(out.pool_rewards, opt.quantile);
  for (auto& tr : pool) consider(tr);

  const std::size_t batch = std::max<std::size_t>(n, 32);
  for (std::uint64_t b = 1; out.demos.size() < n && out.attempts < opt.max_attempts; ++b) {
    ro.seed = util::stream_seed(opt.seed, 0xde, b);
    auto more = crl::rollouts(policy, env, std::min(batch, opt.max_attempts - out.attempts), ro);
    for (auto& tr : more) consider(tr);
  }
  out.partial = out.demos.size() < n;
  return out;
}

DemoSet gen_expert_demos(const EnvSpec& spec, const tl::Formula& gt, std::size_t n,
                         const DemoOptions& opt, crl::TrainLog* log, const crl::TrainProgress& progress) {
  if (n == 0) throw std::invalid_argument("demo count must be positive");
  const NavEnv env(spec);
  crl::CrlConfig cfg = opt.crl;
  cfg.seed = opt.seed;
  const auto policy = crl::train_policy(env, gt, {}, cfg, log, progress);
  return sample_demos(policy, env, gt, n, opt);
}

}  // namespace ilcl::envs
