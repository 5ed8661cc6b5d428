#include "ilcl/mining/miner.hpp"

#include <algorithm>
#include <array>
#include <chrono>
#include <ostream>
#include <set>
#include <thread>

#include <json.hpp>

#include "ilcl/tl/robustness.hpp"
#include "ilcl/util/json_config.hpp"
#include "ilcl/util/seed.hpp"

namespace ilcl::mining {

using tl::Formula;

namespace {

using util::stream_seed;

struct Candidate {
  Formula skeleton;
  tl::ParamVector init;
};

std::string key_of(const Formula& skeleton) { return tl::format_formula(skeleton); }

std::vector<Individual> evaluate(const std::vector<Candidate>& cands, const Dataset& data,
                                 const MiningConfig& cfg, std::size_t generation,
                                 std::uint64_t& birth) {
  std::vector<Individual> out(cands.size());
  auto work = [&](std::size_t i) {
    const auto& c = cands[i];
    const FitResult r =
        optimize_params(c.skeleton, data, cfg.annealing_budget, stream_seed(cfg.seed, generation, i), c.init);
    Individual& ind = out[i];
    ind.skeleton = c.skeleton;
    ind.theta = r.theta;
    ind.fitness = r.fitness;
    ind.surrogate = r.surrogate;
    ind.node_count = tl::node_count(c.skeleton);
  };
  const std::size_t workers = std::max<std::size_t>(1, std::min(cfg.workers, cands.size()));
  if (workers == 1) {
    for (std::size_t i = 0; i < cands.size(); ++i) work(i);
  } else {
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w)
      pool.emplace_back([&, w] {
        for (std::size_t i = w; i < cands.size(); i += workers) work(i);
      });
    for (auto& t : pool) t.join();
  }
  for (auto& ind : out) ind.birth = birth++;
  return out;
}

bool raw_better(const Individual& a, const Individual& b) {
  if (a.fitness != b.fitness) return a.fitness > b.fitness;
  return ranks_before(a, b);
}

const Individual& best_raw(const std::vector<Individual>& pop) {
  return *std::min_element(pop.begin(), pop.end(), raw_better);
}

const Individual& best_ranked(const std::vector<Individual>& pop) {
  return *std::min_element(pop.begin(), pop.end(), ranks_before);
}

struct DimScan {
  std::size_t rejected = 0;
  std::vector<bool> which;
};

// Best single-predicate G/F form on one dimension, with the threshold placed
// at the tightest value that still accepts every expert.
DimScan scan_dim(const Dataset& data, std::size_t d) {
  auto extremes = [d](const tl::Trace& tr) {
    double lo = tr.at(0, d), hi = lo;
    for (std::size_t t = 1; t < tr.length(); ++t) {
      lo = std::min(lo, tr.at(t, d));
      hi = std::max(hi, tr.at(t, d));
    }
    return std::pair{lo, hi};
  };
  double e_max_hi = -1e300, e_min_lo = 1e300, e_max_lo = -1e300, e_min_hi = 1e300;
  for (const auto& tr : data.expert) {
    const auto [lo, hi] = extremes(tr);
    e_max_hi = std::max(e_max_hi, hi);  // G(s < θ) needs θ above this
    e_min_lo = std::min(e_min_lo, lo);  // G(s > θ) needs θ below this
    e_max_lo = std::max(e_max_lo, lo);  // F(s < θ) needs θ above this
    e_min_hi = std::min(e_min_hi, hi);  // F(s > θ) needs θ below this
  }
  std::array<DimScan, 4> forms;
  for (auto& f : forms) f.which.assign(data.negatives.size(), false);
  for (std::size_t i = 0; i < data.negatives.size(); ++i) {
    const auto [lo, hi] = extremes(data.negatives[i]);
    const std::array<bool, 4> rej{hi > e_max_hi, lo < e_min_lo, lo > e_max_lo, hi < e_min_hi};
    for (std::size_t k = 0; k < 4; ++k) {
      if (!rej[k]) continue;
      forms[k].which[i] = true;
      ++forms[k].rejected;
    }
  }
  return *std::max_element(forms.begin(), forms.end(),
                           [](const DimScan& a, const DimScan& b) { return a.rejected < b.rejected; });
}

}  // namespace

void MiningConfig::validate() const {
  if (population() == 0) throw MiningError("population must be positive");
  if (parents == 0 || parents > population()) throw MiningError("parent count must be in [1, N]");
  if (tournament == 0) throw MiningError("tournament size must be positive");
  if (zeta < 0) throw MiningError("zeta must be non-negative");
  if (d_R < 1) throw MiningError("d_R must be at least 1");
  if (p_R < 0 || p_R > 1) throw MiningError("p_R must be in [0, 1]");
  if (annealing_budget == 0) throw MiningError("annealing budget must be positive");
  if (max_basis_dims == 0 || max_basis_dims > 6) throw MiningError("max_basis_dims must be in [1, 6]");
  if (max_nodes < 2) throw MiningError("max_nodes must be at least 2");
  if (max_mining_steps == 0) throw MiningError("max_mining_steps must be positive");
}

nlohmann::json to_json(const MiningConfig& c) {
  return {{"basis_count", c.basis_count},
          {"random_count", c.random_count},
          {"parents", c.parents},
          {"tournament", c.tournament},
          {"zeta", c.zeta},
          {"d_R", c.d_R},
          {"p_R", c.p_R},
          {"max_generations", c.max_generations},
          {"max_mining_steps", c.max_mining_steps},
          {"seed", c.seed},
          {"annealing_budget", c.annealing_budget},
          {"selected_dims", c.selected_dims},
          {"max_basis_dims", c.max_basis_dims},
          {"max_nodes", c.max_nodes},
          {"workers", c.workers}};
}

MiningConfig mining_config_from_json(const nlohmann::json& j, MiningConfig c) {
  util::reject_unknown_keys(j, to_json(c), "mining");
  util::read_key(j, "basis_count", c.basis_count);
  util::read_key(j, "random_count", c.random_count);
  util::read_key(j, "parents", c.parents);
  util::read_key(j, "tournament", c.tournament);
  util::read_key(j, "zeta", c.zeta);
  util::read_key(j, "d_R", c.d_R);
  util::read_key(j, "p_R", c.p_R);
  util::read_key(j, "max_generations", c.max_generations);
  util::read_key(j, "max_mining_steps", c.max_mining_steps);
  util::read_key(j, "seed", c.seed);
  util::read_key(j, "annealing_budget", c.annealing_budget);
  util::read_key(j, "selected_dims", c.selected_dims);
  util::read_key(j, "max_basis_dims", c.max_basis_dims);
  util::read_key(j, "max_nodes", c.max_nodes);
  util::read_key(j, "workers", c.workers);
  try {
    c.validate();
  } catch (const MiningError& e) {
    throw std::invalid_argument(e.what());
  }
  return c;
}

void regularized_fitness(std::vector<Individual>& population, double zeta) {
  if (population.empty()) throw MiningError("regularized fitness of an empty population");
  double mean = 0.0;
  for (const auto& ind : population) mean += ind.fitness;
  mean /= static_cast<double>(population.size());
  for (auto& ind : population) {
    const double excess = static_cast<double>(ind.node_count) - 2.0;
    ind.reg_fitness = ind.fitness - zeta * mean * excess * excess;
  }
}

bool ranks_before(const Individual& a, const Individual& b) {
  if (a.reg_fitness != b.reg_fitness) return a.reg_fitness > b.reg_fitness;
  if (a.node_count != b.node_count) return a.node_count < b.node_count;
  return a.birth < b.birth;
}

std::vector<Individual> select_parents(const std::vector<Individual>& population, std::size_t n_p) {
  if (n_p > population.size()) throw MiningError("more parents requested than individuals");
  std::vector<Individual> sorted = population;
  std::stable_sort(sorted.begin(), sorted.end(), ranks_before);
  sorted.resize(n_p);
  return sorted;
}

const Individual& tournament(const std::vector<Individual>& pool, std::size_t size, Rng& rng) {
  if (pool.empty()) throw MiningError("tournament over an empty pool");
  std::uniform_int_distribution<std::size_t> pick(0, pool.size() - 1);
  const Individual* best = &pool[pick(rng)];
  for (std::size_t k = 1; k < size; ++k) {
    const Individual& c = pool[pick(rng)];
    if (ranks_before(c, *best)) best = &c;
  }
  return *best;
}

std::vector<std::size_t> select_dims(const Dataset& data, std::size_t max_dims) {
  const std::size_t dims = data.dims();
  std::vector<DimScan> scans;
  for (std::size_t d = 0; d < dims; ++d) scans.push_back(scan_dim(data, d));
  std::vector<bool> covered(data.negatives.size(), false);
  std::vector<std::size_t> chosen;
  while (chosen.size() < std::min(max_dims, dims)) {
    std::size_t best = dims, best_gain = 0, best_total = 0;
    for (std::size_t d = 0; d < dims; ++d) {
      if (std::find(chosen.begin(), chosen.end(), d) != chosen.end()) continue;
      std::size_t gain = 0;
      for (std::size_t i = 0; i < covered.size(); ++i)
        if (scans[d].which[i] && !covered[i]) ++gain;
      if (best == dims || gain > best_gain || (gain == best_gain && scans[d].rejected > best_total)) {
        best = d;
        best_gain = gain;
        best_total = scans[d].rejected;
      }
    }
    chosen.push_back(best);
    for (std::size_t i = 0; i < covered.size(); ++i)
      if (scans[best].which[i]) covered[i] = true;
  }
  std::sort(chosen.begin(), chosen.end());
  return chosen;
}

MiningResult mine(const Dataset& data, const MiningConfig& cfg, const std::vector<Formula>& priors,
                  const GenerationCallback& on_generation) {
  cfg.validate();
  if (data.expert.empty()) throw MiningError("mining needs at least one expert trace");
  using Clock = std::chrono::steady_clock;
  const auto start = Clock::now();

  MiningResult result;
  result.selected_dims = cfg.selected_dims.empty() ? select_dims(data, cfg.max_basis_dims) : cfg.selected_dims;
  for (std::size_t d : result.selected_dims)
    if (d >= data.dims()) throw MiningError("selected dimension out of range");

  Rng rng(util::splitmix(cfg.seed));
  const std::vector<Formula> basis = basis_trees(data.dims(), result.selected_dims);
  const ApSampler param_sampler{result.selected_dims, {}};
  const ApSampler value_sampler{result.selected_dims, data.bounds};
  const std::size_t n = cfg.population();
  std::uint64_t birth = 0;

  // Generation 0: the strongest basis trees, priors, then random trees.
  std::vector<Candidate> basis_cands;
  for (const auto& b : basis) basis_cands.push_back({b, {}});
  std::vector<Individual> basis_pop = evaluate(basis_cands, data, cfg, 0, birth);
  std::stable_sort(basis_pop.begin(), basis_pop.end(), [](const Individual& a, const Individual& b) {
    if (a.fitness != b.fitness) return a.fitness > b.fitness;
    if (a.surrogate != b.surrogate) return a.surrogate > b.surrogate;
    return a.birth < b.birth;
  });
  const std::size_t prior_slots = std::min(priors.size(), n);
  const std::size_t basis_keep = std::min({basis_pop.size(), cfg.basis_count, n - prior_slots});
  basis_pop.resize(basis_keep);

  std::set<std::string> keys;
  for (const auto& ind : basis_pop) keys.insert(key_of(ind.skeleton));
  std::vector<Candidate> extra;
  for (std::size_t i = 0; i < prior_slots; ++i) {
    auto [skel, init] = tl::abstract_thresholds(priors[i]);
    if (keys.insert(key_of(skel)).second) extra.push_back({skel, init});
  }
  for (std::size_t attempts = 0; basis_keep + extra.size() < n && attempts < 50 * n; ++attempts) {
    Formula t = random_tree(basis, cfg.d_R, cfg.p_R, param_sampler, rng);
    if (tl::node_count(t) > cfg.max_nodes) continue;
    if (keys.insert(key_of(t)).second) extra.push_back({t, {}});
  }
  std::vector<Individual> pop = std::move(basis_pop);
  for (auto& ind : evaluate(extra, data, cfg, 1, birth)) pop.push_back(std::move(ind));
  regularized_fitness(pop, cfg.zeta);
  for (const auto& ind : pop) result.initial_population.push_back(key_of(ind.skeleton));

  auto record = [&](std::size_t generation, std::size_t repaired, std::size_t rejected) {
    const Individual& top = best_ranked(pop);
    GenerationRecord r;
    r.generation = generation;
    r.formula = tl::format_formula(top.formula());
    r.fitness = top.fitness;
    r.reg_fitness = top.reg_fitness;
    r.node_count = top.node_count;
    r.best_fitness = best_raw(pop).fitness;
    r.population = pop.size();
    r.repaired = repaired;
    r.rejected = rejected;
    r.seconds = std::chrono::duration<double>(Clock::now() - start).count();
    result.log.push_back(r);
    if (on_generation) on_generation(r);
  };
  record(0, 0, 0);

  for (std::size_t gen = 1; gen <= cfg.max_generations; ++gen) {
    if (best_raw(pop).fitness >= 1.0) break;
    const std::vector<Individual> pool = select_parents(pop, std::min(cfg.parents, pop.size()));
    const Individual elite = best_raw(pop);
    keys.clear();
    keys.insert(key_of(elite.skeleton));

    std::vector<Candidate> offspring;
    std::size_t repaired = 0, rejected = 0;
    auto admit = [&](const Formula& child) {
      if (offspring.size() + 1 >= n) return;
      bool rep = false;
      const auto fin = finalize(child, cfg.max_nodes, &rep);
      if (rep) ++repaired;
      if (!fin) {
        ++rejected;
        return;
      }
      auto [skel, init] = tl::abstract_thresholds(*fin);
      if (keys.insert(key_of(skel)).second) offspring.push_back({skel, init});
    };
    std::uniform_int_distribution<int> which(0, 2);
    for (std::size_t attempts = 0; offspring.size() + 1 < n && attempts < 20 * n; ++attempts) {
      const Formula a = tournament(pool, cfg.tournament, rng).formula();
      switch (which(rng)) {
        case 0: {
          const Formula b = tournament(pool, cfg.tournament, rng).formula();
          auto [c1, c2] = crossover(a, b, rng);
          admit(c1);
          admit(c2);
          break;
        }
        case 1:
          admit(mutation_r(a, value_sampler, rng));
          break;
        default:
          admit(mutation_a(a, value_sampler, rng));
          break;
      }
    }
    for (std::size_t attempts = 0; offspring.size() + 1 < n && attempts < 50 * n; ++attempts) {
      Formula t = random_tree(basis, cfg.d_R, cfg.p_R, param_sampler, rng);
      if (tl::node_count(t) > cfg.max_nodes) continue;
      if (keys.insert(key_of(t)).second) offspring.push_back({t, {}});
    }

    std::vector<Individual> next{elite};
    for (auto& ind : evaluate(offspring, data, cfg, gen + 1, birth)) next.push_back(std::move(ind));
    pop = std::move(next);
    regularized_fitness(pop, cfg.zeta);
    record(gen, repaired, rejected);
  }

  result.perfect = best_raw(pop).fitness >= 1.0;
  if (result.perfect) {
    std::vector<Individual> perfect;
    for (const auto& ind : pop)
      if (ind.fitness >= 1.0) perfect.push_back(ind);
    result.best = best_ranked(perfect);
  } else {
    result.best = best_ranked(pop);
  }
  return result;
}

std::string to_json_line(const GenerationRecord& r) {
  nlohmann::json j{{"generation", r.generation}, {"formula", r.formula},         {"fitness", r.fitness},
                   {"reg_fitness", r.reg_fitness}, {"node_count", r.node_count}, {"best_fitness", r.best_fitness},
                   {"population", r.population},
                   {"repaired", r.repaired},       {"rejected", r.rejected},     {"seconds", r.seconds}};
  return j.dump();
}

void write_generation_log(std::ostream& os, const std::vector<GenerationRecord>& log) {
  for (const auto& r : log) os << to_json_line(r) << '\n';
}

}  // namespace ilcl::mining
