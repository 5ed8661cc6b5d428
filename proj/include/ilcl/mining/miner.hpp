#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

#include "ilcl/mining/dataset.hpp"
#include "ilcl/mining/fitness.hpp"
#include "ilcl/mining/operators.hpp"
#include "ilcl/tl/formula.hpp"
#include "ilcl/tl/parse.hpp"

namespace ilcl::mining {

struct MiningConfig {
  std::size_t basis_count = 48;   // N_B
  std::size_t random_count = 16;  // N_R
  std::size_t parents = 16;       // N_p
  std::size_t tournament = 3;
  double zeta = 0.01;
  std::size_t d_R = 3;
  double p_R = 0.1;
  std::size_t max_generations = 30;
  /// Cap on constraint-player steps per task, enforced by the game loop.
  std::size_t max_mining_steps = 5;
  std::uint64_t seed = 0;
  std::size_t annealing_budget = 300;
  /// Dimensions used for basis trees; chosen from the data when empty.
  std::vector<std::size_t> selected_dims;
  std::size_t max_basis_dims = 3;
  std::size_t max_nodes = 15;
  std::size_t workers = 1;

  std::size_t population() const { return basis_count + random_count; }
  /// Throws MiningError on an inconsistent configuration.
  void validate() const;
};

nlohmann::json to_json(const MiningConfig& cfg);
/// Keys missing from `j` keep their defaults; unknown keys throw
/// std::invalid_argument.
MiningConfig mining_config_from_json(const nlohmann::json& j, MiningConfig base = {});

struct Individual {
  tl::Formula skeleton;
  tl::ParamVector theta;
  double fitness = 0.0;
  double reg_fitness = 0.0;
  double surrogate = 0.0;
  std::size_t node_count = 0;
  std::uint64_t birth = 0;

  tl::Formula formula() const { return tl::instantiate(skeleton, theta); }
};

/// F^Φ = F - ζ · mean(F) · (|V| - 2)².
void regularized_fitness(std::vector<Individual>& population, double zeta);

/// Ranking used everywhere: higher F^Φ, then fewer nodes, then earlier birth.
bool ranks_before(const Individual& a, const Individual& b);

/// The top-N_p individuals by ranks_before.
std::vector<Individual> select_parents(const std::vector<Individual>& population, std::size_t n_p);

/// Best of `size` uniform draws (with replacement) from the pool.
const Individual& tournament(const std::vector<Individual>& pool, std::size_t size, Rng& rng);

/// Dimensions that best separate the data on their own, picked greedily by
/// how many still-unrejected negatives a one-predicate G/F form rejects.
std::vector<std::size_t> select_dims(const Dataset& data, std::size_t max_dims);

struct GenerationRecord {
  std::size_t generation = 0;
  std::string formula;
  double fitness = 0.0;
  double reg_fitness = 0.0;
  std::size_t node_count = 0;
  /// Highest raw fitness in the generation.
  double best_fitness = 0.0;
  std::size_t population = 0;
  std::size_t repaired = 0;
  std::size_t rejected = 0;
  double seconds = 0.0;
};

struct MiningResult {
  Individual best;
  std::vector<GenerationRecord> log;
  std::vector<std::size_t> selected_dims;
  bool perfect = false;
  /// Canonical texts of the generation-0 population.
  std::vector<std::string> initial_population;
};

using GenerationCallback = std::function<void(const GenerationRecord&)>;

/// GA over pTLTL trees. Priors are concrete constraints from earlier rounds;
/// each replaces one random tree in generation 0.
MiningResult mine(const Dataset& data, const MiningConfig& cfg, const std::vector<tl::Formula>& priors = {},
                  const GenerationCallback& on_generation = {});

/// One JSON object per line.
void write_generation_log(std::ostream& os, const std::vector<GenerationRecord>& log);
std::string to_json_line(const GenerationRecord& r);

}  // namespace ilcl::mining
