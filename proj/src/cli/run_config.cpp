#include "ilcl/cli/run_config.hpp"

#include <fstream>
#include <stdexcept>

#include "ilcl/util/json_config.hpp"

namespace ilcl::cli {

using nlohmann::json;

RunConfig::RunConfig() {
  for (const char* name : {"pR_dist", "pG_dist", "pB_dist"})
    ilcl.mining.selected_dims.push_back(*envs::nav_features().lookup(name));
}

envs::DemoOptions RunConfig::demo_options() const {
  envs::DemoOptions d = demos;
  d.crl = ilcl.crl;
  d.seed = seed;
  d.workers = workers;
  return d;
}

game::IlclConfig RunConfig::ilcl_config() const {
  game::IlclConfig c = ilcl;
  c.seed = seed;
  c.workers = workers;
  return c;
}

const envs::GroundTruth& RunConfig::ground_truth() const {
  if (task != "nav1" && task != "nav2") throw std::invalid_argument("unknown task '" + task + "' (nav1 | nav2)");
  return envs::gt_constraints().at(task);
}

envs::EnvSpec RunConfig::training_layout() const {
  envs::RandomizeOptions o;
  o.feasible_for = ground_truth().formula;
  o.require_greedy_violation = true;
  o.min_reward_ratio = 0.5;
  return envs::randomize(layout_seed, envs::Split::Train, o);
}

void RunConfig::validate() const {
  ground_truth();
  if (workers == 0) throw std::invalid_argument("workers must be positive");
  if (demo_count == 0) throw std::invalid_argument("demos.n must be positive");
  if (!(demos.quantile >= 0.0 && demos.quantile <= 1.0)) throw std::invalid_argument("demos.quantile must be in [0, 1]");
  if (demos.pool_size == 0) throw std::invalid_argument("demos.pool_size must be positive");
  ilcl_config().validate();
}

json to_json(const RunConfig& c) {
  json il = game::to_json(c.ilcl);
  il.erase("mining");
  il.erase("crl");
  il.erase("seed");
  il.erase("workers");
  return {{"task", c.task},
          {"seed", c.seed},
          {"layout_seed", c.layout_seed},
          {"workers", c.workers},
          {"demos",
           {{"n", c.demo_count},
            {"quantile", c.demos.quantile},
            {"pool_size", c.demos.pool_size},
            {"max_attempts", c.demos.max_attempts}}},
          {"mining", mining::to_json(c.ilcl.mining)},
          {"crl", crl::to_json(c.ilcl.crl)},
          {"ilcl", il}};
}

RunConfig run_config_from_json(const json& j) {
  RunConfig c;
  const json known = to_json(c);
  util::reject_unknown_keys(j, known, "run");
  util::read_key(j, "task", c.task);
  util::read_key(j, "seed", c.seed);
  util::read_key(j, "layout_seed", c.layout_seed);
  util::read_key(j, "workers", c.workers);
  if (j.contains("demos")) {
    const json& d = j.at("demos");
    util::reject_unknown_keys(d, known.at("demos"), "demos");
    util::read_key(d, "n", c.demo_count);
    util::read_key(d, "quantile", c.demos.quantile);
    util::read_key(d, "pool_size", c.demos.pool_size);
    util::read_key(d, "max_attempts", c.demos.max_attempts);
  }
  if (j.contains("mining")) c.ilcl.mining = mining::mining_config_from_json(j.at("mining"), c.ilcl.mining);
  if (j.contains("crl")) c.ilcl.crl = crl::crl_config_from_json(j.at("crl"), c.ilcl.crl);
  if (j.contains("ilcl")) {
    util::reject_unknown_keys(j.at("ilcl"), known.at("ilcl"), "ilcl");
    c.ilcl = game::ilcl_config_from_json(j.at("ilcl"), c.ilcl);
  }
  c.validate();
  return c;
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot read config " + path);
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw std::invalid_argument(path + ": " + e.what());
  }
  return run_config_from_json(j);
}

}  // namespace ilcl::cli
