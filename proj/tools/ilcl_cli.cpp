// ilcl: command-line front end for demo generation, mining, constrained
// training, the full game, evaluation and formula inspection.

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>

#include <json.hpp>

#include "ilcl/automaton/dfa.hpp"
#include "ilcl/cli/run_config.hpp"
#include "ilcl/crl/sac_lag.hpp"
#include "ilcl/envs/demos.hpp"
#include "ilcl/envs/nav_env.hpp"
#include "ilcl/game/ilcl.hpp"
#include "ilcl/mining/miner.hpp"
#include "ilcl/tl/parse.hpp"
#include "ilcl/tl/robustness.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace ilcl;

namespace {

enum Exit { kOk = 0, kConfig = 2, kData = 3, kDiverged = 4, kPartial = 5 };

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct PartialResult : std::runtime_error {
  using std::runtime_error::runtime_error;
};

void log(const std::string& s) { std::cerr << s << std::endl; }

cli::RunConfig config_or_default(const std::string& path) {
  try {
    return path.empty() ? cli::RunConfig{} : cli::load_run_config(path);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
}

/// sN names first, then the navigation feature names.
tl::Formula parse_any(const std::string& text) {
  try {
    return tl::parse_formula(text);
  } catch (const tl::ParseError&) {
  }
  try {
    return tl::parse_formula(text, envs::nav_features());
  } catch (const tl::ParseError& e) {
    throw ConfigError("cannot parse formula '" + text + "': " + e.what());
  }
}

/// Task name, formula text, or a file holding formula text.
tl::Formula formula_arg(const std::string& arg) {
  const auto& gts = envs::gt_constraints();
  if (gts.count(arg)) return gts.at(arg).formula;
  if (fs::is_regular_file(arg)) {
    std::ifstream in(arg);
    std::string text;
    std::getline(in, text);
    return parse_any(text);
  }
  return parse_any(arg);
}

std::vector<crl::Trajectory> load_trajs(const std::string& path) {
  try {
    return crl::load_jsonl(path);
  } catch (const std::exception& e) {
    throw DataError(e.what());
  }
}

envs::EnvSpec load_spec(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read env spec " + path);
  try {
    return envs::EnvSpec::from_json(json::parse(in));
  } catch (const std::exception& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

void check_dims(const tl::Formula& f, std::size_t dims, const std::string& what) {
  for (std::size_t d : tl::referenced_dims(f))
    if (d >= dims)
      throw DataError("formula reads s" + std::to_string(d) + " but " + what + " has " + std::to_string(dims) +
                      " dimensions");
}

void write_text(const fs::path& p, const std::string& body) {
  std::ofstream out(p);
  out << body;
  if (!out) throw std::runtime_error("cannot write " + p.string());
}

tl::FeatureTable features_for(std::size_t dims) {
  return dims == envs::kNavStateDim ? envs::nav_features() : tl::FeatureTable::anonymous(dims);
}

crl::TrainProgress train_progress(const std::string& tag) {
  return [tag](std::size_t step, const crl::TrainLog& l) {
    const std::size_t n = l.episode_returns.size(), k = std::min<std::size_t>(n, 20);
    double ret = 0.0;
    for (std::size_t i = n - k; i < n; ++i) ret += l.episode_returns[i];
    std::ostringstream s;
    s << tag << " step " << step << " return " << (k ? ret / static_cast<double>(k) : 0.0) << " lambda "
      << (l.lambdas.empty() ? 0.0 : l.lambdas.back());
    log(s.str());
  };
}

json metrics_json(const crl::Metrics& m) {
  return {{"VR", m.vr}, {"REW", m.rew}, {"TR", m.tr}, {"episodes", m.episodes}};
}

// ---- commands ----

struct GenDemosArgs {
  std::string task = "nav1", config, out;
  std::size_t n = 20;
  std::optional<std::uint64_t> seed, layout_seed;
};

int gen_demos(const GenDemosArgs& a, std::size_t workers) {
  if (a.n == 0) throw ConfigError("--n must be positive");
  auto cfg = config_or_default(a.config);
  cfg.task = a.task;
  cfg.workers = workers;
  if (a.seed) cfg.seed = *a.seed;
  if (a.layout_seed) cfg.layout_seed = *a.layout_seed;
  try {
    cfg.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  const auto& gt = cfg.ground_truth();
  const auto spec = cfg.training_layout();
  log("layout " + spec.hash() + "; training the demonstrator");
  const auto set = envs::gen_expert_demos(spec, gt.formula, a.n, cfg.demo_options(), nullptr, train_progress("demos"));

  fs::create_directories(a.out);
  write_text(fs::path(a.out) / "env.json", spec.to_json().dump(2) + "\n");
  crl::save_jsonl((fs::path(a.out) / "demos.jsonl").string(), set.demos);
  write_text(fs::path(a.out) / "demos_report.json",
             json{{"task", cfg.task},
                  {"requested", a.n},
                  {"count", set.demos.size()},
                  {"partial", set.partial},
                  {"attempts", set.attempts},
                  {"reward_cut", set.reward_cut},
                  {"quantile", cfg.demos.quantile},
                  {"pool_rewards", set.pool_rewards},
                  {"spec_hash", spec.hash()},
                  {"config", cli::to_json(cfg)}}
                     .dump(2) +
                 "\n");
  std::cout << set.demos.size() << " demos written to " << a.out << "\n";
  if (set.partial)
    throw PartialResult("only " + std::to_string(set.demos.size()) + " of " + std::to_string(a.n) + " demos found");
  return kOk;
}

struct MineArgs {
  std::string demos, negatives, config, out;
};

int mine_cmd(const MineArgs& a, std::size_t workers) {
  auto cfg = config_or_default(a.config);
  const auto experts = load_trajs(a.demos);
  const auto negatives = load_trajs(a.negatives);
  if (experts.empty()) throw DataError(a.demos + ": no expert trajectories");
  mining::MiningConfig mc = cfg.ilcl.mining;
  mc.workers = workers;
  mining::Dataset data;
  try {
    data = mining::Dataset::make(crl::traces_of(experts), crl::traces_of(negatives));
  } catch (const mining::MiningError& e) {
    throw DataError(e.what());
  }
  const auto features = features_for(data.dims());

  fs::create_directories(a.out);
  std::ofstream audit(fs::path(a.out) / "audit.jsonl");
  audit << json{{"event", "config"}, {"mining", mining::to_json(mc)}, {"demos", a.demos}, {"negatives", a.negatives},
                {"experts", experts.size()}, {"negative_count", negatives.size()}}
               .dump()
        << '\n';
  const auto res = mining::mine(data, mc, {}, [&](const mining::GenerationRecord& g) {
    json j = json::parse(mining::to_json_line(g));
    j["event"] = "generation";
    audit << j.dump() << '\n';
    log("generation " + std::to_string(g.generation) + " fitness " + std::to_string(g.fitness) + " " + g.formula);
  });
  const std::string text = tl::format_formula(res.best.formula(), features);
  audit << json{{"event", "result"}, {"formula", text}, {"fitness", res.best.fitness},
                {"reg_fitness", res.best.reg_fitness}}
               .dump()
        << '\n';
  write_text(fs::path(a.out) / "formula.txt", text + "\n");
  std::ofstream gl(fs::path(a.out) / "generations.jsonl");
  mining::write_generation_log(gl, res.log);
  write_text(fs::path(a.out) / "report.json", json{{"formula", text},
                                                   {"fitness", res.best.fitness},
                                                   {"reg_fitness", res.best.reg_fitness},
                                                   {"node_count", res.best.node_count},
                                                   {"perfect", res.perfect},
                                                   {"selected_dims", res.selected_dims},
                                                   {"generations", res.log.size()},
                                                   {"mining", mining::to_json(mc)}}
                                                  .dump(2) +
                                                  "\n");
  std::cout << text << "\nfitness " << res.best.fitness << "\n";
  return kOk;
}

struct TrainArgs {
  std::string env, constraint, config, out;
};

int train_cmd(const TrainArgs& a, std::size_t workers) {
  auto cfg = config_or_default(a.config);
  const auto spec = load_spec(a.env);
  const auto f = formula_arg(a.constraint);
  check_dims(f, envs::kNavStateDim, "the navigation state");
  const envs::NavEnv env(spec);
  crl::CrlConfig cc = cfg.ilcl.crl;
  cc.seed = cfg.seed;
  crl::TrainLog lg;
  const auto policy = crl::train_policy(env, f, {}, cc, &lg, train_progress("train"));
  fs::create_directories(a.out);
  policy.save((fs::path(a.out) / "policy.ckpt").string());
  crl::RolloutOptions ro{.seed = cfg.seed, .workers = workers, .deterministic = false};
  const auto m = crl::evaluate_policy(policy, {&env}, f, 100, ro);
  write_text(fs::path(a.out) / "train_log.json", json{{"episode_returns", lg.episode_returns},
                                                      {"episode_rhos", lg.episode_rhos},
                                                      {"updates", lg.updates},
                                                      {"final_lambda", policy.lambda()},
                                                      {"constraint", tl::format_formula(f, envs::nav_features())},
                                                      {"crl", crl::to_json(cc)},
                                                      {"eval", metrics_json(m)}}
                                                     .dump(2) +
                                                     "\n");
  std::cout << metrics_json(m).dump() << "\n";
  return kOk;
}

struct IlclArgs {
  std::string task = "nav1", config, out, demos, env;
};

int ilcl_cmd(const IlclArgs& a, std::size_t workers) {
  auto cfg = config_or_default(a.config);
  cfg.task = a.task;
  cfg.workers = workers;
  try {
    cfg.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  const auto& gt = cfg.ground_truth();
  if (a.demos.empty() != a.env.empty()) throw ConfigError("--demos and --env go together");
  fs::create_directories(a.out);
  envs::EnvSpec spec;
  std::vector<crl::Trajectory> demos;
  if (!a.demos.empty()) {
    spec = load_spec(a.env);
    demos = load_trajs(a.demos);
    if (demos.empty()) throw DataError(a.demos + ": no expert trajectories");
  } else {
    spec = cfg.training_layout();
    log("layout " + spec.hash() + "; generating demos");
    const auto set =
        envs::gen_expert_demos(spec, gt.formula, cfg.demo_count, cfg.demo_options(), nullptr, train_progress("demos"));
    if (set.partial) throw PartialResult("only " + std::to_string(set.demos.size()) + " demos found");
    demos = set.demos;
  }
  write_text(fs::path(a.out) / "env.json", spec.to_json().dump(2) + "\n");
  const envs::NavEnv env(spec);
  game::RunOptions ro;
  ro.out_dir = a.out;
  ro.features = envs::nav_features();
  ro.run_info = cli::to_json(cfg);
  ro.progress = log;
  const auto res = game::run(env, demos, cfg.ilcl_config(), ro);

  crl::RolloutOptions eo{.seed = cfg.seed, .workers = workers, .deterministic = false};
  const auto m = crl::evaluate_policy(*res.policy, {&env}, gt.formula, 100, eo);
  const auto expert = crl::evaluate_trajectories(demos, gt.formula);
  const std::string text = tl::format_formula(res.formula, envs::nav_features());
  write_text(fs::path(a.out) / "final.json", json{{"formula", text},
                                                  {"selected_k", res.selection.index + 1},
                                                  {"policy_eval", metrics_json(m)},
                                                  {"expert_eval", metrics_json(expert)}}
                                                 .dump(2) +
                                                 "\n");
  std::cout << text << "\n" << metrics_json(m).dump() << "\n";
  return kOk;
}

struct EvalArgs {
  std::string policy, trajs, gt, env;
  std::size_t episodes = 100;
  std::uint64_t seed = 0;
};

int eval_cmd(const EvalArgs& a, std::size_t workers) {
  if (a.policy.empty() == a.trajs.empty()) throw ConfigError("give exactly one of --policy and --trajs");
  const auto gt = formula_arg(a.gt);
  crl::Metrics m;
  if (!a.trajs.empty()) {
    const auto trajs = load_trajs(a.trajs);
    for (const auto& t : trajs) check_dims(gt, t.state_dim, "the trajectory");
    m = crl::evaluate_trajectories(trajs, gt);
  } else {
    if (a.env.empty()) throw ConfigError("--policy needs --env");
    const envs::NavEnv env(load_spec(a.env));
    check_dims(gt, env.state_dim(), "the environment");
    crl::LagrangianPolicy policy = [&] {
      try {
        return crl::LagrangianPolicy::load(a.policy);
      } catch (const std::exception& e) {
        throw DataError(e.what());
      }
    }();
    m = crl::evaluate_policy(policy, {&env}, gt, a.episodes, {.seed = a.seed, .workers = workers});
  }
  std::cout << metrics_json(m).dump() << "\n";
  return kOk;
}

struct RobustnessArgs {
  std::string formula, traj, trace;
};

std::vector<tl::Trace> traces_from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot read " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  const std::string body = buf.str();
  const auto first = body.find_first_not_of(" \t\r\n");
  if (first != std::string::npos && body[first] == '[') {
    try {
      const auto rows = json::parse(body).get<std::vector<std::vector<double>>>();
      return {tl::Trace(rows)};
    } catch (const std::exception& e) {
      throw DataError(path + ": " + e.what());
    }
  }
  return crl::traces_of(load_trajs(path));
}

int robustness_cmd(const RobustnessArgs& a) {
  if (a.traj.empty() == a.trace.empty()) throw ConfigError("give exactly one of --traj and --trace");
  const auto f = formula_arg(a.formula);
  std::vector<tl::Trace> traces;
  if (!a.trace.empty()) {
    try {
      traces.push_back(tl::Trace(json::parse(a.trace).get<std::vector<std::vector<double>>>()));
    } catch (const std::exception& e) {
      throw DataError(std::string("--trace: ") + e.what());
    }
  } else {
    traces = traces_from_file(a.traj);
  }
  for (std::size_t i = 0; i < traces.size(); ++i) {
    check_dims(f, traces[i].dims(), "trajectory " + std::to_string(i));
    std::cout << tl::format_number(tl::robustness(traces[i], f)) << "\n";
  }
  return kOk;
}

struct DfaArgs {
  std::string formula;
  bool dot = false;
};

int dfa_cmd(const DfaArgs& a) {
  const auto f = formula_arg(a.formula);
  const auto dfa = automaton::to_dfa(f);
  const tl::FeatureTable features;
  if (a.dot) {
    std::cout << automaton::to_dot(dfa, features);
    return kOk;
  }
  std::cout << "states " << dfa.state_count() << "\n";
  for (std::size_t i = 0; i < dfa.aps().size(); ++i)
    std::cout << "ap " << i << " " << tl::format_formula(tl::Formula::ap(dfa.aps().aps()[i]), features) << "\n";
  for (std::size_t q = 0; q < dfa.state_count(); ++q) {
    std::cout << "state " << q << (dfa.accepting(q) ? " accepting" : "") << " : "
              << tl::format_formula(dfa.residual(q), features) << "\n";
    std::map<std::size_t, std::vector<std::size_t>> by_target;
    for (std::size_t bits = 0; bits < dfa.alphabet_size(); ++bits)
      by_target[dfa.next(q, automaton::Valuation{static_cast<std::uint32_t>(bits)})].push_back(bits);
    for (const auto& [target, letters] : by_target) {
      std::cout << "  -> " << target << " on";
      for (std::size_t b : letters) std::cout << " " << b;
      std::cout << "\n";
    }
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Inverse logic-constraint learning: demos, mining, constrained RL and evaluation"};
  app.require_subcommand(1);
  std::size_t workers = 1;
  app.add_option("--workers", workers, "Rollout worker threads")->check(CLI::PositiveNumber);

  GenDemosArgs gd;
  auto* c_gd = app.add_subcommand("gen-demos", "Train a demonstrator against a ground truth and sample demos");
  c_gd->add_option("--task", gd.task, "nav1 | nav2")->check(CLI::IsMember({"nav1", "nav2"}));
  c_gd->add_option("--n", gd.n, "Number of demos");
  c_gd->add_option("--out", gd.out, "Output directory")->required();
  c_gd->add_option("--config", gd.config, "Run config (JSON)");
  c_gd->add_option("--seed", gd.seed, "Base seed");
  c_gd->add_option("--layout-seed", gd.layout_seed, "Layout seed");

  MineArgs mn;
  auto* c_mn = app.add_subcommand("mine", "Mine a constraint separating demos from negatives");
  c_mn->add_option("--demos", mn.demos, "Expert trajectories (JSONL)")->required();
  c_mn->add_option("--negatives", mn.negatives, "Negative trajectories (JSONL)")->required();
  c_mn->add_option("--config", mn.config, "Run config (JSON)");
  c_mn->add_option("--out", mn.out, "Output directory")->required();

  TrainArgs tr;
  auto* c_tr = app.add_subcommand("train", "Constrained RL under a formula");
  c_tr->add_option("--env", tr.env, "Env spec (JSON)")->required();
  c_tr->add_option("--constraint", tr.constraint, "Formula text, file, or task name")->required();
  c_tr->add_option("--config", tr.config, "Run config (JSON)");
  c_tr->add_option("--out", tr.out, "Output directory")->required();

  IlclArgs il;
  auto* c_il = app.add_subcommand("ilcl", "Run the full constraint-learning game");
  c_il->add_option("--task", il.task, "nav1 | nav2")->check(CLI::IsMember({"nav1", "nav2"}));
  c_il->add_option("--config", il.config, "Run config (JSON)");
  c_il->add_option("--out", il.out, "Run directory")->required();
  c_il->add_option("--demos", il.demos, "Use these demos instead of generating them");
  c_il->add_option("--env", il.env, "Env spec of the demos");

  EvalArgs ev;
  auto* c_ev = app.add_subcommand("eval", "VR / REW / TR against a ground truth, as JSON");
  c_ev->add_option("--policy", ev.policy, "Checkpoint");
  c_ev->add_option("--trajs", ev.trajs, "Recorded trajectories (JSONL)");
  c_ev->add_option("--gt", ev.gt, "Formula text, file, or task name")->required();
  c_ev->add_option("--env", ev.env, "Env spec (JSON), with --policy");
  c_ev->add_option("--episodes", ev.episodes, "Rollouts, with --policy");
  c_ev->add_option("--seed", ev.seed, "Rollout seed");

  RobustnessArgs rb;
  auto* c_rb = app.add_subcommand("robustness", "Print ρ of each trajectory");
  c_rb->add_option("--formula", rb.formula, "Formula text, file, or task name")->required();
  c_rb->add_option("--traj", rb.traj, "Trajectories (JSONL) or one JSON array of states");
  c_rb->add_option("--trace", rb.trace, "Inline JSON array of states");

  DfaArgs df;
  auto* c_df = app.add_subcommand("dfa", "Print the automaton of a formula");
  c_df->add_option("--formula", df.formula, "Formula text, file, or task name")->required();
  c_df->add_flag("--dot", df.dot, "Graphviz output");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfig;
  }

  try {
    if (*c_gd) return gen_demos(gd, workers);
    if (*c_mn) return mine_cmd(mn, workers);
    if (*c_tr) return train_cmd(tr, workers);
    if (*c_il) return ilcl_cmd(il, workers);
    if (*c_ev) return eval_cmd(ev, workers);
    if (*c_rb) return robustness_cmd(rb);
    if (*c_df) return dfa_cmd(df);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfig;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfig;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kData;
  } catch (const crl::TrajectoryError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kData;
  } catch (const crl::DivergenceError& e) {
    std::cerr << "training diverged: " << e.what() << "\n";
    return kDiverged;
  } catch (const PartialResult& e) {
    std::cerr << "partial result: " << e.what() << "\n";
    return kPartial;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return kOk;
}
