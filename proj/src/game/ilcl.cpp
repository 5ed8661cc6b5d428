#include "ilcl/game/ilcl.hpp"

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "ilcl/automaton/dfa.hpp"
#include "ilcl/mining/dataset.hpp"
#include "ilcl/mining/fitness.hpp"
#include "ilcl/tl/robustness.hpp"
#include "ilcl/util/json_config.hpp"
#include "ilcl/util/seed.hpp"

namespace ilcl::game {

namespace fs = std::filesystem;
using nlohmann::json;

void IlclConfig::validate() const {
  if (iterations == 0) throw std::invalid_argument("iterations must be positive");
  if (bootstrap_count == 0) throw std::invalid_argument("bootstrap_count must be positive");
  if (samples_per_iteration == 0) throw std::invalid_argument("samples_per_iteration must be positive");
  if (max_sample_attempts < samples_per_iteration)
    throw std::invalid_argument("max_sample_attempts must be at least samples_per_iteration");
  if (select_samples == 0) throw std::invalid_argument("select_samples must be positive");
  if (workers == 0) throw std::invalid_argument("workers must be positive");
  try {
    mining.validate();
  } catch (const mining::MiningError& e) {
    throw std::invalid_argument(e.what());
  }
  crl.validate();
}

json to_json(const IlclConfig& c) {
  return {{"iterations", c.iterations},
          {"bootstrap_count", c.bootstrap_count},
          {"samples_per_iteration", c.samples_per_iteration},
          {"max_sample_attempts", c.max_sample_attempts},
          {"select_samples", c.select_samples},
          {"workers", c.workers},
          {"seed", c.seed},
          {"mining", mining::to_json(c.mining)},
          {"crl", crl::to_json(c.crl)}};
}

IlclConfig ilcl_config_from_json(const json& j, IlclConfig c) {
  util::reject_unknown_keys(j, to_json(c), "ilcl");
  util::read_key(j, "iterations", c.iterations);
  util::read_key(j, "bootstrap_count", c.bootstrap_count);
  util::read_key(j, "samples_per_iteration", c.samples_per_iteration);
  util::read_key(j, "max_sample_attempts", c.max_sample_attempts);
  util::read_key(j, "select_samples", c.select_samples);
  util::read_key(j, "workers", c.workers);
  util::read_key(j, "seed", c.seed);
  if (j.contains("mining")) c.mining = mining::mining_config_from_json(j.at("mining"), c.mining);
  if (j.contains("crl")) c.crl = crl::crl_config_from_json(j.at("crl"), c.crl);
  c.validate();
  return c;
}

json to_json(const IterationRecord& r) {
  return {{"k", r.k},
          {"formula", r.formula},
          {"fitness", r.fitness},
          {"reg_fitness", r.reg_fitness},
          {"node_count", r.node_count},
          {"experts_accepted", r.experts_accepted},
          {"negatives", r.negatives},
          {"final_lambda", r.final_lambda},
          {"sampled", r.sampled},
          {"attempts", r.attempts},
          {"cap_hit", r.cap_hit},
          {"mine_seconds", r.mine_seconds},
          {"train_seconds", r.train_seconds}};
}

std::size_t GameState::pool_size() const {
  std::size_t n = 0;
  for (const auto& p : pool) n += p.size();
  return n;
}

std::vector<crl::Trajectory> GameState::pooled() const {
  std::vector<crl::Trajectory> out;
  out.reserve(pool_size());
  for (const auto& p : pool) out.insert(out.end(), p.begin(), p.end());
  return out;
}

double expert_action_error(const crl::LagrangianPolicy& policy, const std::vector<crl::Trajectory>& experts,
                           std::size_t samples, std::uint64_t seed) {
  if (samples == 0) throw std::invalid_argument("select_best needs at least one action sample");
  crl::Rng rng(seed);
  double total = 0.0;
  std::size_t count = 0;
  for (const auto& ex : experts) {
    if (ex.state_dim != policy.state_dim() || ex.action_dim != policy.action_dim())
      throw std::invalid_argument("expert trajectory shape does not match the policy");
    const auto qs = policy.dfa().run(ex.trace());
    for (std::size_t t = 0; t < ex.steps(); ++t) {
      const auto a = ex.action(t);
      double err = 0.0;
      for (std::size_t i = 0; i < samples; ++i) {
        const auto b = policy.act(ex.state(t), qs[t], t, rng);
        double sq = 0.0;
        for (std::size_t d = 0; d < a.size(); ++d) sq += (a[d] - b[d]) * (a[d] - b[d]);
        err += std::sqrt(sq);
      }
      total += err / static_cast<double>(samples);
      ++count;
    }
  }
  if (count == 0) throw std::invalid_argument("select_best needs at least one expert step");
  return total / static_cast<double>(count);
}

Selection select_best(const std::vector<std::shared_ptr<const crl::LagrangianPolicy>>& policies,
                      const std::vector<crl::Trajectory>& experts, std::size_t samples, std::uint64_t seed) {
  if (policies.empty()) throw std::invalid_argument("select_best needs at least one candidate");
  Selection sel;
  if (policies.size() == 1) {
    sel.errors.push_back(expert_action_error(*policies[0], experts, samples, seed));
    return sel;
  }
  for (std::size_t i = 0; i < policies.size(); ++i) {
    sel.errors.push_back(expert_action_error(*policies[i], experts, samples, seed));
    if (sel.errors[i] < sel.errors[sel.index]) sel.index = i;
  }
  return sel;
}

std::vector<crl::Trajectory> bootstrap_negatives(const crl::Env& env, std::size_t m, const crl::CrlConfig& cfg,
                                                 std::size_t workers,
                                                 std::shared_ptr<const crl::LagrangianPolicy>* policy) {
  if (m == 0) throw std::invalid_argument("bootstrap needs at least one rollout");
  auto pi = std::make_shared<const crl::LagrangianPolicy>(crl::train_policy(env, tl::Formula::top(), {}, cfg));
  crl::RolloutOptions ro;
  ro.seed = util::stream_seed(cfg.seed, 0xb0);
  ro.workers = workers;
  auto out = crl::rollouts(*pi, env, m, ro);
  for (std::size_t i = 0; i < out.size(); ++i) out[i].meta = {{"source", "bootstrap"}, {"index", i}};
  if (policy) *policy = pi;
  return out;
}

namespace {

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::vector<double> rhos_of(const std::vector<crl::Trajectory>& trajs, const tl::Formula& f) {
  std::vector<double> out;
  out.reserve(trajs.size());
  for (const auto& tr : trajs) out.push_back(tl::robustness(tr.trace(), f));
  return out;
}

class RunWriter {
 public:
  explicit RunWriter(const std::string& dir) : dir_(dir) {
    if (dir_.empty()) return;
    fs::create_directories(fs::path(dir_) / "constraints");
    fs::create_directories(fs::path(dir_) / "policies");
    fs::create_directories(fs::path(dir_) / "trajs");
    audit_.open(fs::path(dir_) / "audit.jsonl");
    if (!audit_) throw std::runtime_error("cannot write " + dir_ + "/audit.jsonl");
  }
  bool enabled() const { return !dir_.empty(); }
  std::string path(const std::string& rel) const { return (fs::path(dir_) / rel).string(); }

  void audit(const json& j) {
    if (!enabled()) return;
    audit_ << j.dump() << '\n';
    audit_.flush();
  }
  void text(const std::string& rel, const std::string& body) {
    if (!enabled()) return;
    std::ofstream out(path(rel));
    out << body;
    if (!out) throw std::runtime_error("cannot write " + path(rel));
  }
  void trajs(const std::string& rel, const std::vector<crl::Trajectory>& t) {
    if (enabled()) crl::save_jsonl(path(rel), t);
  }

 private:
  std::string dir_;
  std::ofstream audit_;
};

}  // namespace

GameResult run(const crl::Env& env, const std::vector<crl::Trajectory>& experts, const IlclConfig& cfg,
               const RunOptions& opt) {
  cfg.validate();
  if (experts.empty()) throw std::invalid_argument("the expert set is empty");
  for (const auto& ex : experts) {
    ex.validate();
    if (ex.state_dim != env.state_dim() || ex.action_dim != env.action_dim())
      throw std::invalid_argument("expert trajectory shape does not match the environment");
  }
  auto say = [&](const std::string& s) {
    if (opt.progress) opt.progress(s);
  };
  auto fmt = [&](const tl::Formula& f) { return tl::format_formula(f, opt.features); };

  RunWriter w(opt.out_dir);
  GameState st;
  st.experts = experts;

  json run_json = {{"config", to_json(cfg)}, {"features", opt.features.names()}, {"info", opt.run_info},
                   {"state_dim", env.state_dim()}, {"action_dim", env.action_dim()}};
  w.text("run.json", run_json.dump(2) + "\n");
  w.trajs("trajs/experts.jsonl", experts);
  w.audit({{"event", "start"}, {"config", to_json(cfg)}, {"experts", "trajs/experts.jsonl"},
           {"expert_count", experts.size()}});

  if (opt.bootstrap) {
    st.pool.push_back(*opt.bootstrap);
  } else {
    say("bootstrap: training reward-only policy");
    crl::CrlConfig bc = cfg.crl;
    bc.seed = util::stream_seed(cfg.seed, 0xb0);
    st.pool.push_back(bootstrap_negatives(env, cfg.bootstrap_count, bc, cfg.workers));
  }
  w.trajs("trajs/0.jsonl", st.pool[0]);
  w.audit({{"event", "bootstrap"}, {"file", "trajs/0.jsonl"}, {"count", st.pool[0].size()}});
  std::vector<std::string> negative_files{"trajs/0.jsonl"};

  const auto expert_traces = crl::traces_of(experts);
  for (std::size_t k = 1; k <= cfg.iterations; ++k) {
    // Constraint player.
    const auto t_mine = std::chrono::steady_clock::now();
    const auto pooled = st.pooled();
    const auto data = mining::Dataset::make(expert_traces, crl::traces_of(pooled));
    mining::MiningConfig mc = cfg.mining;
    mc.seed = util::stream_seed(cfg.seed, 0x314e, k);
    say("k=" + std::to_string(k) + ": mining against " + std::to_string(pooled.size()) + " negatives");
    const auto mined = mining::mine(data, mc, st.constraints, [&](const mining::GenerationRecord& g) {
      json j = json::parse(mining::to_json_line(g));
      j["event"] = "generation";
      j["k"] = k;
      w.audit(j);
    });
    const tl::Formula f = mined.best.formula();

    IterationRecord rec;
    rec.k = k;
    rec.formula = fmt(f);
    rec.fitness = mined.best.fitness;
    rec.reg_fitness = mined.best.reg_fitness;
    rec.node_count = mined.best.node_count;
    rec.negatives = pooled.size();
    rec.mine_seconds = seconds_since(t_mine);
    w.audit({{"event", "mine"}, {"k", k}, {"formula", rec.formula}, {"fitness", rec.fitness},
             {"reg_fitness", rec.reg_fitness}, {"experts", "trajs/experts.jsonl"}, {"negatives", negative_files},
             {"mining_config", mining::to_json(mc)}, {"selected_dims", mined.selected_dims}});

    const auto expert_rho = rhos_of(experts, f);
    for (double r : expert_rho) rec.experts_accepted += r > 0.0 ? 1 : 0;
    w.audit({{"event", "expert_check"}, {"k", k}, {"rho", expert_rho}, {"accepted", rec.experts_accepted}});
    say("k=" + std::to_string(k) + ": " + rec.formula + " fitness " + std::to_string(rec.fitness));
    if (rec.fitness <= 0.0) {
      if (k == 1)
        throw GameError("mining found no constraint separating the experts from the bootstrap negatives (fitness 0)");
      say("k=" + std::to_string(k) + ": fitness 0, stopping the game early");
      w.audit({{"event", "stop"}, {"k", k}, {"reason", "fitness 0"}});
      break;
    }
    if (rec.experts_accepted != experts.size())
      throw GameError("mined constraint with fitness > 0 rejects " +
                      std::to_string(experts.size() - rec.experts_accepted) + " experts");

    // Policy player.
    const auto t_train = std::chrono::steady_clock::now();
    std::vector<crl::Trajectory> warm = experts;
    for (std::size_t i = 1; i < st.pool.size(); ++i) warm.insert(warm.end(), st.pool[i].begin(), st.pool[i].end());
    crl::CrlConfig cc = cfg.crl;
    cc.seed = util::stream_seed(cfg.seed, 0xc41, k);
    crl::TrainLog log;
    say("k=" + std::to_string(k) + ": training policy under the mined constraint");
    auto policy = std::make_shared<const crl::LagrangianPolicy>(crl::train_policy(env, f, warm, cc, &log));
    rec.final_lambda = policy->lambda();
    rec.train_seconds = seconds_since(t_train);
    const std::string ckpt = "policies/" + std::to_string(k) + ".ckpt";
    if (w.enabled()) policy->save(w.path(ckpt));
    w.audit({{"event", "train"}, {"k", k}, {"checkpoint", ckpt}, {"lambda", rec.final_lambda},
             {"warm_start_inserted", log.warm_start_inserted}, {"warm_start_rejected", log.warm_start_rejected},
             {"updates", log.updates}, {"seconds", rec.train_seconds}});

    crl::RolloutOptions ro;
    ro.seed = util::stream_seed(cfg.seed, 0x5a, k);
    ro.workers = cfg.workers;
    auto sample = crl::sample_zero_violation(*policy, env, f, cfg.samples_per_iteration, cfg.max_sample_attempts, ro);
    for (std::size_t i = 0; i < sample.trajectories.size(); ++i)
      sample.trajectories[i].meta = {{"source", "policy"}, {"k", k}, {"index", i}};
    const auto pool_rho = rhos_of(sample.trajectories, f);
    for (double r : pool_rho)
      if (r < 0.0) throw GameError("zero-violation sample contains a violating trajectory");
    rec.sampled = sample.trajectories.size();
    rec.attempts = sample.attempts;
    rec.cap_hit = sample.cap_hit;
    const std::string file = "trajs/" + std::to_string(k) + ".jsonl";
    w.trajs(file, sample.trajectories);
    w.audit({{"event", "sample"}, {"k", k}, {"file", file}, {"count", rec.sampled}, {"attempts", rec.attempts},
             {"cap_hit", rec.cap_hit}, {"rho", pool_rho}});
    w.text("constraints/" + std::to_string(k) + ".txt", rec.formula + "\n");
    negative_files.push_back(file);

    st.pool.push_back(std::move(sample.trajectories));
    st.constraints.push_back(f);
    st.policies.push_back(policy);
    st.records.push_back(rec);
    st.k = k;
  }

  GameResult res;
  res.selection = select_best(st.policies, experts, cfg.select_samples, util::stream_seed(cfg.seed, 0x5e1));
  res.formula = st.constraints[res.selection.index];
  res.policy = st.policies[res.selection.index];
  w.audit({{"event", "select"}, {"errors", res.selection.errors}, {"index", res.selection.index},
           {"k", res.selection.index + 1}, {"formula", fmt(res.formula)}});

  json records = json::array();
  for (const auto& r : st.records) records.push_back(to_json(r));
  w.text("metrics.json", json{{"iterations", records},
                              {"selected_k", res.selection.index + 1},
                              {"selected_formula", fmt(res.formula)},
                              {"selection_errors", res.selection.errors},
                              {"pool_size", st.pool_size()}}
                                 .dump(2) +
                             "\n");
  res.state = std::move(st);
  return res;
}

std::vector<std::string> replay_audit(const std::string& run_dir, double tolerance) {
  std::vector<std::string> problems;
  const fs::path dir(run_dir);
  std::ifstream rj(dir / "run.json");
  if (!rj) throw std::runtime_error("cannot read " + (dir / "run.json").string());
  const json run_json = json::parse(rj);
  const auto names = run_json.at("features").get<std::vector<std::string>>();
  const tl::FeatureTable features = names.empty() ? tl::FeatureTable::anonymous(run_json.at("state_dim").get<std::size_t>())
                                                  : tl::FeatureTable(names);
  auto traces = [&](const std::string& rel) { return crl::traces_of(crl::load_jsonl((dir / rel).string())); };

  std::ifstream audit(dir / "audit.jsonl");
  if (!audit) throw std::runtime_error("cannot read " + (dir / "audit.jsonl").string());
  std::map<std::size_t, tl::Formula> constraint;
  std::string line;
  std::size_t lineno = 0;
  auto close = [&](double a, double b) { return std::abs(a - b) <= tolerance; };
  while (std::getline(audit, line)) {
    ++lineno;
    if (line.empty()) continue;
    const json e = json::parse(line);
    const std::string ev = e.at("event");
    const std::string where = "audit line " + std::to_string(lineno) + " (" + ev + ")";
    if (ev == "mine") {
      const auto k = e.at("k").get<std::size_t>();
      const auto f = tl::parse_formula(e.at("formula").get<std::string>(), features);
      constraint[k] = f;
      std::vector<tl::Trace> neg;
      for (const auto& file : e.at("negatives")) {
        auto t = traces(file.get<std::string>());
        neg.insert(neg.end(), t.begin(), t.end());
      }
      const auto data = mining::Dataset::make(traces(e.at("experts")), std::move(neg));
      const double fit = mining::fitness(f, {}, data);
      if (!close(fit, e.at("fitness").get<double>()))
        problems.push_back(where + ": fitness " + std::to_string(fit) + " != logged " +
                           std::to_string(e.at("fitness").get<double>()));
    } else if (ev == "expert_check" || ev == "sample") {
      const auto k = e.at("k").get<std::size_t>();
      if (!constraint.count(k)) {
        problems.push_back(where + ": no constraint logged for k=" + std::to_string(k));
        continue;
      }
      const auto tr = traces(ev == "sample" ? e.at("file").get<std::string>() : std::string("trajs/experts.jsonl"));
      const auto logged = e.at("rho").get<std::vector<double>>();
      if (logged.size() != tr.size()) {
        problems.push_back(where + ": " + std::to_string(tr.size()) + " trajectories, " +
                           std::to_string(logged.size()) + " logged");
        continue;
      }
      for (std::size_t i = 0; i < tr.size(); ++i) {
        const double r = tl::robustness(tr[i], constraint[k]);
        if (!close(r, logged[i])) problems.push_back(where + ": rho[" + std::to_string(i) + "] differs");
        if (ev == "sample" && r < 0.0) problems.push_back(where + ": trajectory " + std::to_string(i) + " violates");
        if (ev == "expert_check" && !(r > 0.0))
          problems.push_back(where + ": expert " + std::to_string(i) + " rejected");
      }
    }
  }
  for (const auto& [k, f] : constraint) {
    std::ifstream ct(dir / "constraints" / (std::to_string(k) + ".txt"));
    std::string text;
    if (ct && std::getline(ct, text) && !(tl::parse_formula(text, features) == f))
      problems.push_back("constraints/" + std::to_string(k) + ".txt disagrees with the audit log");
  }
  return problems;
}

}  // namespace ilcl::game
