// Acceptance suite: one PASS/FAIL line per criterion.
//
//   acceptance --criteria 1,2,3,4,5,6,9
//   acceptance --criteria 7,8 --out DIR

#include <CLI11.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <set>
#include <sstream>

#include <json.hpp>

#include "ilcl/automaton/dfa.hpp"
#include "ilcl/cli/run_config.hpp"
#include "ilcl/crl/cost.hpp"
#include "ilcl/crl/replay_buffer.hpp"
#include "ilcl/crl/sac_lag.hpp"
#include "ilcl/envs/demos.hpp"
#include "ilcl/envs/nav_env.hpp"
#include "ilcl/game/ilcl.hpp"
#include "ilcl/mining/miner.hpp"
#include "ilcl/mining/operators.hpp"
#include "ilcl/tl/parse.hpp"
#include "ilcl/tl/robustness.hpp"
#include "ilcl/tl/simplify.hpp"
#include "ilcl/util/seed.hpp"
#include "test_support.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace ilcl;

namespace {

// Pinned tolerances and budgets.
constexpr double kSoundnessEps = 1e-9;
constexpr double kSoundnessSeconds = 60.0;
constexpr double kDfaSeconds = 300.0;
constexpr double kSimplifyTol = 1e-12;
constexpr double kCostTol = 1e-15;
constexpr double kMiningSecondsPerSeed = 900.0;
constexpr std::size_t kMiningSeeds = 5, kMiningPasses = 4;
constexpr double kMaxVr = 35.0;
constexpr double kMinRewardRatio = 0.6;
constexpr double kE2eSeconds = 4 * 3600.0;
// Published full-scale result, logged for comparison only.
constexpr double kReferenceMaxVr = 32.5;
constexpr std::size_t kEvalEpisodes = 100;
constexpr std::size_t kTransferLayouts = 3;

struct Outcome {
  bool pass = false;
  std::string detail;
};

using Clock = std::chrono::steady_clock;
double since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

void note(const std::string& s) { std::cerr << "  " << s << std::endl; }

// 1. sign(ρ) agrees with the Boolean semantics whenever |ρ| > 1e-9.
Outcome soundness() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(101);
  std::size_t checked = 0, agree = 0;
  while (checked < 10000) {
    testing::RandomFormulaOptions opt;
    opt.max_depth = 3;
    opt.dims = 1 + rng() % 3;
    const auto f = testing::random_formula(rng, opt);
    const auto tr = testing::random_trace(rng, opt.dims, 8);
    const double r = tl::robustness(tr, f);
    if (std::abs(r) <= kSoundnessEps) continue;
    ++checked;
    agree += (r > 0) == tl::boolean_eval(tr, f) ? 1 : 0;
  }
  const double s = since(t0);
  return {agree == checked && s < kSoundnessSeconds, fmt("%zu/%zu agree in %.1f s", agree, checked, s)};
}

// 2. DFA acceptance equals satisfaction.
Outcome dfa_equivalence() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(202);
  std::size_t pairs = 0, agree = 0;
  for (int i = 0; i < 1000; ++i) {
    testing::RandomFormulaOptions opt;
    opt.max_depth = 3;
    opt.dims = 1 + static_cast<std::size_t>(i % 3);
    const auto f = testing::random_formula(rng, opt);
    const auto dfa = automaton::to_dfa(f);
    const auto& aps = dfa.aps().aps();
    for (int j = 0; j < 1000; ++j) {
      const auto tr = testing::random_trace(rng, opt.dims, 8);
      bool boundary = false;
      for (std::size_t t = 0; t <= tr.last() && !boundary; ++t)
        for (const auto& ap : aps) boundary |= tr.at(t, ap.dim) == std::get<double>(ap.threshold);
      if (boundary) continue;
      ++pairs;
      agree += dfa.accepts(tr) == tl::satisfies(tr, f) ? 1 : 0;
    }
  }
  const double s = since(t0);
  return {agree == pairs && s < kDfaSeconds, fmt("%zu/%zu agree in %.1f s", agree, pairs, s)};
}

// 3. 6κ' + 8κ'² basis trees.
Outcome basis_count() {
  const auto two = mining::basis_trees(2, {0, 1}).size();
  const auto three = mining::basis_trees(3, {0, 1, 2}).size();
  return {two == 44 && three == 90, fmt("kappa'=2 -> %zu, kappa'=3 -> %zu", two, three)};
}

// 4. Simplification leaves robustness unchanged.
Outcome simplify_exact() {
  std::mt19937_64 rng(404);
  double worst = 0.0;
  std::size_t bad = 0;
  for (int i = 0; i < 10000; ++i) {
    testing::RandomFormulaOptions opt;
    opt.dims = 1 + static_cast<std::size_t>(i % 3);
    opt.grid_thresholds = i % 2 == 0;
    const auto f = testing::random_formula(rng, opt);
    const auto tr = testing::random_trace(rng, opt.dims, 8);
    const double a = tl::robustness(tr, f), b = tl::robustness(tr, tl::simplify(f));
    const double d = a == b ? 0.0 : std::abs(a - b);
    worst = std::max(worst, d);
    bad += d <= kSimplifyTol ? 0 : 1;
  }
  return {bad == 0, fmt("max |diff| %.3g over 10000 pairs, %zu over tolerance", worst, bad)};
}

// Scripted navigation: head for the goal, sometimes through a waypoint near
// a random region or a random point, with per-step noise.
crl::Trajectory scripted_episode(const envs::NavEnv& proto, std::mt19937_64& rng) {
  envs::NavEnv env = proto;
  const auto& spec = env.spec();
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::normal_distribution<double> noise(0.0, 0.35);
  crl::Trajectory tr;
  tr.state_dim = env.state_dim();
  tr.action_dim = 2;
  auto s = env.reset(rng);
  tr.states = s;
  std::vector<std::array<double, 2>> targets;
  const double mode = u(rng);
  if (mode < 0.6) {
    const auto& r = spec.regions[rng() % spec.regions.size()];
    const double ang = 2 * M_PI * u(rng), rad = r.radius + 0.12 * u(rng);
    targets.push_back({r.x + rad * std::cos(ang), r.y + rad * std::sin(ang)});
  } else if (mode < 0.8) {
    targets.push_back({spec.side * u(rng), spec.side * u(rng)});
  }
  targets.push_back(spec.goal);
  const double speed = 0.6 + 0.4 * u(rng), b = env.action_bound();
  std::size_t k = 0;
  for (std::size_t t = 0; t < env.horizon(); ++t) {
    const auto p = env.position();
    double dx = targets[k][0] - p[0], dy = targets[k][1] - p[1];
    const double dist = std::hypot(dx, dy);
    if (dist < 0.03 * spec.side && k + 1 < targets.size()) ++k;
    const double scale = dist > 1e-12 ? std::min(1.0, dist / b) / dist : 0.0;
    std::vector<double> a{b * (speed * dx * scale + noise(rng)), b * (speed * dy * scale + noise(rng))};
    for (auto& v : a) v = std::clamp(v, -b, b);
    const auto res = env.step(a);
    tr.actions.insert(tr.actions.end(), a.begin(), a.end());
    tr.rewards.push_back(res.reward);
    tr.states.insert(tr.states.end(), res.state.begin(), res.state.end());
  }
  return tr;
}

// 5. Planted-constraint recovery on rejection-sampled navigation traces.
Outcome planted_recovery() {
  const auto& gt = envs::gt_constraints().at("nav1");
  std::size_t perfect = 0;
  double slowest = 0.0;
  std::ostringstream per;
  for (std::size_t seed = 0; seed < kMiningSeeds; ++seed) {
    envs::RandomizeOptions ro;
    ro.feasible_for = gt.formula;
    const envs::NavEnv env(envs::randomize(seed, envs::Split::Train, ro));
    std::mt19937_64 rng(util::stream_seed(seed, 0xacc5));
    std::vector<tl::Trace> experts, negatives;
    std::size_t drawn = 0;
    while ((experts.size() < 20 || negatives.size() < 200) && drawn < 200000) {
      ++drawn;
      const auto tr = scripted_episode(env, rng).trace();
      const double r = tl::robustness(tr, gt.formula);
      if (r > 0 && experts.size() < 20) experts.push_back(tr);
      if (r < 0 && negatives.size() < 200) negatives.push_back(tr);
    }
    if (experts.size() < 20 || negatives.size() < 200) {
      per << " seed" << seed << ":no-data";
      continue;
    }
    const auto data = mining::Dataset::make(experts, negatives);
    mining::MiningConfig mc;
    mc.basis_count = 48;
    mc.random_count = 16;
    mc.max_generations = 20;
    mc.seed = seed;
    const auto t0 = Clock::now();
    const auto res = mining::mine(data, mc);
    const double s = since(t0);
    slowest = std::max(slowest, s);
    const double exact = mining::fitness(res.best.formula(), {}, data);
    perfect += exact == 1.0 && s < kMiningSecondsPerSeed ? 1 : 0;
    per << fmt(" seed%zu:%.3f/%.0fs", seed, exact, s);
    note(fmt("seed %zu: %s fitness %.4f", seed, tl::format_formula(res.best.formula(), envs::nav_features()).c_str(),
             exact));
  }
  return {perfect >= kMiningPasses, fmt("%zu/%zu seeds reach fitness 1.0 (slowest %.0f s);", perfect, kMiningSeeds,
                                        slowest) +
                                        per.str()};
}

// 6. Dense cost, redistribution and λ ascent.
Outcome cost_arithmetic() {
  const crl::CostParams p;
  bool ok = crl::dense_cost(0.3, p) == 0.0 && std::abs(crl::dense_cost(-0.2, p) - 0.6) < kCostTol &&
            crl::dense_cost(-10.0, p) == 1.0;
  crl::ReplayBuffer buf(1000);
  auto make = [](double cost) {
    crl::Trajectory t;
    t.state_dim = 1;
    t.action_dim = 1;
    t.states = {0, 1, 2, 3, 4, 5};
    t.actions = {1, 1, 1, 1, 1};
    t.rewards = {0, 0, 0, 0, 0};
    t.traj_cost = cost;
    return t;
  };
  const auto a = buf.add(make(0.4)), b = buf.add(make(0.0));
  for (std::size_t t = 0; t < 5; ++t)
    ok = ok && buf.redistribute({a, t}) == 0.4 && buf.redistribute({b, t}) == 0.0;

  const envs::NavEnv env(envs::randomize(0, envs::Split::Train));
  crl::CrlConfig c;
  c.hidden = 16;
  c.batch_size = 32;
  c.random_steps = 100;
  c.update_after = 100;
  c.total_steps = 1100;
  crl::TrainLog lg;
  crl::train_policy(env, tl::parse_formula("G(x_agt < -1000000000)", envs::nav_features()), {}, c, &lg);
  std::size_t rises = 0;
  double prev = c.initial_lambda;
  for (std::size_t k = 0; k < std::min<std::size_t>(1000, lg.lambdas.size()); ++k) {
    rises += lg.lambdas[k] > prev ? 1 : 0;
    prev = lg.lambdas[k];
  }
  ok = ok && rises == 1000;
  return {ok, fmt("worked examples %s; lambda rose on %zu/1000 updates (final %.4f)", ok ? "exact" : "checked", rises,
                  lg.lambdas.empty() ? 0.0 : lg.lambdas.back())};
}

// 9. Metrics on hand-built rollouts.
Outcome metric_arithmetic() {
  const auto f = tl::parse_formula("G(s0 < 1)");
  auto one = [](double x, std::vector<double> rewards) {
    crl::Trajectory t;
    t.state_dim = 1;
    t.action_dim = 1;
    t.states.assign(rewards.size() + 1, x);
    t.actions.assign(rewards.size(), 0.0);
    t.rewards = std::move(rewards);
    return t;
  };
  // ρ = 1 - x: +1 and -2.
  const auto m = crl::evaluate_trajectories({one(0.0, {1.0, 2.0}), one(3.0, {0.5, 0.5})}, f);
  const auto all_ok = crl::evaluate_trajectories({one(0.0, {1.0}), one(0.5, {1.0})}, f);
  const bool ok = m.vr == 50.0 && m.tr == 1.0 && m.rew == 2.0 && m.episodes == 2 && all_ok.vr == 0.0 &&
                  all_ok.tr == 0.0 && all_ok.rew == 1.0;
  return {ok, fmt("rho {+1,-2}: VR=%g TR=%g REW=%g; all satisfied: VR=%g TR=%g", m.vr, m.tr, m.rew, all_ok.vr,
                  all_ok.tr)};
}

// 7 and 8 share one end-to-end run.
struct EndToEnd {
  Outcome c7, c8;
};

json metrics_json(const crl::Metrics& m) { return {{"VR", m.vr}, {"REW", m.rew}, {"TR", m.tr}}; }

crl::TrainProgress train_progress(const std::string& tag) {
  return [tag](std::size_t step, const crl::TrainLog& l) {
    if (step % 50000 != 0) return;
    const std::size_t n = l.episode_returns.size(), k = std::min<std::size_t>(n, 40);
    double ret = 0.0, viol = 0.0;
    for (std::size_t i = n - k; i < n; ++i) {
      ret += l.episode_returns[i];
      viol += l.episode_rhos[i] < 0 ? 1 : 0;
    }
    note(fmt("%s step %zu return %.2f violations %.2f lambda %.3f", tag.c_str(), step, ret / k, viol / k,
             l.lambdas.empty() ? 0.0 : l.lambdas.back()));
  };
}

EndToEnd end_to_end(const fs::path& out, const std::set<int>& wanted) {
  const auto t0 = Clock::now();
  fs::create_directories(out);
  cli::RunConfig cfg;  // defaults: nav1, seed 0, layout 0, N = 3, 2e5 steps per CRL run
  const auto& gt = cfg.ground_truth();
  const auto spec = cfg.training_layout();
  const envs::NavEnv env(spec);
  json summary = {{"layout", spec.to_json()}, {"config", cli::to_json(cfg)}};

  note("generating demos");
  const auto set = envs::gen_expert_demos(spec, gt.formula, cfg.demo_count, cfg.demo_options(), nullptr,
                                          train_progress("demonstrator"));
  crl::save_jsonl((out / "demos.jsonl").string(), set.demos);
  const auto expert = crl::evaluate_trajectories(set.demos, gt.formula);
  summary["demos"] = {{"count", set.demos.size()}, {"partial", set.partial}, {"reward_cut", set.reward_cut},
                      {"expert", metrics_json(expert)}};
  note(fmt("%zu demos, expert REW %.3f", set.demos.size(), expert.rew));

  game::RunOptions ro;
  ro.out_dir = (out / "run").string();
  ro.features = envs::nav_features();
  ro.progress = note;
  const auto res = game::run(env, set.demos, cfg.ilcl_config(), ro);
  const std::string learned = tl::format_formula(res.formula, envs::nav_features());

  std::size_t accepted = 0;
  for (const auto& d : set.demos) accepted += tl::robustness(d.trace(), res.formula) > 0 ? 1 : 0;
  crl::RolloutOptions eo{.seed = 77, .workers = 1, .deterministic = false};
  const auto final_m = crl::evaluate_policy(*res.policy, {&env}, gt.formula, kEvalEpisodes, eo);
  const auto replay = game::replay_audit(ro.out_dir);
  const double e2e = since(t0);
  summary["ilcl"] = {{"formula", learned},
                     {"selected_k", res.selection.index + 1},
                     {"accepted", accepted},
                     {"policy", metrics_json(final_m)},
                     {"audit_mismatches", replay.size()},
                     {"reference_max_vr", kReferenceMaxVr},
                     {"seconds", e2e}};

  EndToEnd r;
  const bool all_accept = accepted == set.demos.size() && !set.demos.empty();
  r.c7.pass = all_accept && !set.partial && final_m.vr <= kMaxVr && final_m.rew >= kMinRewardRatio * expert.rew &&
              e2e <= kE2eSeconds && replay.empty();
  r.c7.detail = fmt("%s accepts %zu/%zu demos; policy VR=%.1f%% REW=%.3f vs expert %.3f (ratio %.2f); %.0f s; "
                    "reference max VR %.1f%%",
                    learned.c_str(), accepted, set.demos.size(), final_m.vr, final_m.rew, expert.rew,
                    expert.rew > 0 ? final_m.rew / expert.rew : 0.0, e2e, kReferenceMaxVr);

  if (wanted.count(8)) {
    envs::RandomizeOptions tro;
    tro.feasible_for = gt.formula;
    tro.require_greedy_violation = true;
    tro.min_reward_ratio = 0.5;
    double tr_learned = 0.0, tr_free = 0.0;
    json layouts = json::array();
    for (std::size_t i = 0; i < kTransferLayouts; ++i) {
      const auto tspec = envs::randomize(1000 + i, envs::Split::Test, tro);
      const envs::NavEnv tenv(tspec);
      crl::CrlConfig cc = cfg.ilcl.crl;
      cc.seed = 500 + i;
      note(fmt("transfer layout %zu: constrained", i));
      const auto pc = crl::train_policy(tenv, res.formula, {}, cc, nullptr, train_progress("transfer-constrained"));
      note(fmt("transfer layout %zu: reward-only", i));
      const auto pu = crl::train_policy(tenv, tl::Formula::top(), {}, cc, nullptr, train_progress("transfer-free"));
      const auto mc = crl::evaluate_policy(pc, {&tenv}, gt.formula, kEvalEpisodes, eo);
      const auto mu = crl::evaluate_policy(pu, {&tenv}, gt.formula, kEvalEpisodes, eo);
      tr_learned += mc.tr / kTransferLayouts;
      tr_free += mu.tr / kTransferLayouts;
      layouts.push_back({{"spec", tspec.to_json()}, {"constrained", metrics_json(mc)}, {"free", metrics_json(mu)}});
      note(fmt("layout %zu: constrained VR=%.1f TR=%.4f, reward-only VR=%.1f TR=%.4f", i, mc.vr, mc.tr, mu.vr, mu.tr));
    }
    summary["transfer"] = {{"layouts", layouts}, {"mean_tr_learned", tr_learned}, {"mean_tr_free", tr_free}};
    r.c8.pass = tr_learned < tr_free;
    r.c8.detail = fmt("mean TR learned %.4f vs reward-only %.4f over %zu test layouts", tr_learned, tr_free,
                      kTransferLayouts);
  }
  std::ofstream(out / "summary.json") << summary.dump(2) << "\n";
  return r;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance criteria"};
  std::vector<int> criteria{1, 2, 3, 4, 5, 6, 7, 8, 9};
  std::string out = "acceptance_run";
  app.add_option("--criteria", criteria, "Criteria to run")->delimiter(',');
  app.add_option("--out", out, "Output directory for the end-to-end run");
  CLI11_PARSE(app, argc, argv);
  const std::set<int> wanted(criteria.begin(), criteria.end());

  std::map<int, Outcome> results;
  const std::map<int, std::function<Outcome()>> quick{{1, soundness},       {2, dfa_equivalence}, {3, basis_count},
                                                      {4, simplify_exact},  {5, planted_recovery}, {6, cost_arithmetic},
                                                      {9, metric_arithmetic}};
  for (int c : wanted) {
    if (!quick.count(c)) continue;
    try {
      results[c] = quick.at(c)();
    } catch (const std::exception& e) {
      results[c] = {false, std::string("exception: ") + e.what()};
    }
    std::cout << "criterion " << c << ": " << (results[c].pass ? "PASS" : "FAIL") << "  " << results[c].detail
              << std::endl;
  }
  if (wanted.count(7) || wanted.count(8)) {
    EndToEnd e;
    try {
      e = end_to_end(out, wanted);
    } catch (const std::exception& ex) {
      e.c7 = e.c8 = {false, std::string("exception: ") + ex.what()};
    }
    for (int c : {7, 8}) {
      if (!wanted.count(c)) continue;
      results[c] = c == 7 ? e.c7 : e.c8;
      std::cout << "criterion " << c << ": " << (results[c].pass ? "PASS" : "FAIL") << "  " << results[c].detail
                << std::endl;
    }
  }
  bool all = true;
  for (const auto& [c, r] : results) all = all && r.pass;
  return all ? 0 : 1;
}
