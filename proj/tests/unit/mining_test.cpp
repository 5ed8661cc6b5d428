#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <set>
#include <sstream>

#include <json.hpp>

#include "ilcl/mining/miner.hpp"
#include "ilcl/tl/parse.hpp"
#include "ilcl/tl/simplify.hpp"
#include "test_support.hpp"

namespace ilcl::mining {
namespace {

using tl::Formula;

Formula P(std::string_view text) { return tl::parse_formula(text); }
tl::Trace T(std::vector<std::vector<double>> rows) { return tl::Trace(rows); }

const tl::FeatureTable kNav({"x_agt", "y_agt", "x_goal", "y_goal", "pR_dist", "pR_ang", "pG_dist", "pG_ang",
                             "pB_dist", "pB_ang"});
const char* kGt1 = "G(pR_dist > 0.2) & (pB_dist > 0.25 U pG_dist < 0.08)";

// Random-walk feature traces labelled by the planted constraint.
Dataset planted_dataset(std::uint64_t seed, std::size_t n_expert = 20, std::size_t n_neg = 200) {
  const Formula gt = tl::parse_formula(kGt1, kNav);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> start(0.0, 0.6);
  std::normal_distribution<double> step(0.0, 0.06);
  std::vector<tl::Trace> expert, neg;
  while (expert.size() < n_expert || neg.size() < n_neg) {
    std::vector<double> v;
    std::vector<double> s(10);
    for (auto& x : s) x = start(rng);
    for (int t = 0; t < 12; ++t) {
      v.insert(v.end(), s.begin(), s.end());
      for (auto& x : s) x = std::max(0.0, x + step(rng));
    }
    tl::Trace tr(10, v);
    const double rho = tl::robustness(tr, gt);
    if (rho > 0 && expert.size() < n_expert) expert.push_back(tr);
    if (rho < 0 && neg.size() < n_neg) neg.push_back(tr);
  }
  return Dataset::make(expert, neg);
}

TEST(Dataset, BoundsArePadded) {
  const Dataset d = Dataset::make({T({{0.0}, {1.0}})}, {T({{2.0}})});
  ASSERT_EQ(d.dims(), 1u);
  EXPECT_DOUBLE_EQ(d.bounds[0].lo, -0.2);
  EXPECT_DOUBLE_EQ(d.bounds[0].hi, 2.2);
  EXPECT_THROW(Dataset::make({}, {T({{2.0}})}), MiningError);
  EXPECT_THROW(Dataset::make({T({{0.0}})}, {T({{2.0, 1.0}})}), MiningError);
}

TEST(BasisTrees, Counts) {
  EXPECT_EQ(basis_trees(1, {0}).size(), 14u);
  EXPECT_EQ(basis_trees(2, {0, 1}).size(), 44u);
  EXPECT_EQ(basis_trees(5, {0, 2, 4}).size(), 90u);
  EXPECT_THROW(basis_trees(2, {}), MiningError);
  EXPECT_THROW(basis_trees(2, {2}), MiningError);
}

TEST(BasisTrees, ParametricAndConsistent) {
  const auto trees = basis_trees(3, {0, 1, 2});
  std::set<std::string> texts;
  for (const auto& t : trees) {
    EXPECT_TRUE(tl::is_temporally_consistent(t));
    EXPECT_FALSE(tl::is_concrete(t));
    const auto ids = tl::collect_params(t);
    for (std::size_t i = 0; i < ids.size(); ++i) EXPECT_EQ(ids[i].value, static_cast<int>(i));
    texts.insert(tl::format_formula(t));
  }
  EXPECT_EQ(texts.size(), trees.size());
  EXPECT_EQ(tl::format_formula(trees[0]), "X(s0 < ?p0)");
  EXPECT_EQ(tl::format_formula(trees[1]), "X(s0 > ?p0)");
}

TEST(RandomTree, StopBeforeFirstInjection) {
  const auto basis = basis_trees(2, {0, 1});
  const ApSampler sampler{{0, 1}, {}};
  Rng rng(1);
  std::set<std::string> texts;
  for (const auto& b : basis) texts.insert(tl::format_formula(b));
  for (int i = 0; i < 200; ++i)
    EXPECT_TRUE(texts.count(tl::format_formula(random_tree(basis, 3, 1.0, sampler, rng))));
}

TEST(RandomTree, DepthConsistencyAndDeterminism) {
  const auto basis = basis_trees(3, {0, 1, 2});
  const ApSampler sampler{{0, 1, 2}, {}};
  Rng a(42), b(42);
  for (int i = 0; i < 1000; ++i) {
    const Formula f = random_tree(basis, 3, 0.1, sampler, a);
    const Formula g = random_tree(basis, 3, 0.1, sampler, b);
    ASSERT_EQ(f, g);
    ASSERT_LE(tl::depth(f), 4u) << tl::format_formula(f);
    ASSERT_TRUE(tl::is_temporally_consistent(f));
    ASSERT_EQ(tl::simplify(f), f);
    const auto ids = tl::collect_params(f);
    for (std::size_t k = 0; k < ids.size(); ++k) ASSERT_EQ(ids[k].value, static_cast<int>(k));
  }
}

TEST(Fitness, WorkedExamples) {
  const Formula f = P("G(s0 < 1)");
  const Dataset half = Dataset::make({T({{0.5}})}, {T({{0.5}}), T({{2.0}})});
  EXPECT_DOUBLE_EQ(fitness(f, {}, half), 0.5);
  const Dataset bad_expert = Dataset::make({T({{0.5}}), T({{1.1}})}, {T({{2.0}})});
  EXPECT_DOUBLE_EQ(fitness(f, {}, bad_expert), 0.0);
  const Dataset no_neg = Dataset::make({T({{0.5}})}, {});
  EXPECT_DOUBLE_EQ(fitness(f, {}, no_neg), 0.0);
  const Formula skel = P("G(s0 < ?p0)");
  EXPECT_DOUBLE_EQ(fitness(skel, {{tl::ParamId{0}, 1.0}}, half), 0.5);
  EXPECT_THROW(fitness(P("G(s1 < 1)"), {}, half), std::exception);
}

TEST(Fitness, PlantedConstraintScoresOne) {
  const Dataset d = planted_dataset(5);
  EXPECT_DOUBLE_EQ(fitness(tl::parse_formula(kGt1, kNav), {}, d), 1.0);
}

TEST(Fitness, ScorerMatchesReference) {
  const Dataset d = planted_dataset(6);
  const Formula skel = P("G(s4 > ?p0) & (s8 > ?p1 U s6 < ?p2)");
  const SkeletonScorer scorer(skel, d);
  ASSERT_EQ(scorer.param_count(), 3u);
  std::mt19937_64 rng(3);
  for (int i = 0; i < 50; ++i) {
    std::vector<double> th;
    tl::ParamVector pv;
    for (std::size_t k = 0; k < 3; ++k) {
      const auto& b = scorer.bounds()[k];
      th.push_back(std::uniform_real_distribution<double>(b.lo, b.hi)(rng));
      pv[tl::ParamId{static_cast<int>(k)}] = th.back();
    }
    const auto s = scorer.score(th);
    EXPECT_DOUBLE_EQ(s.exact, fitness(skel, pv, d));
    EXPECT_DOUBLE_EQ(scorer.exact(th), s.exact);
    EXPECT_GE(s.surrogate, 0.0);
    EXPECT_LE(s.surrogate, 1.0);
  }
}

TEST(Annealing, FindsQuadraticMinimumDeterministically) {
  const Energy e = [](std::span<const double> x) { return (x[0] - 0.3) * (x[0] - 0.3) + (x[1] + 1) * (x[1] + 1); };
  const std::vector<double> lo{-2, -2}, hi{2, 2};
  const auto a = dual_annealing(e, lo, hi, {}, 400, 7);
  const auto b = dual_annealing(e, lo, hi, {}, 400, 7);
  EXPECT_EQ(a.x, b.x);
  EXPECT_LE(a.evaluations, 400u);
  EXPECT_NEAR(a.x[0], 0.3, 1e-2);
  EXPECT_NEAR(a.x[1], -1.0, 1e-2);
  EXPECT_THROW(dual_annealing(e, lo, hi, {}, 0, 7), std::invalid_argument);
}

TEST(OptimizeParams, NoParametersEvaluatesOnce) {
  const Dataset half = Dataset::make({T({{0.5}})}, {T({{0.5}}), T({{2.0}})});
  const FitResult r = optimize_params(P("G(s0 < 1)"), half, 300, 1);
  EXPECT_TRUE(r.theta.empty());
  EXPECT_EQ(r.evaluations, 1u);
  EXPECT_DOUBLE_EQ(r.fitness, 0.5);
  EXPECT_THROW(optimize_params(P("G(s0 < 1)"), half, 0, 1), MiningError);
}

TEST(OptimizeParams, RecoversPlantedSeparationDeterministically) {
  const Dataset d = planted_dataset(7);
  const Formula skel = P("G(s4 > ?p0) & (s8 > ?p1 U s6 < ?p2)");
  const FitResult a = optimize_params(skel, d, 300, 11);
  const FitResult b = optimize_params(skel, d, 300, 11);
  EXPECT_DOUBLE_EQ(a.fitness, 1.0);
  EXPECT_EQ(a.theta, b.theta);
  EXPECT_DOUBLE_EQ(fitness(skel, a.theta, d), 1.0);
}

TEST(OptimizeParams, InitialGuessIsNeverLost) {
  const Dataset d = planted_dataset(8);
  const Formula skel = P("G(s4 > ?p0) & (s8 > ?p1 U s6 < ?p2)");
  const tl::ParamVector gt{{tl::ParamId{0}, 0.2}, {tl::ParamId{1}, 0.25}, {tl::ParamId{2}, 0.08}};
  const FitResult r = optimize_params(skel, d, 5, 3, gt);
  EXPECT_DOUBLE_EQ(r.fitness, 1.0);
}

Individual make(double f, std::size_t nodes, std::uint64_t birth) {
  Individual ind;
  ind.skeleton = P("G(s0 < ?p0)");
  ind.theta = {{tl::ParamId{0}, 0.0}};
  ind.fitness = f;
  ind.node_count = nodes;
  ind.birth = birth;
  return ind;
}

TEST(RegularizedFitness, Examples) {
  std::vector<Individual> one{make(1.0, 2, 0)};
  regularized_fitness(one, 0.01);
  EXPECT_DOUBLE_EQ(one[0].reg_fitness, 1.0);

  std::vector<Individual> two{make(1.0, 6, 0), make(0.0, 2, 1)};
  regularized_fitness(two, 0.01);
  EXPECT_NEAR(two[0].reg_fitness, 0.92, 1e-15);

  std::vector<Individual> zeros{make(0.0, 5, 0), make(0.0, 9, 1)};
  regularized_fitness(zeros, 0.01);
  EXPECT_EQ(zeros[0].reg_fitness, 0.0);
  EXPECT_EQ(zeros[1].reg_fitness, 0.0);

  std::vector<Individual> empty;
  EXPECT_THROW(regularized_fitness(empty, 0.01), MiningError);
}

TEST(SelectParents, TopAndTieBreaks) {
  std::vector<Individual> pop{make(0.2, 2, 0), make(0.9, 2, 1), make(0.5, 2, 2), make(0.7, 2, 3)};
  regularized_fitness(pop, 0.0);
  EXPECT_EQ(select_parents(pop, 4).size(), 4u);
  const auto top2 = select_parents(pop, 2);
  EXPECT_EQ(top2[0].birth, 1u);
  EXPECT_EQ(top2[1].birth, 3u);

  std::vector<Individual> ties{make(0.5, 5, 0), make(0.5, 3, 1), make(0.5, 3, 2)};
  regularized_fitness(ties, 0.0);
  const auto order = select_parents(ties, 3);
  EXPECT_EQ(order[0].birth, 1u);
  EXPECT_EQ(order[1].birth, 2u);
  EXPECT_EQ(order[2].birth, 0u);
  EXPECT_THROW(select_parents(ties, 4), MiningError);
}

TEST(Crossover, RootSwapAndFigurePattern) {
  const Formula a = P("G(s0 < 1)"), b = P("s1 < 2 U s2 < 3");
  auto [x, y] = crossover_at(a, 0, b, 0);
  EXPECT_EQ(x, b);
  EXPECT_EQ(y, a);
  auto [c, d] = crossover_at(a, 1, b, 0);
  EXPECT_EQ(c, P("G(s1 < 2 U s2 < 3)"));
  EXPECT_EQ(d, P("s0 < 1"));
  EXPECT_TRUE(finalize(c, 15).has_value());
  EXPECT_EQ(*finalize(d, 15), P("G(s0 < 1)"));
}

TEST(Crossover, OutputsAreValidOrRejected) {
  Rng rng(5);
  std::mt19937_64 frng(6);
  testing::RandomFormulaOptions opt;
  opt.allow_constants = false;
  int kept = 0;
  for (int i = 0; i < 1000; ++i) {
    const Formula a = wrap_unguarded(testing::random_formula(frng, opt));
    const Formula b = wrap_unguarded(testing::random_formula(frng, opt));
    auto [c1, c2] = crossover(a, b, rng);
    for (const auto& c : {c1, c2}) {
      const auto fin = finalize(c, 31);
      if (!fin) continue;
      ++kept;
      ASSERT_EQ(tl::parse_formula(tl::format_formula(*fin)), *fin);
      ASSERT_TRUE(tl::is_temporally_consistent(*fin));
    }
  }
  EXPECT_GT(kept, 1500);
}

TEST(MutationR, ReplaceAndDelete) {
  const ApSampler sampler{{0, 1}, {{0, 1}, {0, 1}}};
  Rng rng(2);
  const Formula single = P("s0 < 0.5");
  for (int i = 0; i < 20; ++i) {
    const Formula r = replace_node(single, 0, sampler, rng);
    ASSERT_EQ(r.op(), tl::Op::Ap);
    ASSERT_TRUE(tl::is_concrete(r));
  }
  const Formula conj = P("G(s0 < 1) & F(s1 > 2)");
  EXPECT_EQ(delete_node(conj, 3), P("G(s0 < 1)"));
  EXPECT_EQ(delete_node(conj, 1), P("F(s1 > 2)"));
  EXPECT_EQ(delete_node(conj, 2), P("(s0 < 1) & F(s1 > 2)"));
  EXPECT_THROW(delete_node(conj, 0), MiningError);
  const Formula g = replace_node(P("G(s0 < 1)"), 0, sampler, rng);
  EXPECT_NE(g.op(), tl::Op::Always);
  EXPECT_TRUE(tl::is_unary(g.op()));
}

TEST(MutationR, NeverGrowsUnderDelete) {
  std::mt19937_64 frng(8);
  Rng rng(9);
  const ApSampler sampler{{0, 1, 2}, {{-1, 1}, {-1, 1}, {-1, 1}}};
  for (int i = 0; i < 1000; ++i) {
    const Formula f = testing::random_formula(frng);
    const std::size_t n = tl::node_count(f);
    if (n > 1) {
      const std::size_t idx = 1 + std::uniform_int_distribution<std::size_t>(0, n - 2)(rng);
      ASSERT_LT(tl::node_count(delete_node(f, idx)), n);
    }
    const Formula m = mutation_r(f, sampler, rng);
    ASSERT_LE(tl::node_count(m), n);
    ASSERT_EQ(tl::parse_formula(tl::format_formula(m)), m);
  }
}

TEST(MutationA, InsertionExamples) {
  const Formula u = P("s0 < 1 U s1 < 2");
  const tl::Ap fresh{2, +1, 0.5};
  EXPECT_EQ(insert_operator(u, 2, tl::Op::Always, fresh), P("s0 < 1 U G(s1 < 2)"));
  EXPECT_EQ(insert_operator(u, 0, tl::Op::Eventually, fresh), P("F(s0 < 1 U s1 < 2)"));
  EXPECT_EQ(insert_operator(u, 0, tl::Op::And, fresh), P("(s0 < 1 U s1 < 2) & s2 < 0.5"));

  std::mt19937_64 frng(10);
  Rng rng(11);
  const ApSampler sampler{{0, 1, 2}, {{-1, 1}, {-1, 1}, {-1, 1}}};
  for (int i = 0; i < 1000; ++i) {
    const Formula f = testing::random_formula(frng);
    const Formula m = mutation_a(f, sampler, rng);
    const std::size_t grow = tl::node_count(m) - tl::node_count(f);
    ASSERT_TRUE(grow == 1 || grow == 2);
  }
}

TEST(Mine, SeparableByBasisTreeStopsAtGenerationZero) {
  const Dataset d = Dataset::make({T({{0.1, 5.0}, {0.2, 5.0}}), T({{0.3, 4.0}})},
                                  {T({{0.9, 5.0}, {0.2, 5.0}}), T({{0.1, 5.0}, {1.5, 4.0}})});
  MiningConfig cfg;
  cfg.basis_count = 20;
  cfg.random_count = 10;
  cfg.parents = 5;
  const MiningResult r = mine(d, cfg);
  EXPECT_TRUE(r.perfect);
  EXPECT_DOUBLE_EQ(r.best.fitness, 1.0);
  ASSERT_EQ(r.log.size(), 1u);
  for (const auto& tr : d.expert) EXPECT_TRUE(tl::satisfies(tr, r.best.formula()));
}

TEST(Mine, WarmStartAndDeterminism) {
  const Dataset d = planted_dataset(12, 10, 60);
  MiningConfig cfg;
  cfg.basis_count = 20;
  cfg.random_count = 10;
  cfg.parents = 8;
  cfg.max_generations = 2;
  cfg.annealing_budget = 60;
  cfg.seed = 4;
  const Formula prior = P("F(s6 < 0.2) & G(s4 > 0.1)");
  const MiningResult a = mine(d, cfg, {prior});
  const MiningResult b = mine(d, cfg, {prior});
  EXPECT_EQ(tl::format_formula(a.best.formula()), tl::format_formula(b.best.formula()));
  EXPECT_EQ(a.initial_population.size(), cfg.population());
  EXPECT_EQ(std::count(a.initial_population.begin(), a.initial_population.end(),
                       tl::format_formula(tl::abstract_thresholds(prior).first)),
            1);
  // Best raw fitness never decreases.
  for (std::size_t g = 1; g < a.log.size(); ++g) EXPECT_GE(a.log[g].best_fitness, a.log[g - 1].best_fitness);
  if (a.best.fitness > 0)
    for (const auto& tr : d.expert) EXPECT_GT(tl::robustness(tr, a.best.formula()), 0.0);

  std::ostringstream os;
  write_generation_log(os, a.log);
  std::istringstream is(os.str());
  std::string line;
  std::size_t lines = 0;
  while (std::getline(is, line)) {
    const auto j = nlohmann::json::parse(line);
    EXPECT_TRUE(j.contains("formula"));
    EXPECT_TRUE(j.contains("reg_fitness"));
    EXPECT_TRUE(j.contains("best_fitness"));
    EXPECT_TRUE(j.contains("seconds"));
    ++lines;
  }
  EXPECT_EQ(lines, a.log.size());
}

TEST(Mine, ParallelWorkersMatchSequential) {
  const Dataset d = planted_dataset(13, 10, 40);
  MiningConfig cfg;
  cfg.basis_count = 12;
  cfg.random_count = 6;
  cfg.parents = 6;
  cfg.max_generations = 1;
  cfg.annealing_budget = 40;
  const MiningResult a = mine(d, cfg);
  cfg.workers = 3;
  const MiningResult b = mine(d, cfg);
  EXPECT_EQ(tl::format_formula(a.best.formula()), tl::format_formula(b.best.formula()));
}

TEST(MiningConfig, Validation) {
  MiningConfig cfg;
  cfg.parents = 100;
  EXPECT_THROW(cfg.validate(), MiningError);
  cfg = {};
  cfg.p_R = 1.5;
  EXPECT_THROW(cfg.validate(), MiningError);
  cfg = {};
  cfg.max_basis_dims = 7;
  EXPECT_THROW(cfg.validate(), MiningError);
}

}  // namespace
}  // namespace ilcl::mining
