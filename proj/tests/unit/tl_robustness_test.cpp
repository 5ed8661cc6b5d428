#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "ilcl/tl/parse.hpp"
#include "ilcl/tl/robustness.hpp"
#include "ilcl/tl/simplify.hpp"
#include "test_support.hpp"

namespace ilcl::tl {
namespace {

Formula P(std::string_view text) { return parse_formula(text); }
Trace T(std::vector<std::vector<double>> rows) { return Trace(rows); }

TEST(Robustness, WorkedExamples) {
  EXPECT_DOUBLE_EQ(robustness(T({{0.5}}), P("s0 < 1")), 0.5);
  EXPECT_DOUBLE_EQ(robustness(T({{0.5}, {2.0}, {0.1}}), P("G(s0 < 1)")), -1.0);
  EXPECT_DOUBLE_EQ(robustness(T({{0.5}}), P("!(s0 < 1)")), -0.5);
  EXPECT_DOUBLE_EQ(robustness(T({{0.5}, {2.0}}), P("F(s0 > 1)")), 1.0);
  EXPECT_DOUBLE_EQ(robustness(T({{0.5}}), P("X(s0 < 1)")), -kBottom);
  EXPECT_DOUBLE_EQ(robustness(T({{0.5}}), Formula::top()), kTop);
  EXPECT_DOUBLE_EQ(robustness(T({{0.5}, {2.0}, {0.1}}), P("G(s0 < 1)"), 2), 0.9);
}

TEST(Robustness, UntilAndReleaseByHand) {
  // ρ1 = 1 - s, ρ2 = 0.1 - s over s = (0.5, 0.5, 0.0):
  // ρ1 = (0.5, 0.5, 1.0), ρ2 = (-0.4, -0.4, 0.1)
  // U at 0 = max(-0.4, min(0.5, -0.4), min(0.1, 0.5, 0.5)) = 0.1
  const Trace tr = T({{0.5}, {0.5}, {0.0}});
  EXPECT_NEAR(robustness(tr, P("(s0 < 1) U (s0 < 0.1)")), 0.1, 1e-15);
  EXPECT_TRUE(boolean_eval(tr, P("(s0 < 1) U (s0 < 0.1)")));
  // R at 0 = min over t' of max(ρ2(t'), max_{t''<t'} ρ1(t'')) with ρ1 = ρ2 swapped roles:
  // (s0 < 0.1) R (s0 < 1): ρ2 = (0.5, 0.5, 1.0) all positive -> min = 0.5
  EXPECT_NEAR(robustness(tr, P("(s0 < 0.1) R (s0 < 1)")), 0.5, 1e-15);
  // (s0 < 1) R (s0 < 0.1): t'=0: max(-0.4, -1e6) = -0.4 -> min <= -0.4
  EXPECT_NEAR(robustness(tr, P("(s0 < 1) R (s0 < 0.1)")), -0.4, 1e-15);
}

TEST(Satisfies, StrictBoundary) {
  EXPECT_TRUE(satisfies(T({{0.5}}), P("s0 < 1")));
  EXPECT_FALSE(satisfies(T({{1.0}}), P("s0 < 1")));
}

TEST(BooleanEval, Examples) {
  EXPECT_TRUE(boolean_eval(T({{0.5}, {2.0}}), P("F(s0 > 1)")));
  EXPECT_FALSE(boolean_eval(T({{0.5}}), P("X(s0 < 1)")));
  EXPECT_TRUE(boolean_eval(T({{0.5}, {0.5}, {0.0}}), P("(s0 < 1) U (s0 < 0.1)")));
  EXPECT_FALSE(boolean_eval(T({{0.5}, {2.0}, {0.0}}), P("(s0 < 1) U (s0 < 0.1)")));
}

TEST(Robustness, Errors) {
  EXPECT_THROW(robustness(T({{0.5}}), P("s0 < 1"), 1), std::out_of_range);
  EXPECT_THROW(robustness(T({{0.5}}), P("s0 < ?p0")), FormulaError);
  EXPECT_THROW(robustness(T({{0.5}}), P("s1 < 1")), FormulaError);
  EXPECT_THROW(T({{0.5}, {1.0, 2.0}}), std::invalid_argument);
  EXPECT_THROW(T({{NAN}}), std::invalid_argument);
}

TEST(Robustness, SoundnessAgainstBooleanOracle) {
  std::mt19937_64 rng(2024);
  int checked = 0;
  for (int i = 0; i < 3000; ++i) {
    testing::RandomFormulaOptions opt;
    opt.dims = 1 + i % 3;
    const Formula f = testing::random_formula(rng, opt);
    const Trace tr = testing::random_trace(rng, opt.dims);
    for (std::size_t t = 0; t <= tr.last(); ++t) {
      const double r = robustness(tr, f, t);
      if (std::abs(r) < 1e-9) continue;
      ASSERT_EQ(r > 0, boolean_eval(tr, f, t)) << format_formula(f) << " t=" << t;
      ++checked;
    }
  }
  EXPECT_GT(checked, 5000);
}

TEST(Robustness, AndOrAreMinMaxPerNode) {
  std::mt19937_64 rng(5);
  for (int i = 0; i < 500; ++i) {
    const Formula a = testing::random_formula(rng);
    const Formula b = testing::random_formula(rng);
    const Trace tr = testing::random_trace(rng, 3);
    const double ra = robustness(tr, a), rb = robustness(tr, b);
    ASSERT_EQ(robustness(tr, Formula::conj(a, b)), std::min(ra, rb));
    ASSERT_EQ(robustness(tr, Formula::disj(a, b)), std::max(ra, rb));
  }
}

TEST(Robustness, PredicateMonotoneInThreshold) {
  std::mt19937_64 rng(9);
  for (int i = 0; i < 200; ++i) {
    const Trace tr = testing::random_trace(rng, 2);
    double prev_below = -INFINITY, prev_above = INFINITY;
    for (double th = -1.5; th <= 1.5; th += 0.05) {
      const Formula below = Formula::always(Formula::ap(Ap{1, +1, th}));
      const Formula above = Formula::always(Formula::ap(Ap{1, -1, th}));
      const double rb = robustness(tr, below), ra = robustness(tr, above);
      ASSERT_GE(rb, prev_below);
      ASSERT_LE(ra, prev_above);
      prev_below = rb;
      prev_above = ra;
    }
  }
}

TEST(Simplify, PreservesRobustness) {
  std::mt19937_64 rng(77);
  for (int i = 0; i < 3000; ++i) {
    testing::RandomFormulaOptions opt;
    opt.grid_thresholds = true;
    opt.dims = 2;
    const Formula f = testing::random_formula(rng, opt);
    const Formula s = simplify(f);
    const Trace tr = testing::random_trace(rng, 2);
    for (std::size_t t = 0; t <= tr.last(); ++t)
      ASSERT_NEAR(robustness(tr, f, t), robustness(tr, s, t), 1e-12) << format_formula(f);
  }
}

TEST(RobustnessProgram, MatchesReferenceEvaluator) {
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> u(-1, 1);
  for (int i = 0; i < 2000; ++i) {
    testing::RandomFormulaOptions opt;
    opt.parametric = true;
    const Formula skel = testing::random_formula(rng, opt);
    const auto ids = collect_params(skel);
    ParamVector theta;
    std::vector<double> slots;
    for (const auto& id : ids) {
      slots.push_back(u(rng));
      theta[id] = slots.back();
    }
    const Trace tr = testing::random_trace(rng, 3);
    const RobustnessProgram prog(skel);
    ASSERT_EQ(prog.param_count(), ids.size());
    ASSERT_EQ(prog.evaluate(tr, slots), robustness(tr, instantiate(skel, theta)));
  }
}

}  // namespace
}  // namespace ilcl::tl
