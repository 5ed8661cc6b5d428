#include <gtest/gtest.h>

#include <random>

#include "ilcl/automaton/dfa.hpp"
#include "ilcl/tl/parse.hpp"
#include "test_support.hpp"

namespace ilcl::automaton {
namespace {

using tl::Formula;

Formula P(std::string_view text) { return tl::parse_formula(text); }
tl::Trace T(std::vector<std::vector<double>> rows) { return tl::Trace(rows); }

TEST(Label, StrictPredicates) {
  const ApTable one(P("G(s0 < 1)"));
  const std::vector<double> inside{0.5}, boundary{1.0};
  EXPECT_EQ(label(inside, one).bits, 1u);
  EXPECT_EQ(label(boundary, one).bits, 0u);

  const ApTable two(P("G(s0 < 0.2) & F(s1 < 1)"));
  const std::vector<double> s{0.3, 0.9};
  const Valuation v = label(s, two);
  EXPECT_FALSE(v.test(0));
  EXPECT_TRUE(v.test(1));

  const std::vector<double> short_state{0.3};
  EXPECT_THROW(label(short_state, two), DfaError);
}

TEST(ApTable, DeduplicatesSharedPredicates) {
  const ApTable t(P("G(s0 < 1) & F(!(s0 < 1)) & F(s0 > 1)"));
  EXPECT_EQ(t.size(), 2u);
  EXPECT_THROW(ApTable(P("G(s0 < ?p0)")), DfaError);
}

TEST(Progress, Identities) {
  const Formula g = P("G(s0 < 1)");
  const ApTable aps(g);
  EXPECT_EQ(progress(g, Valuation{1}, aps), g);
  EXPECT_EQ(progress(g, Valuation{0}, aps), Formula::bottom());

  const Formula f = P("F(s0 < 1)");
  EXPECT_EQ(progress(f, Valuation{1}, ApTable(f)), Formula::top());
  EXPECT_EQ(progress(f, Valuation{0}, ApTable(f)), f);

  const Formula u = P("(s0 < 1) U (s1 < 1)");
  const ApTable uaps(u);
  EXPECT_EQ(progress(u, Valuation{0b01}, uaps), u);
  EXPECT_EQ(progress(u, Valuation{0b10}, uaps), Formula::top());
  EXPECT_EQ(progress(u, Valuation{0b00}, uaps), Formula::bottom());
}

TEST(EmptyAccepts, Recursion) {
  EXPECT_TRUE(empty_accepts(P("G(s0 < 1)")));
  EXPECT_FALSE(empty_accepts(P("F(s0 < 1)")));
  EXPECT_FALSE(empty_accepts(P("G(s0 < 1) & F(s1 < 1)")));
  EXPECT_TRUE(empty_accepts(P("G(s0 < 1) | F(s1 < 1)")));
  EXPECT_TRUE(empty_accepts(P("(s0 < 1) R (s1 < 1)")));
  EXPECT_FALSE(empty_accepts(P("X(true)")));
  EXPECT_FALSE(empty_accepts(P("s0 < 1")));
}

TEST(Canonicalize, SortsAndFlattens) {
  EXPECT_EQ(canonical_key(P("(F(s1 < 1) & G(s0 < 1)) & F(s1 < 1)")),
            canonical_key(P("G(s0 < 1) & F(s1 < 1)")));
  EXPECT_EQ(canonical_key(P("(s0 < 1) | true")), "true");
  EXPECT_EQ(canonical_key(P("(s1 < 1) | (s0 < 1) | (s1 < 1)")), canonical_key(P("(s0 < 1) | (s1 < 1)")));
  EXPECT_EQ(canonicalize(P("G(G(s0 < 1)) & true")), P("G(s0 < 1)"));
}

TEST(ToDfa, AlwaysHasTwoStates) {
  const Dfa dfa = to_dfa(P("G(s0 < 1)"));
  ASSERT_EQ(dfa.state_count(), 2u);
  EXPECT_TRUE(dfa.accepting(dfa.initial()));
  const auto sink = dfa.next(dfa.initial(), Valuation{0});
  EXPECT_EQ(dfa.residual(sink), Formula::bottom());
  EXPECT_FALSE(dfa.accepting(sink));
}

TEST(ToDfa, EventuallyHasTwoStates) {
  const Dfa dfa = to_dfa(P("F(s0 < 1)"));
  ASSERT_EQ(dfa.state_count(), 2u);
  EXPECT_FALSE(dfa.accepting(dfa.initial()));
  const auto sink = dfa.next(dfa.initial(), Valuation{1});
  EXPECT_EQ(dfa.residual(sink), Formula::top());
  EXPECT_TRUE(dfa.accepting(sink));
}

TEST(ProductStep, SelfLoopSinkAndTotality) {
  const Dfa dfa = to_dfa(P("G(s0 < 1)"));
  const std::vector<double> good{0.5}, bad{2.0};
  const auto q0 = dfa.initial();
  EXPECT_EQ(product_step(dfa, q0, good), q0);
  const auto sink = product_step(dfa, q0, bad);
  EXPECT_NE(sink, q0);
  for (std::uint32_t b = 0; b < dfa.alphabet_size(); ++b) EXPECT_EQ(dfa.next(sink, Valuation{b}), sink);
}

TEST(ToDfa, SinksAbsorbAndTransitionsAreTotal) {
  std::mt19937_64 rng(99);
  for (int i = 0; i < 200; ++i) {
    const Dfa dfa = to_dfa(testing::random_formula(rng));
    for (std::size_t q = 0; q < dfa.state_count(); ++q) {
      const auto op = dfa.residual(q).op();
      for (std::uint32_t b = 0; b < dfa.alphabet_size(); ++b) {
        const auto t = dfa.next(q, Valuation{b});
        ASSERT_LT(t, dfa.state_count());
        if (op == tl::Op::True || op == tl::Op::False) ASSERT_EQ(t, q);
        // Progressing the same residual again yields the same canonical state.
        ASSERT_EQ(canonical_key(progress(dfa.residual(q), Valuation{b}, dfa.aps())), dfa.key(t));
      }
    }
  }
}

TEST(ToDfa, NextRequiresAnotherState) {
  const Dfa dfa = to_dfa(P("X(G(s0 < 1))"));
  EXPECT_FALSE(dfa.accepts(T({{0.5}})));
  EXPECT_TRUE(dfa.accepts(T({{5.0}, {0.5}})));
  EXPECT_FALSE(dfa.accepts(T({{5.0}, {0.5}, {3.0}})));
}

TEST(ToDfa, AgreesWithRobustnessOnRandomInputs) {
  std::mt19937_64 rng(1234);
  for (int i = 0; i < 300; ++i) {
    testing::RandomFormulaOptions opt;
    opt.dims = 1 + i % 3;
    opt.max_depth = 3 + i % 2;
    const Formula f = testing::random_formula(rng, opt);
    const Dfa dfa = to_dfa(f);
    for (int j = 0; j < 100; ++j) {
      const tl::Trace tr = testing::random_trace(rng, opt.dims);
      ASSERT_EQ(dfa.accepts(tr), tl::satisfies(tr, f)) << tl::format_formula(f);
    }
  }
}

TEST(ToDfa, Caps) {
  EXPECT_THROW(to_dfa(P("F(s0 < 1) & F(s0 < 2) & F(s0 < 3)"), DfaLimits{2, 4096}), DfaError);
  EXPECT_THROW(to_dfa(P("F(s0 < 1) & F(s0 < 2) & F(s0 < 3)"), DfaLimits{10, 3}), DfaError);
}

TEST(ToDot, RendersStatesAndEdges) {
  const std::string dot = to_dot(to_dfa(P("G(s0 < 1)")));
  EXPECT_NE(dot.find("digraph"), std::string::npos);
  EXPECT_NE(dot.find("doublecircle"), std::string::npos);
  EXPECT_NE(dot.find("q0 -> q1 [label=\"0\"]"), std::string::npos);
}

}  // namespace
}  // namespace ilcl::automaton
