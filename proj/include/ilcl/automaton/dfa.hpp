#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "ilcl/tl/formula.hpp"
#include "ilcl/tl/parse.hpp"
#include "ilcl/tl/robustness.hpp"

namespace ilcl::automaton {

class DfaError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Distinct concrete predicates of a formula, deduplicated by
/// (dim, sign, threshold). Ap and NotAp over the same predicate share a bit.
class ApTable {
 public:
  ApTable() = default;
  explicit ApTable(const tl::Formula& f);

  std::size_t size() const { return aps_.size(); }
  const std::vector<tl::Ap>& aps() const { return aps_; }
  /// Bit index of a predicate; throws if absent.
  std::size_t index_of(const tl::Ap& ap) const;

 private:
  std::vector<tl::Ap> aps_;
};

/// One letter of the alphabet 2^AP: bit i is set iff predicate i holds.
struct Valuation {
  std::uint32_t bits = 0;
  bool test(std::size_t i) const { return (bits >> i) & 1u; }
  bool operator==(const Valuation&) const = default;
};

/// Bit i set iff the strict predicate of ap i holds on the state.
Valuation label(std::span<const double> state, const ApTable& aps);

/// Canonical residual: simplify, then put every &/| layer into a minimal
/// disjunctive normal form over its non-boolean operands (absorption,
/// duplicate and p & !p removal), sorted by text.
tl::Formula canonicalize(const tl::Formula& f);
std::string canonical_key(const tl::Formula& f);

/// Finite-trace formula progression against one letter, canonicalised.
tl::Formula progress(const tl::Formula& f, Valuation v, const ApTable& aps);

/// Whether the residual holds on the empty suffix.
bool empty_accepts(const tl::Formula& f);

struct DfaLimits {
  std::size_t max_aps = 10;
  std::size_t max_states = 4096;
};

class Dfa {
 public:
  using State = std::size_t;

  std::size_t state_count() const { return residuals_.size(); }
  std::size_t alphabet_size() const { return std::size_t{1} << aps_.size(); }
  const ApTable& aps() const { return aps_; }
  State initial() const { return 0; }
  bool accepting(State q) const { return accepting_.at(q); }
  const tl::Formula& residual(State q) const { return residuals_.at(q); }
  const std::string& key(State q) const { return keys_.at(q); }
  State next(State q, Valuation v) const { return delta_[q * alphabet_size() + v.bits]; }
  const tl::Formula& formula() const { return formula_; }

  /// δ(q, L(s_next)).
  State step(State q, std::span<const double> s_next) const { return next(q, label(s_next, aps_)); }
  /// Product state after consuming the first state of an episode.
  State reset(std::span<const double> s0) const { return step(initial(), s0); }
  /// Product states after each state of the trace (s_0 consumed first).
  std::vector<State> run(const tl::Trace& trace) const;
  bool accepts(const tl::Trace& trace) const;

 private:
  friend Dfa to_dfa(const tl::Formula&, const DfaLimits&);
  tl::Formula formula_;
  ApTable aps_;
  std::vector<tl::Formula> residuals_;
  std::vector<std::string> keys_;
  std::vector<bool> accepting_;
  std::vector<State> delta_;
};

/// Breadth-first closure under progression from the formula itself.
Dfa to_dfa(const tl::Formula& f, const DfaLimits& limits = {});

/// δ(q, L(s_next)); alias kept for the product-MDP call sites.
inline Dfa::State product_step(const Dfa& dfa, Dfa::State q, std::span<const double> s_next) {
  return dfa.step(q, s_next);
}

/// Graphviz text: one node per residual, edges labelled by valuation bits
/// (bit 0 first), letters with the same target merged onto one edge.
std::string to_dot(const Dfa& dfa, const tl::FeatureTable& features = {});

}  // namespace ilcl::automaton
