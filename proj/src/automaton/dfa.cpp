#include "ilcl/automaton/dfa.hpp"

#include <algorithm>
#include <deque>
#include <iterator>
#include <map>
#include <sstream>
#include <unordered_map>

#include "ilcl/tl/simplify.hpp"

namespace ilcl::automaton {

using tl::Formula;
using tl::Op;

ApTable::ApTable(const Formula& f) {
  if (!tl::is_concrete(f)) throw DfaError("automaton construction requires a concrete formula");
  tl::for_each_node(f, [&](const Formula& n) {
    if (n.op() != Op::Ap && n.op() != Op::NotAp) return;
    if (std::find(aps_.begin(), aps_.end(), n.ap()) == aps_.end()) aps_.push_back(n.ap());
  });
}

std::size_t ApTable::index_of(const tl::Ap& ap) const {
  const auto it = std::find(aps_.begin(), aps_.end(), ap);
  if (it == aps_.end()) throw DfaError("predicate not in table");
  return static_cast<std::size_t>(it - aps_.begin());
}

Valuation label(std::span<const double> state, const ApTable& aps) {
  Valuation v;
  for (std::size_t i = 0; i < aps.size(); ++i) {
    const tl::Ap& a = aps.aps()[i];
    if (a.dim >= state.size()) throw DfaError("predicate dimension outside state vector");
    const double th = a.value();
    const bool holds = a.sign > 0 ? state[a.dim] < th : state[a.dim] > th;
    if (holds) v.bits |= (1u << i);
  }
  return v;
}

namespace {

using Cube = std::vector<std::string>;

// Boolean combination of atoms (non-&/| formulas) in disjunctive normal form,
// kept minimal under absorption. Atoms are keyed by their canonical text.
struct Dnf {
  std::vector<Cube> cubes;
};

Formula canon_rec(const Formula& f, std::map<std::string, Formula>& atoms);

bool contradictory(const Cube& c, const std::map<std::string, Formula>& atoms) {
  for (const auto& k : c) {
    const Formula& a = atoms.at(k);
    if (a.op() != Op::NotAp) continue;
    for (const auto& j : c) {
      const Formula& b = atoms.at(j);
      if (b.op() == Op::Ap && b.ap() == a.ap()) return true;
    }
  }
  return false;
}

void minimize(Dnf& d, const std::map<std::string, Formula>& atoms) {
  auto& cs = d.cubes;
  std::erase_if(cs, [&](const Cube& c) { return contradictory(c, atoms); });
  std::sort(cs.begin(), cs.end(), [](const Cube& a, const Cube& b) {
    return a.size() != b.size() ? a.size() < b.size() : a < b;
  });
  cs.erase(std::unique(cs.begin(), cs.end()), cs.end());
  std::vector<Cube> kept;
  for (auto& c : cs) {
    const bool absorbed = std::any_of(kept.begin(), kept.end(), [&](const Cube& k) {
      return std::includes(c.begin(), c.end(), k.begin(), k.end());
    });
    if (!absorbed) kept.push_back(std::move(c));
  }
  std::sort(kept.begin(), kept.end());
  cs = std::move(kept);
}

Dnf to_dnf(const Formula& f, std::map<std::string, Formula>& atoms) {
  switch (f.op()) {
    case Op::True:
      return Dnf{{Cube{}}};
    case Op::False:
      return Dnf{};
    case Op::Or: {
      Dnf l = to_dnf(f.lhs(), atoms);
      Dnf r = to_dnf(f.rhs(), atoms);
      l.cubes.insert(l.cubes.end(), r.cubes.begin(), r.cubes.end());
      minimize(l, atoms);
      return l;
    }
    case Op::And: {
      const Dnf l = to_dnf(f.lhs(), atoms);
      const Dnf r = to_dnf(f.rhs(), atoms);
      Dnf out;
      for (const auto& a : l.cubes) {
        for (const auto& b : r.cubes) {
          Cube c;
          std::set_union(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(c));
          out.cubes.push_back(std::move(c));
        }
      }
      minimize(out, atoms);
      return out;
    }
    default: {
      Formula c = canon_rec(f, atoms);
      if (c.op() == Op::True || c.op() == Op::False || c.op() == Op::And || c.op() == Op::Or)
        return to_dnf(c, atoms);
      std::string key = tl::format_formula(c);
      atoms.emplace(key, c);
      return Dnf{{Cube{std::move(key)}}};
    }
  }
}

Formula from_dnf(const Dnf& d, const std::map<std::string, Formula>& atoms) {
  if (d.cubes.empty()) return Formula::bottom();
  Formula acc;
  bool first = true;
  for (const auto& cube : d.cubes) {
    Formula term = Formula::top();
    for (std::size_t i = 0; i < cube.size(); ++i)
      term = i == 0 ? atoms.at(cube[i]) : Formula::conj(term, atoms.at(cube[i]));
    acc = first ? term : Formula::disj(acc, term);
    first = false;
  }
  return acc;
}

Formula canon_rec(const Formula& f, std::map<std::string, Formula>& atoms) {
  switch (f.op()) {
    case Op::True:
    case Op::False:
    case Op::Ap:
    case Op::NotAp:
      return f;
    case Op::Next:
    case Op::Eventually:
    case Op::Always: {
      Formula c = canon_rec(f.child(), atoms);
      if (c.op() == f.op() && f.op() != Op::Next) return c;
      return Formula::unary(f.op(), c);
    }
    case Op::Until:
    case Op::Release: {
      Formula l = canon_rec(f.lhs(), atoms);
      Formula r = canon_rec(f.rhs(), atoms);
      if (l == r) return l;
      return Formula::binary(f.op(), l, r);
    }
    case Op::And:
    case Op::Or:
      return from_dnf(to_dnf(f, atoms), atoms);
  }
  return f;
}

Formula progress_raw(const Formula& f, Valuation v, const ApTable& aps) {
  switch (f.op()) {
    case Op::True:
    case Op::False:
      return f;
    case Op::Ap:
      return v.test(aps.index_of(f.ap())) ? Formula::top() : Formula::bottom();
    case Op::NotAp:
      return v.test(aps.index_of(f.ap())) ? Formula::bottom() : Formula::top();
    case Op::And:
      return Formula::conj(progress_raw(f.lhs(), v, aps), progress_raw(f.rhs(), v, aps));
    case Op::Or:
      return Formula::disj(progress_raw(f.lhs(), v, aps), progress_raw(f.rhs(), v, aps));
    case Op::Next:
      // The obligation moves to the next letter, which must exist: F(true)
      // rejects the empty suffix and progresses to true on any letter.
      return Formula::conj(f.child(), Formula::eventually(Formula::top()));
    case Op::Eventually:
      return Formula::disj(progress_raw(f.child(), v, aps), f);
    case Op::Always:
      return Formula::conj(progress_raw(f.child(), v, aps), f);
    case Op::Until:
      return Formula::disj(progress_raw(f.rhs(), v, aps),
                           Formula::conj(progress_raw(f.lhs(), v, aps), f));
    case Op::Release:
      return Formula::conj(progress_raw(f.rhs(), v, aps),
                           Formula::disj(progress_raw(f.lhs(), v, aps), f));
  }
  return f;
}

}  // namespace

Formula canonicalize(const Formula& f) {
  std::map<std::string, Formula> atoms;
  return canon_rec(tl::simplify(f), atoms);
}

std::string canonical_key(const Formula& f) { return tl::format_formula(canonicalize(f)); }

Formula progress(const Formula& f, Valuation v, const ApTable& aps) {
  if (!tl::is_concrete(f)) throw DfaError("progression requires a concrete formula");
  return canonicalize(progress_raw(f, v, aps));
}

bool empty_accepts(const Formula& f) {
  switch (f.op()) {
    case Op::True:
    case Op::Always:
    case Op::Release:
      return true;
    case Op::False:
    case Op::Ap:
    case Op::NotAp:
    case Op::Next:
    case Op::Eventually:
    case Op::Until:
      return false;
    case Op::And:
      return empty_accepts(f.lhs()) && empty_accepts(f.rhs());
    case Op::Or:
      return empty_accepts(f.lhs()) || empty_accepts(f.rhs());
  }
  return false;
}

Dfa to_dfa(const Formula& f, const DfaLimits& limits) {
  Dfa dfa;
  dfa.formula_ = f;
  dfa.aps_ = ApTable(f);
  if (dfa.aps_.size() > limits.max_aps)
    throw DfaError("formula has " + std::to_string(dfa.aps_.size()) + " predicates, cap is " +
                   std::to_string(limits.max_aps));
  const std::size_t letters = dfa.alphabet_size();

  std::unordered_map<std::string, std::size_t> index;
  std::deque<std::size_t> frontier;
  auto intern = [&](const Formula& r) -> std::size_t {
    std::string key = tl::format_formula(r);
    if (auto it = index.find(key); it != index.end()) return it->second;
    if (dfa.residuals_.size() >= limits.max_states)
      throw DfaError("automaton exceeds " + std::to_string(limits.max_states) + " states");
    const std::size_t id = dfa.residuals_.size();
    index.emplace(key, id);
    dfa.residuals_.push_back(r);
    dfa.keys_.push_back(std::move(key));
    dfa.accepting_.push_back(empty_accepts(r));
    dfa.delta_.resize(dfa.residuals_.size() * letters);
    frontier.push_back(id);
    return id;
  };

  intern(canonicalize(f));
  while (!frontier.empty()) {
    const std::size_t q = frontier.front();
    frontier.pop_front();
    const Formula r = dfa.residuals_[q];
    for (std::uint32_t bits = 0; bits < letters; ++bits) {
      const std::size_t target = intern(progress(r, Valuation{bits}, dfa.aps_));
      dfa.delta_[q * letters + bits] = target;
    }
  }
  return dfa;
}

std::vector<Dfa::State> Dfa::run(const tl::Trace& trace) const {
  std::vector<State> out;
  out.reserve(trace.length());
  State q = initial();
  for (std::size_t t = 0; t < trace.length(); ++t) {
    q = step(q, trace.state(t));
    out.push_back(q);
  }
  return out;
}

bool Dfa::accepts(const tl::Trace& trace) const {
  const auto states = run(trace);
  return accepting(states.empty() ? initial() : states.back());
}

std::string to_dot(const Dfa& dfa, const tl::FeatureTable& features) {
  std::ostringstream os;
  os << "digraph dfa {\n  rankdir=LR;\n  init [shape=point];\n";
  for (std::size_t q = 0; q < dfa.state_count(); ++q) {
    std::string text = tl::format_formula(dfa.residual(q), features);
    std::string escaped;
    for (char c : text) {
      if (c == '"' || c == '\\') escaped += '\\';
      escaped += c;
    }
    os << "  q" << q << " [label=\"" << escaped << "\", shape="
       << (dfa.accepting(q) ? "doublecircle" : "circle") << "];\n";
  }
  os << "  init -> q" << dfa.initial() << ";\n";
  const std::size_t width = dfa.aps().size();
  for (std::size_t q = 0; q < dfa.state_count(); ++q) {
    std::map<std::size_t, std::vector<std::string>> by_target;
    for (std::uint32_t bits = 0; bits < dfa.alphabet_size(); ++bits) {
      std::string word;
      for (std::size_t i = 0; i < width; ++i) word += ((bits >> i) & 1u) ? '1' : '0';
      if (word.empty()) word = "-";
      by_target[dfa.next(q, Valuation{bits})].push_back(word);
    }
    for (const auto& [target, words] : by_target) {
      os << "  q" << q << " -> q" << target << " [label=\"";
      for (std::size_t i = 0; i < words.size(); ++i) os << (i ? "," : "") << words[i];
      os << "\"];\n";
    }
  }
  os << "}\n";
  return os.str();
}

}  // namespace ilcl::automaton
