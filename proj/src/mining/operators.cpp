#include "ilcl/mining/operators.hpp"

#include <array>

#include "ilcl/tl/simplify.hpp"

namespace ilcl::mining {

using tl::Formula;
using tl::Op;

namespace {

constexpr std::array<Op, 3> kUnary{Op::Next, Op::Eventually, Op::Always};
constexpr std::array<Op, 4> kBinary{Op::And, Op::Or, Op::Until, Op::Release};
constexpr std::array<Op, 7> kInsertable{Op::Next, Op::Eventually, Op::Always, Op::And,
                                        Op::Or,   Op::Until,      Op::Release};

std::size_t uniform_index(Rng& rng, std::size_t n) {
  return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
}

Formula renumber_rec(const Formula& f, int& next) {
  switch (f.op()) {
    case Op::Ap:
    case Op::NotAp: {
      if (!f.ap().is_param()) return f;
      tl::Ap a = f.ap();
      a.threshold = tl::ParamId{next++};
      return f.op() == Op::Ap ? Formula::ap(a) : Formula::not_ap(a);
    }
    case Op::True:
    case Op::False:
      return f;
    default:
      break;
  }
  if (tl::is_unary(f.op())) return Formula::unary(f.op(), renumber_rec(f.child(), next));
  Formula l = renumber_rec(f.lhs(), next);
  Formula r = renumber_rec(f.rhs(), next);
  return Formula::binary(f.op(), l, r);
}

}  // namespace

std::vector<Formula> basis_trees(std::size_t kappa, const std::vector<std::size_t>& selected_dims) {
  if (selected_dims.empty()) throw MiningError("basis needs at least one selected dimension");
  std::vector<tl::Ap> aps;
  for (std::size_t d : selected_dims) {
    if (d >= kappa) throw MiningError("selected dimension " + std::to_string(d) + " out of range");
    for (int sign : {+1, -1}) aps.push_back(tl::Ap{d, sign, tl::ParamId{0}});
  }
  std::vector<Formula> out;
  out.reserve(6 * selected_dims.size() + 8 * selected_dims.size() * selected_dims.size());
  for (Op op : kUnary)
    for (const auto& a : aps) out.push_back(Formula::unary(op, Formula::ap(a)));
  for (Op op : {Op::Until, Op::Release}) {
    for (const auto& a : aps) {
      for (tl::Ap b : aps) {
        b.threshold = tl::ParamId{1};
        out.push_back(Formula::binary(op, Formula::ap(a), Formula::ap(b)));
      }
    }
  }
  return out;
}

tl::Ap ApSampler::sample(Rng& rng) const {
  if (dims.empty()) throw MiningError("predicate sampler has no dimensions");
  tl::Ap a;
  a.dim = dims[uniform_index(rng, dims.size())];
  a.sign = std::bernoulli_distribution(0.5)(rng) ? +1 : -1;
  if (a.dim < bounds.size()) {
    const Bounds& b = bounds[a.dim];
    a.threshold = std::uniform_real_distribution<double>(b.lo, b.hi)(rng);
  } else {
    a.threshold = tl::ParamId{0};
  }
  return a;
}

Formula renumber_params(const Formula& f) {
  int next = 0;
  return renumber_rec(f, next);
}

std::optional<Formula> finalize(const Formula& f, std::size_t max_nodes, bool* repaired) {
  if (repaired) *repaired = false;
  Formula s = tl::simplify(f);
  if (!tl::is_temporally_consistent(s)) {
    s = tl::simplify(tl::wrap_unguarded(s));
    if (repaired) *repaired = true;
    if (!tl::is_temporally_consistent(s)) return std::nullopt;
  }
  bool has_ap = false;
  tl::for_each_node(s, [&](const Formula& n) {
    if (n.op() == Op::Ap || n.op() == Op::NotAp) has_ap = true;
  });
  if (!has_ap || tl::node_count(s) > max_nodes) return std::nullopt;
  return s;
}

Formula random_tree(const std::vector<Formula>& basis, std::size_t d_R, double p_R,
                    const ApSampler& sampler, Rng& rng) {
  if (basis.empty()) throw MiningError("random_tree needs a non-empty basis");
  Formula f = basis[uniform_index(rng, basis.size())];
  std::bernoulli_distribution stop(p_R);
  while (!stop(rng)) {
    const std::size_t index = uniform_index(rng, tl::node_count(f));
    const Op op = kInsertable[uniform_index(rng, kInsertable.size())];
    f = insert_operator(f, index, op, sampler.sample(rng));
    // Judge depth on the repaired tree so the G added by repair counts too.
    if (tl::depth(tl::wrap_unguarded(f)) > d_R) break;
  }
  Formula out = tl::simplify(tl::wrap_unguarded(tl::simplify(f)));
  return renumber_params(out);
}

std::pair<Formula, Formula> crossover_at(const Formula& a, std::size_t i, const Formula& b, std::size_t j) {
  const Formula sa = tl::subtree_at(a, i);
  const Formula sb = tl::subtree_at(b, j);
  return {tl::replace_subtree(a, i, sb), tl::replace_subtree(b, j, sa)};
}

std::pair<Formula, Formula> crossover(const Formula& a, const Formula& b, Rng& rng) {
  const std::size_t i = uniform_index(rng, tl::node_count(a));
  const std::size_t j = uniform_index(rng, tl::node_count(b));
  return crossover_at(a, i, b, j);
}

Formula replace_node(const Formula& f, std::size_t index, const ApSampler& sampler, Rng& rng) {
  const Formula& n = tl::subtree_at(f, index);
  Formula repl;
  switch (n.op()) {
    case Op::True:
      repl = Formula::bottom();
      break;
    case Op::False:
      repl = Formula::top();
      break;
    case Op::Ap:
      repl = Formula::ap(sampler.sample(rng));
      break;
    case Op::NotAp:
      repl = Formula::not_ap(sampler.sample(rng));
      break;
    default:
      if (tl::is_unary(n.op())) {
        Op op = n.op();
        while (op == n.op()) op = kUnary[uniform_index(rng, kUnary.size())];
        repl = Formula::unary(op, n.child());
      } else {
        Op op = n.op();
        while (op == n.op()) op = kBinary[uniform_index(rng, kBinary.size())];
        repl = Formula::binary(op, n.lhs(), n.rhs());
      }
  }
  return tl::replace_subtree(f, index, repl);
}

Formula delete_node(const Formula& f, std::size_t index) {
  const auto nodes = tl::enumerate_nodes(f);
  if (index == 0 || index >= nodes.size()) throw MiningError("delete_node needs a non-root index");
  const std::size_t parent = *nodes[index].parent;
  const Formula& p = tl::subtree_at(f, parent);
  if (tl::is_unary(p.op())) return tl::replace_subtree(f, parent, p.child());
  // The left child immediately follows the parent in pre-order.
  const bool is_left = index == parent + 1;
  return tl::replace_subtree(f, parent, is_left ? p.rhs() : p.lhs());
}

Formula mutation_r(const Formula& f, const ApSampler& sampler, Rng& rng) {
  const std::size_t n = tl::node_count(f);
  if (n > 1 && std::bernoulli_distribution(0.5)(rng)) return delete_node(f, 1 + uniform_index(rng, n - 1));
  return replace_node(f, uniform_index(rng, n), sampler, rng);
}

Formula insert_operator(const Formula& f, std::size_t index, Op op, const tl::Ap& fresh) {
  const Formula& n = tl::subtree_at(f, index);
  Formula repl = tl::is_unary(op) ? Formula::unary(op, n) : Formula::binary(op, n, Formula::ap(fresh));
  return tl::replace_subtree(f, index, repl);
}

Formula mutation_a(const Formula& f, const ApSampler& sampler, Rng& rng) {
  const std::size_t index = uniform_index(rng, tl::node_count(f));
  const Op op = kInsertable[uniform_index(rng, kInsertable.size())];
  return insert_operator(f, index, op, sampler.sample(rng));
}

}  // namespace ilcl::mining
