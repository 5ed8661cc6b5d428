#include "ilcl/tl/formula.hpp"

#include <algorithm>
#include <set>

namespace ilcl::tl {

double Ap::value() const {
  if (const auto* v = std::get_if<double>(&threshold)) return *v;
  throw FormulaError("predicate threshold is a free parameter");
}

int arity(Op op) {
  switch (op) {
    case Op::True:
    case Op::False:
    case Op::Ap:
    case Op::NotAp:
      return 0;
    case Op::Next:
    case Op::Eventually:
    case Op::Always:
      return 1;
    case Op::And:
    case Op::Or:
    case Op::Until:
    case Op::Release:
      return 2;
  }
  return 0;
}

bool is_temporal(Op op) {
  return op == Op::Next || op == Op::Eventually || op == Op::Always || op == Op::Until ||
         op == Op::Release;
}

bool is_unary(Op op) { return arity(op) == 1; }
bool is_binary(Op op) { return arity(op) == 2; }

namespace {

const std::shared_ptr<const Node>& true_node() {
  static const auto n = std::make_shared<const Node>(Node{Op::True, {}, {}, {}});
  return n;
}

}  // namespace

// A default-constructed formula is True without a backing node, so the child
// slots inside Node never allocate.
Formula::Formula() : node_(nullptr) {}

Formula Formula::top() { return Formula(true_node()); }
Formula Formula::bottom() {
  static const auto n = std::make_shared<const Node>(Node{Op::False, {}, {}, {}});
  return Formula(n);
}

Formula Formula::ap(const Ap& a) {
  if (a.sign != 1 && a.sign != -1) throw FormulaError("predicate sign must be +1 or -1");
  return Formula(std::make_shared<const Node>(Node{Op::Ap, a, {}, {}}));
}

Formula Formula::not_ap(const Ap& a) {
  if (a.sign != 1 && a.sign != -1) throw FormulaError("predicate sign must be +1 or -1");
  return Formula(std::make_shared<const Node>(Node{Op::NotAp, a, {}, {}}));
}

Formula Formula::unary(Op op, Formula f) {
  if (!is_unary(op)) throw FormulaError("operator is not unary");
  return Formula(std::make_shared<const Node>(Node{op, {}, std::move(f), {}}));
}

Formula Formula::binary(Op op, Formula l, Formula r) {
  if (!is_binary(op)) throw FormulaError("operator is not binary");
  return Formula(std::make_shared<const Node>(Node{op, {}, std::move(l), std::move(r)}));
}

Formula Formula::conj(Formula l, Formula r) { return binary(Op::And, std::move(l), std::move(r)); }
Formula Formula::disj(Formula l, Formula r) { return binary(Op::Or, std::move(l), std::move(r)); }
Formula Formula::next(Formula f) { return unary(Op::Next, std::move(f)); }
Formula Formula::eventually(Formula f) { return unary(Op::Eventually, std::move(f)); }
Formula Formula::always(Formula f) { return unary(Op::Always, std::move(f)); }
Formula Formula::until(Formula l, Formula r) { return binary(Op::Until, std::move(l), std::move(r)); }
Formula Formula::release(Formula l, Formula r) {
  return binary(Op::Release, std::move(l), std::move(r));
}

Op Formula::op() const { return node_ ? node_->op : Op::True; }

const Ap& Formula::ap() const {
  if (op() != Op::Ap && op() != Op::NotAp) throw FormulaError("node is not a predicate");
  return node_->ap;
}

const Formula& Formula::lhs() const {
  if (arity(op()) < 1) throw FormulaError("leaf node has no children");
  return node_->lhs;
}

const Formula& Formula::rhs() const {
  if (arity(op()) < 2) throw FormulaError("node has no right child");
  return node_->rhs;
}

bool Formula::operator==(const Formula& other) const {
  if (id() == other.id()) return true;
  if (op() != other.op()) return false;
  switch (arity(op())) {
    case 0:
      return (op() != Op::Ap && op() != Op::NotAp) || ap() == other.ap();
    case 1:
      return lhs() == other.lhs();
    default:
      return lhs() == other.lhs() && rhs() == other.rhs();
  }
}

void for_each_node(const Formula& f, const std::function<void(const Formula&)>& fn) {
  fn(f);
  const int n = arity(f.op());
  if (n >= 1) for_each_node(f.lhs(), fn);
  if (n == 2) for_each_node(f.rhs(), fn);
}

std::size_t node_count(const Formula& f) {
  switch (arity(f.op())) {
    case 0:
      return 1;
    case 1:
      return 1 + node_count(f.lhs());
    default:
      return 1 + node_count(f.lhs()) + node_count(f.rhs());
  }
}

std::size_t depth(const Formula& f) {
  switch (arity(f.op())) {
    case 0:
      return 0;
    case 1:
      return 1 + depth(f.lhs());
    default:
      return 1 + std::max(depth(f.lhs()), depth(f.rhs()));
  }
}

bool is_concrete(const Formula& f) {
  bool concrete = true;
  for_each_node(f, [&](const Formula& n) {
    if ((n.op() == Op::Ap || n.op() == Op::NotAp) && n.ap().is_param()) concrete = false;
  });
  return concrete;
}

std::vector<ParamId> collect_params(const Formula& f) {
  std::vector<ParamId> out;
  for_each_node(f, [&](const Formula& n) {
    if ((n.op() == Op::Ap || n.op() == Op::NotAp) && n.ap().is_param())
      out.push_back(std::get<ParamId>(n.ap().threshold));
  });
  return out;
}

namespace {

template <typename LeafFn>
Formula map_leaves(const Formula& f, LeafFn&& fn) {
  switch (arity(f.op())) {
    case 0:
      return fn(f);
    case 1: {
      Formula c = map_leaves(f.lhs(), fn);
      if (c.id() == f.lhs().id()) return f;
      return Formula::unary(f.op(), std::move(c));
    }
    default: {
      Formula l = map_leaves(f.lhs(), fn);
      Formula r = map_leaves(f.rhs(), fn);
      if (l.id() == f.lhs().id() && r.id() == f.rhs().id()) return f;
      return Formula::binary(f.op(), std::move(l), std::move(r));
    }
  }
}

Formula with_threshold(const Formula& leaf, Threshold th) {
  Ap a = leaf.ap();
  a.threshold = th;
  return leaf.op() == Op::Ap ? Formula::ap(a) : Formula::not_ap(a);
}

}  // namespace

Formula instantiate(const Formula& f, const ParamVector& theta) {
  const auto params = collect_params(f);
  std::set<ParamId> wanted(params.begin(), params.end());
  if (wanted.size() != params.size()) throw FormulaError("duplicate parameter ids in formula");
  if (wanted.size() != theta.size()) throw FormulaError("parameter vector does not match formula");
  for (const auto& id : wanted)
    if (!theta.contains(id))
      throw FormulaError("missing value for parameter ?p" + std::to_string(id.value));
  return map_leaves(f, [&](const Formula& leaf) -> Formula {
    if ((leaf.op() == Op::Ap || leaf.op() == Op::NotAp) && leaf.ap().is_param())
      return with_threshold(leaf, theta.at(std::get<ParamId>(leaf.ap().threshold)));
    return leaf;
  });
}

std::pair<Formula, ParamVector> abstract_thresholds(const Formula& f) {
  ParamVector values;
  int next = 0;
  Formula skel = map_leaves(f, [&](const Formula& leaf) -> Formula {
    if (leaf.op() != Op::Ap && leaf.op() != Op::NotAp) return leaf;
    const ParamId id{next++};
    const auto* v = std::get_if<double>(&leaf.ap().threshold);
    values[id] = v ? *v : 0.0;
    return with_threshold(leaf, id);
  });
  return {skel, values};
}

std::vector<std::size_t> referenced_dims(const Formula& f) {
  std::set<std::size_t> dims;
  for_each_node(f, [&](const Formula& n) {
    if (n.op() == Op::Ap || n.op() == Op::NotAp) dims.insert(n.ap().dim);
  });
  return {dims.begin(), dims.end()};
}

namespace {

const Formula* find_at(const Formula& f, std::size_t& remaining) {
  if (remaining == 0) return &f;
  --remaining;
  const int n = arity(f.op());
  if (n >= 1)
    if (const Formula* hit = find_at(f.lhs(), remaining)) return hit;
  if (n == 2)
    if (const Formula* hit = find_at(f.rhs(), remaining)) return hit;
  return nullptr;
}

std::optional<Formula> replace_at(const Formula& f, std::size_t& remaining, const Formula& repl) {
  if (remaining == 0) return repl;
  --remaining;
  const int n = arity(f.op());
  if (n >= 1) {
    if (auto l = replace_at(f.lhs(), remaining, repl)) {
      return n == 1 ? Formula::unary(f.op(), *l) : Formula::binary(f.op(), *l, f.rhs());
    }
  }
  if (n == 2) {
    if (auto r = replace_at(f.rhs(), remaining, repl)) return Formula::binary(f.op(), f.lhs(), *r);
  }
  return std::nullopt;
}

void enumerate(const Formula& f, std::size_t d, std::optional<std::size_t> parent,
               std::vector<NodeInfo>& out) {
  const std::size_t me = out.size();
  out.push_back({me, d, parent, f.op()});
  const int n = arity(f.op());
  if (n >= 1) enumerate(f.lhs(), d + 1, me, out);
  if (n == 2) enumerate(f.rhs(), d + 1, me, out);
}

}  // namespace

const Formula& subtree_at(const Formula& f, std::size_t index) {
  std::size_t remaining = index;
  const Formula* hit = find_at(f, remaining);
  if (!hit) throw FormulaError("node index out of range");
  return *hit;
}

Formula replace_subtree(const Formula& f, std::size_t index, const Formula& replacement) {
  std::size_t remaining = index;
  auto out = replace_at(f, remaining, replacement);
  if (!out) throw FormulaError("node index out of range");
  return *out;
}

std::vector<NodeInfo> enumerate_nodes(const Formula& f) {
  std::vector<NodeInfo> out;
  enumerate(f, 0, std::nullopt, out);
  return out;
}

}  // namespace ilcl::tl
