#pragma once

#include <compare>
#include <cstddef>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace ilcl::tl {

struct ParamId {
  int value = 0;
  auto operator<=>(const ParamId&) const = default;
};

using ParamVector = std::map<ParamId, double>;

/// Threshold of an atomic predicate: a fixed value or a free parameter.
using Threshold = std::variant<double, ParamId>;

/// Axis-aligned half-space predicate. sign = +1 reads `s[dim] < threshold`,
/// sign = -1 reads `s[dim] > threshold`.
struct Ap {
  std::size_t dim = 0;
  int sign = +1;
  Threshold threshold = 0.0;

  bool is_param() const { return std::holds_alternative<ParamId>(threshold); }
  double value() const;  // throws if parametric
  bool operator==(const Ap&) const = default;
};

enum class Op {
  True,
  False,
  Ap,
  NotAp,
  And,
  Or,
  Next,
  Eventually,
  Always,
  Until,
  Release,
};

int arity(Op op);
bool is_temporal(Op op);
bool is_unary(Op op);
bool is_binary(Op op);

class FormulaError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Node;

/// Immutable (p)TLTL syntax tree in positive normal form. Copies share
/// structure; every mutation helper returns a new tree.
class Formula {
 public:
  Formula();  // True

  static Formula top();
  static Formula bottom();
  static Formula ap(const Ap& a);
  static Formula not_ap(const Ap& a);
  static Formula conj(Formula l, Formula r);
  static Formula disj(Formula l, Formula r);
  static Formula next(Formula f);
  static Formula eventually(Formula f);
  static Formula always(Formula f);
  static Formula until(Formula l, Formula r);
  static Formula release(Formula l, Formula r);
  static Formula unary(Op op, Formula f);
  static Formula binary(Op op, Formula l, Formula r);

  Op op() const;
  /// Valid only for Ap / NotAp nodes.
  const Ap& ap() const;
  /// First child (the only child for unary operators).
  const Formula& lhs() const;
  const Formula& rhs() const;
  const Formula& child() const { return lhs(); }

  bool is_leaf() const { return arity(op()) == 0; }
  bool operator==(const Formula& other) const;

  /// Identity of the shared node; equal ids imply structural equality.
  const void* id() const { return node_.get(); }

 private:
  explicit Formula(std::shared_ptr<const Node> n) : node_(std::move(n)) {}
  std::shared_ptr<const Node> node_;
};

struct Node {
  Op op = Op::True;
  Ap ap{};
  Formula lhs;
  Formula rhs;
};

std::size_t node_count(const Formula& f);
/// Depth in edges; a single node has depth 0.
std::size_t depth(const Formula& f);
bool is_concrete(const Formula& f);

/// Parameter ids in left-to-right tree order.
std::vector<ParamId> collect_params(const Formula& f);

/// Substitute every parameter. θ must cover exactly collect_params(f).
Formula instantiate(const Formula& f, const ParamVector& theta);

/// Replace every threshold with a fresh parameter p0, p1, ... in tree order.
/// Returns the skeleton together with the previous threshold values (a
/// parameter that was already free maps to 0.0).
std::pair<Formula, ParamVector> abstract_thresholds(const Formula& f);

/// Distinct dimensions referenced by APs, ascending.
std::vector<std::size_t> referenced_dims(const Formula& f);

/// Pre-order traversal helpers used by the genetic operators. Index 0 is the
/// root.
const Formula& subtree_at(const Formula& f, std::size_t index);
Formula replace_subtree(const Formula& f, std::size_t index, const Formula& replacement);

struct NodeInfo {
  std::size_t index = 0;
  std::size_t depth = 0;
  std::optional<std::size_t> parent;
  Op op = Op::True;
};
std::vector<NodeInfo> enumerate_nodes(const Formula& f);

/// Visit every node in pre-order.
void for_each_node(const Formula& f, const std::function<void(const Formula&)>& fn);

}  // namespace ilcl::tl
