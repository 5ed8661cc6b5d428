#include "ilcl/tl/simplify.hpp"

namespace ilcl::tl {

namespace {

Formula rewrite_node(Op op, const Formula& l, const Formula& r) {
  switch (op) {
    case Op::Always:
      if (l.op() == Op::Always) return l;
      return Formula::always(l);
    case Op::Eventually:
      if (l.op() == Op::Eventually) return l;
      return Formula::eventually(l);
    case Op::Next:
      return Formula::next(l);
    case Op::And:
      if (l.op() == Op::False || r.op() == Op::False) return Formula::bottom();
      if (l.op() == Op::True) return r;
      if (r.op() == Op::True) return l;
      if (l == r) return l;
      return Formula::conj(l, r);
    case Op::Or:
      if (l.op() == Op::True || r.op() == Op::True) return Formula::top();
      if (l.op() == Op::False) return r;
      if (r.op() == Op::False) return l;
      if (l == r) return l;
      return Formula::disj(l, r);
    case Op::Until:
      if (l == r) return l;
      return Formula::until(l, r);
    case Op::Release:
      if (l == r) return l;
      return Formula::release(l, r);
    default:
      break;
  }
  throw FormulaError("rewrite_node called on a leaf");
}

// One bottom-up pass. Children are simplified first, so a single pass reaches
// the fixpoint: every rule either returns an already-simplified child or
// builds a node whose children are in normal form and match no rule.
Formula simplify_rec(const Formula& f) {
  switch (arity(f.op())) {
    case 0:
      return f;
    case 1: {
      Formula c = simplify_rec(f.child());
      if (c.id() == f.child().id() && !(f.op() == Op::Always && c.op() == Op::Always) &&
          !(f.op() == Op::Eventually && c.op() == Op::Eventually))
        return f;
      return rewrite_node(f.op(), c, {});
    }
    default: {
      Formula l = simplify_rec(f.lhs());
      Formula r = simplify_rec(f.rhs());
      return rewrite_node(f.op(), l, r);
    }
  }
}

bool consistent_below(const Formula& f, bool guarded) {
  switch (f.op()) {
    case Op::Ap:
    case Op::NotAp:
      return guarded;
    case Op::True:
    case Op::False:
      return true;
    default: {
      const bool g = guarded || is_temporal(f.op());
      if (!consistent_below(f.lhs(), g)) return false;
      return !is_binary(f.op()) || consistent_below(f.rhs(), g);
    }
  }
}

Formula wrap_rec(const Formula& f, bool guarded) {
  switch (f.op()) {
    case Op::Ap:
    case Op::NotAp:
      return guarded ? f : Formula::always(f);
    case Op::True:
    case Op::False:
      return f;
    default: {
      const bool g = guarded || is_temporal(f.op());
      if (is_unary(f.op())) return Formula::unary(f.op(), wrap_rec(f.child(), g));
      return Formula::binary(f.op(), wrap_rec(f.lhs(), g), wrap_rec(f.rhs(), g));
    }
  }
}

}  // namespace

Formula simplify(const Formula& f) {
  Formula cur = simplify_rec(f);
  // The single pass is a fixpoint already; the loop guards that claim.
  for (;;) {
    Formula next = simplify_rec(cur);
    if (next == cur) return next;
    cur = next;
  }
}

bool is_temporally_consistent(const Formula& f) { return consistent_below(f, false); }

Formula wrap_unguarded(const Formula& f) {
  if (is_temporally_consistent(f)) return f;
  return wrap_rec(f, false);
}

}  // namespace ilcl::tl
