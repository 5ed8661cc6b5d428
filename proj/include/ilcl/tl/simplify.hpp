#pragma once

#include "ilcl/tl/formula.hpp"

namespace ilcl::tl {

/// Rewrites bottom-up to a fixpoint with the rules
///   GG x = G x,  FF x = F x,
///   x & x = x,  x | x = x,  x & true = x,  x | false = x,
///   x & false = false,  x | true = true,  x U x = x,  x R x = x.
/// Each rule is an exact robustness identity, and the node count never grows.
Formula simplify(const Formula& f);

/// True iff every predicate (Ap / NotAp) has at least one temporal ancestor.
bool is_temporally_consistent(const Formula& f);

/// Wraps every predicate that lacks a temporal ancestor in G(...). The result
/// is always temporally consistent.
Formula wrap_unguarded(const Formula& f);

}  // namespace ilcl::tl
