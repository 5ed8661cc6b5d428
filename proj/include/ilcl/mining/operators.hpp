#pragma once

#include <cstddef>
#include <optional>
#include <random>
#include <utility>
#include <vector>

#include "ilcl/mining/dataset.hpp"
#include "ilcl/tl/formula.hpp"

namespace ilcl::mining {

using Rng = std::mt19937_64;

/// 2κ' predicates (sign +1 then -1 per selected dimension) under X, F, G, and
/// every ordered pair under U and R: 6κ' + 8κ'² parametric trees, each with
/// its own parameters numbered from p0.
std::vector<tl::Formula> basis_trees(std::size_t kappa, const std::vector<std::size_t>& selected_dims);

/// Draws fresh predicates. With bounds the threshold is uniform in the box of
/// the chosen dimension; without, it is a free parameter.
struct ApSampler {
  std::vector<std::size_t> dims;
  std::vector<Bounds> bounds;  // indexed by dimension, may be empty
  tl::Ap sample(Rng& rng) const;
};

/// Renumber the free parameters of a tree as p0, p1, ... in tree order.
tl::Formula renumber_params(const tl::Formula& f);

/// Simplify, then repair once by wrapping unguarded predicates in G. Returns
/// nothing if the result is still inconsistent, has no predicate, or exceeds
/// max_nodes. `repaired` is set when the repair was needed.
std::optional<tl::Formula> finalize(const tl::Formula& f, std::size_t max_nodes, bool* repaired = nullptr);

/// Start from a uniformly drawn basis tree and keep inserting random
/// operators above random nodes. Before each insertion the process stops with
/// probability p_R; after each insertion it stops once the depth exceeds d_R.
tl::Formula random_tree(const std::vector<tl::Formula>& basis, std::size_t d_R, double p_R,
                        const ApSampler& sampler, Rng& rng);

/// Swap the subtree at pre-order index i of a with the one at j of b.
std::pair<tl::Formula, tl::Formula> crossover_at(const tl::Formula& a, std::size_t i,
                                                 const tl::Formula& b, std::size_t j);
std::pair<tl::Formula, tl::Formula> crossover(const tl::Formula& a, const tl::Formula& b, Rng& rng);

/// Replace the node at `index` by another node of the same class: a fresh
/// predicate for a predicate, a different operator of equal arity otherwise.
tl::Formula replace_node(const tl::Formula& f, std::size_t index, const ApSampler& sampler, Rng& rng);
/// Remove the non-root node at `index` with its descendants. A binary parent
/// collapses to the sibling; a unary parent collapses to the removed node's
/// own subtree, i.e. the operator is dropped.
tl::Formula delete_node(const tl::Formula& f, std::size_t index);
tl::Formula mutation_r(const tl::Formula& f, const ApSampler& sampler, Rng& rng);

/// Insert `op` as the parent of the node at `index`; binary operators take
/// `fresh` as their right operand.
tl::Formula insert_operator(const tl::Formula& f, std::size_t index, tl::Op op, const tl::Ap& fresh);
tl::Formula mutation_a(const tl::Formula& f, const ApSampler& sampler, Rng& rng);

}  // namespace ilcl::mining
