#pragma once

#include "bramble/alg.hpp"

namespace bramble {

/// Root labelling: f (x) g -> [f]_(g), zero when g is empty or a tree with
/// more than one vertex.
AlgElem root_label_J(const Forest& f, const Forest& g);
AlgElem root_label_J(const TensorElem& t);

/// <<f>> = f - J(reduced cut coproduct of f). Primitive in the enlarged cut
/// bialgebra.
AlgElem bracket_polynomial(const Forest& f);

/// J applied to the unreduced coproduct, with [{}]_(g) = single vertex (g).
/// Expresses a forest evaluation through tree evaluations; a tree maps to
/// itself and the empty forest to zero.
AlgElem forest_to_trees(const Forest& f);

/// One instance of the extension relations: the vertex-attached pair whose
/// evaluations must agree.
struct ConsistencyInstance {
    Forest f;           ///< the bracketed forest
    Forest g;           ///< the host forest
    int vertex;         ///< post-order vertex of g, or kProductVertex
    AlgElem lhs;        ///< single vertex (f) attached at the host vertex
    AlgElem rhs;        ///< <<f>> attached at the host vertex
};

/// All instances with deg f + deg g <= max_degree, f a proper forest of the
/// base alphabet (single letters are trivial). When `join_labels` is set the
/// multiset label (f) is formed by joining the members' labels, as for
/// rough paths on the multiset alphabet.
std::vector<ConsistencyInstance> consistency_instances(const Alphabet& base,
                                                       int max_degree,
                                                       bool join_labels = false);

/// Attaches every term of x at vertex v of g.
AlgElem attach_elem(const AlgElem& x, const Forest& g, int v);

}  // namespace bramble
