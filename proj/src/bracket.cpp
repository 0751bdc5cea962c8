#include "bramble/bracket.hpp"

#include "bramble/basis.hpp"

namespace bramble {

AlgElem root_label_J(const Forest& f, const Forest& g) {
    auto label = Label::of_forest(g);
    if (!label) return AlgElem();
    Tree root(*label, f.trees());
    return AlgElem::of(Forest::one(root));
}

AlgElem root_label_J(const TensorElem& t) {
    AlgElem out;
    for (const auto& [slots, c] : t.terms())
        out += root_label_J(slots.at(0), slots.at(1)).scaled(c);
    return out;
}

AlgElem bracket_polynomial(const Forest& f) {
    AlgElem out = AlgElem::of(f);
    TensorElem reduced = ck_coproduct(AlgElem::of(f));
    reduced.add({Forest(), f}, -1);
    reduced.add({f, Forest()}, -1);
    out -= root_label_J(reduced);
    return out;
}

AlgElem forest_to_trees(const Forest& f) {
    if (f.is_empty()) return AlgElem();
    return root_label_J(ck_coproduct(AlgElem::of(f)));
}

AlgElem attach_elem(const AlgElem& x, const Forest& g, int v) {
    AlgElem out;
    for (const auto& [f, c] : x.terms()) out.add(attach_at(f, g, v), c);
    return out;
}

std::vector<ConsistencyInstance> consistency_instances(const Alphabet& base,
                                                       int max_degree,
                                                       bool join_labels) {
    Extension ext = join_labels ? Extension::simple : Extension::none;
    std::vector<Label> letters = enumerate_letters(base, ext, max_degree);
    std::vector<Forest> hosts = enumerate_forests(letters, max_degree);

    std::vector<ConsistencyInstance> out;
    for (const Forest& f : hosts) {
        // Bracketed part: proper forests; single letters give (f) = f.
        if (!f.is_proper()) continue;
        if (join_labels && !f.is_single_vertex_product()) continue;
        auto label = Label::of_forest(f);
        if (!label) continue;
        AlgElem poly = bracket_polynomial(f);
        for (const Forest& g : hosts) {
            if (f.degree() + g.degree() > max_degree) continue;
            std::vector<int> targets = {kProductVertex};
            for (int v = 0; v < g.vertex_count(); ++v) targets.push_back(v);
            for (int v : targets) {
                if (g.is_empty() && v != kProductVertex) continue;
                ConsistencyInstance inst;
                inst.f = f;
                inst.g = g;
                inst.vertex = v;
                inst.lhs = AlgElem::of(attach_at(Forest::single(*label), g, v));
                inst.rhs = attach_elem(poly, g, v);
                out.push_back(std::move(inst));
            }
        }
    }
    return out;
}

}  // namespace bramble
