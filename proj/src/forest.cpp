#include "bramble/forest.hpp"

#include <algorithm>
#include <stdexcept>

namespace bramble {

int compare(const Atom& a, const Atom& b) {
    if (a.id != b.id) return a.id < b.id ? -1 : 1;
    if (a.weight != b.weight) return a.weight < b.weight ? -1 : 1;
    return 0;
}

int Alphabet::find(const std::string& name) const {
    for (int i = 0; i < size(); ++i)
        if (names[i] == name) return i;
    return -1;
}

Alphabet Alphabet::numeric(int d) {
    Alphabet a;
    for (int i = 1; i <= d; ++i) {
        a.names.push_back(std::to_string(i));
        a.weights.push_back(1);
    }
    return a;
}

Alphabet Alphabet::latin(int n) {
    Alphabet a;
    for (int i = 0; i < n; ++i) {
        a.names.push_back(std::string(1, static_cast<char>('a' + i)));
        a.weights.push_back(1);
    }
    return a;
}

Label Label::atom(Atom a) {
    Label l;
    l.kind_ = Kind::atom;
    l.atoms_ = {a};
    l.weight_ = a.weight;
    return l;
}

Label Label::multiset(std::vector<Atom> members) {
    if (members.empty()) throw std::invalid_argument("empty multiset label");
    std::sort(members.begin(), members.end(),
              [](const Atom& a, const Atom& b) { return compare(a, b) < 0; });
    if (members.size() == 1) return atom(members.front());
    Label l;
    l.kind_ = Kind::multiset;
    l.weight_ = 0;
    for (const Atom& a : members) l.weight_ += a.weight;
    l.atoms_ = std::move(members);
    return l;
}

Label Label::wrap(const Forest& payload) {
    if (payload.is_empty()) throw std::invalid_argument("empty forest label");
    if (payload.is_tree() && payload.as_tree().children().empty())
        return payload.as_tree().label();
    if (payload.is_single_vertex_product()) {
        bool joinable = true;
        for (const Tree& t : payload.trees())
            if (!t.label().joinable()) joinable = false;
        if (joinable) {
            std::vector<Atom> members;
            for (const Tree& t : payload.trees())
                for (const Atom& a : t.label().members()) members.push_back(a);
            return multiset(std::move(members));
        }
    }
    Label l;
    l.kind_ = Kind::wrapped;
    l.atoms_.clear();
    l.payload_ = std::make_shared<Forest>(payload);
    l.weight_ = payload.degree();
    return l;
}

std::optional<Label> Label::of_forest(const Forest& g) {
    if (g.is_empty()) return std::nullopt;
    if (g.is_tree() && g.as_tree().vertex_count() > 1) return std::nullopt;
    return wrap(g);
}

Label Label::join(const std::vector<Label>& parts) {
    std::vector<Atom> members;
    for (const Label& l : parts) {
        if (!l.joinable()) throw std::invalid_argument("label not joinable");
        for (const Atom& a : l.members()) members.push_back(a);
    }
    return multiset(std::move(members));
}

int compare(const Label& a, const Label& b) {
    if (a.kind() != b.kind())
        return static_cast<int>(a.kind()) < static_cast<int>(b.kind()) ? -1 : 1;
    if (a.kind() == Label::Kind::wrapped) return compare(a.wrapped(), b.wrapped());
    const auto& xs = a.members();
    const auto& ys = b.members();
    if (xs.size() != ys.size()) return xs.size() < ys.size() ? -1 : 1;
    for (size_t i = 0; i < xs.size(); ++i)
        if (int c = compare(xs[i], ys[i])) return c;
    return 0;
}

Tree::Tree(Label label, std::vector<Tree> children)
    : label_(std::move(label)), children_(std::move(children)) {
    std::sort(children_.begin(), children_.end(),
              [](const Tree& a, const Tree& b) { return compare(a, b) < 0; });
    degree_ = label_.weight();
    vertices_ = 1;
    height_ = 1;
    for (const Tree& c : children_) {
        degree_ += c.degree();
        vertices_ += c.vertex_count();
        height_ = std::max(height_, c.height() + 1);
    }
}

int compare(const Tree& a, const Tree& b) {
    if (a.degree() != b.degree()) return a.degree() < b.degree() ? -1 : 1;
    if (int c = compare(a.label(), b.label())) return c;
    const auto& xs = a.children();
    const auto& ys = b.children();
    size_t n = std::min(xs.size(), ys.size());
    for (size_t i = 0; i < n; ++i)
        if (int c = compare(xs[i], ys[i])) return c;
    if (xs.size() != ys.size()) return xs.size() < ys.size() ? -1 : 1;
    return 0;
}

Forest::Forest(std::vector<Tree> trees) : trees_(std::move(trees)) {
    std::sort(trees_.begin(), trees_.end(),
              [](const Tree& a, const Tree& b) { return compare(a, b) < 0; });
    for (const Tree& t : trees_) {
        degree_ += t.degree();
        vertices_ += t.vertex_count();
    }
}

Forest Forest::one(Tree t) {
    std::vector<Tree> ts;
    ts.push_back(std::move(t));
    return Forest(std::move(ts));
}

bool Forest::is_single_vertex_product() const {
    if (trees_.empty()) return false;
    for (const Tree& t : trees_)
        if (t.vertex_count() != 1) return false;
    return true;
}

Forest Forest::times(const Forest& other) const {
    std::vector<Tree> ts = trees_;
    ts.insert(ts.end(), other.trees_.begin(), other.trees_.end());
    return Forest(std::move(ts));
}

Forest Forest::times(const Tree& t) const {
    std::vector<Tree> ts = trees_;
    ts.push_back(t);
    return Forest(std::move(ts));
}

int compare(const Forest& a, const Forest& b) {
    if (a.degree() != b.degree()) return a.degree() < b.degree() ? -1 : 1;
    const auto& xs = a.trees();
    const auto& ys = b.trees();
    size_t n = std::min(xs.size(), ys.size());
    for (size_t i = 0; i < n; ++i)
        if (int c = compare(xs[i], ys[i])) return c;
    if (xs.size() != ys.size()) return xs.size() < ys.size() ? -1 : 1;
    return 0;
}

long symmetry_factor(const Tree& t) {
    return symmetry_factor(Forest(t.children()));
}

long symmetry_factor(const Forest& f) {
    long result = 1;
    const auto& ts = f.trees();
    size_t i = 0;
    while (i < ts.size()) {
        size_t j = i;
        while (j < ts.size() && compare(ts[i], ts[j]) == 0) ++j;
        long k = static_cast<long>(j - i);
        long sub = symmetry_factor(ts[i]);
        for (long r = 1; r <= k; ++r) result *= r;
        for (long r = 0; r < k; ++r) result *= sub;
        i = j;
    }
    return result;
}

int vertex_count(const Forest& f) { return f.vertex_count(); }

namespace {

// Rebuilds t while attaching extra factors / replacing labels at post-order
// indices. `next` is the index of the first vertex of this subtree.
Tree decorate_tree(const Tree& t, int& next,
                   const std::vector<Forest>& attach,
                   const std::vector<const Label*>& relabel) {
    std::vector<Tree> children;
    for (const Tree& c : t.children())
        children.push_back(decorate_tree(c, next, attach, relabel));
    int v = next++;
    if (!attach[v].is_empty())
        for (const Tree& extra : attach[v].trees()) children.push_back(extra);
    const Label& l = relabel[v] ? *relabel[v] : t.label();
    return Tree(l, std::move(children));
}

Forest decorate(const Forest& g, const std::vector<Forest>& attach,
                const std::vector<const Label*>& relabel) {
    std::vector<Tree> out;
    int next = 0;
    for (const Tree& t : g.trees()) out.push_back(decorate_tree(t, next, attach, relabel));
    return Forest(std::move(out));
}

}  // namespace

Forest attach_at(const Forest& f, const Forest& g, int v) {
    if (v == kProductVertex) return f.times(g);
    if (v < 0 || v >= g.vertex_count()) throw std::out_of_range("bad vertex reference");
    std::vector<Forest> attach(g.vertex_count());
    std::vector<const Label*> relabel(g.vertex_count(), nullptr);
    attach[v] = f;
    return decorate(g, attach, relabel);
}

std::vector<Forest> graft_ways(const Forest& f, const Forest& g) {
    std::vector<Forest> out;
    const int targets = g.vertex_count() + 1;  // vertices plus the product slot
    const int k = f.factor_count();
    std::vector<int> choice(k, 0);
    while (true) {
        std::vector<Forest> attach(g.vertex_count());
        Forest loose;
        for (int i = 0; i < k; ++i) {
            const Tree& factor = f.trees()[i];
            if (choice[i] == g.vertex_count())
                loose = loose.times(factor);
            else
                attach[choice[i]] = attach[choice[i]].times(factor);
        }
        std::vector<const Label*> relabel(g.vertex_count(), nullptr);
        out.push_back(loose.times(decorate(g, attach, relabel)));
        int i = 0;
        while (i < k && ++choice[i] == targets) choice[i++] = 0;
        if (i == k) break;
    }
    return out;
}

namespace {

// Non-total admissible cuts of a tree: (part above, part holding the root).
std::vector<std::pair<Forest, Tree>> nontotal_admissible(const Tree& t) {
    std::vector<std::pair<Forest, std::vector<Tree>>> acc = {{Forest(), {}}};
    for (const Tree& c : t.children()) {
        // Either sever the edge to c, or keep it and cut inside c.
        std::vector<std::pair<Forest, std::optional<Tree>>> options;
        options.emplace_back(Forest::one(c), std::nullopt);
        for (auto& [under, kept] : nontotal_admissible(c))
            options.emplace_back(under, kept);
        std::vector<std::pair<Forest, std::vector<Tree>>> next;
        for (const auto& [under, kids] : acc)
            for (const auto& [cu, ck] : options) {
                auto kids2 = kids;
                if (ck) kids2.push_back(*ck);
                next.emplace_back(under.times(cu), std::move(kids2));
            }
        acc = std::move(next);
    }
    std::vector<std::pair<Forest, Tree>> out;
    out.reserve(acc.size());
    for (auto& [under, kids] : acc)
        out.emplace_back(under, Tree(t.label(), std::move(kids)));
    return out;
}

}  // namespace

std::vector<Cut> admissible_cuts(const Tree& t) {
    std::vector<Cut> out;
    for (auto& [under, over] : nontotal_admissible(t))
        out.push_back(Cut{under, Forest::one(over)});
    out.push_back(Cut{Forest::one(t), Forest()});
    return out;
}

std::vector<Cut> admissible_cuts(const Forest& f) {
    std::vector<Cut> acc = {Cut{Forest(), Forest()}};
    for (const Tree& t : f.trees()) {
        std::vector<Cut> next;
        for (const Cut& base : acc)
            for (const Cut& c : admissible_cuts(t))
                next.push_back(Cut{base.under.times(c.under), base.over.times(c.over)});
        acc = std::move(next);
    }
    return acc;
}

namespace {

// All edge subsets: (edges cut, piece still holding this root, loose pieces).
struct PieceCut {
    int k;
    Tree attached;
    Forest loose;
};

std::vector<PieceCut> edge_subsets(const Tree& t) {
    std::vector<std::tuple<int, std::vector<Tree>, Forest>> acc = {{0, {}, Forest()}};
    for (const Tree& c : t.children()) {
        auto sub = edge_subsets(c);
        std::vector<std::tuple<int, std::vector<Tree>, Forest>> next;
        for (const auto& [k0, kids, loose0] : acc)
            for (const auto& pc : sub) {
                // keep the edge to c
                auto kids2 = kids;
                kids2.push_back(pc.attached);
                next.emplace_back(k0 + pc.k, kids2, loose0.times(pc.loose));
                // cut the edge to c
                next.emplace_back(k0 + pc.k + 1, kids,
                                  loose0.times(pc.loose).times(pc.attached));
            }
        acc = std::move(next);
    }
    std::vector<PieceCut> out;
    out.reserve(acc.size());
    for (auto& [k, kids, loose] : acc)
        out.push_back(PieceCut{k, Tree(t.label(), std::move(kids)), loose});
    return out;
}

}  // namespace

std::vector<EdgeCut> all_nontotal_cuts(const Tree& t) {
    std::vector<EdgeCut> out;
    for (const PieceCut& pc : edge_subsets(t))
        out.push_back(EdgeCut{pc.k, pc.loose.times(pc.attached)});
    return out;
}

Forest star_graft(const Tree& skeleton,
                  const std::vector<std::pair<Label, Forest>>& decorations) {
    if (static_cast<int>(decorations.size()) != skeleton.vertex_count())
        throw std::invalid_argument("decoration count mismatch");
    std::vector<Forest> attach;
    std::vector<const Label*> relabel;
    for (const auto& [l, f] : decorations) {
        attach.push_back(f);
        relabel.push_back(&l);
    }
    return decorate(Forest::one(skeleton), attach, relabel);
}

}  // namespace bramble
