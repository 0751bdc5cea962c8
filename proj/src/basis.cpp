#include "bramble/basis.hpp"

#include <algorithm>
#include <stdexcept>

namespace bramble {

namespace {

void multisets_rec(const Alphabet& base, int max_weight, int min_id, std::vector<Atom>& cur,
                   std::vector<Label>& out) {
    if (cur.size() >= 2) out.push_back(Label::multiset(cur));
    for (int id = min_id; id < base.size(); ++id) {
        int w = base.weights[id];
        int have = 0;
        for (const Atom& a : cur) have += a.weight;
        if (have + w > max_weight) continue;
        cur.push_back(base.atom(id));
        multisets_rec(base, max_weight, id, cur, out);
        cur.pop_back();
    }
}

void forests_rec(const std::vector<Tree>& trees, int budget, size_t start,
                 std::vector<Tree>& cur, std::vector<Forest>& out) {
    out.push_back(Forest(cur));
    for (size_t i = start; i < trees.size(); ++i) {
        if (trees[i].degree() > budget) continue;
        cur.push_back(trees[i]);
        forests_rec(trees, budget - trees[i].degree(), i, cur, out);
        cur.pop_back();
    }
}

}  // namespace

std::vector<Label> enumerate_letters(const Alphabet& base, Extension ext, int max_degree) {
    std::vector<Label> letters;
    for (int i = 0; i < base.size(); ++i)
        if (base.weights[i] <= max_degree) letters.push_back(Label::atom(base.atom(i)));
    if (ext == Extension::none) return letters;
    std::vector<Atom> cur;
    multisets_rec(base, max_degree, 0, cur, letters);
    if (ext == Extension::full) {
        // Proper base-labelled forests that are not products of single
        // vertices (those are already covered by the multisets).
        std::vector<Label> plain;
        for (int i = 0; i < base.size(); ++i) plain.push_back(Label::atom(base.atom(i)));
        for (const Forest& f : enumerate_forests(plain, max_degree)) {
            if (!f.is_proper()) continue;
            if (f.is_single_vertex_product()) continue;
            letters.push_back(Label::wrap(f));
        }
    }
    std::sort(letters.begin(), letters.end(),
              [](const Label& a, const Label& b) { return compare(a, b) < 0; });
    return letters;
}

std::vector<Tree> enumerate_trees(const std::vector<Label>& letters, int max_degree) {
    // trees_by_budget[d] = all trees of degree <= d, built bottom-up.
    std::vector<Tree> all;
    std::vector<std::vector<Tree>> by_deg(max_degree + 1);  // exact degree
    for (int d = 1; d <= max_degree; ++d) {
        for (const Label& l : letters) {
            int w = l.weight();
            if (w > d) continue;
            // children forests of degree exactly d - w from trees of lower degree
            std::vector<Tree> smaller;
            for (int k = 1; k < d; ++k)
                smaller.insert(smaller.end(), by_deg[k].begin(), by_deg[k].end());
            std::sort(smaller.begin(), smaller.end(),
                      [](const Tree& a, const Tree& b) { return compare(a, b) < 0; });
            std::vector<Tree> cur;
            std::vector<Forest> kids;
            forests_rec(smaller, d - w, 0, cur, kids);
            for (const Forest& f : kids)
                if (f.degree() == d - w) by_deg[d].push_back(Tree(l, f.trees()));
        }
    }
    for (int d = 1; d <= max_degree; ++d)
        all.insert(all.end(), by_deg[d].begin(), by_deg[d].end());
    std::sort(all.begin(), all.end(),
              [](const Tree& a, const Tree& b) { return compare(a, b) < 0; });
    all.erase(std::unique(all.begin(), all.end(),
                          [](const Tree& a, const Tree& b) { return compare(a, b) == 0; }),
              all.end());
    return all;
}

std::vector<Forest> enumerate_forests(const std::vector<Label>& letters, int max_degree) {
    std::vector<Tree> trees = enumerate_trees(letters, max_degree);
    std::vector<Tree> cur;
    std::vector<Forest> out;
    forests_rec(trees, max_degree, 0, cur, out);
    std::sort(out.begin(), out.end(),
              [](const Forest& a, const Forest& b) { return compare(a, b) < 0; });
    out.erase(std::unique(out.begin(), out.end(),
                          [](const Forest& a, const Forest& b) { return compare(a, b) == 0; }),
              out.end());
    return out;
}

std::shared_ptr<const ForestBasis> ForestBasis::make(Alphabet base, Extension ext,
                                                     int max_degree) {
    auto basis = std::shared_ptr<ForestBasis>(new ForestBasis());
    basis->base_ = std::move(base);
    basis->ext_ = ext;
    basis->max_degree_ = max_degree;
    basis->letters_ = enumerate_letters(basis->base_, ext, max_degree);
    basis->forests_ = enumerate_forests(basis->letters_, max_degree);
    for (int i = 0; i < basis->size(); ++i) basis->index_[basis->forests_[i]] = i;

    basis->chen_.resize(basis->size());
    basis->splits_.resize(basis->size());
    basis->root_labels_.resize(basis->size(), Label());
    basis->children_.assign(basis->size(), -1);
    for (int i = 0; i < basis->size(); ++i) {
        const Forest& f = basis->forests_[i];
        std::map<std::pair<int, int>, int> agg;
        for (const Cut& c : admissible_cuts(f)) {
            int l = basis->index_.at(c.under);
            int r = basis->index_.at(c.over);
            agg[{l, r}] += 1;
        }
        for (const auto& [lr, m] : agg)
            basis->chen_[i].push_back(ChenTerm{lr.first, lr.second, double(m)});

        if (f.factor_count() >= 2) {
            std::map<std::pair<int, int>, bool> seen;
            const auto& ts = f.trees();
            const size_t n = ts.size();
            for (size_t mask = 1; mask + 1 < (size_t{1} << n); ++mask) {
                Forest left, right;
                for (size_t k = 0; k < n; ++k)
                    if (mask >> k & 1)
                        left = left.times(ts[k]);
                    else
                        right = right.times(ts[k]);
                auto key = std::make_pair(basis->index_.at(left), basis->index_.at(right));
                if (!seen[key]) {
                    seen[key] = true;
                    basis->splits_[i].push_back(key);
                }
            }
        }
        if (f.is_tree()) {
            const Tree& t = f.as_tree();
            basis->root_labels_[i] = t.label();
            basis->children_[i] = basis->index_.at(Forest(t.children()));
            if (t.children().empty()) basis->letter_index_[t.label()] = i;
        }
    }
    return basis;
}

bool ForestBasis::has_letter(const Label& l) const {
    return letter_index_.count(l) > 0;
}

int ForestBasis::find(const Forest& f) const {
    auto it = index_.find(f);
    return it == index_.end() ? -1 : it->second;
}

int ForestBasis::index_of(const Forest& f) const {
    int i = find(f);
    if (i < 0) throw std::out_of_range("forest outside basis");
    return i;
}

const Label& ForestBasis::root_label(int i) const {
    if (!forests_[i].is_tree()) throw std::invalid_argument("not a tree");
    return root_labels_[i];
}

int ForestBasis::children_index(int i) const {
    if (!forests_[i].is_tree()) throw std::invalid_argument("not a tree");
    return children_[i];
}

int ForestBasis::letter_index(const Label& l) const {
    auto it = letter_index_.find(l);
    return it == letter_index_.end() ? -1 : it->second;
}

}  // namespace bramble
