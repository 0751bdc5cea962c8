#include "bramble/alg.hpp"

#include <stdexcept>

namespace bramble {

AlgElem AlgElem::of(const Forest& f, Rational c) {
    AlgElem x;
    x.add(f, c);
    return x;
}

Rational AlgElem::coeff(const Forest& f) const {
    auto it = terms_.find(f);
    return it == terms_.end() ? Rational(0) : it->second;
}

void AlgElem::add(const Forest& f, const Rational& c) {
    if (c == 0) return;
    auto [it, inserted] = terms_.emplace(f, c);
    if (!inserted) {
        it->second += c;
        if (it->second == 0) terms_.erase(it);
    }
}

AlgElem& AlgElem::operator+=(const AlgElem& other) {
    for (const auto& [f, c] : other.terms_) add(f, c);
    return *this;
}

AlgElem& AlgElem::operator-=(const AlgElem& other) {
    for (const auto& [f, c] : other.terms_) add(f, -c);
    return *this;
}

AlgElem AlgElem::operator+(const AlgElem& other) const {
    AlgElem r = *this;
    r += other;
    return r;
}

AlgElem AlgElem::operator-(const AlgElem& other) const {
    AlgElem r = *this;
    r -= other;
    return r;
}

AlgElem AlgElem::operator-() const { return scaled(-1); }

AlgElem AlgElem::scaled(const Rational& c) const {
    AlgElem r;
    if (c == 0) return r;
    for (const auto& [f, k] : terms_) r.terms_.emplace(f, k * c);
    return r;
}

AlgElem AlgElem::forest_product(const AlgElem& other) const {
    AlgElem r;
    for (const auto& [f, a] : terms_)
        for (const auto& [g, b] : other.terms_) r.add(f.times(g), a * b);
    return r;
}

AlgElem AlgElem::truncated(int n) const {
    AlgElem r;
    for (const auto& [f, c] : terms_)
        if (f.degree() <= n) r.terms_.emplace(f, c);
    return r;
}

int AlgElem::max_degree() const {
    int d = 0;
    for (const auto& [f, c] : terms_) d = std::max(d, f.degree());
    return d;
}

bool operator==(const AlgElem& a, const AlgElem& b) { return a.terms() == b.terms(); }

TensorElem TensorElem::of(std::vector<Forest> slots, Rational c) {
    TensorElem t(static_cast<int>(slots.size()));
    t.add(slots, c);
    return t;
}

Rational TensorElem::coeff(const std::vector<Forest>& slots) const {
    auto it = terms_.find(slots);
    return it == terms_.end() ? Rational(0) : it->second;
}

void TensorElem::add(const std::vector<Forest>& slots, const Rational& c) {
    if (static_cast<int>(slots.size()) != arity_)
        throw std::invalid_argument("tensor arity mismatch");
    if (c == 0) return;
    auto [it, inserted] = terms_.emplace(slots, c);
    if (!inserted) {
        it->second += c;
        if (it->second == 0) terms_.erase(it);
    }
}

TensorElem& TensorElem::operator+=(const TensorElem& other) {
    if (other.arity_ != arity_) throw std::invalid_argument("tensor arity mismatch");
    for (const auto& [s, c] : other.terms_) add(s, c);
    return *this;
}

TensorElem& TensorElem::operator-=(const TensorElem& other) {
    if (other.arity_ != arity_) throw std::invalid_argument("tensor arity mismatch");
    for (const auto& [s, c] : other.terms_) add(s, -c);
    return *this;
}

TensorElem TensorElem::operator-(const TensorElem& other) const {
    TensorElem r = *this;
    r -= other;
    return r;
}

TensorElem TensorElem::scaled(const Rational& c) const {
    TensorElem r(arity_);
    if (c == 0) return r;
    for (const auto& [s, k] : terms_) r.terms_.emplace(s, k * c);
    return r;
}

TensorElem TensorElem::slotwise_product(const TensorElem& other) const {
    if (other.arity_ != arity_) throw std::invalid_argument("tensor arity mismatch");
    TensorElem r(arity_);
    for (const auto& [s, a] : terms_)
        for (const auto& [t, b] : other.terms_) {
            std::vector<Forest> slots;
            slots.reserve(arity_);
            for (int i = 0; i < arity_; ++i) slots.push_back(s[i].times(t[i]));
            r.add(slots, a * b);
        }
    return r;
}

bool operator==(const TensorElem& a, const TensorElem& b) {
    return a.arity() == b.arity() && a.terms() == b.terms();
}

TensorElem ck_coproduct(const AlgElem& x) {
    TensorElem out(2);
    for (const auto& [f, c] : x.terms())
        for (const Cut& cut : admissible_cuts(f)) out.add({cut.under, cut.over}, c);
    return out;
}

AlgElem gl_product(const AlgElem& x, const AlgElem& y) {
    AlgElem out;
    for (const auto& [f, a] : x.terms())
        for (const auto& [g, b] : y.terms())
            for (const Forest& h : graft_ways(f, g)) out.add(h, a * b);
    return out;
}

AlgElem gl_product_truncated(const AlgElem& x, const AlgElem& y, int n) {
    return gl_product(x, y).truncated(n);
}

TensorElem gl_coproduct(const AlgElem& x) {
    TensorElem out(2);
    for (const auto& [f, c] : x.terms()) {
        const auto& ts = f.trees();
        const size_t n = ts.size();
        for (size_t mask = 0; mask < (size_t{1} << n); ++mask) {
            Forest left, right;
            for (size_t i = 0; i < n; ++i)
                (mask >> i & 1 ? left : right) = (mask >> i & 1 ? left : right).times(ts[i]);
            out.add({left, right}, c);
        }
    }
    return out;
}

AlgElem antipode_ck(const AlgElem& x) {
    AlgElem out;
    for (const auto& [f, c] : x.terms()) {
        AlgElem term = AlgElem::unit();
        for (const Tree& t : f.trees()) {
            AlgElem s;
            for (const EdgeCut& ec : all_nontotal_cuts(t))
                s.add(ec.remainder, (ec.edges_cut % 2 == 0) ? Rational(-1) : Rational(1));
            term = term.forest_product(s);
        }
        out += term.scaled(c);
    }
    return out;
}

namespace {

// S(f) = -f - sum S(f_(1)) * f_(2) over the reduced factor-split coproduct.
AlgElem antipode_gl_forest(const Forest& f, std::map<Forest, AlgElem>& memo) {
    if (f.is_empty()) return AlgElem::unit();
    if (auto it = memo.find(f); it != memo.end()) return it->second;
    AlgElem out = AlgElem::of(f, -1);
    const auto& ts = f.trees();
    const size_t n = ts.size();
    for (size_t mask = 1; mask + 1 < (size_t{1} << n); ++mask) {
        Forest left, right;
        for (size_t i = 0; i < n; ++i)
            if (mask >> i & 1)
                left = left.times(ts[i]);
            else
                right = right.times(ts[i]);
        out -= gl_product(antipode_gl_forest(left, memo), AlgElem::of(right));
    }
    memo.emplace(f, out);
    return out;
}

}  // namespace

AlgElem antipode_gl(const AlgElem& x) {
    std::map<Forest, AlgElem> memo;
    AlgElem out;
    for (const auto& [f, c] : x.terms()) out += antipode_gl_forest(f, memo).scaled(c);
    return out;
}

Rational pairing(const AlgElem& y, const AlgElem& x) {
    Rational r = 0;
    const auto& a = y.terms();
    const auto& b = x.terms();
    for (auto ia = a.begin(), ib = b.begin(); ia != a.end() && ib != b.end();) {
        int c = compare(ia->first, ib->first);
        if (c < 0)
            ++ia;
        else if (c > 0)
            ++ib;
        else {
            r += ia->second * ib->second * Rational(symmetry_factor(ia->first));
            ++ia;
            ++ib;
        }
    }
    return r;
}

Rational pairing(const TensorElem& y, const TensorElem& x) {
    if (y.arity() != x.arity()) throw std::invalid_argument("tensor arity mismatch");
    Rational r = 0;
    for (const auto& [s, a] : y.terms()) {
        Rational b = x.coeff(s);
        if (b == 0) continue;
        Rational n = 1;
        for (const Forest& f : s) n *= Rational(symmetry_factor(f));
        r += a * b * n;
    }
    return r;
}

namespace {

TensorElem coproduct_of(const AlgElem& x, Coproduct which, bool reduced) {
    TensorElem d = which == Coproduct::ck ? ck_coproduct(x) : gl_coproduct(x);
    if (!reduced) return d;
    for (const auto& [f, c] : x.terms()) {
        d.add({Forest(), f}, -c);
        d.add({f, Forest()}, -c);
    }
    // The unit has reduced coproduct -1 (x) 1 + ... ; keep exactly what the
    // subtraction gives. Scalars never feed the reduced iteration in practice.
    return d;
}

}  // namespace

TensorElem iterated_coproduct(const AlgElem& x, int m, bool reduced, Coproduct which) {
    if (m < 0) throw std::invalid_argument("negative coproduct arity");
    if (m == 0) {
        TensorElem out(0);
        out.add({}, x.coeff(Forest()));
        return out;
    }
    if (m == 1) {
        TensorElem out(1);
        for (const auto& [f, c] : x.terms()) out.add({f}, c);
        return out;
    }
    // Expand the last slot one step at a time.
    TensorElem acc = iterated_coproduct(x, m - 1, reduced, which);
    TensorElem out(m);
    for (const auto& [slots, c] : acc.terms()) {
        AlgElem last = AlgElem::of(slots.back());
        TensorElem split = coproduct_of(last, which, reduced);
        for (const auto& [pair, k] : split.terms()) {
            std::vector<Forest> s(slots.begin(), slots.end() - 1);
            s.push_back(pair[0]);
            s.push_back(pair[1]);
            out.add(s, c * k);
        }
    }
    return out;
}

int compare(const Word& a, const Word& b) {
    if (a.size() != b.size()) return a.size() < b.size() ? -1 : 1;
    for (size_t i = 0; i < a.size(); ++i)
        if (int c = compare(a[i], b[i])) return c;
    return 0;
}

int word_weight(const Word& w) {
    int s = 0;
    for (const Label& l : w) s += l.weight();
    return s;
}

WordSum WordSum::of(Word w, Rational c) {
    WordSum s;
    s.add(w, c);
    return s;
}

Rational WordSum::coeff(const Word& w) const {
    auto it = terms_.find(w);
    return it == terms_.end() ? Rational(0) : it->second;
}

void WordSum::add(const Word& w, const Rational& c) {
    if (c == 0) return;
    auto [it, inserted] = terms_.emplace(w, c);
    if (!inserted) {
        it->second += c;
        if (it->second == 0) terms_.erase(it);
    }
}

WordSum& WordSum::operator+=(const WordSum& other) {
    for (const auto& [w, c] : other.terms_) add(w, c);
    return *this;
}

WordSum WordSum::operator-(const WordSum& other) const {
    WordSum r = *this;
    for (const auto& [w, c] : other.terms_) r.add(w, -c);
    return r;
}

WordSum WordSum::scaled(const Rational& c) const {
    WordSum r;
    if (c == 0) return r;
    for (const auto& [w, k] : terms_) r.terms_.emplace(w, k * c);
    return r;
}

WordSum WordSum::appended(const Label& l) const {
    WordSum r;
    for (const auto& [w, c] : terms_) {
        Word w2 = w;
        w2.push_back(l);
        r.terms_.emplace(std::move(w2), c);
    }
    return r;
}

bool operator==(const WordSum& a, const WordSum& b) { return a.terms() == b.terms(); }

namespace {

WordSum shuffle_impl(const Word& w, const Word& z, bool quasi) {
    if (w.empty()) return WordSum::of(z);
    if (z.empty()) return WordSum::of(w);
    Word w0(w.begin(), w.end() - 1);
    Word z0(z.begin(), z.end() - 1);
    const Label& a = w.back();
    const Label& b = z.back();
    WordSum out = shuffle_impl(w0, z, quasi).appended(a);
    out += shuffle_impl(w, z0, quasi).appended(b);
    if (quasi) out += shuffle_impl(w0, z0, quasi).appended(Label::join({a, b}));
    return out;
}

WordSum lift_product(const WordSum& x, const WordSum& y, bool quasi) {
    WordSum out;
    for (const auto& [w, a] : x.terms())
        for (const auto& [z, b] : y.terms()) out += shuffle_impl(w, z, quasi).scaled(a * b);
    return out;
}

}  // namespace

WordSum quasi_shuffle(const Word& w, const Word& z) { return shuffle_impl(w, z, true); }
WordSum quasi_shuffle(const WordSum& w, const WordSum& z) { return lift_product(w, z, true); }
WordSum shuffle(const Word& w, const Word& z) { return shuffle_impl(w, z, false); }
WordSum shuffle(const WordSum& w, const WordSum& z) { return lift_product(w, z, false); }

namespace {

WordSum collapse(const Forest& f, bool quasi) {
    if (f.is_empty()) return WordSum::of(Word{});
    if (f.is_tree()) {
        const Tree& t = f.as_tree();
        return collapse(Forest(t.children()), quasi).appended(t.label());
    }
    WordSum out = WordSum::of(Word{});
    for (const Tree& t : f.trees())
        out = lift_product(out, collapse(Forest::one(t), quasi), quasi);
    return out;
}

}  // namespace

WordSum phi(const Forest& f) { return collapse(f, false); }

WordSum phi(const AlgElem& x) {
    WordSum out;
    for (const auto& [f, c] : x.terms()) out += phi(f).scaled(c);
    return out;
}

WordSum phi_tilde(const Forest& f) { return collapse(f, true); }

WordSum phi_tilde(const AlgElem& x) {
    WordSum out;
    for (const auto& [f, c] : x.terms()) out += phi_tilde(f).scaled(c);
    return out;
}

Tree iota(const Word& w) {
    if (w.empty()) throw std::invalid_argument("iota of the empty word is not a tree");
    Tree t(w.front());
    for (size_t i = 1; i < w.size(); ++i) t = Tree(w[i], {t});
    return t;
}

AlgElem iota(const WordSum& s) {
    AlgElem out;
    for (const auto& [w, c] : s.terms()) {
        if (w.empty())
            out.add(Forest(), c);
        else
            out.add(Forest::one(iota(w)), c);
    }
    return out;
}

TreeWordSum TreeWordSum::of(TreeWord w, Rational c) {
    TreeWordSum s;
    s.add(w, c);
    return s;
}

void TreeWordSum::add(const TreeWord& w, const Rational& c) {
    if (c == 0) return;
    auto [it, inserted] = terms_.emplace(w, c);
    if (!inserted) {
        it->second += c;
        if (it->second == 0) terms_.erase(it);
    }
}

TreeWordSum& TreeWordSum::operator+=(const TreeWordSum& other) {
    for (const auto& [w, c] : other.terms_) add(w, c);
    return *this;
}

TreeWordSum TreeWordSum::scaled(const Rational& c) const {
    TreeWordSum r;
    if (c == 0) return r;
    for (const auto& [w, k] : terms_) r.terms_.emplace(w, k * c);
    return r;
}

TreeWordSum TreeWordSum::appended(const Tree& t) const {
    TreeWordSum r;
    for (const auto& [w, c] : terms_) {
        TreeWord w2 = w;
        w2.push_back(t);
        r.terms_.emplace(std::move(w2), c);
    }
    return r;
}

bool operator==(const TreeWordSum& a, const TreeWordSum& b) { return a.terms() == b.terms(); }

namespace {

TreeWordSum tree_shuffle(const TreeWord& w, const TreeWord& z) {
    if (w.empty()) return TreeWordSum::of(z);
    if (z.empty()) return TreeWordSum::of(w);
    TreeWord w0(w.begin(), w.end() - 1);
    TreeWord z0(z.begin(), z.end() - 1);
    TreeWordSum out = tree_shuffle(w0, z).appended(w.back());
    out += tree_shuffle(w, z0).appended(z.back());
    return out;
}

}  // namespace

TreeWordSum psi(const Tree& t) {
    TreeWordSum out = TreeWordSum::of(TreeWord{t});
    for (const Cut& c : admissible_cuts(t)) {
        if (c.under.is_empty() || c.over.is_empty()) continue;  // reduced coproduct
        out += psi(c.under).appended(c.over.as_tree());
    }
    return out;
}

TreeWordSum psi(const Forest& f) {
    if (f.is_empty()) return TreeWordSum::of(TreeWord{});
    TreeWordSum out = TreeWordSum::of(TreeWord{});
    for (const Tree& t : f.trees()) {
        TreeWordSum next;
        for (const auto& [w, a] : out.terms())
            for (const auto& [z, b] : psi(t).terms())
                next += tree_shuffle(w, z).scaled(a * b);
        out = std::move(next);
    }
    return out;
}

}  // namespace bramble
