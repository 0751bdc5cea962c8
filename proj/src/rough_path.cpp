#include "bramble/rough_path.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "bramble/bracket.hpp"
#include "bramble/forest_io.hpp"

namespace bramble {

DenseVec identity_value(const ForestBasis& basis) {
    DenseVec v(basis.size(), 0.0);
    v[0] = 1.0;  // empty forest is index 0
    return v;
}

DenseVec chen_compose(const ForestBasis& basis, const DenseVec& a, const DenseVec& b) {
    DenseVec out(basis.size(), 0.0);
    for (int i = 0; i < basis.size(); ++i) {
        double s = 0;
        for (const auto& term : basis.chen_terms(i))
            s += term.mult * a[term.left] * b[term.right];
        out[i] = s;
    }
    return out;
}

double max_abs_diff(const DenseVec& a, const DenseVec& b) {
    double m = 0;
    for (size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

GridRoughPath::GridRoughPath(std::shared_ptr<const ForestBasis> basis, double p,
                             std::vector<double> grid, std::vector<DenseVec> cells) {
    basis_ = std::move(basis);
    p_ = p;
    grid_ = std::move(grid);
    if (cells.size() + 1 != grid_.size()) throw std::invalid_argument("cell count mismatch");
    leaves_ = 1;
    while (leaves_ < static_cast<int>(cells.size())) leaves_ *= 2;
    nodes_.assign(2 * leaves_, DenseVec());
    for (size_t i = 0; i < cells.size(); ++i) nodes_[leaves_ + i] = std::move(cells[i]);
    build_blocks_from_cells();
}

void GridRoughPath::build_blocks_from_cells() {
    DenseVec id = identity_value(*basis_);
    for (int i = leaves_ + cell_count(); i < 2 * leaves_; ++i) nodes_[i] = id;
    for (int i = leaves_ - 1; i >= 1; --i)
        nodes_[i] = chen_compose(*basis_, nodes_[2 * i], nodes_[2 * i + 1]);
}

GridRoughPath GridRoughPath::from_function(std::shared_ptr<const ForestBasis> basis, double p,
                                           std::vector<double> grid, const Eval& eval) {
    GridRoughPath x;
    x.basis_ = std::move(basis);
    x.p_ = p;
    x.grid_ = std::move(grid);
    int n = static_cast<int>(x.grid_.size()) - 1;
    x.leaves_ = 1;
    while (x.leaves_ < n) x.leaves_ *= 2;
    x.nodes_.assign(2 * x.leaves_, DenseVec());
    DenseVec id = identity_value(*x.basis_);
    // Fill every node whose span lies inside the grid directly.
    std::function<void(int, int, int)> fill = [&](int node, int lo, int hi) {
        if (lo >= n) {
            x.nodes_[node] = id;
            return;
        }
        int clamped_hi = std::min(hi, n);
        x.nodes_[node] = eval(lo, clamped_hi);
        if (hi - lo == 1) return;
        int mid = (lo + hi) / 2;
        fill(2 * node, lo, mid);
        fill(2 * node + 1, mid, hi);
    };
    fill(1, 0, x.leaves_);
    return x;
}

DenseVec GridRoughPath::query(int node, int lo, int hi, int i, int j) const {
    if (i <= lo && hi <= j) return nodes_[node];
    int mid = (lo + hi) / 2;
    if (j <= mid) return query(2 * node, lo, mid, i, j);
    if (i >= mid) return query(2 * node + 1, mid, hi, i, j);
    return chen_compose(*basis_, query(2 * node, lo, mid, i, mid),
                        query(2 * node + 1, mid, hi, mid, j));
}

DenseVec GridRoughPath::value(int i, int j) const {
    if (i == j) return identity_value(*basis_);
    if (i > j || i < 0 || j > cell_count()) throw std::out_of_range("bad grid pair");
    return query(1, 0, leaves_, i, j);
}

double GridRoughPath::component(int i, int j, int forest_index) const {
    return value(i, j)[forest_index];
}

double GridRoughPath::component(int i, int j, const Forest& f) const {
    return component(i, j, basis_->index_of(f));
}

double GridRoughPath::evaluate(int i, int j, const AlgElem& x) const {
    DenseVec v = value(i, j);
    double s = 0;
    for (const auto& [f, c] : x.terms()) s += to_double(c) * v[basis_->index_of(f)];
    return s;
}

double GridRoughPath::chen_defect(int i, int j, int k) const {
    DenseVec whole = value(i, k);
    DenseVec composed = chen_compose(*basis_, value(i, j), value(j, k));
    return max_abs_diff(whole, composed);
}

double GridRoughPath::grouplike_defect(int i, int j) const {
    DenseVec v = value(i, j);
    double m = 0;
    for (int f = 0; f < basis_->size(); ++f)
        for (const auto& [l, r] : basis_->product_splits(f))
            m = std::max(m, std::abs(v[f] - v[l] * v[r]));
    return m;
}

void GridRoughPath::dyadic_spans(std::vector<std::pair<int, int>>& out) const {
    int n = cell_count();
    std::function<void(int, int)> walk = [&](int lo, int hi) {
        if (lo >= n) return;
        out.emplace_back(lo, std::min(hi, n));
        if (hi - lo == 1) return;
        int mid = (lo + hi) / 2;
        walk(lo, mid);
        walk(mid, hi);
    };
    walk(0, leaves_);
}

double GridRoughPath::max_dyadic_chen_defect() const {
    std::vector<std::pair<int, int>> spans;
    dyadic_spans(spans);
    double m = 0;
    for (const auto& [lo, hi] : spans) {
        if (hi - lo < 2) continue;
        int mid = lo + (hi - lo) / 2;
        m = std::max(m, chen_defect(lo, mid, hi));
    }
    return m;
}

double GridRoughPath::max_dyadic_grouplike_defect() const {
    std::vector<std::pair<int, int>> spans;
    dyadic_spans(spans);
    double m = 0;
    for (const auto& [lo, hi] : spans) m = std::max(m, grouplike_defect(lo, hi));
    return m;
}

std::vector<double> GridRoughPath::regularity_report() const {
    std::vector<std::pair<int, int>> spans;
    dyadic_spans(spans);
    std::vector<double> sup(basis_->size(), 0.0);
    for (const auto& [lo, hi] : spans) {
        double w = control_(grid_[lo], grid_[hi]);
        if (w <= 0) continue;
        DenseVec v = value(lo, hi);
        for (int f = 1; f < basis_->size(); ++f) {
            double ratio = std::abs(v[f]) / std::pow(w, basis_->degree(f) / p_);
            sup[f] = std::max(sup[f], ratio);
        }
    }
    return sup;
}

void GridRoughPath::corrupt_cell(int cell, int forest_index, double delta) {
    std::vector<DenseVec> cells(cell_count());
    for (int i = 0; i < cell_count(); ++i) cells[i] = nodes_[leaves_ + i];
    cells[cell][forest_index] += delta;
    for (int i = 0; i < cell_count(); ++i) nodes_[leaves_ + i] = cells[i];
    build_blocks_from_cells();
}

// ---------------------------------------------------------------------------
// Smooth geometric lift

namespace {

// 8-point Gauss-Legendre nodes/weights on [-1, 1].
constexpr double kGlNode[8] = {
    -0.9602898564975363, -0.7966664774136267, -0.5255324099163290, -0.1834346424956498,
    0.1834346424956498,  0.5255324099163290,  0.7966664774136267,  0.9602898564975363};
constexpr double kGlWeight[8] = {
    0.1012285362903763, 0.2223810344533745, 0.3137066458778873, 0.3626837833783620,
    0.3626837833783620, 0.3137066458778873, 0.2223810344533745, 0.1012285362903763};

bool forest_atom_only(const Forest& f);

bool tree_atom_only(const Tree& t) {
    if (!t.label().is_atom()) return false;
    for (const Tree& c : t.children())
        if (!tree_atom_only(c)) return false;
    return true;
}

bool forest_atom_only(const Forest& f) {
    for (const Tree& t : f.trees())
        if (!tree_atom_only(t)) return false;
    return true;
}

}  // namespace

SmoothLift::SmoothLift(std::shared_ptr<const ForestBasis> basis, PolyMap path, double p)
    : basis_(std::move(basis)), path_(std::move(path)), p_(p) {
    if (path_.source_dim != 1) throw std::invalid_argument("path must have one variable");
    for (int a = 0; a < path_.target_dim(); ++a) velocity_.push_back(path_[a].derivative(0));
    atom_only_.resize(basis_->size());
    for (int i = 0; i < basis_->size(); ++i) {
        atom_only_[i] = forest_atom_only(basis_->forest(i));
        if (basis_->is_tree(i) && i != 0) tree_ids_.push_back(i);
    }
    // Evaluate shallow trees before tall ones.
    std::sort(tree_ids_.begin(), tree_ids_.end(), [&](int a, int b) {
        return basis_->forest(a).as_tree().height() < basis_->forest(b).as_tree().height();
    });
}

double SmoothLift::trace(int atom_id, double t) const { return path_[atom_id].eval({t}); }

DenseVec SmoothLift::eval(double s, double t, const std::vector<double>& breaks) const {
    std::vector<double> bounds = {s};
    for (double b : breaks)
        if (b > s && b < t) bounds.push_back(b);
    bounds.push_back(t);

    // cumulative[i] = X^tree_i over [s, current boundary]
    DenseVec cumulative(basis_->size(), 0.0);

    // X^f over [s, u] for u inside the current panel [b0, u], recursive in
    // tree height; `cum` holds values at b0.
    std::function<double(int, double, double)> tree_at =
        [&](int tree, double b0, double u) -> double {
        const Label& root = basis_->root_label(tree);
        if (!root.is_atom() || !atom_only_[tree]) return 0.0;
        const Polynomial& vel = velocity_[root.as_atom().id];
        int kids = basis_->children_index(tree);
        double acc = cumulative[tree];
        double half = 0.5 * (u - b0);
        double mid = 0.5 * (u + b0);
        for (int q = 0; q < 8; ++q) {
            double v = mid + half * kGlNode[q];
            double kidval = 1.0;
            if (kids != 0)
                for (const Tree& kt : basis_->forest(kids).trees())
                    kidval *= tree_at(basis_->index_of(Forest::one(kt)), b0, v);
            acc += half * kGlWeight[q] * kidval * vel.eval({v});
        }
        return acc;
    };

    for (size_t panel = 0; panel + 1 < bounds.size(); ++panel) {
        double b0 = bounds[panel], b1 = bounds[panel + 1];
        DenseVec next = cumulative;
        for (int tree : tree_ids_) next[tree] = tree_at(tree, b0, b1);
        cumulative = std::move(next);
    }

    DenseVec out(basis_->size(), 0.0);
    out[0] = 1.0;
    for (int i = 1; i < basis_->size(); ++i) {
        if (!atom_only_[i]) {
            out[i] = 0.0;
            continue;
        }
        double v = 1.0;
        for (const Tree& t2 : basis_->forest(i).trees())
            v *= cumulative[basis_->index_of(Forest::one(t2))];
        out[i] = v;
    }
    return out;
}

GridRoughPath SmoothLift::materialize(const std::vector<double>& grid) const {
    auto eval_ij = [&](int i, int j) {
        std::vector<double> breaks(grid.begin() + i + 1, grid.begin() + j);
        return eval(grid[i], grid[j], breaks);
    };
    return GridRoughPath::from_function(basis_, p_, grid, eval_ij);
}

GridRoughPath with_zero_extension(const GridRoughPath& x,
                                  std::shared_ptr<const ForestBasis> extended) {
    const ForestBasis& eb = *extended;
    const ForestBasis& bb = x.basis();
    std::vector<int> source(eb.size(), -1);
    for (int i = 0; i < eb.size(); ++i) {
        if (forest_atom_only(eb.forest(i))) source[i] = bb.index_of(eb.forest(i));
    }
    auto eval_ij = [&, source](int i, int j) {
        DenseVec base = x.value(i, j);
        DenseVec out(eb.size(), 0.0);
        for (int k = 0; k < eb.size(); ++k)
            if (source[k] >= 0) out[k] = base[source[k]];
        return out;
    };
    return GridRoughPath::from_function(extended, x.p(), x.grid(), eval_ij);
}

GridRoughPath canonical_level2_bracket(const GridRoughPath& x) {
    if (x.truncation() != 2) throw std::invalid_argument("level-2 bracket needs floor(p)=2");
    auto extended = ForestBasis::make(x.basis().base(), Extension::simple, 2);
    const ForestBasis& eb = *extended;
    // Precompute the defining combination for each new letter.
    std::vector<std::pair<int, AlgElem>> bracket_letters;
    for (int i = 0; i < eb.size(); ++i) {
        const Forest& f = eb.forest(i);
        if (!f.is_tree() || f.vertex_count() != 1) continue;
        const Label& l = f.as_tree().label();
        if (l.is_atom()) continue;
        std::vector<Tree> singles;
        for (const Atom& a : l.members()) singles.push_back(Tree(Label::atom(a)));
        bracket_letters.emplace_back(i, bracket_polynomial(Forest(std::move(singles))));
    }
    auto eval_ij = [&x, extended, bracket_letters](int i, int j) {
        const ForestBasis& eb2 = *extended;
        DenseVec out(eb2.size(), 0.0);
        DenseVec base = x.value(i, j);
        for (int k = 0; k < eb2.size(); ++k) {
            int src = x.basis().find(eb2.forest(k));
            if (src >= 0) out[k] = base[src];
        }
        for (const auto& [idx, poly] : bracket_letters) {
            double v = 0;
            for (const auto& [f, c] : poly.terms()) {
                int src = x.basis().find(f);
                if (src >= 0)
                    v += to_double(c) * base[src];
                // terms with bracket labels vanish: they do not exist yet
            }
            out[idx] = v;
        }
        return out;
    };
    return GridRoughPath::from_function(extended, x.p(), x.grid(), eval_ij);
}

GridRoughPath pure_bracket_level2(int d, const std::vector<std::vector<double>>& q,
                                  double p, std::vector<double> grid) {
    if (std::floor(p) != 2) throw std::invalid_argument("needs p in [2,3)");
    auto basis = ForestBasis::make(Alphabet::numeric(d), Extension::simple, 2);
    // components: ladders [a]_b = -q_ab h / 2, letters (ab) = q_ab h, rest 0
    std::vector<std::pair<int, double>> slots;
    for (int i = 1; i < basis->size(); ++i) {
        const Forest& f = basis->forest(i);
        if (!f.is_tree()) continue;
        const Tree& t = f.as_tree();
        if (t.vertex_count() == 2) {
            int b = t.label().as_atom().id;
            int a = t.children()[0].label().as_atom().id;
            slots.emplace_back(i, -0.5 * q[a][b]);
        } else if (t.vertex_count() == 1 && !t.label().is_atom()) {
            const auto& ms = t.label().members();
            slots.emplace_back(i, q[ms[0].id][ms[1].id]);
        }
    }
    std::vector<double> g = grid;
    auto eval_ij = [basis, slots, g](int i, int j) {
        DenseVec out(basis->size(), 0.0);
        out[0] = 1.0;
        double h = g[j] - g[i];
        for (const auto& [idx, rate] : slots) out[idx] = rate * h;
        return out;
    };
    return GridRoughPath::from_function(basis, p, std::move(grid), eval_ij);
}

GridRoughPath quasi_exp_driver(std::shared_ptr<const ForestBasis> simple_basis, double p,
                               std::vector<double> grid,
                               const std::map<Label, double>& rates) {
    const ForestBasis& b = *simple_basis;
    // X^f(s,t) = sum_w phi~(f)_w (prod_l rate(l)) (t-s)^|w| / |w|! ; collapse
    // the word sum into coefficients by word length.
    int n = b.max_degree();
    std::vector<std::vector<double>> by_len(b.size(), std::vector<double>(n + 1, 0.0));
    for (int i = 0; i < b.size(); ++i) {
        WordSum ws = phi_tilde(b.forest(i));
        for (const auto& [w, c] : ws.terms()) {
            double r = to_double(c);
            for (const Label& l : w) {
                auto it = rates.find(l);
                r *= (it == rates.end() ? 0.0 : it->second);
            }
            if (r != 0.0) by_len[i][w.size()] += r;
        }
    }
    std::vector<double> inv_fact(n + 1, 1.0);
    for (int k = 1; k <= n; ++k) inv_fact[k] = inv_fact[k - 1] / k;
    std::vector<double> g = grid;
    auto eval_ij = [simple_basis, by_len, inv_fact, g, n](int i, int j) {
        double h = g[j] - g[i];
        DenseVec out(simple_basis->size(), 0.0);
        out[0] = 1.0;
        for (int f = 1; f < simple_basis->size(); ++f) {
            double s = 0, hk = 1;
            for (int k = 1; k <= n; ++k) {
                hk *= h;
                s += by_len[f][k] * hk * inv_fact[k];
            }
            out[f] = s;
        }
        return out;
    };
    return GridRoughPath::from_function(simple_basis, p, std::move(grid), eval_ij);
}

GridRoughPath sew(std::shared_ptr<const ForestBasis> basis, double p,
                  std::vector<double> grid, const GridRoughPath::Eval& almost, double tol,
                  SewStats* stats, bool throw_on_failure) {
    int n = static_cast<int>(grid.size()) - 1;
    std::vector<DenseVec> cells(n);
    for (int i = 0; i < n; ++i) cells[i] = almost(i, i + 1);
    GridRoughPath out(basis, p, grid, std::move(cells));

    // Dyadic refinement sequence of the full span.
    SewStats local;
    std::vector<int> cuts = {0, n};
    DenseVec prev = almost(0, n);
    while (true) {
        std::vector<int> finer = {0};
        for (size_t k = 0; k + 1 < cuts.size(); ++k) {
            int lo = cuts[k], hi = cuts[k + 1];
            if (hi - lo > 1) finer.push_back((lo + hi) / 2);
            finer.push_back(hi);
        }
        if (finer.size() == cuts.size()) break;  // fully refined
        DenseVec cur = identity_value(*basis);
        for (size_t k = 0; k + 1 < finer.size(); ++k)
            cur = chen_compose(*basis, cur, almost(finer[k], finer[k + 1]));
        local.refinement_diffs.push_back(max_abs_diff(cur, prev));
        prev = std::move(cur);
        cuts = std::move(finer);
        if (local.refinement_diffs.back() < tol) {
            local.converged = true;
            break;
        }
    }
    // The finest composition is the sewn value itself; require the sequence
    // to have settled by then.
    if (!local.refinement_diffs.empty()) local.last_diff = local.refinement_diffs.back();
    if (!local.converged && local.last_diff < tol) local.converged = true;
    if (local.refinement_diffs.empty()) local.converged = true;
    if (stats) *stats = local;
    if (!local.converged && throw_on_failure) {
        std::ostringstream os;
        os << "sewing did not converge: last refinement difference " << local.last_diff
           << " (tolerance " << tol << ")";
        throw std::runtime_error(os.str());
    }
    return out;
}

QuasiGeometricReport quasi_geometric_defect(const GridRoughPath& x) {
    const ForestBasis& b = x.basis();
    QuasiGeometricReport report;

    std::vector<std::pair<int, int>> spans;
    {
        // public dyadic spans via the regularity walk
        int n = x.cell_count();
        int leaves = 1;
        while (leaves < n) leaves *= 2;
        std::function<void(int, int)> walk = [&](int lo, int hi) {
            if (lo >= n) return;
            spans.emplace_back(lo, std::min(hi, n));
            if (hi - lo == 1) return;
            int mid = (lo + hi) / 2;
            walk(lo, mid);
            walk(mid, hi);
        };
        walk(0, leaves);
    }

    // Word expansion per basis forest.
    for (int i = 1; i < b.size(); ++i) {
        const Forest& f = b.forest(i);
        AlgElem ladders = iota(phi_tilde(f));
        AlgElem diff = AlgElem::of(f) - ladders;
        double worst = 0;
        for (const auto& [lo, hi] : spans)
            worst = std::max(worst, std::abs(x.evaluate(lo, hi, diff)));
        report.ladder_defect[f] = worst;
        report.max_defect = std::max(report.max_defect, worst);
    }

    // Label-joining bracket relations.
    for (const ConsistencyInstance& inst :
         consistency_instances(b.base(), b.max_degree(), true)) {
        AlgElem diff = inst.lhs - inst.rhs;
        double worst = 0;
        for (const auto& [lo, hi] : spans)
            worst = std::max(worst, std::abs(x.evaluate(lo, hi, diff)));
        auto key = attach_at(Forest::single(Label::of_forest(inst.f).value()), inst.g,
                             inst.vertex);
        auto it = report.joining_defect.find(key);
        if (it == report.joining_defect.end())
            report.joining_defect[key] = worst;
        else
            it->second = std::max(it->second, worst);
        report.max_defect = std::max(report.max_defect, worst);
    }
    return report;
}

ConsistencyReport consistency_defect(const GridRoughPath& xhat, int max_degree) {
    const ForestBasis& b = xhat.basis();
    if (max_degree < 0) max_degree = b.max_degree();
    ConsistencyReport report;
    std::vector<std::pair<int, int>> spans;
    int n = xhat.cell_count();
    int leaves = 1;
    while (leaves < n) leaves *= 2;
    std::function<void(int, int)> walk = [&](int lo, int hi) {
        if (lo >= n) return;
        spans.emplace_back(lo, std::min(hi, n));
        if (hi - lo == 1) return;
        int mid = (lo + hi) / 2;
        walk(lo, mid);
        walk(mid, hi);
    };
    walk(0, leaves);

    bool join = b.extension() == Extension::simple;
    for (const ConsistencyInstance& inst :
         consistency_instances(b.base(), max_degree, join)) {
        AlgElem diff = inst.lhs - inst.rhs;
        bool in_basis = true;
        for (const auto& [f, c] : diff.terms())
            if (b.find(f) < 0) in_basis = false;
        if (!in_basis) continue;
        for (const auto& [lo, hi] : spans) {
            double d = std::abs(xhat.evaluate(lo, hi, diff));
            if (d > report.max_defect) {
                report.max_defect = d;
                report.worst_f = inst.f;
                report.worst_g = inst.g;
                report.worst_vertex = inst.vertex;
            }
        }
    }
    return report;
}

double consistency_defect_at(const GridRoughPath& xhat, const Forest& f, const Forest& g,
                             int vertex, int i, int j) {
    auto label = Label::of_forest(f);
    if (!label) throw std::invalid_argument("forest has no bracket label");
    AlgElem lhs = AlgElem::of(attach_at(Forest::single(*label), g, vertex));
    AlgElem rhs = attach_elem(bracket_polynomial(f), g, vertex);
    return std::abs(xhat.evaluate(i, j, lhs - rhs));
}

void save_rough_path(const GridRoughPath& x, std::ostream& os) {
    const ForestBasis& b = x.basis();
    os << "alphabet";
    for (int i = 0; i < b.base().size(); ++i)
        os << ' ' << b.base().names[i] << ':' << b.base().weights[i];
    os << '\n';
    const char* ext = b.extension() == Extension::none     ? "none"
                      : b.extension() == Extension::simple ? "simple"
                                                           : "full";
    os << "extension " << ext << '\n';
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", x.p());
    os << "p " << buf << '\n';
    os << "grid";
    for (double t : x.grid()) {
        std::snprintf(buf, sizeof buf, "%.17g", t);
        os << ' ' << buf;
    }
    os << '\n';
    for (int i = 0; i < x.cell_count(); ++i) {
        DenseVec v = x.value(i, i + 1);
        for (int f = 1; f < b.size(); ++f) {
            std::snprintf(buf, sizeof buf, "%.17g", v[f]);
            os << i << ' ' << i + 1 << ' ' << print(b.forest(f), b.base()) << ' ' << buf
               << '\n';
        }
    }
}

GridRoughPath load_rough_path(std::istream& is) {
    std::string key;
    Alphabet alpha;
    if (!(is >> key) || key != "alphabet") throw std::invalid_argument("expected alphabet");
    std::string rest;
    std::getline(is, rest);
    {
        std::istringstream ls(rest);
        std::string item;
        while (ls >> item) {
            auto colon = item.rfind(':');
            if (colon == std::string::npos) throw std::invalid_argument("bad letter: " + item);
            alpha.names.push_back(item.substr(0, colon));
            alpha.weights.push_back(std::stoi(item.substr(colon + 1)));
        }
    }
    if (!(is >> key) || key != "extension") throw std::invalid_argument("expected extension");
    std::string ext_name;
    is >> ext_name;
    Extension ext = ext_name == "none"     ? Extension::none
                    : ext_name == "simple" ? Extension::simple
                                           : Extension::full;
    if (!(is >> key) || key != "p") throw std::invalid_argument("expected p");
    double p;
    is >> p;
    if (!(is >> key) || key != "grid") throw std::invalid_argument("expected grid");
    std::getline(is, rest);
    std::vector<double> grid;
    {
        std::istringstream ls(rest);
        double t;
        while (ls >> t) grid.push_back(t);
    }
    if (grid.size() < 2) throw std::invalid_argument("grid too small");
    auto basis = ForestBasis::make(alpha, ext, static_cast<int>(std::floor(p)));
    std::vector<DenseVec> cells(grid.size() - 1, identity_value(*basis));
    int i, j;
    std::string literal;
    double value;
    while (is >> i >> j >> literal >> value) {
        if (j != i + 1 || i < 0 || j >= static_cast<int>(grid.size()))
            throw std::invalid_argument("bad cell indices");
        Forest f = parse_forest(literal, alpha);
        cells[i][basis->index_of(f)] = value;
    }
    return GridRoughPath(basis, p, std::move(grid), std::move(cells));
}

std::vector<double> dyadic_grid(double t0, double t1, int depth) {
    int n = 1 << depth;
    std::vector<double> g(n + 1);
    for (int i = 0; i <= n; ++i) g[i] = t0 + (t1 - t0) * (double(i) / n);
    return g;
}

}  // namespace bramble
