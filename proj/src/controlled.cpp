#include "bramble/controlled.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

namespace bramble {

namespace {

// Compiled polynomial with double coefficients for hot evaluation loops.
struct NumPoly {
    std::vector<std::pair<std::vector<int>, double>> terms;

    static NumPoly of(const Polynomial& p) {
        NumPoly n;
        for (const auto& [e, c] : p.terms()) n.terms.emplace_back(e, to_double(c));
        return n;
    }

    double eval(const std::vector<double>& x) const {
        double s = 0;
        for (const auto& [e, c] : terms) {
            double m = c;
            for (size_t i = 0; i < e.size(); ++i)
                for (int k = 0; k < e[i]; ++k) m *= x[i];
            s += m;
        }
        return s;
    }
};

// Ordered tuples of nonempty sub-multisets whose product is f.
void factorizations_rec(const std::vector<Tree>& remaining,
                        std::vector<std::vector<Tree>>& parts,
                        std::vector<std::vector<std::vector<Tree>>>& out) {
    if (remaining.empty()) {
        if (!parts.empty()) out.push_back(parts);
        return;
    }
    // Choose the sub-multiset containing nothing-specific: enumerate all
    // nonempty sub-multisets as the next part. Group identical trees.
    std::vector<std::pair<Tree, int>> groups;
    for (const Tree& t : remaining) {
        if (!groups.empty() && compare(groups.back().first, t) == 0)
            groups.back().second++;
        else
            groups.emplace_back(t, 1);
    }
    int g = static_cast<int>(groups.size());
    std::vector<int> take(g, 0);
    while (true) {
        int i = 0;
        while (i < g && take[i] == groups[i].second) take[i++] = 0;
        if (i == g) break;
        take[i]++;
        std::vector<Tree> part, rest;
        for (int k = 0; k < g; ++k) {
            for (int r = 0; r < take[k]; ++r) part.push_back(groups[k].first);
            for (int r = take[k]; r < groups[k].second; ++r) rest.push_back(groups[k].first);
        }
        parts.push_back(part);
        factorizations_rec(rest, parts, out);
        parts.pop_back();
    }
}

std::vector<std::vector<Forest>> ordered_factorizations(const Forest& f) {
    std::vector<std::vector<std::vector<Tree>>> raw;
    std::vector<std::vector<Tree>> parts;
    factorizations_rec(f.trees(), parts, raw);
    std::vector<std::vector<Forest>> out;
    for (auto& tuple : raw) {
        std::vector<Forest> fs;
        for (auto& ts : tuple) fs.push_back(Forest(ts));
        out.push_back(std::move(fs));
    }
    return out;
}

std::vector<std::pair<int, int>> dyadic_spans_of(const GridRoughPath& x) {
    std::vector<std::pair<int, int>> spans;
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
    return spans;
}

}  // namespace

ControlledPath::ControlledPath(std::shared_ptr<const GridRoughPath> driver, int target_dim)
    : driver_(std::move(driver)), dim_(target_dim) {
    data_.assign(dim_, std::vector<std::vector<double>>(
                           driver_->basis().size(),
                           std::vector<double>(driver_->grid().size(), 0.0)));
}

double ControlledPath::coeff(int k, int forest_index, int time) const {
    return data_[k][forest_index][time];
}

void ControlledPath::set_coeff(int k, int forest_index, int time, double v) {
    if (driver_->basis().degree(forest_index) > coeff_degree_bound() && forest_index != 0)
        throw std::invalid_argument("coefficient degree above the controlled range");
    data_[k][forest_index][time] = v;
}

bool ControlledPath::vanishes_on_proper_forests() const {
    const ForestBasis& b = driver_->basis();
    for (int f = 0; f < b.size(); ++f) {
        if (b.forest(f).factor_count() < 2) continue;
        for (int k = 0; k < dim_; ++k)
            for (double v : data_[k][f])
                if (v != 0.0) return false;
    }
    return true;
}

bool ControlledPath::has_extended_proper_coefficient() const {
    const ForestBasis& b = driver_->basis();
    for (int f = 0; f < b.size(); ++f) {
        const Forest& forest = b.forest(f);
        if (forest.factor_count() < 2) continue;
        bool has_ext = false;
        for (const Tree& t : forest.trees()) {
            std::function<bool(const Tree&)> any_ext = [&](const Tree& tr) {
                if (!tr.label().is_atom()) return true;
                for (const Tree& c : tr.children())
                    if (any_ext(c)) return true;
                return false;
            };
            if (any_ext(t)) has_ext = true;
        }
        if (!has_ext) continue;
        for (int k = 0; k < dim_; ++k)
            for (double v : data_[k][f])
                if (v != 0.0) return true;
    }
    return false;
}

ControlledPath ControlledPath::embedded(
    std::shared_ptr<const GridRoughPath> extended) const {
    if (extended->grid() != driver_->grid())
        throw std::invalid_argument("grids differ");
    ControlledPath out(extended, dim_);
    const ForestBasis& eb = extended->basis();
    const ForestBasis& bb = driver_->basis();
    for (int f = 0; f < bb.size(); ++f) {
        if (bb.degree(f) > out.coeff_degree_bound() && f != 0) continue;
        int idx = eb.find(bb.forest(f));
        if (idx < 0) continue;
        for (int k = 0; k < dim_; ++k)
            for (int t = 0; t < times(); ++t) out.data_[k][idx][t] = data_[k][f][t];
    }
    return out;
}

std::vector<std::vector<double>> trace_values(const GridRoughPath& x,
                                              const std::vector<double>& x0) {
    int d = x.basis().base().size();
    int n = static_cast<int>(x.grid().size());
    std::vector<std::vector<double>> out(d, std::vector<double>(n, 0.0));
    for (int a = 0; a < d; ++a) {
        int idx = x.basis().letter_index(Label::atom(x.basis().base().atom(a)));
        out[a][0] = a < static_cast<int>(x0.size()) ? x0[a] : 0.0;
        for (int i = 1; i < n; ++i)
            out[a][i] = out[a][i - 1] + (idx >= 0 ? x.component(i - 1, i, idx) : 0.0);
    }
    return out;
}

ControlledPath identity_controlled(std::shared_ptr<const GridRoughPath> driver,
                                   const std::vector<double>& x0) {
    const ForestBasis& b = driver->basis();
    int d = b.base().size();
    ControlledPath h(driver, d);
    auto tv = trace_values(*driver, x0);
    for (int a = 0; a < d; ++a) {
        int idx = b.letter_index(Label::atom(b.base().atom(a)));
        for (int t = 0; t < h.times(); ++t) {
            h.set_trace(a, t, tv[a][t]);
            if (idx >= 0 && b.degree(idx) <= h.coeff_degree_bound())
                h.set_coeff(a, idx, t, 1.0);
        }
    }
    return h;
}

ControlledPath function_of_trace(const std::vector<Polynomial>& comps,
                                 std::shared_ptr<const GridRoughPath> driver,
                                 const std::vector<double>& x0) {
    const ForestBasis& b = driver->basis();
    int d = b.base().size();
    for (const Polynomial& p : comps)
        if (p.nvars() != d) throw std::invalid_argument("component arity mismatch");
    ControlledPath h(driver, static_cast<int>(comps.size()));
    auto tv = trace_values(*driver, x0);
    int n = h.times();

    for (int f = 0; f < b.size(); ++f) {
        if (b.degree(f) > h.coeff_degree_bound() && f != 0) continue;
        const Forest& forest = b.forest(f);
        // Only products of single atom-labelled vertices carry coefficients.
        bool ok = forest.is_empty() ||
                  (forest.is_single_vertex_product() && [&] {
                      for (const Tree& t : forest.trees())
                          if (!t.label().is_atom()) return false;
                      return true;
                  }());
        if (!ok) continue;
        std::vector<int> dirs;
        for (const Tree& t : forest.trees()) dirs.push_back(t.label().as_atom().id);
        for (size_t k = 0; k < comps.size(); ++k) {
            Polynomial p = comps[k];
            for (int dir : dirs) p = p.derivative(dir);
            if (p.is_zero()) continue;
            NumPoly np = NumPoly::of(p);
            std::vector<double> x(d);
            for (int t = 0; t < n; ++t) {
                for (int a = 0; a < d; ++a) x[a] = tv[a][t];
                h.set_coeff(static_cast<int>(k), f, t, np.eval(x));
            }
        }
    }
    return h;
}

double expansion_defect(const ControlledPath& h, int k, const Forest& f, int i, int j) {
    const GridRoughPath& x = h.driver();
    const ForestBasis& b = x.basis();
    int fi = b.index_of(f);
    double expected = h.coeff(k, fi, j);
    double sum = 0;
    DenseVec v = x.value(i, j);
    for (int g = 0; g < b.size(); ++g) {
        if (b.degree(g) + f.degree() > b.max_degree()) continue;
        double xg = v[g];
        if (xg == 0.0) continue;
        double invn = 1.0 / double(symmetry_factor(b.forest(g)));
        for (const Forest& grafted : graft_ways(b.forest(g), f)) {
            if (grafted.degree() > h.coeff_degree_bound()) continue;
            int gi = b.find(grafted);
            if (gi < 0) continue;
            sum += invn * h.coeff(k, gi, i) * xg;
        }
    }
    return std::abs(expected - sum);
}

double max_expansion_defect(const ControlledPath& h, int i, int j) {
    const ForestBasis& b = h.driver().basis();
    double m = 0;
    for (int f = 0; f < b.size(); ++f) {
        if (b.degree(f) > h.coeff_degree_bound() && f != 0) continue;
        for (int k = 0; k < h.target_dim(); ++k)
            m = std::max(m, expansion_defect(h, k, b.forest(f), i, j));
    }
    return m;
}

ControlledPath compose_smooth(const PolyMap& f, const ControlledPath& h) {
    if (f.source_dim != h.target_dim())
        throw std::invalid_argument("composition dimension mismatch");
    const ForestBasis& b = h.driver().basis();
    int e = h.target_dim();
    int c = f.target_dim();
    int n = h.times();
    ControlledPath out(h.driver_ptr(), c);

    // Cache of compiled derivatives, keyed by sorted direction tuples.
    std::map<std::pair<int, std::vector<int>>, NumPoly> dcache;
    auto deriv = [&](int comp, std::vector<int> dirs) -> const NumPoly& {
        std::sort(dirs.begin(), dirs.end());
        auto key = std::make_pair(comp, dirs);
        auto it = dcache.find(key);
        if (it == dcache.end()) {
            Polynomial p = f.comps[comp];
            for (int d : dirs) p = p.derivative(d);
            it = dcache.emplace(key, NumPoly::of(p)).first;
        }
        return it->second;
    };

    std::vector<double> htrace(e);
    for (int t = 0; t < n; ++t) {
        for (int k = 0; k < e; ++k) htrace[k] = h.trace(k, t);
        for (int comp = 0; comp < c; ++comp)
            out.set_trace(comp, t, deriv(comp, {}).eval(htrace));
    }

    for (int fi = 1; fi < b.size(); ++fi) {
        if (b.degree(fi) > out.coeff_degree_bound()) continue;
        const Forest& forest = b.forest(fi);
        auto tuples = ordered_factorizations(forest);
        double nf = double(symmetry_factor(forest));
        for (const auto& parts : tuples) {
            int m = static_cast<int>(parts.size());
            double weight = nf;
            for (int r = 1; r <= m; ++r) weight /= r;
            std::vector<int> part_idx;
            for (const Forest& p : parts) {
                weight /= double(symmetry_factor(p));
                part_idx.push_back(b.index_of(p));
            }
            // sum over k-tuples in [e]^m
            std::vector<int> ks(m, 0);
            while (true) {
                for (int t = 0; t < n; ++t) {
                    double prod = weight;
                    for (int r = 0; r < m; ++r) prod *= h.coeff(ks[r], part_idx[r], t);
                    if (prod == 0.0) continue;
                    for (int k = 0; k < e; ++k) htrace[k] = h.trace(k, t);
                    for (int comp = 0; comp < c; ++comp) {
                        const NumPoly& np = deriv(comp, ks);
                        double v = np.eval(htrace);
                        if (v != 0.0)
                            out.set_coeff(comp, fi, t, out.coeff(comp, fi, t) + prod * v);
                    }
                }
                int r = 0;
                while (r < m && ++ks[r] == e) ks[r++] = 0;
                if (r == m) break;
            }
        }
    }
    return out;
}

ControlledPath controlled_product(const std::vector<const ControlledPath*>& factors,
                                  const std::vector<int>& columns) {
    if (factors.empty()) throw std::invalid_argument("empty product");
    const ControlledPath& first = *factors.front();
    const ForestBasis& b = first.driver().basis();
    int n = first.times();
    ControlledPath out(first.driver_ptr(), 1);
    // Fold with the two-factor rule. Summing over factor-subset masks with
    // unit weight realizes the symmetry ratio N(f)/(N(f1)N(f2)) exactly.
    std::vector<std::vector<double>> acc(b.size(), std::vector<double>(n, 0.0));
    for (int f = 0; f < b.size(); ++f)
        if (f == 0 || b.degree(f) <= first.coeff_degree_bound())
            for (int t = 0; t < n; ++t) acc[f][t] = factors[0]->coeff(columns[0], f, t);

    for (size_t idx = 1; idx < factors.size(); ++idx) {
        const ControlledPath& g = *factors[idx];
        int col = columns[idx];
        std::vector<std::vector<double>> next(b.size(), std::vector<double>(n, 0.0));
        for (int f = 0; f < b.size(); ++f) {
            if (b.degree(f) > first.coeff_degree_bound() && f != 0) continue;
            const auto& ts = b.forest(f).trees();
            size_t m = ts.size();
            for (size_t mask = 0; mask < (size_t{1} << m); ++mask) {
                Forest left, right;
                for (size_t r = 0; r < m; ++r)
                    if (mask >> r & 1)
                        left = left.times(ts[r]);
                    else
                        right = right.times(ts[r]);
                int li = b.index_of(left), ri = b.index_of(right);
                for (int t = 0; t < n; ++t)
                    next[f][t] += acc[li][t] * g.coeff(col, ri, t);
            }
        }
        acc = std::move(next);
    }
    for (int f = 0; f < b.size(); ++f) {
        if (b.degree(f) > out.coeff_degree_bound() && f != 0) continue;
        for (int t = 0; t < n; ++t) out.set_coeff(0, f, t, acc[f][t]);
    }
    return out;
}

std::vector<double> rough_integral(const Integrand& h, int i, int j, double tol,
                                   RefineStats* stats) {
    const GridRoughPath& x = h.path.driver();
    const ForestBasis& b = x.basis();
    int e = h.e;
    // Per letter: (tree index, children forest index, 1/N(children)).
    struct Term {
        int tree, kids;
        double invn;
    };
    std::vector<std::vector<Term>> plans(h.letters.size());
    for (size_t bi = 0; bi < h.letters.size(); ++bi) {
        for (int t = 1; t < b.size(); ++t) {
            if (!b.is_tree(t)) continue;
            if (!(b.root_label(t) == h.letters[bi])) continue;
            int kids = b.children_index(t);
            if (b.degree(kids) > h.path.coeff_degree_bound() && kids != 0) continue;
            plans[bi].push_back(
                Term{t, kids, 1.0 / double(symmetry_factor(b.forest(kids)))});
        }
    }
    auto level_sum = [&](const std::vector<int>& cuts) {
        std::vector<double> acc(e, 0.0);
        for (size_t c = 0; c + 1 < cuts.size(); ++c) {
            int u = cuts[c], v = cuts[c + 1];
            DenseVec xv = x.value(u, v);
            for (int k = 0; k < e; ++k) {
                double s = 0;
                for (size_t bi = 0; bi < h.letters.size(); ++bi) {
                    int column = h.col(k, static_cast<int>(bi));
                    for (const Term& term : plans[bi])
                        s += term.invn * h.path.coeff(column, term.kids, u) * xv[term.tree];
                }
                acc[k] += s;
            }
        }
        return acc;
    };

    std::vector<int> cuts = {i, j};
    std::vector<double> prev = level_sum(cuts);
    RefineStats local;
    while (true) {
        std::vector<int> finer = {cuts.front()};
        for (size_t c = 0; c + 1 < cuts.size(); ++c) {
            if (cuts[c + 1] - cuts[c] > 1) finer.push_back((cuts[c] + cuts[c + 1]) / 2);
            finer.push_back(cuts[c + 1]);
        }
        if (finer.size() == cuts.size()) {
            local.converged = local.last_change < tol || local.levels == 0;
            break;
        }
        std::vector<double> cur = level_sum(finer);
        double change = 0;
        for (int k = 0; k < e; ++k) change = std::max(change, std::abs(cur[k] - prev[k]));
        local.levels++;
        local.last_change = change;
        prev = std::move(cur);
        cuts = std::move(finer);
        if (change < tol) {
            local.converged = true;
            break;
        }
    }
    if (stats) *stats = local;
    return prev;
}

ControlledPath promote_integral(const Integrand& h, std::vector<double> initial) {
    const GridRoughPath& x = h.path.driver();
    const ForestBasis& b = x.basis();
    int e = h.e;
    int n = h.path.times();
    ControlledPath out(h.path.driver_ptr(), e);
    initial.resize(e, 0.0);
    // Trace by cell-level sums (the finest partition available).
    std::vector<double> acc = initial;
    for (int k = 0; k < e; ++k) out.set_trace(k, 0, acc[k]);
    for (int cell = 0; cell + 1 < n; ++cell) {
        std::vector<double> inc = rough_integral(h, cell, cell + 1, 1e300);
        for (int k = 0; k < e; ++k) {
            acc[k] += inc[k];
            out.set_trace(k, cell + 1, acc[k]);
        }
    }
    // Coefficients on trees [f]_b only.
    for (int t = 1; t < b.size(); ++t) {
        if (!b.is_tree(t) || b.degree(t) > out.coeff_degree_bound()) continue;
        const Label& root = b.root_label(t);
        int bi = -1;
        for (size_t r = 0; r < h.letters.size(); ++r)
            if (h.letters[r] == root) bi = static_cast<int>(r);
        if (bi < 0) continue;
        int kids = b.children_index(t);
        if (b.degree(kids) > h.path.coeff_degree_bound() && kids != 0) continue;
        for (int k = 0; k < e; ++k) {
            int column = h.col(k, bi);
            for (int time = 0; time < n; ++time)
                out.set_coeff(k, t, time, h.path.coeff(column, kids, time));
        }
    }
    return out;
}

PolyMap rde_tree_coefficient(const RdeSystem& sys, const Tree& t) {
    int e = sys.e;
    int L = static_cast<int>(sys.letters.size());
    int bi = -1;
    for (int r = 0; r < L; ++r)
        if (sys.letters[r] == t.label()) bi = r;
    if (bi < 0) throw std::invalid_argument("tree letter outside the system");

    std::vector<PolyMap> kids;
    for (const Tree& c : t.children()) kids.push_back(rde_tree_coefficient(sys, c));
    int m = static_cast<int>(kids.size());

    PolyMap out(e, e);
    std::vector<int> ks(m, 0);
    while (true) {
        for (int k = 0; k < e; ++k) {
            Polynomial p = sys.f.comps[sys.col(k, bi)];
            for (int r = 0; r < m; ++r) p = p.derivative(ks[r]);
            if (!p.is_zero()) {
                for (int r = 0; r < m; ++r) p = p * kids[r].comps[ks[r]];
                out.comps[k] += p;
            }
        }
        int r = 0;
        while (r < m && ++ks[r] == e) ks[r++] = 0;
        if (r == m || m == 0) break;
    }
    return out;
}

ControlledPath davie_solve(const RdeSystem& sys,
                           std::shared_ptr<const GridRoughPath> driver,
                           const std::vector<double>& y0) {
    const ForestBasis& b = driver->basis();
    int e = sys.e;
    int n = static_cast<int>(driver->grid().size());

    // Coefficient maps for every tree in the basis.
    std::vector<int> tree_ids;
    std::vector<std::vector<NumPoly>> coeffs;  // per tree id: e components
    std::vector<double> invn;
    for (int t = 1; t < b.size(); ++t) {
        if (!b.is_tree(t)) continue;
        PolyMap f = rde_tree_coefficient(sys, b.forest(t).as_tree());
        tree_ids.push_back(t);
        std::vector<NumPoly> np;
        for (int k = 0; k < e; ++k) np.push_back(NumPoly::of(f.comps[k]));
        coeffs.push_back(std::move(np));
        invn.push_back(1.0 / double(symmetry_factor(b.forest(t))));
    }

    ControlledPath out(driver, e);
    std::vector<double> y = y0;
    for (int time = 0; time < n; ++time) {
        for (int k = 0; k < e; ++k) out.set_trace(k, time, y[k]);
        // Controlled coefficients on trees of degree <= N-1.
        for (size_t r = 0; r < tree_ids.size(); ++r) {
            int t = tree_ids[r];
            if (b.degree(t) > out.coeff_degree_bound()) continue;
            for (int k = 0; k < e; ++k)
                out.set_coeff(k, t, time, coeffs[r][k].eval(y));
        }
        if (time + 1 < n) {
            DenseVec xv = driver->value(time, time + 1);
            std::vector<double> ynext = y;
            for (size_t r = 0; r < tree_ids.size(); ++r)
                for (int k = 0; k < e; ++k)
                    ynext[k] += invn[r] * coeffs[r][k].eval(y) * xv[tree_ids[r]];
            y = std::move(ynext);
        }
    }
    return out;
}

double davie_residual(const RdeSystem& sys, const ControlledPath& y, int i, int j) {
    const GridRoughPath& x = y.driver();
    const ForestBasis& b = x.basis();
    DenseVec xv = x.value(i, j);
    double worst = 0;
    for (int k = 0; k < sys.e; ++k) {
        double s = y.trace(k, i);
        for (int t = 1; t < b.size(); ++t) {
            if (!b.is_tree(t)) continue;
            PolyMap f = rde_tree_coefficient(sys, b.forest(t).as_tree());
            std::vector<double> ys(sys.e);
            for (int r = 0; r < sys.e; ++r) ys[r] = y.trace(r, i);
            s += f.comps[k].eval(ys) * xv[t] / double(symmetry_factor(b.forest(t)));
        }
        worst = std::max(worst, std::abs(y.trace(k, j) - s));
    }
    return worst;
}

namespace {

// Integrand over every letter of the driver, components given by polynomial
// functions of the base trace: column (k, b) = polys[k][b](x).
Integrand polynomial_integrand(std::shared_ptr<const GridRoughPath> driver,
                               const std::vector<std::vector<Polynomial>>& polys,
                               const std::vector<Label>& letters,
                               const std::vector<double>& x0) {
    std::vector<Polynomial> flat;
    for (const auto& row : polys)
        for (const Polynomial& p : row) flat.push_back(p);
    Integrand h{function_of_trace(flat, driver, x0), letters,
                static_cast<int>(polys.size())};
    return h;
}

}  // namespace

double kelly_function_defect(const Polynomial& g,
                             std::shared_ptr<const GridRoughPath> xt,
                             const std::vector<double>& x0, int i, int j, double tol) {
    const ForestBasis& b = xt->basis();
    int d = b.base().size();
    if (g.nvars() != d) throw std::invalid_argument("function arity mismatch");

    auto tv = trace_values(*xt, x0);
    std::vector<double> xi(d), xj(d);
    for (int a = 0; a < d; ++a) {
        xi[a] = tv[a][i];
        xj[a] = tv[a][j];
    }
    double lhs = g.eval(xj) - g.eval(xi);

    std::vector<Label> letters = b.letters();
    std::vector<std::vector<Polynomial>> polys(1);
    for (const Label& l : letters) {
        Polynomial p = g;
        long nfac = 1;
        {
            // derivative along the multiset; weight 1/N(letter-as-product)
            std::vector<Tree> singles;
            for (const Atom& a : l.members()) {
                p = p.derivative(a.id);
                singles.push_back(Tree(Label::atom(a)));
            }
            nfac = symmetry_factor(Forest(singles));
        }
        polys[0].push_back(p.scaled(Rational(1, nfac)));
    }
    Integrand h = polynomial_integrand(xt, polys, letters, x0);
    double rhs = rough_integral(h, i, j, tol)[0];
    return std::abs(lhs - rhs);
}

double kelly_rde_defect(const Polynomial& g, const RdeSystem& sys,
                        const ControlledPath& y,
                        std::shared_ptr<const GridRoughPath> xhat, int i, int j,
                        double tol) {
    const ForestBasis& hb = xhat->basis();
    int e = sys.e;
    if (g.nvars() != e) throw std::invalid_argument("function arity mismatch");

    std::vector<double> yi(e), yj(e);
    for (int k = 0; k < e; ++k) {
        yi[k] = y.trace(k, i);
        yj[k] = y.trace(k, j);
    }
    double lhs = g.eval(yj) - g.eval(yi);

    // Integration letters: every letter of the extension, with integrand
    // polynomials in y assembled from the coefficient maps of the factors.
    std::vector<Label> letters;
    std::vector<Polynomial> integrands;
    // n = 1: plain letters of the original system.
    for (size_t r = 0; r < sys.letters.size(); ++r) {
        Polynomial p(e);
        for (int k = 0; k < e; ++k)
            p += g.derivative(k) * sys.f.comps[sys.col(k, static_cast<int>(r))];
        letters.push_back(sys.letters[r]);
        integrands.push_back(p);
    }
    // n >= 2: bracket letters labelled by proper forests of system trees.
    // 1/n! times the number of tuple orderings leaves the inverse of the
    // factor-multiplicity factorials.
    std::vector<Label> plain;
    for (int a = 0; a < hb.base().size(); ++a)
        plain.push_back(Label::atom(hb.base().atom(a)));
    for (const Forest& fb : enumerate_forests(plain, hb.max_degree())) {
        if (!fb.is_proper()) continue;
        auto label = Label::of_forest(fb);
        if (!label || !hb.has_letter(*label)) continue;
        int m = fb.factor_count();
        Polynomial p(e);
        std::vector<PolyMap> fts;
        for (const Tree& t : fb.trees()) fts.push_back(rde_tree_coefficient(sys, t));
        std::vector<int> ks(m, 0);
        while (true) {
            Polynomial dg = g;
            for (int r = 0; r < m; ++r) dg = dg.derivative(ks[r]);
            if (!dg.is_zero()) {
                Polynomial term = dg;
                for (int r = 0; r < m; ++r) term = term * fts[r].comps[ks[r]];
                p += term;
            }
            int r = 0;
            while (r < m && ++ks[r] == e) ks[r++] = 0;
            if (r == m) break;
        }
        long mult_fact = 1;
        {
            const auto& ts = fb.trees();
            size_t a = 0;
            while (a < ts.size()) {
                size_t b2 = a;
                while (b2 < ts.size() && compare(ts[a], ts[b2]) == 0) ++b2;
                for (size_t r2 = 2; r2 <= b2 - a; ++r2)
                    mult_fact *= static_cast<long>(r2);
                a = b2;
            }
        }
        letters.push_back(*label);
        integrands.push_back(p.scaled(Rational(1, mult_fact)));
    }

    // Controlled integrand: polynomial functions of the solution.
    ControlledPath yext = y.embedded(xhat);
    PolyMap pm(e, static_cast<int>(integrands.size()));
    for (size_t r = 0; r < integrands.size(); ++r) pm.comps[r] = integrands[r];
    ControlledPath columns = compose_smooth(pm, yext);
    Integrand h{std::move(columns), letters, 1};
    double rhs = rough_integral(h, i, j, tol)[0];
    return std::abs(lhs - rhs);
}

double quasi_change_of_variable_defect(const Polynomial& g, const RdeSystem& sys,
                                       const ControlledPath& y,
                                       std::shared_ptr<const GridRoughPath> xt, int i,
                                       int j, double tol) {
    const ForestBasis& b = xt->basis();
    int e = sys.e;
    int n_max = b.max_degree();
    std::vector<double> yi(e), yj(e);
    for (int k = 0; k < e; ++k) {
        yi[k] = y.trace(k, i);
        yj[k] = y.trace(k, j);
    }
    double lhs = g.eval(yj) - g.eval(yi);

    // Sum over ordered tuples of system letters; group by joined label.
    std::map<Label, Polynomial> per_letter;
    std::function<void(std::vector<int>&, int)> rec = [&](std::vector<int>& tuple,
                                                          int weight_sum) {
        int n = static_cast<int>(tuple.size());
        if (n >= 1) {
            std::vector<Label> parts;
            for (int r : tuple) parts.push_back(sys.letters[r]);
            Label joined = Label::join(parts);
            if (joined.weight() <= n_max && b.has_letter(joined)) {
                Polynomial p(e);
                std::vector<int> ks(n, 0);
                while (true) {
                    Polynomial dg = g;
                    for (int r = 0; r < n; ++r) dg = dg.derivative(ks[r]);
                    if (!dg.is_zero()) {
                        Polynomial term = dg;
                        for (int r = 0; r < n; ++r)
                            term = term * sys.f.comps[sys.col(ks[r], tuple[r])];
                        p += term;
                    }
                    int r = 0;
                    while (r < n && ++ks[r] == e) ks[r++] = 0;
                    if (r == n) break;
                }
                Rational inv_nfac(1);
                for (int r = 2; r <= n; ++r) inv_nfac /= r;
                auto [it, inserted] = per_letter.emplace(joined, p.scaled(inv_nfac));
                if (!inserted) it->second += p.scaled(inv_nfac);
            }
        }
        if (weight_sum >= n_max) return;
        for (size_t r = 0; r < sys.letters.size(); ++r) {
            int w = sys.letters[r].weight();
            if (weight_sum + w > n_max) continue;
            tuple.push_back(static_cast<int>(r));
            rec(tuple, weight_sum + w);
            tuple.pop_back();
        }
    };
    std::vector<int> tuple;
    rec(tuple, 0);

    std::vector<Label> letters;
    std::vector<Polynomial> integrands;
    for (auto& [l, p] : per_letter) {
        letters.push_back(l);
        integrands.push_back(p);
    }
    PolyMap pm(e, static_cast<int>(integrands.size()));
    for (size_t r = 0; r < integrands.size(); ++r) pm.comps[r] = integrands[r];
    ControlledPath columns = compose_smooth(pm, y);
    Integrand h{std::move(columns), letters, 1};
    double rhs = rough_integral(h, i, j, tol)[0];
    return std::abs(lhs - rhs);
}

double quasi_integral_bracket(const Integrand& h, const std::vector<int>& ks, int i,
                              int j, double tol) {
    const ForestBasis& b = h.path.driver().basis();
    int n = static_cast<int>(ks.size());
    int n_max = b.max_degree();
    // integrand over joined letters: sum over ordered tuples of h-letters
    std::map<Label, int> letter_pos;
    std::vector<Label> letters;
    std::vector<std::vector<std::pair<double, std::vector<int>>>> tuples_per_letter;
    std::function<void(std::vector<int>&, int)> rec = [&](std::vector<int>& tuple,
                                                          int weight_sum) {
        if (static_cast<int>(tuple.size()) == n) {
            std::vector<Label> parts;
            for (int r : tuple) parts.push_back(h.letters[r]);
            Label joined = Label::join(parts);
            if (joined.weight() > n_max || !b.has_letter(joined)) return;
            auto [it, inserted] = letter_pos.emplace(joined, letters.size());
            if (inserted) {
                letters.push_back(joined);
                tuples_per_letter.emplace_back();
            }
            tuples_per_letter[it->second].emplace_back(1.0, tuple);
            return;
        }
        for (size_t r = 0; r < h.letters.size(); ++r) {
            int w = h.letters[r].weight();
            if (weight_sum + w > n_max) continue;
            tuple.push_back(static_cast<int>(r));
            rec(tuple, weight_sum + w);
            tuple.pop_back();
        }
    };
    std::vector<int> tuple;
    rec(tuple, 0);

    // columns: product controlled paths per joined letter
    ControlledPath columns(h.path.driver_ptr(), static_cast<int>(letters.size()));
    for (size_t li = 0; li < letters.size(); ++li) {
        for (const auto& [w, tup] : tuples_per_letter[li]) {
            std::vector<const ControlledPath*> factors(n, &h.path);
            std::vector<int> cols(n);
            for (int r = 0; r < n; ++r) cols[r] = h.col(ks[r], tup[r]);
            ControlledPath prod = controlled_product(factors, cols);
            for (int f = 0; f < b.size(); ++f) {
                if (b.degree(f) > columns.coeff_degree_bound() && f != 0) continue;
                for (int t = 0; t < columns.times(); ++t)
                    columns.set_coeff(static_cast<int>(li), f, t,
                                      columns.coeff(static_cast<int>(li), f, t) +
                                          w * prod.coeff(0, f, t));
            }
        }
    }
    Integrand hb{std::move(columns), letters, 1};
    return rough_integral(hb, i, j, tol)[0];
}

double quasi_rde_bracket(const RdeSystem& sys, const ControlledPath& y,
                         const std::vector<int>& ks, int i, int j, double tol) {
    const ForestBasis& b = y.driver().basis();
    int e = sys.e;
    int n = static_cast<int>(ks.size());
    int n_max = b.max_degree();
    std::map<Label, Polynomial> per_letter;
    std::function<void(std::vector<int>&, int)> rec = [&](std::vector<int>& tuple,
                                                          int weight_sum) {
        if (static_cast<int>(tuple.size()) == n) {
            std::vector<Label> parts;
            for (int r : tuple) parts.push_back(sys.letters[r]);
            Label joined = Label::join(parts);
            if (joined.weight() > n_max || !b.has_letter(joined)) return;
            Polynomial term = Polynomial::constant(e, 1);
            for (int r = 0; r < n; ++r)
                term = term * sys.f.comps[sys.col(ks[r], tuple[r])];
            auto [it, inserted] = per_letter.emplace(joined, term);
            if (!inserted) it->second += term;
            return;
        }
        for (size_t r = 0; r < sys.letters.size(); ++r) {
            int w = sys.letters[r].weight();
            if (weight_sum + w > n_max) continue;
            tuple.push_back(static_cast<int>(r));
            rec(tuple, weight_sum + w);
            tuple.pop_back();
        }
    };
    std::vector<int> tuple;
    rec(tuple, 0);

    std::vector<Label> letters;
    std::vector<Polynomial> integrands;
    for (auto& [l, p] : per_letter) {
        letters.push_back(l);
        integrands.push_back(p);
    }
    PolyMap pm(e, static_cast<int>(integrands.size()));
    for (size_t r = 0; r < integrands.size(); ++r) pm.comps[r] = integrands[r];
    ControlledPath columns = compose_smooth(pm, y);
    Integrand h{std::move(columns), letters, 1};
    return rough_integral(h, i, j, tol)[0];
}

}  // namespace bramble
