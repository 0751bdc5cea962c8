#include "bramble/lift.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

#include "bramble/forest_io.hpp"

namespace bramble {

AlmostLift::AlmostLift(const ControlledPath& h,
                       std::shared_ptr<const ForestBasis> target_basis)
    : h_(&h), target_basis_(std::move(target_basis)) {
    if (h.target_dim() != static_cast<int>(target_basis_->letters().size()))
        throw std::invalid_argument("column count does not match the target letters");
}

const std::vector<AlmostLift::PlanTerm>& AlmostLift::plan(const Tree& t) const {
    auto it = plans_.find(t);
    if (it != plans_.end()) return it->second;

    const ForestBasis& db = h_->driver().basis();
    const int n = db.max_degree();
    const auto& letters = target_basis_->letters();

    // Vertex labels in post-order, as column positions.
    std::vector<int> columns;
    {
        std::function<void(const Tree&)> walk = [&](const Tree& node) {
            for (const Tree& c : node.children()) walk(c);
            int pos = -1;
            for (size_t r = 0; r < letters.size(); ++r)
                if (letters[r] == node.label()) pos = static_cast<int>(r);
            if (pos < 0) throw std::invalid_argument("target letter missing");
            columns.push_back(pos);
        };
        walk(t);
    }
    const int m = static_cast<int>(columns.size());

    // Nonempty driver forests usable as coefficients, with their cuts.
    struct Option {
        int forest;
        double invn;
        std::vector<std::pair<std::optional<Label>, Forest>> cuts;  // (label, under)
    };
    std::vector<Option> options;
    for (int f = 1; f < db.size(); ++f) {
        if (db.degree(f) > h_->coeff_degree_bound()) continue;
        Option o;
        o.forest = f;
        o.invn = 1.0 / double(symmetry_factor(db.forest(f)));
        for (const Cut& c : admissible_cuts(db.forest(f)))
            o.cuts.emplace_back(Label::of_forest(c.over), c.under);
        options.push_back(std::move(o));
    }

    std::vector<PlanTerm> terms;
    // Families: one option per vertex, total degree <= n.
    std::vector<int> pick(m, 0);
    std::function<void(int, int, double)> families = [&](int v, int used, double weight) {
        if (v == m) {
            // One admissible cut per vertex.
            std::vector<int> cut_pick(m, 0);
            while (true) {
                std::vector<std::pair<Label, Forest>> decorations;
                bool valid = true;
                for (int r = 0; r < m && valid; ++r) {
                    const Option& o = options[pick[r]];
                    const auto& [label, under] = o.cuts[cut_pick[r]];
                    if (!label)
                        valid = false;
                    else
                        decorations.emplace_back(*label, under);
                }
                if (valid) {
                    PlanTerm term;
                    term.weight = weight;
                    for (int r = 0; r < m; ++r)
                        term.coefficients.emplace_back(columns[r], options[pick[r]].forest);
                    Forest star = star_graft(t, decorations);
                    term.driver_forest = db.find(star);
                    if (term.driver_forest < 0) {
                        // a letter of the star is outside the driver alphabet
                        term.missing = print(star, db.base());
                    }
                    terms.push_back(std::move(term));
                }
                int r = 0;
                while (r < m && ++cut_pick[r] == static_cast<int>(options[pick[r]].cuts.size()))
                    cut_pick[r++] = 0;
                if (r == m) break;
            }
            return;
        }
        for (size_t o = 0; o < options.size(); ++o) {
            int deg = db.degree(options[o].forest);
            if (used + deg > n) continue;
            pick[v] = static_cast<int>(o);
            families(v + 1, used + deg, weight * options[o].invn);
        }
    };
    families(0, 0, 1.0);

    return plans_.emplace(t, std::move(terms)).first->second;
}

double AlmostLift::tree_value(const Tree& t, int i, int j, const DenseVec& xv) const {
    if (t.vertex_count() == 1) {
        const auto& letters = target_basis_->letters();
        for (size_t r = 0; r < letters.size(); ++r)
            if (letters[r] == t.label())
                return h_->trace(static_cast<int>(r), j) - h_->trace(static_cast<int>(r), i);
        throw std::invalid_argument("target letter missing");
    }
    double sum = 0;
    for (const PlanTerm& term : plan(t)) {
        double coeff = term.weight;
        for (const auto& [col, fidx] : term.coefficients) {
            coeff *= h_->coeff(col, fidx, i);
            if (coeff == 0.0) break;
        }
        if (coeff == 0.0) continue;
        if (term.driver_forest < 0) {
            std::ostringstream os;
            os << "lift needs a component the driver lacks: " << term.missing;
            throw std::runtime_error(os.str());
        }
        sum += coeff * xv[term.driver_forest];
    }
    return sum;
}

double AlmostLift::value(const Forest& target, int i, int j) const {
    DenseVec xv = h_->driver().value(i, j);
    double v = 1.0;
    for (const Tree& t : target.trees()) v *= tree_value(t, i, j, xv);
    return v;
}

DenseVec AlmostLift::eval(int i, int j) const {
    const ForestBasis& tb = *target_basis_;
    DenseVec out(tb.size(), 0.0);
    out[0] = 1.0;
    DenseVec xv = h_->driver().value(i, j);
    // tree values first, forests as products
    std::vector<double> tv(tb.size(), 0.0);
    for (int f = 1; f < tb.size(); ++f)
        if (tb.is_tree(f)) tv[f] = tree_value(tb.forest(f).as_tree(), i, j, xv);
    for (int f = 1; f < tb.size(); ++f) {
        double v = 1.0;
        for (const Tree& t : tb.forest(f).trees()) v *= tv[tb.index_of(Forest::one(t))];
        out[f] = v;
    }
    return out;
}

GridRoughPath lift(const ControlledPath& h,
                   std::shared_ptr<const ForestBasis> target_basis, double tol,
                   SewStats* stats) {
    if (h.has_extended_proper_coefficient())
        throw std::invalid_argument(
            "controlled path has extension labels on proper forests; "
            "its lift would need an extension of the extension");
    AlmostLift almost(h, target_basis);
    auto eval = [&almost](int i, int j) { return almost.eval(i, j); };
    return sew(target_basis, h.driver().p(), h.driver().grid(), eval, tol, stats);
}

GridRoughPath pushforward(const PolyMap& f, const GridRoughPath& xt,
                          const std::vector<double>& x0, double tol) {
    int e = f.target_dim();
    auto target = ForestBasis::make(Alphabet::numeric(e), Extension::none,
                                    xt.basis().max_degree());
    auto driver = std::make_shared<GridRoughPath>(xt);
    ControlledPath h = function_of_trace(f.comps, driver, x0);
    return lift(h, target, tol);
}

std::map<Label, Polynomial> pushforward_bracket_integrand(const PolyMap& f,
                                                          const std::vector<int>& ks,
                                                          int max_degree) {
    const int d = f.source_dim;
    const int m = static_cast<int>(ks.size());
    std::map<Label, Polynomial> out;

    // Ordered m-tuples of nonempty multisets over the source letters with
    // bounded total weight; per-position weight 1/prod(multiplicity!).
    std::vector<Label> multisets;
    {
        std::vector<Atom> cur;
        std::function<void(int, int)> rec = [&](int min_id, int weight) {
            if (!cur.empty()) multisets.push_back(Label::multiset(cur));
            for (int id = min_id; id < d; ++id) {
                if (weight + 1 > max_degree) break;
                cur.push_back(Atom{id, 1});
                rec(id, weight + 1);
                cur.pop_back();
            }
        };
        rec(0, 0);
    }
    auto inv_mult_fact = [](const Label& l) {
        long denom = 1;
        const auto& ms = l.members();
        size_t i = 0;
        while (i < ms.size()) {
            size_t j = i;
            while (j < ms.size() && compare(ms[i], ms[j]) == 0) ++j;
            for (size_t r = 2; r <= j - i; ++r) denom *= static_cast<long>(r);
            i = j;
        }
        return Rational(1, denom);
    };

    std::vector<int> pick(m, 0);
    std::function<void(int, int)> rec = [&](int v, int weight) {
        if (v == m) {
            std::vector<Label> parts;
            Polynomial p = Polynomial::constant(d, 1);
            Rational scale = 1;
            for (int r = 0; r < m; ++r) {
                const Label& mu = multisets[pick[r]];
                parts.push_back(mu);
                scale *= inv_mult_fact(mu);
                Polynomial df = f.comps[ks[r]];
                for (const Atom& a : mu.members()) df = df.derivative(a.id);
                p = p * df;
            }
            if (!p.is_zero()) {
                Label joined = Label::join(parts);
                auto [it, inserted] = out.emplace(joined, p.scaled(scale));
                if (!inserted) it->second += p.scaled(scale);
            }
            return;
        }
        for (size_t r = 0; r < multisets.size(); ++r) {
            int w = multisets[r].weight();
            if (weight + w > max_degree) continue;
            pick[v] = static_cast<int>(r);
            rec(v + 1, weight + w);
        }
    };
    rec(0, 0);
    return out;
}

GridRoughPath pushforward_bracket(const PolyMap& f, const GridRoughPath& xt,
                                  const std::vector<double>& x0, double tol,
                                  double consistency_tol) {
    const int e = f.target_dim();
    const int n = xt.basis().max_degree();
    if (xt.basis().extension() != Extension::simple)
        throw std::invalid_argument("driver must carry its simple bracket components");

    ConsistencyReport consistency = consistency_defect(xt);
    if (consistency.max_defect > consistency_tol) {
        std::ostringstream os;
        os << "driver brackets are inconsistent (defect " << consistency.max_defect
           << ") at f=" << print(consistency.worst_f, xt.basis().base())
           << " g=" << print(consistency.worst_g, xt.basis().base())
           << " vertex=" << consistency.worst_vertex;
        throw std::invalid_argument(os.str());
    }

    auto target = ForestBasis::make(Alphabet::numeric(e), Extension::simple, n);
    auto driver = std::make_shared<GridRoughPath>(xt);
    const auto& letters = target->letters();

    ControlledPath columns(driver, static_cast<int>(letters.size()));
    // Plain letters: components of f(X).
    {
        ControlledPath fx = function_of_trace(f.comps, driver, x0);
        for (size_t r = 0; r < letters.size(); ++r) {
            if (!letters[r].is_atom()) continue;
            int k = letters[r].as_atom().id;
            for (int fi = 0; fi < driver->basis().size(); ++fi) {
                if (fi != 0 && driver->basis().degree(fi) > columns.coeff_degree_bound())
                    continue;
                for (int t = 0; t < columns.times(); ++t)
                    columns.set_coeff(static_cast<int>(r), fi, t, fx.coeff(k, fi, t));
            }
        }
    }
    // Multiset letters: promoted integrals of the bracket integrands.
    for (size_t r = 0; r < letters.size(); ++r) {
        if (letters[r].is_atom()) continue;
        std::vector<int> ks;
        for (const Atom& a : letters[r].members()) ks.push_back(a.id);
        auto integrand = pushforward_bracket_integrand(f, ks, n);
        std::vector<Label> int_letters;
        std::vector<Polynomial> polys;
        for (auto& [l, p] : integrand) {
            int_letters.push_back(l);
            polys.push_back(p);
        }
        ControlledPath cols = function_of_trace(polys, driver, x0);
        Integrand h{std::move(cols), int_letters, 1};
        ControlledPath z = promote_integral(h);
        for (int fi = 0; fi < driver->basis().size(); ++fi) {
            if (fi != 0 && driver->basis().degree(fi) > columns.coeff_degree_bound())
                continue;
            for (int t = 0; t < columns.times(); ++t)
                columns.set_coeff(static_cast<int>(r), fi, t, z.coeff(0, fi, t));
        }
    }

    return lift(columns, target, tol);
}

}  // namespace bramble
