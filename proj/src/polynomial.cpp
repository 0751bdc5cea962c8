#include "bramble/polynomial.hpp"

#include <stdexcept>

namespace bramble {

Polynomial Polynomial::constant(int nvars, Rational c) {
    Polynomial p(nvars);
    p.add_term(std::vector<int>(nvars, 0), c);
    return p;
}

Polynomial Polynomial::variable(int nvars, int i) {
    Polynomial p(nvars);
    std::vector<int> e(nvars, 0);
    e.at(i) = 1;
    p.add_term(e, 1);
    return p;
}

int Polynomial::total_degree() const {
    int d = 0;
    for (const auto& [e, c] : terms_) {
        int s = 0;
        for (int k : e) s += k;
        d = std::max(d, s);
    }
    return d;
}

void Polynomial::add_term(const std::vector<int>& exps, const Rational& c) {
    if (static_cast<int>(exps.size()) != nvars_)
        throw std::invalid_argument("exponent arity mismatch");
    if (c == 0) return;
    auto [it, inserted] = terms_.emplace(exps, c);
    if (!inserted) {
        it->second += c;
        if (it->second == 0) terms_.erase(it);
    }
}

Polynomial Polynomial::operator+(const Polynomial& o) const {
    Polynomial r = *this;
    r += o;
    return r;
}

Polynomial Polynomial::operator-(const Polynomial& o) const {
    Polynomial r = *this;
    r -= o;
    return r;
}

Polynomial& Polynomial::operator+=(const Polynomial& o) {
    for (const auto& [e, c] : o.terms_) add_term(e, c);
    return *this;
}

Polynomial& Polynomial::operator-=(const Polynomial& o) {
    for (const auto& [e, c] : o.terms_) add_term(e, -c);
    return *this;
}

Polynomial Polynomial::operator*(const Polynomial& o) const {
    Polynomial r(nvars_);
    for (const auto& [e1, c1] : terms_)
        for (const auto& [e2, c2] : o.terms_) {
            std::vector<int> e = e1;
            for (int i = 0; i < nvars_; ++i) e[i] += e2[i];
            r.add_term(e, c1 * c2);
        }
    return r;
}

Polynomial Polynomial::scaled(const Rational& c) const {
    Polynomial r(nvars_);
    if (c == 0) return r;
    for (const auto& [e, k] : terms_) r.terms_.emplace(e, k * c);
    return r;
}

Polynomial Polynomial::derivative(int var) const {
    Polynomial r(nvars_);
    for (const auto& [e, c] : terms_) {
        if (e[var] == 0) continue;
        std::vector<int> e2 = e;
        e2[var] -= 1;
        r.add_term(e2, c * e[var]);
    }
    return r;
}

Polynomial Polynomial::antiderivative(int var) const {
    Polynomial r(nvars_);
    for (const auto& [e, c] : terms_) {
        std::vector<int> e2 = e;
        e2[var] += 1;
        r.add_term(e2, c / Rational(e2[var]));
    }
    return r;
}

double Polynomial::eval(const std::vector<double>& x) const {
    double sum = 0;
    for (const auto& [e, c] : terms_) {
        double m = to_double(c);
        for (int i = 0; i < nvars_; ++i)
            for (int k = 0; k < e[i]; ++k) m *= x[i];
        sum += m;
    }
    return sum;
}

Rational Polynomial::eval_exact(const std::vector<Rational>& x) const {
    Rational sum = 0;
    for (const auto& [e, c] : terms_) {
        Rational m = c;
        for (int i = 0; i < nvars_; ++i)
            for (int k = 0; k < e[i]; ++k) m *= x[i];
        sum += m;
    }
    return sum;
}

Polynomial Polynomial::compose(const std::vector<Polynomial>& subs) const {
    if (static_cast<int>(subs.size()) != nvars_)
        throw std::invalid_argument("substitution arity mismatch");
    int m = nvars_ == 0 ? 0 : subs.empty() ? 0 : subs.front().nvars();
    for (const Polynomial& s : subs)
        if (s.nvars() != m) throw std::invalid_argument("substitution variable mismatch");
    Polynomial out(m);
    // Memoize powers of each substituted component.
    std::vector<std::vector<Polynomial>> powers(nvars_);
    auto power = [&](int i, int k) -> const Polynomial& {
        auto& cache = powers[i];
        if (cache.empty()) cache.push_back(Polynomial::constant(m, 1));
        while (static_cast<int>(cache.size()) <= k) cache.push_back(cache.back() * subs[i]);
        return cache[k];
    };
    for (const auto& [e, c] : terms_) {
        Polynomial term = Polynomial::constant(m, c);
        for (int i = 0; i < nvars_; ++i)
            if (e[i] > 0) term = term * power(i, e[i]);
        out += term;
    }
    return out;
}

Polynomial Polynomial::embedded(int new_nvars, const std::vector<int>& var_map) const {
    Polynomial out(new_nvars);
    for (const auto& [e, c] : terms_) {
        std::vector<int> e2(new_nvars, 0);
        for (int i = 0; i < nvars_; ++i) {
            if (e[i] == 0) continue;
            e2.at(var_map.at(i)) += e[i];
        }
        out.add_term(e2, c);
    }
    return out;
}

bool operator==(const Polynomial& a, const Polynomial& b) {
    return a.nvars() == b.nvars() && a.terms() == b.terms();
}

PolyMap PolyMap::identity(int n) {
    PolyMap m(n, n);
    for (int i = 0; i < n; ++i) m.comps[i] = Polynomial::variable(n, i);
    return m;
}

std::vector<double> PolyMap::eval(const std::vector<double>& x) const {
    std::vector<double> y(comps.size());
    for (size_t i = 0; i < comps.size(); ++i) y[i] = comps[i].eval(x);
    return y;
}

std::vector<Rational> PolyMap::eval_exact(const std::vector<Rational>& x) const {
    std::vector<Rational> y(comps.size());
    for (size_t i = 0; i < comps.size(); ++i) y[i] = comps[i].eval_exact(x);
    return y;
}

PolyMap PolyMap::compose(const PolyMap& inner) const {
    if (inner.target_dim() != source_dim)
        throw std::invalid_argument("composition dimension mismatch");
    PolyMap out(inner.source_dim, target_dim());
    for (int i = 0; i < target_dim(); ++i) out.comps[i] = comps[i].compose(inner.comps);
    return out;
}

Polynomial PolyMap::partial(int comp, const std::vector<int>& dirs) const {
    Polynomial p = comps.at(comp);
    for (int d : dirs) p = p.derivative(d);
    return p;
}

bool operator==(const PolyMap& a, const PolyMap& b) {
    return a.source_dim == b.source_dim && a.comps == b.comps;
}

}  // namespace bramble
