#pragma once

#include <map>
#include <vector>

#include "bramble/rational.hpp"

namespace bramble {

/// Multivariate polynomial with exact rational coefficients.
class Polynomial {
  public:
    explicit Polynomial(int nvars = 0) : nvars_(nvars) {}
    static Polynomial constant(int nvars, Rational c);
    static Polynomial variable(int nvars, int i);

    int nvars() const { return nvars_; }
    const std::map<std::vector<int>, Rational>& terms() const { return terms_; }
    bool is_zero() const { return terms_.empty(); }
    int total_degree() const;

    void add_term(const std::vector<int>& exps, const Rational& c);

    Polynomial operator+(const Polynomial& o) const;
    Polynomial operator-(const Polynomial& o) const;
    Polynomial operator*(const Polynomial& o) const;
    Polynomial& operator+=(const Polynomial& o);
    Polynomial& operator-=(const Polynomial& o);
    Polynomial scaled(const Rational& c) const;

    Polynomial derivative(int var) const;
    Polynomial antiderivative(int var) const;

    double eval(const std::vector<double>& x) const;
    Rational eval_exact(const std::vector<Rational>& x) const;

    /// Substitutes subs[i] for variable i; all subs share a variable count.
    Polynomial compose(const std::vector<Polynomial>& subs) const;

    /// Re-embeds into a space of `new_nvars` variables, variable i of this
    /// polynomial becoming variable var_map[i].
    Polynomial embedded(int new_nvars, const std::vector<int>& var_map) const;

  private:
    int nvars_;
    std::map<std::vector<int>, Rational> terms_;
};

bool operator==(const Polynomial& a, const Polynomial& b);

/// Polynomial map between coordinate spaces; components are polynomials in
/// `source_dim` variables.
struct PolyMap {
    int source_dim = 0;
    std::vector<Polynomial> comps;

    PolyMap() = default;
    PolyMap(int src, int target) : source_dim(src), comps(target, Polynomial(src)) {}

    static PolyMap identity(int n);

    int target_dim() const { return static_cast<int>(comps.size()); }
    const Polynomial& operator[](int i) const { return comps[i]; }
    Polynomial& operator[](int i) { return comps[i]; }

    std::vector<double> eval(const std::vector<double>& x) const;
    std::vector<Rational> eval_exact(const std::vector<Rational>& x) const;

    /// this after inner.
    PolyMap compose(const PolyMap& inner) const;

    /// Iterated partial derivative of one component.
    Polynomial partial(int comp, const std::vector<int>& dirs) const;
};

bool operator==(const PolyMap& a, const PolyMap& b);

}  // namespace bramble
