#pragma once

#include <memory>

#include "bramble/rough_path.hpp"

namespace bramble {

/// Path controlled by a grid rough path: a trace plus coefficient paths
/// indexed by forests of degree below the driver's truncation.
class ControlledPath {
  public:
    ControlledPath(std::shared_ptr<const GridRoughPath> driver, int target_dim);

    const GridRoughPath& driver() const { return *driver_; }
    std::shared_ptr<const GridRoughPath> driver_ptr() const { return driver_; }
    int target_dim() const { return dim_; }
    int times() const { return static_cast<int>(driver_->grid().size()); }
    int coeff_degree_bound() const { return driver_->truncation() - 1; }

    double coeff(int k, int forest_index, int time) const;
    void set_coeff(int k, int forest_index, int time, double v);
    double trace(int k, int time) const { return coeff(k, 0, time); }
    void set_trace(int k, int time, double v) { set_coeff(k, 0, time, v); }

    bool vanishes_on_proper_forests() const;
    /// Nonzero coefficient on a proper forest carrying a non-atom label.
    bool has_extended_proper_coefficient() const;

    /// Same data viewed over an extension of the driver (new coefficients 0).
    ControlledPath embedded(std::shared_ptr<const GridRoughPath> extended) const;

  private:
    std::shared_ptr<const GridRoughPath> driver_;
    int dim_;
    std::vector<std::vector<std::vector<double>>> data_;  // [k][forest][time]
};

/// Base-trace values x(t) = x0 + X(0,t) on the base letters.
std::vector<std::vector<double>> trace_values(const GridRoughPath& x,
                                              const std::vector<double>& x0);

/// The driver viewed as a path controlled by itself (coefficients are
/// Kronecker deltas on the base letters).
ControlledPath identity_controlled(std::shared_ptr<const GridRoughPath> driver,
                                   const std::vector<double>& x0);

/// Controlled path given by polynomial functions of the base trace:
/// coefficients live on products of single atom-labelled vertices and are
/// the corresponding partial derivatives.
ControlledPath function_of_trace(const std::vector<Polynomial>& comps,
                                 std::shared_ptr<const GridRoughPath> driver,
                                 const std::vector<double>& x0);

/// Residual of the local expansion of coefficient f between times i and j.
double expansion_defect(const ControlledPath& h, int k, const Forest& f, int i, int j);
double max_expansion_defect(const ControlledPath& h, int i, int j);

/// Composition with a polynomial map: trace f(H) plus the factorization-sum
/// coefficients.
ControlledPath compose_smooth(const PolyMap& f, const ControlledPath& h);

/// Componentwise product of scalar columns of controlled paths.
ControlledPath controlled_product(const std::vector<const ControlledPath*>& factors,
                                  const std::vector<int>& columns);

/// Controlled integrand: target components indexed by (value component k,
/// integration letter b), columns in k-major order.
struct Integrand {
    ControlledPath path;
    std::vector<Label> letters;
    int e = 1;

    int col(int k, int b) const { return k * static_cast<int>(letters.size()) + b; }
};

struct RefineStats {
    int levels = 0;
    double last_change = 0;
    bool converged = false;
};

/// Rough integral over [t_i, t_j] by dyadically refined Riemann sums of the
/// local pairing against the driver.
std::vector<double> rough_integral(const Integrand& h, int i, int j, double tol,
                                   RefineStats* stats = nullptr);

/// The integral as a controlled path: coefficients sit on trees only.
ControlledPath promote_integral(const Integrand& h, std::vector<double> initial = {});

/// Right-hand side data d Y = F(Y) dX over the given letters; component
/// (k, b) of F sits at column k*letters.size() + b.
struct RdeSystem {
    int e = 1;
    std::vector<Label> letters;
    PolyMap f;  // source dim e, target e * letters

    int col(int k, int b) const { return k * static_cast<int>(letters.size()) + b; }
};

/// Elementary-differential coefficient of a tree, as a polynomial map of the
/// state.
PolyMap rde_tree_coefficient(const RdeSystem& sys, const Tree& t);

/// One-step expansion scheme across the grid; the result carries the
/// controlled-path coefficients induced by the coefficient recursion.
ControlledPath davie_solve(const RdeSystem& sys,
                           std::shared_ptr<const GridRoughPath> driver,
                           const std::vector<double>& y0);

/// Residual of the one-step expansion of a solution path over [t_i, t_j].
double davie_residual(const RdeSystem& sys, const ControlledPath& y, int i, int j);

/// |g(X)_(ij) - sum_n 1/n! int d^n g dX(multiset)| for a path on the
/// multiset alphabet.
double kelly_function_defect(const Polynomial& g,
                             std::shared_ptr<const GridRoughPath> xt,
                             const std::vector<double>& x0, int i, int j, double tol);

/// Change-of-variable residual for an RDE solution against a bracket
/// extension of its driver. The solution must have been produced by
/// davie_solve for the same system.
double kelly_rde_defect(const Polynomial& g, const RdeSystem& sys,
                        const ControlledPath& y,
                        std::shared_ptr<const GridRoughPath> xhat, int i, int j,
                        double tol);

/// Quasi-geometric change of variable: same as kelly_rde_defect but with
/// the label-joining brackets of a driver on the multiset alphabet.
double quasi_change_of_variable_defect(const Polynomial& g, const RdeSystem& sys,
                                       const ControlledPath& y,
                                       std::shared_ptr<const GridRoughPath> xt, int i,
                                       int j, double tol);

/// Bracket component of an integral against a quasi-geometric driver:
/// int prod_l H^{k_l}_{c_l} dX^(joined c). Columns pick the k-tuple.
double quasi_integral_bracket(const Integrand& h, const std::vector<int>& ks, int i,
                              int j, double tol);

/// Solution bracket d Y^(k tuple) = prod F^{k_l}_{c_l}(Y) dX^(joined c),
/// evaluated over [t_i, t_j].
double quasi_rde_bracket(const RdeSystem& sys, const ControlledPath& y,
                         const std::vector<int>& ks, int i, int j, double tol);

}  // namespace bramble
