#pragma once

#include "bramble/controlled.hpp"

namespace bramble {

/// Almost-multiplicative rough-path values of a controlled path against a
/// bracket-extended driver. The column order of h follows the letter list
/// of the target basis.
class AlmostLift {
  public:
    AlmostLift(const ControlledPath& h, std::shared_ptr<const ForestBasis> target_basis);

    const ControlledPath& controlled() const { return *h_; }
    std::shared_ptr<const ForestBasis> target_basis() const { return target_basis_; }

    /// Value on a target forest over [t_i, t_j]: trees by the vertex-family
    /// sums, forests by products of tree values, single vertices by trace
    /// increments.
    double value(const Forest& target, int i, int j) const;
    DenseVec eval(int i, int j) const;

  private:
    double tree_value(const Tree& t, int i, int j, const DenseVec& xv) const;

    const ControlledPath* h_;
    std::shared_ptr<const ForestBasis> target_basis_;

    struct PlanTerm {
        double weight;                                  // prod 1/N(f^v)
        std::vector<std::pair<int, int>> coefficients;  // (h column, forest idx)
        int driver_forest;       // star-graft image, -1 when unsupported
        std::string missing;     // letter the driver lacks, when unsupported
    };
    mutable std::map<Tree, std::vector<PlanTerm>> plans_;
    const std::vector<PlanTerm>& plan(const Tree& t) const;
};

/// Sewn rough path of a controlled path. Rejects controlled paths with
/// coefficients on proper forests carrying extension labels (those need an
/// extension of the extension).
GridRoughPath lift(const ControlledPath& h,
                   std::shared_ptr<const ForestBasis> target_basis, double tol = 1e-8,
                   SewStats* stats = nullptr);

/// Lift of the function-of-trace controlled path f(X): the image of the
/// driver under a polynomial map. Needs the simple bracket components of
/// the driver.
GridRoughPath pushforward(const PolyMap& f, const GridRoughPath& xt,
                          const std::vector<double>& x0, double tol = 1e-8);

/// Pushforward together with its simple bracket components: the result
/// lives on the multiset alphabet over the target letters. Input brackets
/// are consistency-checked first.
GridRoughPath pushforward_bracket(const PolyMap& f, const GridRoughPath& xt,
                                  const std::vector<double>& x0, double tol = 1e-8,
                                  double consistency_tol = 1e-6);

/// Integrand of the bracket component (k_1...k_m) of a pushforward: for
/// each joined letter, the polynomial in the source trace it integrates.
std::map<Label, Polynomial> pushforward_bracket_integrand(const PolyMap& f,
                                                          const std::vector<int>& ks,
                                                          int max_degree);

}  // namespace bramble
