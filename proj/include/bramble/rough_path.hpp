#pragma once

#include <functional>
#include <iosfwd>
#include <memory>

#include "bramble/basis.hpp"
#include "bramble/polynomial.hpp"

namespace bramble {

/// Control function; the default is omega(s,t) = t - s.
struct Control {
    std::function<double(double, double)> omega;
    Control() : omega([](double s, double t) { return t - s; }) {}
    explicit Control(std::function<double(double, double)> f) : omega(std::move(f)) {}
    double operator()(double s, double t) const { return omega(s, t); }
};

/// Coefficient vector indexed by a ForestBasis; slot 0 (empty forest) is 1
/// for group-like values.
using DenseVec = std::vector<double>;

DenseVec identity_value(const ForestBasis& basis);

/// X(s,t) from X(s,u), X(u,t) through the cut-coproduct table.
DenseVec chen_compose(const ForestBasis& basis, const DenseVec& a, const DenseVec& b);

double max_abs_diff(const DenseVec& a, const DenseVec& b);

/// Grid-backed two-parameter family. Values are stored on a binary block
/// decomposition of the grid; arbitrary index pairs are assembled with the
/// Chen composition. Blocks are either derived from the adjacent cells or
/// filled directly by an evaluator (so that the multiplicativity defect of
/// independently computed values stays observable).
class GridRoughPath {
  public:
    using Eval = std::function<DenseVec(int, int)>;

    /// Blocks composed from adjacent-cell values.
    GridRoughPath(std::shared_ptr<const ForestBasis> basis, double p,
                  std::vector<double> grid, std::vector<DenseVec> cells);

    /// Every block of the decomposition evaluated directly.
    static GridRoughPath from_function(std::shared_ptr<const ForestBasis> basis, double p,
                                       std::vector<double> grid, const Eval& eval);

    const ForestBasis& basis() const { return *basis_; }
    std::shared_ptr<const ForestBasis> basis_ptr() const { return basis_; }
    double p() const { return p_; }
    int truncation() const { return basis_->max_degree(); }
    const std::vector<double>& grid() const { return grid_; }
    int cell_count() const { return static_cast<int>(grid_.size()) - 1; }
    const Control& control() const { return control_; }

    DenseVec value(int i, int j) const;
    double component(int i, int j, int forest_index) const;
    double component(int i, int j, const Forest& f) const;

    double evaluate(int i, int j, const AlgElem& x) const;

    /// max-abs residual of value(i,k) against the composition through j.
    double chen_defect(int i, int j, int k) const;
    /// max-abs residual of the product rule over all factor splits.
    double grouplike_defect(int i, int j) const;

    /// Worst Chen residual over all dyadic (i, mid, k) triples.
    double max_dyadic_chen_defect() const;
    double max_dyadic_grouplike_defect() const;

    /// Per-forest sup of |X^f(s,t)| / omega(s,t)^(|f|/p) over dyadic blocks.
    std::vector<double> regularity_report() const;

    /// Replaces one stored cell value (testing hook; blocks are rebuilt).
    void corrupt_cell(int cell, int forest_index, double delta);

  private:
    GridRoughPath() = default;
    void build_blocks_from_cells();
    DenseVec query(int node, int lo, int hi, int i, int j) const;
    void dyadic_spans(std::vector<std::pair<int, int>>& out) const;

    std::shared_ptr<const ForestBasis> basis_;
    double p_ = 0;
    std::vector<double> grid_;
    Control control_;
    int leaves_ = 0;                // padded power of two
    std::vector<DenseVec> nodes_;   // segment tree, 1-based
};

/// Geometric lift of a polynomial path by composite 8-node Gauss-Legendre
/// quadrature per cell, recursing through tree height. Components with a
/// non-atom letter anywhere vanish.
class SmoothLift {
  public:
    SmoothLift(std::shared_ptr<const ForestBasis> basis, PolyMap path, double p);

    const ForestBasis& basis() const { return *basis_; }
    const PolyMap& path() const { return path_; }

    /// Direct evaluation over [s,t] with quadrature panels at the given
    /// interior breakpoints.
    DenseVec eval(double s, double t, const std::vector<double>& breaks) const;

    /// Direct values on every block of the grid decomposition.
    GridRoughPath materialize(const std::vector<double>& grid) const;

    double trace(int atom_id, double t) const;

  private:
    std::shared_ptr<const ForestBasis> basis_;
    PolyMap path_;
    std::vector<Polynomial> velocity_;
    double p_;
    std::vector<int> tree_ids_;        // basis indices that are trees
    std::vector<char> atom_only_;      // per basis index
};

/// Extension of a path on the plain alphabet to the enlarged one with all
/// new components set to zero (the canonical extension of geometric data).
GridRoughPath with_zero_extension(const GridRoughPath& x,
                                  std::shared_ptr<const ForestBasis> extended);

/// For floor(p) = 2: adjoins the weight-2 letters (ab) with the canonical
/// values <<ab>> evaluated on x.
GridRoughPath canonical_level2_bracket(const GridRoughPath& x);

/// Level-2 family with vanishing trace: X^{[a]_b} = -q_ab (t-s)/2, so the
/// adjoined letters carry X^(ab) = q_ab (t-s). q must be symmetric.
GridRoughPath pure_bracket_level2(int d, const std::vector<std::vector<double>>& q,
                                  double p, std::vector<double> grid);

/// Group-like family on the multiset alphabet built from letter rates:
/// X^f(s,t) = sum over words w of the quasi-shuffle collapse of f of
/// (prod rates) (t-s)^len / len!. Quasi-geometric with nonzero brackets.
GridRoughPath quasi_exp_driver(std::shared_ptr<const ForestBasis> simple_basis, double p,
                               std::vector<double> grid,
                               const std::map<Label, double>& rates);

struct SewStats {
    std::vector<double> refinement_diffs;  ///< coarse-to-fine successive diffs
    bool converged = false;
    double last_diff = 0;
};

/// Multiplicative completion of an almost-multiplicative family on the grid:
/// adjacent cells are kept, coarser values are recomputed by composition,
/// and the dyadic refinement sequence of the full span must settle below
/// tol. Throws on non-convergence unless stats captures it.
GridRoughPath sew(std::shared_ptr<const ForestBasis> basis, double p,
                  std::vector<double> grid, const GridRoughPath::Eval& almost, double tol,
                  SewStats* stats = nullptr, bool throw_on_failure = true);

struct QuasiGeometricReport {
    std::map<Forest, double> ladder_defect;   ///< X^f vs its word expansion
    std::map<Forest, double> joining_defect;  ///< label-joining relations
    double max_defect = 0;
};

/// Defect of X = X^(iota o phi-tilde) plus the label-joining bracket
/// relations, over dyadic spans.
QuasiGeometricReport quasi_geometric_defect(const GridRoughPath& x);

/// Numeric residuals of the extension relations on a bracket-extended path.
struct ConsistencyReport {
    double max_defect = 0;
    Forest worst_f, worst_g;
    int worst_vertex = kProductVertex;
};

ConsistencyReport consistency_defect(const GridRoughPath& xhat, int max_degree = -1);

/// Single relation instance evaluated at one span.
double consistency_defect_at(const GridRoughPath& xhat, const Forest& f, const Forest& g,
                             int vertex, int i, int j);

/// Plain-text dump: header (alphabet, extension, p, grid) then one line
/// "i j forest value" per adjacent cell and stored forest, sorted.
void save_rough_path(const GridRoughPath& x, std::ostream& os);
GridRoughPath load_rough_path(std::istream& is);

std::vector<double> dyadic_grid(double t0, double t1, int depth);

}  // namespace bramble
