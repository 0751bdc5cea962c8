#pragma once

#include "bramble/controlled.hpp"
#include "bramble/lift.hpp"

namespace bramble {

/// Connection on an m-dimensional coordinate patch: Christoffel symbols as
/// polynomials of the coordinates; no symmetry assumed.
struct Connection {
    int dim = 0;
    std::vector<Polynomial> gamma;  // [(c*dim + a)*dim + b], nvars = dim

    Connection() = default;
    explicit Connection(int m)
        : dim(m), gamma(size_t(m) * m * m, Polynomial(m)) {}

    const Polynomial& christoffel(int c, int a, int b) const {
        return gamma[(size_t(c) * dim + a) * dim + b];
    }
    Polynomial& christoffel(int c, int a, int b) {
        return gamma[(size_t(c) * dim + a) * dim + b];
    }
    static Connection flat(int m) { return Connection(m); }
    bool torsion_free() const;
};

/// Sorted multi-indices of lengths 1..order over dim letters.
struct SymSpace {
    int dim = 0, order = 0;
    std::vector<std::vector<int>> tuples;
    std::map<std::vector<int>, int> index;
    std::vector<double> orderings;  // count of distinct arrangements

    static std::shared_ptr<const SymSpace> make(int dim, int order);
    int size() const { return static_cast<int>(tuples.size()); }
    int find(std::vector<int> tuple) const;  // sorts, then looks up
};

/// Coefficient table on symmetric tuples, polynomial in the coordinates.
/// entry[lower][upper] is the coefficient against the ORDERED upper tuple
/// (stored once per sorted tuple; contractions weight by arrangement
/// counts), symmetric in both index groups.
struct SymTensorTable {
    std::shared_ptr<const SymSpace> space;
    std::vector<std::vector<Polynomial>> entry;

    static SymTensorTable zero(std::shared_ptr<const SymSpace> space, int nvars);
    static SymTensorTable identity(std::shared_ptr<const SymSpace> space, int nvars);

    /// Weighted matrix product (this after other: lower of *this feeds
    /// through the middle space).
    SymTensorTable times(const SymTensorTable& other) const;

    std::vector<std::vector<double>> eval(const std::vector<double>& x) const;
    double value(const std::vector<double>& x, const std::vector<int>& lower,
                 const std::vector<int>& upper) const;
};

/// Operator expansion of an iterated covariant derivative in terms of
/// coordinate partials, from the recursive formula.
std::map<std::vector<int>, Polynomial> nabla_expansion(const Connection& conn,
                                                       const std::vector<int>& dirs);

/// Covariant derivative of a polynomial along an index tuple.
Polynomial nabla_apply(const Connection& conn, const std::vector<int>& dirs,
                       const Polynomial& g);

/// L: coefficients of the symmetrized covariant derivatives in the
/// coordinate partials. Lower-triangular in tuple length with identity
/// diagonal blocks.
SymTensorTable covariant_coeffs(const Connection& conn, int order);

/// The unique upper-symmetric right inverse of L*: partial_a g =
/// Gamma~^b_a nabla_b g. Exact polynomial entries.
SymTensorTable transfer_symbols(const Connection& conn, int order);

/// One-parameter order-3 family of right inverses; c = 3/2 recovers the
/// transfer symbols, other values break the coordinate rule when torsion is
/// present. Upper indices are NOT symmetric in general, so entries are
/// returned per ordered upper tuple.
struct Order3Family {
    int dim;
    /// value(x, lower (any order), upper ordered tuple)
    double value(const std::vector<double>& x, std::vector<int> lower,
                 const std::vector<int>& upper) const;
    const Connection* conn;
    double c;
};
Order3Family transfer_family(const Connection& conn, double c);

/// Exact forward/inverse derivative data of a chart transition at a point,
/// with the transformed connection as a linear surrogate around the image
/// point (enough for the order-3 recursion).
struct ChartJet {
    int dim;
    std::vector<double> x, y;                       // point and its image
    std::vector<std::vector<double>> jac;           // dy/dx
    std::vector<std::vector<std::vector<double>>> jac2;  // d2y/dx2
    std::vector<double> inv;                        // dx/dy, row-major
    std::vector<double> inv2;                       // d2x/dy2
    std::vector<double> inv3;                       // d3x/dy3

    double fwd(int k, int g) const { return jac[k][g]; }
    double bwd(int g, int i) const { return inv[size_t(g) * dim + i]; }
    double bwd2(int g, int i, int j) const {
        return inv2[(size_t(g) * dim + i) * dim + j];
    }
    double bwd3(int g, int i, int j, int l) const {
        return inv3[((size_t(g) * dim + i) * dim + j) * dim + l];
    }
};

ChartJet chart_jet(const PolyMap& transition, const std::vector<double>& x);

/// Transformed connection around the image point, accurate to first order
/// (a linear surrogate usable for order <= 3 recursions).
Connection transported_connection(const Connection& conn, const ChartJet& jet);

/// Residual of the coordinate rule for the transfer symbols under the
/// transition, evaluated at x, orders up to `order` (<= 3).
double transform_check(const Connection& conn, const PolyMap& transition,
                       const std::vector<double>& x, int order);

/// Same residual for the order-3 family member with parameter c.
double transform_check_family(const Connection& conn, const PolyMap& transition,
                              const std::vector<double>& x, double c);

/// Chart with a box of validity in its own coordinates.
struct Chart {
    std::string name;
    std::vector<double> lo, hi;

    bool contains(const std::vector<double>& x, double margin = 0.0) const;
};

struct Atlas {
    std::vector<Chart> charts;
    /// transition[i][j]: coordinates of chart j as a function of chart i.
    std::map<std::pair<int, int>, PolyMap> transitions;

    int find_chart(const std::string& name) const;
    const PolyMap* transition(int from, int to) const;
};

/// Per-chart driver segments with their initial trace points; segments may
/// overlap in time.
struct ManifoldSegment {
    int chart = 0;
    int i0 = 0, i1 = 0;  // grid index range
    std::shared_ptr<const GridRoughPath> path;
    std::vector<double> x0;
};

struct ManifoldRoughPath {
    Atlas atlas;
    std::vector<double> grid;
    std::vector<ManifoldSegment> segments;
};

/// Max compatibility defect between overlapping segments: the pushforward
/// of one through the transition against the other, componentwise over the
/// shared span.
double atlas_compatibility_defect(const ManifoldRoughPath& mx, double tol = 1e-8);

/// One patching step: (segment, from, to).
using Schedule = std::vector<std::array<int, 3>>;

/// Greedy schedule covering [i, j]; stays within a segment until it ends or
/// the trace nears the chart boundary.
Schedule greedy_schedule(const ManifoldRoughPath& mx, int i, int j, double margin = 0.0);

/// Connection-weighted integral of a one-form over [t_i, t_j], patched
/// across charts. `one_form[chart]` holds the covector components in that
/// chart.
double manifold_integral(const std::vector<std::vector<Polynomial>>& one_form,
                         const ManifoldRoughPath& mx,
                         const std::vector<Connection>& conn, int i, int j, double tol,
                         const Schedule* schedule = nullptr);

/// |g(X)_(ij) - patched covariant change-of-variable integral|.
double ito_kelly_manifold_defect(const std::vector<Polynomial>& g,
                                 const ManifoldRoughPath& mx,
                                 const std::vector<Connection>& conn, int i, int j,
                                 double tol, const Schedule* schedule = nullptr);

/// Recursive coefficients of the chart-invariant equation
/// dY = F(Y) d(transfer)X over the multiset letters of the driver, as
/// polynomials of (y, x) (y first). F columns are (k, gamma) over the
/// plain letters of M.
std::map<Label, PolyMap> quasi_rde_coefficients(const PolyMap& f,
                                                const Connection& conn_m,
                                                const Connection& conn_n, int order);

struct ManifoldRdeResult {
    std::vector<std::vector<double>> y;  // per grid index
    std::vector<int> chart;              // N-chart per grid index
};

/// Steps the coefficient expansion across the grid, re-charting the
/// solution when it nears a chart boundary. The driver must be
/// quasi-geometric; conn_m applies on the (single-chart) M side.
ManifoldRdeResult manifold_rde_solve(const std::vector<PolyMap>& f_n,
                                     const Connection& conn_m,
                                     const std::vector<Connection>& conn_n,
                                     const Atlas& atlas_n, const GridRoughPath& xt,
                                     const std::vector<double>& x0,
                                     const std::vector<double>& y0, int chart0,
                                     double margin = 0.25);

}  // namespace bramble
