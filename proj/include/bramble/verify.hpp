#pragma once

#include <string>
#include <vector>

#include "bramble/rough_path.hpp"

namespace bramble {

struct CheckResult {
    std::string id;
    bool pass = false;
    double defect = 0;      ///< worst residual observed (0 for exact checks)
    double tolerance = 0;   ///< 0 means the check is exact
    double seconds = 0;
};

struct Report {
    std::string suite;
    std::vector<CheckResult> checks;

    bool all_pass() const;
    void add(std::string id, bool pass, double defect = 0, double tolerance = 0,
             double seconds = 0);
};

/// Exhaustive bialgebra sweeps over all forests of bounded degree: both
/// coproducts, units/counits, compatibility, associativity and duality on
/// bounded triples, both antipode identities, grading, and the collapse
/// morphisms. All equalities are exact.
Report verify_hopf(int max_degree, int letters);

/// Displayed expansions checked term by term: the 7-term cut coproduct, the
/// 4-term grafting product, the weighted pairing value, the bracket
/// polynomials up to order 3 plus one order-4 case, and the 13-term
/// quasi-shuffle.
Report golden_values();

/// Bracket polynomial layer: primitivity, the single-vertex closed form,
/// the tree/forest conversion identities, and the word-identity of the
/// root-joining cuts.
Report verify_bracket(int max_degree, int letters);

}  // namespace bramble
