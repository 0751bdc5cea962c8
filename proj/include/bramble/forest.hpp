#pragma once

#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace bramble {

/// A weighted letter. Ids index into an Alphabet; the weight is carried so
/// that degrees can be computed without alphabet lookups.
struct Atom {
    int id = 0;
    int weight = 1;
};

int compare(const Atom& a, const Atom& b);
inline bool operator==(const Atom& a, const Atom& b) { return compare(a, b) == 0; }
inline bool operator<(const Atom& a, const Atom& b) { return compare(a, b) < 0; }

/// Names and weights for the base letters of a label set.
struct Alphabet {
    std::vector<std::string> names;
    std::vector<int> weights;

    int size() const { return static_cast<int>(names.size()); }
    Atom atom(int id) const { return Atom{id, weights[id]}; }
    int find(const std::string& name) const;

    /// "1".."d", all of weight 1.
    static Alphabet numeric(int d);
    /// "a","b",... (n <= 26), all of weight 1.
    static Alphabet latin(int n);
};

class Forest;

/// Vertex decoration: a base letter, a multiset of base letters, or a whole
/// forest. Construction canonicalizes: a one-element multiset collapses to
/// its atom, and wrapping a forest of single atom-labelled vertices yields
/// the multiset of those letters.
class Label {
  public:
    enum class Kind { atom = 0, multiset = 1, wrapped = 2 };

    Label() : atoms_{Atom{}} {}

    static Label atom(Atom a);
    static Label atom(int id, int weight = 1) { return atom(Atom{id, weight}); }
    static Label multiset(std::vector<Atom> members);
    static Label wrap(const Forest& payload);

    /// The label (g) attached by the root-labelling map: empty for g = {} and
    /// for multi-vertex trees.
    static std::optional<Label> of_forest(const Forest& g);

    /// Multiset union of joinable labels (atoms / multisets only).
    static Label join(const std::vector<Label>& parts);

    Kind kind() const { return kind_; }
    bool is_atom() const { return kind_ == Kind::atom; }
    bool joinable() const { return kind_ != Kind::wrapped; }
    const Atom& as_atom() const { return atoms_.front(); }
    /// Sorted members; for an atom label this is the one-element list.
    const std::vector<Atom>& members() const { return atoms_; }
    const Forest& wrapped() const { return *payload_; }
    int weight() const { return weight_; }

  private:
    Kind kind_ = Kind::atom;
    std::vector<Atom> atoms_;
    std::shared_ptr<const Forest> payload_;
    int weight_ = 1;
};

int compare(const Label& a, const Label& b);
inline bool operator==(const Label& a, const Label& b) { return compare(a, b) == 0; }
inline bool operator<(const Label& a, const Label& b) { return compare(a, b) < 0; }

/// Rooted tree with unordered children, stored canonically sorted so that
/// structural equality coincides with labelled-tree isomorphism.
class Tree {
  public:
    explicit Tree(Label label, std::vector<Tree> children = {});

    const Label& label() const { return label_; }
    const std::vector<Tree>& children() const { return children_; }
    int degree() const { return degree_; }
    int vertex_count() const { return vertices_; }
    int height() const { return height_; }

  private:
    Label label_;
    std::vector<Tree> children_;
    int degree_ = 0;
    int vertices_ = 0;
    int height_ = 0;
};

int compare(const Tree& a, const Tree& b);
inline bool operator==(const Tree& a, const Tree& b) { return compare(a, b) == 0; }
inline bool operator<(const Tree& a, const Tree& b) { return compare(a, b) < 0; }

/// Commutative product of trees; the empty forest is the unit.
class Forest {
  public:
    Forest() = default;
    explicit Forest(std::vector<Tree> trees);

    static Forest empty() { return Forest(); }
    static Forest one(Tree t);
    static Forest single(Label l) { return one(Tree(std::move(l))); }

    bool is_empty() const { return trees_.empty(); }
    bool is_tree() const { return trees_.size() == 1; }
    /// Non-empty and not a tree.
    bool is_proper() const { return trees_.size() >= 2; }
    bool is_single_vertex_product() const;

    const std::vector<Tree>& trees() const { return trees_; }
    const Tree& as_tree() const { return trees_.front(); }
    int degree() const { return degree_; }
    int vertex_count() const { return vertices_; }
    int factor_count() const { return static_cast<int>(trees_.size()); }

    Forest times(const Forest& other) const;
    Forest times(const Tree& t) const;

  private:
    std::vector<Tree> trees_;
    int degree_ = 0;
    int vertices_ = 0;
};

int compare(const Forest& a, const Forest& b);
inline bool operator==(const Forest& a, const Forest& b) { return compare(a, b) == 0; }
inline bool operator!=(const Forest& a, const Forest& b) { return compare(a, b) != 0; }
inline bool operator<(const Forest& a, const Forest& b) { return compare(a, b) < 0; }

/// Number of label-preserving order automorphisms.
long symmetry_factor(const Tree& t);
long symmetry_factor(const Forest& f);

/// Marker for "multiply instead of grafting onto a vertex".
inline constexpr int kProductVertex = -1;

/// Vertices are addressed by post-order index within the canonical form:
/// factors in canonical order, children before their root.
int vertex_count(const Forest& f);

/// Grafts every root of f onto vertex v of g (post-order index), or returns
/// the product f*g when v == kProductVertex. Throws on a bad index.
Forest attach_at(const Forest& f, const Forest& g, int v);

/// All distinct ways (not distinct results) of grafting f onto g: one entry
/// per choice of target (vertex or product) for each factor of f.
std::vector<Forest> graft_ways(const Forest& f, const Forest& g);

/// One admissible cut: `under` is the part above the cut, `over` the part
/// containing the roots.
struct Cut {
    Forest under;
    Forest over;
};

/// All admissible cuts of t, including the trivial ({} , t) and the total
/// (t, {}) one.
std::vector<Cut> admissible_cuts(const Tree& t);

/// Factor-wise admissible cuts of a forest (still including trivial/total).
std::vector<Cut> admissible_cuts(const Forest& f);

struct EdgeCut {
    int edges_cut = 0;
    Forest remainder;
};

/// Every subset of edges of t together with the forest left after deleting
/// those edges. 2^(#edges) entries; does not include the total cut.
std::vector<EdgeCut> all_nontotal_cuts(const Tree& t);

/// Rebuilds `skeleton` relabelling vertex v (post-order) with
/// decorations[v].first and grafting decorations[v].second onto it.
Forest star_graft(const Tree& skeleton,
                  const std::vector<std::pair<Label, Forest>>& decorations);

}  // namespace bramble
