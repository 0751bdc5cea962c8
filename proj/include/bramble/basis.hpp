#pragma once

#include <memory>

#include "bramble/alg.hpp"
#include "bramble/forest.hpp"

namespace bramble {

/// Which extension of the base alphabet is materialized.
enum class Extension {
    none,    ///< base letters only
    simple,  ///< plus multisets of base letters
    full,    ///< plus all proper base-labelled forests as letters
};

/// Enumerated basis of all forests of bounded degree over a (possibly
/// enlarged) alphabet, with the structure tables used by grid paths.
class ForestBasis {
  public:
    static std::shared_ptr<const ForestBasis> make(Alphabet base, Extension ext,
                                                   int max_degree);

    const Alphabet& base() const { return base_; }
    Extension extension() const { return ext_; }
    int max_degree() const { return max_degree_; }

    const std::vector<Label>& letters() const { return letters_; }
    bool has_letter(const Label& l) const;

    int size() const { return static_cast<int>(forests_.size()); }
    const Forest& forest(int i) const { return forests_[i]; }
    const std::vector<Forest>& forests() const { return forests_; }
    /// -1 when absent.
    int find(const Forest& f) const;
    int index_of(const Forest& f) const;  ///< throws when absent

    bool is_tree(int i) const { return forests_[i].is_tree(); }
    int degree(int i) const { return forests_[i].degree(); }

    struct ChenTerm {
        int left;
        int right;
        double mult;
    };
    /// Cut-coproduct table of forest i (admissible cuts, trivial and total
    /// included), aggregated with multiplicities.
    const std::vector<ChenTerm>& chen_terms(int i) const { return chen_[i]; }

    /// Distinct splits f = g*h with both parts nonempty.
    const std::vector<std::pair<int, int>>& product_splits(int i) const {
        return splits_[i];
    }

    /// For a tree [f]_a: the root label and the index of f. vertex trees give
    /// children == 0 (the empty forest).
    const Label& root_label(int i) const;
    int children_index(int i) const;

    /// Index of the single-vertex forest with this label, -1 if absent.
    int letter_index(const Label& l) const;

  private:
    ForestBasis() = default;

    Alphabet base_;
    Extension ext_ = Extension::none;
    int max_degree_ = 0;
    std::vector<Label> letters_;
    std::vector<Forest> forests_;
    std::map<Forest, int> index_;
    std::vector<std::vector<ChenTerm>> chen_;
    std::vector<std::vector<std::pair<int, int>>> splits_;
    std::vector<Label> root_labels_;
    std::vector<int> children_;
    std::map<Label, int> letter_index_;
};

/// All trees over the given letters with degree <= max_degree.
std::vector<Tree> enumerate_trees(const std::vector<Label>& letters, int max_degree);

/// All forests (including the empty one) over the given letters with degree
/// <= max_degree, canonically sorted.
std::vector<Forest> enumerate_forests(const std::vector<Label>& letters, int max_degree);

/// Letters of an extended alphabet, by extension mode, weight <= max_degree.
std::vector<Label> enumerate_letters(const Alphabet& base, Extension ext, int max_degree);

}  // namespace bramble
