#pragma once

#include <map>
#include <vector>

#include "bramble/forest.hpp"
#include "bramble/rational.hpp"

namespace bramble {

/// Finite formal rational-linear combination of forests. Zero coefficients
/// are never stored.
class AlgElem {
  public:
    AlgElem() = default;
    static AlgElem unit() { return of(Forest()); }
    static AlgElem of(const Forest& f, Rational c = 1);
    static AlgElem of(const Tree& t, Rational c = 1) { return of(Forest::one(t), std::move(c)); }

    const std::map<Forest, Rational>& terms() const { return terms_; }
    bool is_zero() const { return terms_.empty(); }
    Rational coeff(const Forest& f) const;

    void add(const Forest& f, const Rational& c);
    AlgElem& operator+=(const AlgElem& other);
    AlgElem& operator-=(const AlgElem& other);
    AlgElem operator+(const AlgElem& other) const;
    AlgElem operator-(const AlgElem& other) const;
    AlgElem operator-() const;
    AlgElem scaled(const Rational& c) const;

    /// Free commutative product of forests, extended bilinearly.
    AlgElem forest_product(const AlgElem& other) const;

    /// Drops forests of degree above n.
    AlgElem truncated(int n) const;
    int max_degree() const;

  private:
    std::map<Forest, Rational> terms_;
};

bool operator==(const AlgElem& a, const AlgElem& b);

/// Element of the m-fold tensor power, with explicit arity.
class TensorElem {
  public:
    explicit TensorElem(int arity) : arity_(arity) {}
    static TensorElem of(std::vector<Forest> slots, Rational c = 1);

    int arity() const { return arity_; }
    const std::map<std::vector<Forest>, Rational>& terms() const { return terms_; }
    bool is_zero() const { return terms_.empty(); }
    Rational coeff(const std::vector<Forest>& slots) const;

    void add(const std::vector<Forest>& slots, const Rational& c);
    TensorElem& operator+=(const TensorElem& other);
    TensorElem& operator-=(const TensorElem& other);
    TensorElem operator-(const TensorElem& other) const;
    TensorElem scaled(const Rational& c) const;

    /// Slot-wise free product.
    TensorElem slotwise_product(const TensorElem& other) const;

  private:
    int arity_;
    std::map<std::vector<Forest>, Rational> terms_;
};

bool operator==(const TensorElem& a, const TensorElem& b);

enum class Coproduct { ck, gl };

/// Cut coproduct: trees split over admissible cuts (above part in the first
/// slot), extended as an algebra morphism for the forest product.
TensorElem ck_coproduct(const AlgElem& x);

/// Grafting product, dual to the cut coproduct.
AlgElem gl_product(const AlgElem& x, const AlgElem& y);
AlgElem gl_product_truncated(const AlgElem& x, const AlgElem& y, int n);

/// Factor-split coproduct: sums over subset splits of the factor list.
TensorElem gl_coproduct(const AlgElem& x);

/// Antipode of the cut bialgebra: alternating sum over edge subsets.
AlgElem antipode_ck(const AlgElem& x);

/// Antipode of the grafting bialgebra, obtained by graded duality.
AlgElem antipode_gl(const AlgElem& x);

/// <f,g> = N(f) [f == g], extended bilinearly. The first argument lives on
/// the cut side, the second on the grafting side.
Rational pairing(const AlgElem& y, const AlgElem& x);
Rational pairing(const TensorElem& y, const TensorElem& x);

/// m-fold iterated coproduct; m = 0 gives the counit (arity-0 tensor),
/// m = 1 the identity. `reduced` subtracts the primitive part at each step.
TensorElem iterated_coproduct(const AlgElem& x, int m, bool reduced, Coproduct which);

/// Word in the (possibly enlarged) letter set; used by the quasi-shuffle
/// algebra and the collapse morphisms.
using Word = std::vector<Label>;
int compare(const Word& a, const Word& b);
int word_weight(const Word& w);

class WordSum {
  public:
    WordSum() = default;
    static WordSum of(Word w, Rational c = 1);
    const std::map<Word, Rational>& terms() const { return terms_; }
    bool is_zero() const { return terms_.empty(); }
    Rational coeff(const Word& w) const;
    void add(const Word& w, const Rational& c);
    WordSum& operator+=(const WordSum& other);
    WordSum operator-(const WordSum& other) const;
    WordSum scaled(const Rational& c) const;
    WordSum appended(const Label& l) const;

  private:
    std::map<Word, Rational> terms_;
};

bool operator==(const WordSum& a, const WordSum& b);

/// Recursive quasi-shuffle with multiset-union bracket; the empty word is
/// the unit.
WordSum quasi_shuffle(const Word& w, const Word& z);
WordSum quasi_shuffle(const WordSum& w, const WordSum& z);

/// Plain shuffle (no bracket terms).
WordSum shuffle(const Word& w, const Word& z);
WordSum shuffle(const WordSum& w, const WordSum& z);

/// Order-preserving collapse of a forest onto words, with the shuffle
/// product across factors; phi([f]_a) = phi(f)a.
WordSum phi(const Forest& f);
WordSum phi(const AlgElem& x);

/// Same recursion with the quasi-shuffle product across factors.
WordSum phi_tilde(const Forest& f);
WordSum phi_tilde(const AlgElem& x);

/// Word -> ladder tree, letters read from top to bottom (the first letter is
/// the leaf, the last the root). Right inverse of phi.
Tree iota(const Word& w);
AlgElem iota(const WordSum& s);

/// Words whose letters are trees.
using TreeWord = std::vector<Tree>;

class TreeWordSum {
  public:
    TreeWordSum() = default;
    static TreeWordSum of(TreeWord w, Rational c = 1);
    const std::map<TreeWord, Rational>& terms() const { return terms_; }
    void add(const TreeWord& w, const Rational& c);
    TreeWordSum& operator+=(const TreeWordSum& other);
    TreeWordSum scaled(const Rational& c) const;
    TreeWordSum appended(const Tree& t) const;

  private:
    std::map<TreeWord, Rational> terms_;
};

bool operator==(const TreeWordSum& a, const TreeWordSum& b);

/// Tree -> sum of words of trees: psi(t) = t + sum psi(t_under) * t_root
/// over reduced cuts; extended to forests with the shuffle product.
TreeWordSum psi(const Tree& t);
TreeWordSum psi(const Forest& f);

}  // namespace bramble
