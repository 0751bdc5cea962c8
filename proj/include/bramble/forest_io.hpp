#pragma once

#include <string>

#include "bramble/forest.hpp"

namespace bramble {

/// Text form of the forest grammar:
///   tree   := label | label "(" tree ("," tree)* ")"
///   forest := "0" | tree ("*" tree)*
///   label  := atom-ident | "{" atom-ident+ "}" | "<" forest ">"
/// Example: `a(b(d),c)*e`. Atom identifiers are resolved against the
/// alphabet with longest-match; unknown single characters are rejected.
std::string print(const Label& l, const Alphabet& a);
std::string print(const Tree& t, const Alphabet& a);
std::string print(const Forest& f, const Alphabet& a);

/// Parses a forest literal; the result is canonical. Throws
/// std::invalid_argument on malformed input.
Forest parse_forest(const std::string& text, const Alphabet& a);
Tree parse_tree(const std::string& text, const Alphabet& a);

}  // namespace bramble
