#pragma once

#include <gmpxx.h>

#include <cstdint>
#include <string>

namespace bramble {

/// Exact rational scalar used throughout the algebraic layer.
using Rational = mpq_class;

inline double to_double(const Rational& q) { return q.get_d(); }

inline Rational rat(long num, long den = 1) {
    Rational q(num, den);
    q.canonicalize();
    return q;
}

inline Rational factorial(int n) {
    Rational r = 1;
    for (int k = 2; k <= n; ++k) r *= k;
    return r;
}

inline std::string to_string(const Rational& q) {
    return q.get_str();
}

/// Parses "n" or "n/d".
Rational parse_rational(const std::string& s);

}  // namespace bramble
