#include "bramble/rational.hpp"

#include <stdexcept>

namespace bramble {

Rational parse_rational(const std::string& s) {
    try {
        Rational q(s);
        q.canonicalize();
        return q;
    } catch (const std::invalid_argument&) {
        throw std::invalid_argument("bad rational literal: " + s);
    }
}

}  // namespace bramble
