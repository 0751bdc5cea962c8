#include "bramble/forest_io.hpp"

#include <sstream>
#include <stdexcept>

namespace bramble {

std::string print(const Label& l, const Alphabet& a) {
    switch (l.kind()) {
        case Label::Kind::atom:
            return a.names.at(l.as_atom().id);
        case Label::Kind::multiset: {
            std::string out = "{";
            for (const Atom& m : l.members()) out += a.names.at(m.id);
            return out + "}";
        }
        case Label::Kind::wrapped:
            return "<" + print(l.wrapped(), a) + ">";
    }
    return {};
}

std::string print(const Tree& t, const Alphabet& a) {
    std::string out = print(t.label(), a);
    if (!t.children().empty()) {
        out += "(";
        for (size_t i = 0; i < t.children().size(); ++i) {
            if (i) out += ",";
            out += print(t.children()[i], a);
        }
        out += ")";
    }
    return out;
}

std::string print(const Forest& f, const Alphabet& a) {
    if (f.is_empty()) return "0";
    std::string out;
    for (size_t i = 0; i < f.trees().size(); ++i) {
        if (i) out += "*";
        out += print(f.trees()[i], a);
    }
    return out;
}

namespace {

struct Parser {
    const std::string& text;
    const Alphabet& alphabet;
    size_t pos = 0;

    [[noreturn]] void fail(const std::string& what) const {
        std::ostringstream os;
        os << "forest literal error at position " << pos << ": " << what;
        throw std::invalid_argument(os.str());
    }

    void skip_ws() {
        while (pos < text.size() && (text[pos] == ' ' || text[pos] == '\t')) ++pos;
    }

    bool eat(char c) {
        skip_ws();
        if (pos < text.size() && text[pos] == c) {
            ++pos;
            return true;
        }
        return false;
    }

    char peek() {
        skip_ws();
        return pos < text.size() ? text[pos] : '\0';
    }

    // Longest registered name starting here.
    Atom atom_ident() {
        skip_ws();
        int best = -1;
        size_t best_len = 0;
        for (int i = 0; i < alphabet.size(); ++i) {
            const std::string& n = alphabet.names[i];
            if (n.size() > best_len && text.compare(pos, n.size(), n) == 0) {
                best = i;
                best_len = n.size();
            }
        }
        if (best < 0) fail("expected a letter of the alphabet");
        pos += best_len;
        return alphabet.atom(best);
    }

    Label label() {
        if (eat('{')) {
            std::vector<Atom> members;
            while (!eat('}')) members.push_back(atom_ident());
            if (members.empty()) fail("empty multiset label");
            return Label::multiset(std::move(members));
        }
        if (eat('<')) {
            Forest payload = forest();
            if (!eat('>')) fail("expected '>'");
            return Label::wrap(payload);
        }
        return Label::atom(atom_ident());
    }

    Tree tree() {
        Label l = label();
        std::vector<Tree> children;
        if (eat('(')) {
            children.push_back(tree());
            while (eat(',')) children.push_back(tree());
            if (!eat(')')) fail("expected ')'");
        }
        return Tree(std::move(l), std::move(children));
    }

    Forest forest() {
        if (peek() == '0') {
            ++pos;
            return Forest();
        }
        std::vector<Tree> trees;
        trees.push_back(tree());
        while (eat('*')) trees.push_back(tree());
        return Forest(std::move(trees));
    }
};

}  // namespace

Forest parse_forest(const std::string& text, const Alphabet& a) {
    Parser p{text, a};
    Forest f = p.forest();
    p.skip_ws();
    if (p.pos != text.size()) p.fail("trailing input");
    return f;
}

Tree parse_tree(const std::string& text, const Alphabet& a) {
    Forest f = parse_forest(text, a);
    if (!f.is_tree()) throw std::invalid_argument("expected a single tree: " + text);
    return f.as_tree();
}

}  // namespace bramble
