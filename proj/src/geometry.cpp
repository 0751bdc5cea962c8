#include "bramble/geometry.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <sstream>
#include <stdexcept>

namespace bramble {

bool Connection::torsion_free() const {
    for (int c = 0; c < dim; ++c)
        for (int a = 0; a < dim; ++a)
            for (int b = 0; b < a; ++b)
                if (!(christoffel(c, a, b) == christoffel(c, b, a))) return false;
    return true;
}

std::shared_ptr<const SymSpace> SymSpace::make(int dim, int order) {
    auto s = std::make_shared<SymSpace>();
    s->dim = dim;
    s->order = order;
    std::vector<int> cur;
    std::function<void(int)> rec = [&](int min_id) {
        if (!cur.empty() && static_cast<int>(cur.size()) <= order) {
            s->index[cur] = static_cast<int>(s->tuples.size());
            s->tuples.push_back(cur);
        }
        if (static_cast<int>(cur.size()) == order) return;
        for (int i = min_id; i < dim; ++i) {
            cur.push_back(i);
            rec(i);
            cur.pop_back();
        }
    };
    rec(0);
    // length-major ordering
    std::sort(s->tuples.begin(), s->tuples.end(),
              [](const std::vector<int>& a, const std::vector<int>& b) {
                  if (a.size() != b.size()) return a.size() < b.size();
                  return a < b;
              });
    s->index.clear();
    for (int i = 0; i < s->size(); ++i) s->index[s->tuples[i]] = i;
    s->orderings.resize(s->size());
    for (int i = 0; i < s->size(); ++i) {
        const auto& t = s->tuples[i];
        double count = 1;
        for (size_t k = 1; k <= t.size(); ++k) count *= double(k);
        size_t a = 0;
        while (a < t.size()) {
            size_t b = a;
            while (b < t.size() && t[b] == t[a]) ++b;
            for (size_t k = 2; k <= b - a; ++k) count /= double(k);
            a = b;
        }
        s->orderings[i] = count;
    }
    return s;
}

int SymSpace::find(std::vector<int> tuple) const {
    std::sort(tuple.begin(), tuple.end());
    auto it = index.find(tuple);
    return it == index.end() ? -1 : it->second;
}

SymTensorTable SymTensorTable::zero(std::shared_ptr<const SymSpace> space, int nvars) {
    SymTensorTable t;
    t.space = std::move(space);
    t.entry.assign(t.space->size(),
                   std::vector<Polynomial>(t.space->size(), Polynomial(nvars)));
    return t;
}

SymTensorTable SymTensorTable::identity(std::shared_ptr<const SymSpace> space, int nvars) {
    SymTensorTable t = zero(space, nvars);
    for (int i = 0; i < t.space->size(); ++i)
        t.entry[i][i] = Polynomial::constant(nvars, 1);
    return t;
}

SymTensorTable SymTensorTable::times(const SymTensorTable& other) const {
    int nvars = 0;
    for (const auto& row : entry)
        for (const Polynomial& p : row) nvars = std::max(nvars, p.nvars());
    SymTensorTable out = zero(space, nvars);
    for (int l = 0; l < space->size(); ++l)
        for (int u = 0; u < space->size(); ++u) {
            Polynomial acc(nvars);
            for (int m = 0; m < space->size(); ++m) {
                if (entry[l][m].is_zero() || other.entry[m][u].is_zero()) continue;
                acc += (entry[l][m] * other.entry[m][u]);
            }
            out.entry[l][u] = acc;
        }
    return out;
}

std::vector<std::vector<double>> SymTensorTable::eval(const std::vector<double>& x) const {
    std::vector<std::vector<double>> out(space->size(),
                                         std::vector<double>(space->size(), 0.0));
    for (int l = 0; l < space->size(); ++l)
        for (int u = 0; u < space->size(); ++u) out[l][u] = entry[l][u].eval(x);
    return out;
}

double SymTensorTable::value(const std::vector<double>& x, const std::vector<int>& lower,
                             const std::vector<int>& upper) const {
    int l = space->find(lower);
    int u = space->find(upper);
    if (l < 0 || u < 0) throw std::out_of_range("tuple outside the table");
    return entry[l][u].eval(x);
}

std::map<std::vector<int>, Polynomial> nabla_expansion(const Connection& conn,
                                                       const std::vector<int>& dirs) {
    const int m = conn.dim;
    if (dirs.empty()) throw std::invalid_argument("empty direction tuple");
    if (dirs.size() == 1) {
        std::map<std::vector<int>, Polynomial> out;
        out[{dirs[0]}] = Polynomial::constant(m, 1);
        return out;
    }
    std::vector<int> rest(dirs.begin() + 1, dirs.end());
    auto sub = nabla_expansion(conn, rest);
    std::map<std::vector<int>, Polynomial> out;
    auto add = [&](const std::vector<int>& key, const Polynomial& p) {
        if (p.is_zero()) return;
        auto [it, inserted] = out.emplace(key, p);
        if (!inserted) it->second += p;
    };
    for (const auto& [beta, c] : sub) {
        add(beta, c.derivative(dirs[0]));
        std::vector<int> grown = beta;
        grown.push_back(dirs[0]);
        std::sort(grown.begin(), grown.end());
        add(grown, c);
    }
    for (size_t k = 0; k < rest.size(); ++k) {
        for (int sigma = 0; sigma < m; ++sigma) {
            std::vector<int> mod = rest;
            mod[k] = sigma;
            auto subk = nabla_expansion(conn, mod);
            const Polynomial& gamma = conn.christoffel(sigma, dirs[0], rest[k]);
            if (gamma.is_zero()) continue;
            for (const auto& [beta, c] : subk) add(beta, (c * gamma).scaled(-1));
        }
    }
    return out;
}

Polynomial nabla_apply(const Connection& conn, const std::vector<int>& dirs,
                       const Polynomial& g) {
    Polynomial out(conn.dim);
    for (const auto& [beta, c] : nabla_expansion(conn, dirs)) {
        Polynomial dg = g;
        for (int b : beta) dg = dg.derivative(b);
        out += dg * c;
    }
    return out;
}

SymTensorTable covariant_coeffs(const Connection& conn, int order) {
    auto space = SymSpace::make(conn.dim, order);
    SymTensorTable table = SymTensorTable::zero(space, conn.dim);
    for (int l = 0; l < space->size(); ++l) {
        // Symmetrize over the distinct orderings of the lower tuple.
        std::vector<int> tuple = space->tuples[l];
        std::sort(tuple.begin(), tuple.end());
        double count = 0;
        std::map<std::vector<int>, Polynomial> acc;
        do {
            for (const auto& [beta, c] : nabla_expansion(conn, tuple)) {
                auto [it, inserted] = acc.emplace(beta, c);
                if (!inserted) it->second += c;
            }
            count += 1;
        } while (std::next_permutation(tuple.begin(), tuple.end()));
        for (auto& [beta, c] : acc) {
            int u = space->index.at(beta);
            table.entry[l][u] = c.scaled(Rational(1) / Rational(static_cast<long>(count)));
        }
    }
    return table;
}

SymTensorTable transfer_symbols(const Connection& conn, int order) {
    SymTensorTable ltable = covariant_coeffs(conn, order);
    auto space = ltable.space;
    int nvars = conn.dim;
    // Gamma~ = L^{-1}; L = I - E with E strictly lower in tuple length, so
    // the inverse is the finite sum of powers of E.
    SymTensorTable e = SymTensorTable::zero(space, nvars);
    for (int l = 0; l < space->size(); ++l)
        for (int u = 0; u < space->size(); ++u) {
            e.entry[l][u] = ltable.entry[l][u].scaled(-1);
            if (l == u) e.entry[l][u] += Polynomial::constant(nvars, 1);
        }
    SymTensorTable result = SymTensorTable::identity(space, nvars);
    SymTensorTable power = e;
    for (int k = 1; k < order; ++k) {
        for (int l = 0; l < space->size(); ++l)
            for (int u = 0; u < space->size(); ++u) result.entry[l][u] += power.entry[l][u];
        if (k + 1 < order) power = power.times(e);
    }
    return result;
}

double Order3Family::value(const std::vector<double>& x, std::vector<int> lower,
                           const std::vector<int>& upper) const {
    const int m = dim;
    const Connection& g = *conn;
    std::sort(lower.begin(), lower.end());
    auto gam = [&](int k, int a, int b) { return g.christoffel(k, a, b).eval(x); };
    auto gam_sym = [&](int k, int a, int b) {
        return 0.5 * (gam(k, a, b) + gam(k, b, a));
    };
    auto gam_asym = [&](int k, int a, int b) {
        return 0.5 * (gam(k, a, b) - gam(k, b, a));
    };
    auto dgam = [&](int l, int k, int a, int b) {
        return g.christoffel(k, a, b).derivative(l).eval(x);
    };
    // Symmetrize over the distinct orderings of the lower tuple.
    double acc = 0;
    double count = 0;
    std::vector<int> t = lower;
    do {
        count += 1;
        if (upper.size() == 1 && t.size() == 1) {
            acc += upper[0] == t[0] ? 1.0 : 0.0;
        } else if (upper.size() == 1 && t.size() == 2) {
            acc += gam(upper[0], t[0], t[1]);
        } else if (upper.size() == 1 && t.size() == 3) {
            int a = t[0], b = t[1], cidx = t[2];
            double v = dgam(a, upper[0], b, cidx);
            for (int s = 0; s < m; ++s) {
                v += gam_sym(upper[0], cidx, s) * gam(s, a, b);
                v += (3.0 - 2.0 * c) * gam_asym(upper[0], cidx, s) * gam(s, a, b);
            }
            acc += v;
        } else if (upper.size() == 2 && t.size() == 2) {
            acc += (upper[0] == t[0] && upper[1] == t[1] ? 0.5 : 0.0) +
                   (upper[0] == t[1] && upper[1] == t[0] ? 0.5 : 0.0);
        } else if (upper.size() == 2 && t.size() == 3) {
            double v = 0;
            if (upper[1] == t[2]) v += c * gam(upper[0], t[0], t[1]);
            if (upper[0] == t[2]) v += (3.0 - c) * gam(upper[1], t[0], t[1]);
            acc += v;
        } else if (upper.size() == 3 && t.size() == 3) {
            // (1/3!) #permutations sending t to this exact ordered upper
            std::vector<int> u = upper;
            std::vector<int> tt = t;
            std::sort(tt.begin(), tt.end());
            std::sort(u.begin(), u.end());
            if (u == tt) {
                double mult_fact = 1;
                size_t a2 = 0;
                while (a2 < tt.size()) {
                    size_t b2 = a2;
                    while (b2 < tt.size() && tt[b2] == tt[a2]) ++b2;
                    for (size_t r = 2; r <= b2 - a2; ++r) mult_fact *= double(r);
                    a2 = b2;
                }
                acc += mult_fact / 6.0;
            }
        }
    } while (std::next_permutation(t.begin(), t.end()));
    return acc / count;
}

Order3Family transfer_family(const Connection& conn, double c) {
    Order3Family f;
    f.dim = conn.dim;
    f.conn = &conn;
    f.c = c;
    return f;
}

namespace {

std::vector<std::vector<double>> invert_matrix(std::vector<std::vector<double>> a) {
    int n = static_cast<int>(a.size());
    std::vector<std::vector<double>> inv(n, std::vector<double>(n, 0.0));
    for (int i = 0; i < n; ++i) inv[i][i] = 1.0;
    for (int col = 0; col < n; ++col) {
        int pivot = col;
        for (int r = col + 1; r < n; ++r)
            if (std::abs(a[r][col]) > std::abs(a[pivot][col])) pivot = r;
        if (std::abs(a[pivot][col]) < 1e-14) throw std::runtime_error("singular matrix");
        std::swap(a[pivot], a[col]);
        std::swap(inv[pivot], inv[col]);
        double d = a[col][col];
        for (int c2 = 0; c2 < n; ++c2) {
            a[col][c2] /= d;
            inv[col][c2] /= d;
        }
        for (int r = 0; r < n; ++r) {
            if (r == col) continue;
            double f = a[r][col];
            if (f == 0.0) continue;
            for (int c2 = 0; c2 < n; ++c2) {
                a[r][c2] -= f * a[col][c2];
                inv[r][c2] -= f * inv[col][c2];
            }
        }
    }
    return inv;
}

}  // namespace

ChartJet chart_jet(const PolyMap& transition, const std::vector<double>& x) {
    const int m = transition.source_dim;
    if (transition.target_dim() != m) throw std::invalid_argument("transition must be square");
    ChartJet jet;
    jet.dim = m;
    jet.x = x;
    jet.y = transition.eval(x);
    jet.jac.assign(m, std::vector<double>(m, 0.0));
    jet.jac2.assign(m, std::vector<std::vector<double>>(m, std::vector<double>(m, 0.0)));
    std::vector<double> jac3(size_t(m) * m * m * m, 0.0);
    auto j3 = [&](int k, int a, int b, int c) -> double& {
        return jac3[((size_t(k) * m + a) * m + b) * m + c];
    };
    for (int k = 0; k < m; ++k)
        for (int a = 0; a < m; ++a) {
            Polynomial da = transition.comps[k].derivative(a);
            jet.jac[k][a] = da.eval(x);
            for (int b = 0; b < m; ++b) {
                Polynomial dab = da.derivative(b);
                jet.jac2[k][a][b] = dab.eval(x);
                for (int c = 0; c < m; ++c) j3(k, a, b, c) = dab.derivative(c).eval(x);
            }
        }
    auto kinv = invert_matrix(jet.jac);
    jet.inv.assign(size_t(m) * m, 0.0);
    for (int g = 0; g < m; ++g)
        for (int i = 0; i < m; ++i) jet.inv[size_t(g) * m + i] = kinv[g][i];

    jet.inv2.assign(size_t(m) * m * m, 0.0);
    for (int g = 0; g < m; ++g)
        for (int i = 0; i < m; ++i)
            for (int j = 0; j < m; ++j) {
                double s = 0;
                for (int k = 0; k < m; ++k)
                    for (int sg = 0; sg < m; ++sg)
                        for (int rh = 0; rh < m; ++rh)
                            s += jet.bwd(g, k) * jet.jac2[k][sg][rh] * jet.bwd(sg, i) *
                                 jet.bwd(rh, j);
                jet.inv2[(size_t(g) * m + i) * m + j] = -s;
            }

    jet.inv3.assign(size_t(m) * m * m * m, 0.0);
    for (int g = 0; g < m; ++g)
        for (int i = 0; i < m; ++i)
            for (int j = 0; j < m; ++j)
                for (int l = 0; l < m; ++l) {
                    double s = 0;
                    for (int k = 0; k < m; ++k)
                        for (int sg = 0; sg < m; ++sg)
                            for (int rh = 0; rh < m; ++rh) {
                                s += jet.bwd2(g, k, l) * jet.jac2[k][sg][rh] *
                                     jet.bwd(sg, i) * jet.bwd(rh, j);
                                double dh2 = 0;
                                for (int ps = 0; ps < m; ++ps)
                                    dh2 += j3(k, sg, rh, ps) * jet.bwd(ps, l);
                                s += jet.bwd(g, k) * dh2 * jet.bwd(sg, i) * jet.bwd(rh, j);
                                s += jet.bwd(g, k) * jet.jac2[k][sg][rh] *
                                     jet.bwd2(sg, i, l) * jet.bwd(rh, j);
                                s += jet.bwd(g, k) * jet.jac2[k][sg][rh] * jet.bwd(sg, i) *
                                     jet.bwd2(rh, j, l);
                            }
                    jet.inv3[((size_t(g) * m + i) * m + j) * m + l] = -s;
                }
    return jet;
}

Connection transported_connection(const Connection& conn, const ChartJet& jet) {
    const int m = conn.dim;
    Connection out(m);
    // Values and first derivatives at the image point; assembled into a
    // linear surrogate around it.
    std::vector<double> gval(size_t(m) * m * m, 0.0);
    std::vector<double> gder(size_t(m) * m * m * m, 0.0);
    auto gv = [&](int k, int i, int j) -> double& {
        return gval[(size_t(k) * m + i) * m + j];
    };
    auto gd = [&](int k, int i, int j, int l) -> double& {
        return gder[((size_t(k) * m + i) * m + j) * m + l];
    };
    // Christoffel values and derivatives in the source chart.
    auto gamma = [&](int c, int a, int b) { return conn.christoffel(c, a, b).eval(jet.x); };
    auto dgamma = [&](int p, int c, int a, int b) {
        return conn.christoffel(c, a, b).derivative(p).eval(jet.x);
    };

    for (int k = 0; k < m; ++k)
        for (int i = 0; i < m; ++i)
            for (int j = 0; j < m; ++j) {
                double v = 0;
                for (int g = 0; g < m; ++g) {
                    double inner = 0;
                    for (int a = 0; a < m; ++a)
                        for (int b = 0; b < m; ++b)
                            inner += gamma(g, a, b) * jet.bwd(a, i) * jet.bwd(b, j);
                    v += jet.fwd(k, g) * inner + jet.fwd(k, g) * jet.bwd2(g, i, j);
                }
                gv(k, i, j) = v;
                for (int l = 0; l < m; ++l) {
                    double s = 0;
                    for (int g = 0; g < m; ++g) {
                        double inner = 0, dinner = 0;
                        for (int a = 0; a < m; ++a)
                            for (int b = 0; b < m; ++b) {
                                double gab = gamma(g, a, b);
                                inner += gab * jet.bwd(a, i) * jet.bwd(b, j);
                                double dg = 0;
                                for (int p = 0; p < m; ++p)
                                    dg += dgamma(p, g, a, b) * jet.bwd(p, l);
                                dinner += dg * jet.bwd(a, i) * jet.bwd(b, j) +
                                          gab * jet.bwd2(a, i, l) * jet.bwd(b, j) +
                                          gab * jet.bwd(a, i) * jet.bwd2(b, j, l);
                            }
                        double dfwd = 0;
                        for (int p = 0; p < m; ++p)
                            dfwd += jet.jac2[k][g][p] * jet.bwd(p, l);
                        s += dfwd * inner + jet.fwd(k, g) * dinner;
                        s += dfwd * jet.bwd2(g, i, j) + jet.fwd(k, g) * jet.bwd3(g, i, j, l);
                    }
                    gd(k, i, j, l) = s;
                }
            }

    // linear polynomials around jet.y
    for (int k = 0; k < m; ++k)
        for (int i = 0; i < m; ++i)
            for (int j = 0; j < m; ++j) {
                Polynomial p(m);
                double constant = gv(k, i, j);
                for (int l = 0; l < m; ++l) {
                    constant -= gd(k, i, j, l) * jet.y[l];
                    Polynomial lin = Polynomial::variable(m, l);
                    // exact rational from double: derivatives enter tests at
                    // fixed points, so represent through decimal scaling
                    p += lin.scaled(Rational(gd(k, i, j, l)));
                }
                p += Polynomial::constant(m, Rational(constant));
                out.christoffel(k, i, j) = p;
            }
    return out;
}

namespace {

// All ordered tuples of given length over [0, dim).
std::vector<std::vector<int>> ordered_tuples(int dim, int len) {
    std::vector<std::vector<int>> out;
    std::vector<int> cur(len, 0);
    while (true) {
        out.push_back(cur);
        int i = 0;
        while (i < len && ++cur[i] == dim) cur[i++] = 0;
        if (i == len) break;
    }
    return out;
}

// Unshuffles of positions of j into m ordered nonempty blocks.
void unshuffles_rec(const std::vector<int>& j, size_t pos, std::vector<std::vector<int>>& blocks,
                    std::vector<std::vector<std::vector<int>>>& out) {
    if (pos == j.size()) {
        bool ok = true;
        for (const auto& b : blocks)
            if (b.empty()) ok = false;
        if (ok) out.push_back(blocks);
        return;
    }
    for (auto& b : blocks) {
        b.push_back(j[pos]);
        unshuffles_rec(j, pos + 1, blocks, out);
        b.pop_back();
    }
}

// B^beta_j from the inverse jet tensors (beta ordered, |beta| = m blocks).
double b_matrix(const ChartJet& jet, const std::vector<int>& beta,
                const std::vector<int>& j) {
    int m = static_cast<int>(beta.size());
    std::vector<std::vector<std::vector<int>>> shuffles;
    std::vector<std::vector<int>> blocks(m);
    unshuffles_rec(j, 0, blocks, shuffles);
    double fact = 1;
    for (int r = 2; r <= m; ++r) fact *= r;
    double sum = 0;
    for (const auto& parts : shuffles) {
        double prod = 1;
        for (int l = 0; l < m && prod != 0; ++l) {
            const auto& block = parts[l];
            if (block.size() == 1)
                prod *= jet.bwd(beta[l], block[0]);
            else if (block.size() == 2)
                prod *= jet.bwd2(beta[l], block[0], block[1]);
            else if (block.size() == 3)
                prod *= jet.bwd3(beta[l], block[0], block[1], block[2]);
            else
                prod = 0;
        }
        sum += prod;
    }
    return sum / fact;
}

using TensorFn =
    std::function<double(const std::vector<int>& lower, const std::vector<int>& upper)>;

double transform_residual(TensorFn s_old, TensorFn s_new, const ChartJet& jet, int order) {
    const int m = jet.dim;
    double worst = 0;
    auto space = SymSpace::make(m, order);
    for (const auto& jt : space->tuples) {
        for (const auto& it : space->tuples) {
            double lhs = s_new(jt, it);
            double rhs = 0;
            for (const auto& alpha : ordered_tuples(m, static_cast<int>(it.size()))) {
                double fwd = 1;
                for (size_t r = 0; r < it.size(); ++r) fwd *= jet.fwd(it[r], alpha[r]);
                if (fwd == 0.0) continue;
                for (int blen = 1; blen <= static_cast<int>(jt.size()); ++blen)
                    for (const auto& beta : ordered_tuples(m, blen)) {
                        double sv = s_old(beta, alpha);
                        if (sv == 0.0) continue;
                        rhs += fwd * sv * b_matrix(jet, beta, jt);
                    }
            }
            worst = std::max(worst, std::abs(lhs - rhs));
        }
    }
    return worst;
}

// Paper-normalized values (per ordered upper tuple) from a sym table.
TensorFn table_fn(const SymTensorTable& table, const std::vector<double>& at) {
    auto values = table.eval(at);
    auto space = table.space;
    return [values, space](const std::vector<int>& lower, const std::vector<int>& upper) {
        int l = space->find(lower);
        int u = space->find(std::vector<int>(upper));
        if (l < 0 || u < 0) return 0.0;
        return values[l][u] / space->orderings[u];
    };
}

}  // namespace

double transform_check(const Connection& conn, const PolyMap& transition,
                       const std::vector<double>& x, int order) {
    ChartJet jet = chart_jet(transition, x);
    SymTensorTable told = transfer_symbols(conn, order);
    Connection moved = transported_connection(conn, jet);
    SymTensorTable tnew = transfer_symbols(moved, order);
    return transform_residual(table_fn(told, x), table_fn(tnew, jet.y), jet, order);
}

double transform_check_family(const Connection& conn, const PolyMap& transition,
                              const std::vector<double>& x, double c) {
    ChartJet jet = chart_jet(transition, x);
    Connection moved = transported_connection(conn, jet);
    Order3Family fold = transfer_family(conn, c);
    Order3Family fnew = transfer_family(moved, c);
    auto old_fn = [&fold, &x](const std::vector<int>& lower, const std::vector<int>& upper) {
        return fold.value(x, lower, upper);
    };
    auto new_fn = [&fnew, &jet](const std::vector<int>& lower,
                                const std::vector<int>& upper) {
        return fnew.value(jet.y, lower, upper);
    };
    return transform_residual(old_fn, new_fn, jet, 3);
}

bool Chart::contains(const std::vector<double>& x, double margin) const {
    for (size_t i = 0; i < lo.size(); ++i)
        if (x[i] < lo[i] + margin || x[i] > hi[i] - margin) return false;
    return true;
}

int Atlas::find_chart(const std::string& name) const {
    for (size_t i = 0; i < charts.size(); ++i)
        if (charts[i].name == name) return static_cast<int>(i);
    return -1;
}

const PolyMap* Atlas::transition(int from, int to) const {
    auto it = transitions.find({from, to});
    return it == transitions.end() ? nullptr : &it->second;
}

namespace {

GridRoughPath restrict_path(const GridRoughPath& x, int i0, int i1) {
    std::vector<double> grid(x.grid().begin() + i0, x.grid().begin() + i1 + 1);
    std::vector<DenseVec> cells;
    for (int i = i0; i < i1; ++i) cells.push_back(x.value(i, i + 1));
    return GridRoughPath(x.basis_ptr(), x.p(), std::move(grid), std::move(cells));
}

std::vector<double> segment_trace_at(const ManifoldSegment& seg, int global_index) {
    auto tv = trace_values(*seg.path, seg.x0);
    std::vector<double> out(tv.size());
    for (size_t a = 0; a < tv.size(); ++a) out[a] = tv[a][global_index - seg.i0];
    return out;
}

}  // namespace

double atlas_compatibility_defect(const ManifoldRoughPath& mx, double tol) {
    double worst = 0;
    for (size_t a = 0; a < mx.segments.size(); ++a)
        for (size_t b = 0; b < mx.segments.size(); ++b) {
            if (a == b) continue;
            const ManifoldSegment& sa = mx.segments[a];
            const ManifoldSegment& sb = mx.segments[b];
            int lo = std::max(sa.i0, sb.i0), hi = std::min(sa.i1, sb.i1);
            if (lo >= hi) continue;
            const PolyMap* tr = mx.atlas.transition(sa.chart, sb.chart);
            if (!tr) continue;
            GridRoughPath cut = restrict_path(*sa.path, lo - sa.i0, hi - sa.i0);
            GridRoughPath pushed =
                pushforward_bracket(*tr, cut, segment_trace_at(sa, lo), tol);
            // compare against segment b over the same span
            for (int i = 0; i < pushed.cell_count(); ++i) {
                DenseVec lhs = pushed.value(i, i + 1);
                DenseVec rhs = sb.path->value(lo - sb.i0 + i, lo - sb.i0 + i + 1);
                worst = std::max(worst, max_abs_diff(lhs, rhs));
            }
        }
    return worst;
}

Schedule greedy_schedule(const ManifoldRoughPath& mx, int i, int j, double margin) {
    Schedule out;
    int at = i;
    while (at < j) {
        int best = -1, reach = at;
        for (size_t s = 0; s < mx.segments.size(); ++s) {
            const ManifoldSegment& seg = mx.segments[s];
            if (seg.i0 > at || seg.i1 <= at) continue;
            // stay while the trace remains inside the chart box
            int stop = std::min(seg.i1, j);
            if (!mx.atlas.charts.empty()) {
                const Chart& chart = mx.atlas.charts[seg.chart];
                if (!chart.lo.empty()) {
                    auto tv = trace_values(*seg.path, seg.x0);
                    int k = at;
                    while (k < stop) {
                        std::vector<double> x(tv.size());
                        for (size_t a2 = 0; a2 < tv.size(); ++a2)
                            x[a2] = tv[a2][k + 1 - seg.i0];
                        if (!chart.contains(x, margin)) break;
                        ++k;
                    }
                    stop = k;
                }
            }
            if (stop > reach) {
                reach = stop;
                best = static_cast<int>(s);
            }
        }
        if (best < 0) throw std::runtime_error("interval not covered by the atlas");
        out.push_back({best, at, reach});
        at = reach;
    }
    return out;
}

namespace {

double multiset_norm(const Label& l) {
    double denom = 1;
    const auto& ms = l.members();
    size_t i = 0;
    while (i < ms.size()) {
        size_t j = i;
        while (j < ms.size() && compare(ms[i], ms[j]) == 0) ++j;
        for (size_t r = 2; r <= j - i; ++r) denom *= double(r);
        i = j;
    }
    return denom;
}

// Integrand per letter for the connection-weighted differential of a
// one-form f: (1/prod mult!) sum_a f_a Gamma~^a_b.
std::vector<Polynomial> transfer_integrands(const std::vector<Polynomial>& f_comps,
                                            const SymTensorTable& tg,
                                            const std::vector<Label>& letters) {
    int m = static_cast<int>(f_comps.size());
    std::vector<Polynomial> out;
    for (const Label& l : letters) {
        std::vector<int> lower;
        for (const Atom& a : l.members()) lower.push_back(a.id);
        int li = tg.space->find(lower);
        Polynomial p(m);
        if (li >= 0) {
            for (int alpha = 0; alpha < m; ++alpha) {
                int u = tg.space->find({alpha});
                p += f_comps[alpha] * tg.entry[li][u];
            }
        }
        out.push_back(p.scaled(Rational(1) / Rational(static_cast<long>(multiset_norm(l)))));
    }
    return out;
}

}  // namespace

double manifold_integral(const std::vector<std::vector<Polynomial>>& one_form,
                         const ManifoldRoughPath& mx,
                         const std::vector<Connection>& conn, int i, int j, double tol,
                         const Schedule* schedule) {
    Schedule sched = schedule ? *schedule : greedy_schedule(mx, i, j);
    double total = 0;
    for (const auto& [s, from, to] : sched) {
        const ManifoldSegment& seg = mx.segments[s];
        SymTensorTable tg = transfer_symbols(conn[seg.chart], seg.path->truncation());
        const auto& letters = seg.path->basis().letters();
        std::vector<Polynomial> polys =
            transfer_integrands(one_form[seg.chart], tg, letters);
        ControlledPath cols = function_of_trace(polys, seg.path, seg.x0);
        Integrand h{std::move(cols), letters, 1};
        total += rough_integral(h, from - seg.i0, to - seg.i0, tol)[0];
    }
    return total;
}

double ito_kelly_manifold_defect(const std::vector<Polynomial>& g,
                                 const ManifoldRoughPath& mx,
                                 const std::vector<Connection>& conn, int i, int j,
                                 double tol, const Schedule* schedule) {
    Schedule sched = schedule ? *schedule : greedy_schedule(mx, i, j);
    double lhs = 0, rhs = 0;
    for (const auto& [s, from, to] : sched) {
        const ManifoldSegment& seg = mx.segments[s];
        const Connection& cn = conn[seg.chart];
        int order = seg.path->truncation();
        auto space = SymSpace::make(cn.dim, order);
        const auto& letters = seg.path->basis().letters();

        std::vector<double> xa = segment_trace_at(seg, from);
        std::vector<double> xb = segment_trace_at(seg, to);
        lhs += g[seg.chart].eval(xb) - g[seg.chart].eval(xa);

        SymTensorTable tg = transfer_symbols(cn, order);
        // nabla-sym of g per sorted tuple
        std::vector<Polynomial> nsym;
        for (const auto& tuple : space->tuples) {
            std::vector<int> t = tuple;
            Polynomial acc(cn.dim);
            double count = 0;
            do {
                acc += nabla_apply(cn, t, g[seg.chart]);
                count += 1;
            } while (std::next_permutation(t.begin(), t.end()));
            nsym.push_back(acc.scaled(Rational(1) / Rational(static_cast<long>(count))));
        }
        std::vector<Polynomial> polys;
        for (const Label& l : letters) {
            std::vector<int> lower;
            for (const Atom& a : l.members()) lower.push_back(a.id);
            int li = space->find(lower);
            Polynomial p(cn.dim);
            if (li >= 0)
                for (int u = 0; u < space->size(); ++u)
                    p += nsym[u] * tg.entry[li][u];
            polys.push_back(
                p.scaled(Rational(1) / Rational(static_cast<long>(multiset_norm(l)))));
        }
        ControlledPath cols = function_of_trace(polys, seg.path, seg.x0);
        Integrand h{std::move(cols), letters, 1};
        rhs += rough_integral(h, from - seg.i0, to - seg.i0, tol)[0];
    }
    return std::abs(lhs - rhs);
}

std::map<Label, PolyMap> quasi_rde_coefficients(const PolyMap& f,
                                                const Connection& conn_m,
                                                const Connection& conn_n, int order) {
    const int m = conn_m.dim;
    const int e = conn_n.dim;
    if (f.target_dim() != e * m) throw std::invalid_argument("F must map into e x m");
    const int vars = e + m;

    // Embeddings: y-polynomials keep their variables, x-polynomials shift.
    std::vector<int> ymap(e), xmap(m);
    for (int k = 0; k < e; ++k) ymap[k] = k;
    for (int a = 0; a < m; ++a) xmap[a] = e + a;

    SymTensorTable tgm = transfer_symbols(conn_m, order);
    SymTensorTable tgn = transfer_symbols(conn_n, order);
    auto mspace = tgm.space;
    auto nspace = tgn.space;

    // Letters over the driver indices.
    std::vector<Label> letters;
    {
        std::vector<Atom> cur;
        std::function<void(int, int)> rec = [&](int min_id, int weight) {
            if (!cur.empty()) letters.push_back(Label::multiset(cur));
            for (int id = min_id; id < m; ++id) {
                if (weight + 1 > order) break;
                cur.push_back(Atom{id, 1});
                rec(id, weight + 1);
                cur.pop_back();
            }
        };
        rec(0, 0);
    }

    std::map<Label, PolyMap> nf;
    auto get = [&](const Label& l) -> PolyMap& {
        auto it = nf.find(l);
        if (it == nf.end()) it = nf.emplace(l, PolyMap(vars, e)).first;
        return it->second;
    };

    // First part: F^k_alpha Gamma~M^alpha_c / prod mult!(c).
    for (const Label& c : letters) {
        std::vector<int> lower;
        for (const Atom& a : c.members()) lower.push_back(a.id);
        int li = mspace->find(lower);
        if (li < 0) continue;
        PolyMap& target = get(c);
        for (int k = 0; k < e; ++k) {
            Polynomial acc(vars);
            for (int alpha = 0; alpha < m; ++alpha) {
                int u = mspace->find({alpha});
                const Polynomial& w = tgm.entry[li][u];
                if (w.is_zero()) continue;
                acc += f.comps[size_t(k) * m + alpha].embedded(vars, ymap) *
                       w.embedded(vars, xmap);
            }
            target.comps[k] +=
                acc.scaled(Rational(1) / Rational(static_cast<long>(multiset_norm(c))));
        }
    }
    // Base case coefficients: only the first part survives at weight 1.
    std::map<Label, PolyMap> result;
    for (const Label& c : letters)
        if (c.weight() == 1) result[c] = get(c);

    // Bracket letter multisets over the solution indices.
    std::vector<std::vector<int>> ytuples;
    {
        std::vector<int> cur;
        std::function<void(int)> rec = [&](int min_id) {
            if (cur.size() >= 2) ytuples.push_back(cur);
            if (static_cast<int>(cur.size()) == order) return;
            for (int id = min_id; id < e; ++id) {
                cur.push_back(id);
                rec(id);
                cur.pop_back();
            }
        };
        rec(0);
    }

    for (int n = 2; n <= order; ++n) {
        // Step 1: solution brackets to accuracy n from coefficients < n.
        // B[ytuple][letter] as polynomials in (y, x).
        std::map<std::vector<int>, std::map<Label, Polynomial>> brackets;
        for (const auto& yt : ytuples) {
            int mm = static_cast<int>(yt.size());
            if (mm > n) continue;
            std::map<Label, Polynomial> acc;
            // ordered sequences of letters (per position l: paired with yt[l])
            std::function<void(int, int, Polynomial, std::vector<const Label*>&)> rec =
                [&](int pos, int weight, Polynomial prod, std::vector<const Label*>& seq) {
                    if (pos == mm) {
                        std::vector<Label> parts;
                        for (const Label* l : seq) parts.push_back(*l);
                        Label joined = Label::join(parts);
                        if (joined.weight() > n) return;
                        auto [it, inserted] = acc.emplace(joined, prod);
                        if (!inserted) it->second += prod;
                        return;
                    }
                    for (const Label& l : letters) {
                        if (weight + l.weight() > n) continue;
                        auto it = result.find(l);
                        if (it == result.end()) continue;
                        const Polynomial& coeff = it->second.comps[yt[pos]];
                        if (coeff.is_zero()) continue;
                        seq.push_back(&l);
                        rec(pos + 1, weight + l.weight(),
                            prod * coeff.scaled(
                                       Rational(1) /
                                       Rational(static_cast<long>(multiset_norm(l)))),
                            seq);
                        seq.pop_back();
                    }
                };
            std::vector<const Label*> seq;
            rec(0, 0, Polynomial::constant(vars, 1), seq);
            brackets[yt] = std::move(acc);
        }
        // Step 2: coefficients of weight exactly n.
        for (const Label& c : letters) {
            if (c.weight() != n) continue;
            PolyMap coeff = get(c);  // first part
            for (const auto& [yt, acc] : brackets) {
                auto itl = acc.find(c);
                if (itl == acc.end() || itl->second.is_zero()) continue;
                int li = nspace->find(yt);
                if (li < 0) continue;
                double norm = 1;
                {
                    size_t a2 = 0;
                    while (a2 < yt.size()) {
                        size_t b2 = a2;
                        while (b2 < yt.size() && yt[b2] == yt[a2]) ++b2;
                        for (size_t r = 2; r <= b2 - a2; ++r) norm *= double(r);
                        a2 = b2;
                    }
                }
                for (int k = 0; k < e; ++k) {
                    int u = nspace->find({k});
                    const Polynomial& gt = tgn.entry[li][u];
                    if (gt.is_zero()) continue;
                    coeff.comps[k] -= (gt.embedded(vars, ymap) * itl->second)
                                          .scaled(Rational(1) /
                                                  Rational(static_cast<long>(norm)));
                }
            }
            result[c] = coeff;
        }
    }
    return result;
}

ManifoldRdeResult manifold_rde_solve(const std::vector<PolyMap>& f_n,
                                     const Connection& conn_m,
                                     const std::vector<Connection>& conn_n,
                                     const Atlas& atlas_n, const GridRoughPath& xt,
                                     const std::vector<double>& x0,
                                     const std::vector<double>& y0, int chart0,
                                     double margin) {
    const ForestBasis& b = xt.basis();
    const int m = conn_m.dim;
    const int e = conn_n.empty() ? 0 : conn_n.front().dim;
    const int order = b.max_degree();
    const int vars = e + m;

    // Per-chart stacked systems and their tree coefficients.
    struct ChartData {
        RdeSystem sys;
        std::vector<int> tree_ids;
        std::vector<std::vector<Polynomial>> tree_coeffs;  // per tree, per row
        std::vector<double> invn;
    };
    std::vector<ChartData> data(f_n.size());
    std::vector<bool> built(f_n.size(), false);
    auto driver = std::make_shared<GridRoughPath>(xt);

    auto build = [&](int chart) -> ChartData& {
        if (built[chart]) return data[chart];
        auto coeffs = quasi_rde_coefficients(f_n[chart], conn_m, conn_n[chart], order);
        RdeSystem sys;
        sys.e = vars;
        sys.letters = b.letters();
        sys.f = PolyMap(vars, vars * static_cast<int>(sys.letters.size()));
        for (size_t li = 0; li < sys.letters.size(); ++li) {
            const Label& l = sys.letters[li];
            auto it = coeffs.find(l);
            for (int k = 0; k < e; ++k)
                if (it != coeffs.end())
                    sys.f.comps[sys.col(k, static_cast<int>(li))] = it->second.comps[k];
            // trace rows of the driver: dx^a = dX^a
            if (l.is_atom())
                sys.f.comps[sys.col(e + l.as_atom().id, static_cast<int>(li))] =
                    Polynomial::constant(vars, 1);
        }
        ChartData& cd = data[chart];
        cd.sys = std::move(sys);
        for (int t = 1; t < b.size(); ++t) {
            if (!b.is_tree(t)) continue;
            PolyMap f = rde_tree_coefficient(cd.sys, b.forest(t).as_tree());
            cd.tree_ids.push_back(t);
            cd.tree_coeffs.push_back(f.comps);
            cd.invn.push_back(1.0 / double(symmetry_factor(b.forest(t))));
        }
        built[chart] = true;
        return cd;
    };

    ManifoldRdeResult out;
    int n = static_cast<int>(xt.grid().size());
    std::vector<double> z(vars, 0.0);
    for (int k = 0; k < e; ++k) z[k] = y0[k];
    for (int a = 0; a < m; ++a) z[e + a] = a < static_cast<int>(x0.size()) ? x0[a] : 0;
    int chart = chart0;
    for (int time = 0; time < n; ++time) {
        out.y.emplace_back(z.begin(), z.begin() + e);
        out.chart.push_back(chart);
        if (time + 1 == n) break;
        ChartData& cd = build(chart);
        DenseVec xv = driver->value(time, time + 1);
        std::vector<double> znext = z;
        for (size_t r = 0; r < cd.tree_ids.size(); ++r) {
            double xval = xv[cd.tree_ids[r]];
            if (xval == 0.0) continue;
            for (int k = 0; k < vars; ++k)
                znext[k] += cd.invn[r] * cd.tree_coeffs[r][k].eval(z) * xval;
        }
        z = std::move(znext);
        // Re-chart when the solution leaves the current box.
        if (!atlas_n.charts.empty()) {
            std::vector<double> y(z.begin(), z.begin() + e);
            if (!atlas_n.charts[chart].contains(y, margin)) {
                int next = -1;
                for (size_t c2 = 0; c2 < atlas_n.charts.size(); ++c2) {
                    if (static_cast<int>(c2) == chart) continue;
                    const PolyMap* tr = atlas_n.transition(chart, static_cast<int>(c2));
                    if (!tr) continue;
                    std::vector<double> mapped = tr->eval(y);
                    if (atlas_n.charts[c2].contains(mapped, margin)) {
                        next = static_cast<int>(c2);
                        for (int k = 0; k < e; ++k) z[k] = mapped[k];
                        break;
                    }
                }
                if (next < 0 && !atlas_n.charts[chart].contains(y))
                    throw std::runtime_error("solution left the atlas");
                if (next >= 0) chart = next;
            }
        }
    }
    return out;
}

}  // namespace bramble
