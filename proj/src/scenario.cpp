#include "bramble/scenario.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <sstream>

#include "bramble/forest_io.hpp"

namespace bramble {

Json report_to_json(const Report& report) {
    Json j;
    j["suite"] = report.suite;
    j["pass"] = report.all_pass();
    j["checks"] = Json::array();
    for (const CheckResult& c : report.checks) {
        Json e;
        e["id"] = c.id;
        e["status"] = c.pass ? "pass" : "fail";
        e["defect"] = c.defect;
        e["tolerance"] = c.tolerance;
        e["seconds"] = c.seconds;
        j["checks"].push_back(e);
    }
    return j;
}

std::string report_to_text(const Report& report) {
    std::ostringstream os;
    os << "suite " << report.suite << "\n";
    for (const CheckResult& c : report.checks) {
        os << (c.pass ? "PASS" : "FAIL") << "  " << c.id;
        if (c.tolerance > 0)
            os << "  defect=" << c.defect << " tol=" << c.tolerance;
        os << "  (" << c.seconds << "s)\n";
    }
    os << (report.all_pass() ? "all checks passed" : "CHECK FAILURES") << "\n";
    return os.str();
}

Polynomial parse_polynomial(const Json& j, int nvars) {
    Polynomial p(nvars);
    for (const Json& term : j) {
        Rational c = parse_rational(term.at(0).is_string()
                                        ? term.at(0).get<std::string>()
                                        : std::to_string(term.at(0).get<long>()));
        std::vector<int> exps = term.at(1).get<std::vector<int>>();
        exps.resize(nvars, 0);
        p.add_term(exps, c);
    }
    return p;
}

std::vector<Polynomial> parse_polynomials(const Json& j, int nvars) {
    std::vector<Polynomial> out;
    for (const Json& e : j) out.push_back(parse_polynomial(e, nvars));
    return out;
}

PolyMap parse_polymap(const Json& j, int source_dim) {
    PolyMap m(source_dim, static_cast<int>(j.size()));
    for (size_t i = 0; i < j.size(); ++i) m.comps[i] = parse_polynomial(j[i], source_dim);
    return m;
}

Connection parse_connection(const Json& j, int dim) {
    Connection conn(dim);
    for (int c = 0; c < dim; ++c)
        for (int a = 0; a < dim; ++a)
            for (int b = 0; b < dim; ++b)
                conn.christoffel(c, a, b) = parse_polynomial(j.at(c).at(a).at(b), dim);
    return conn;
}

namespace {

std::vector<double> parse_grid(const Json& j) {
    if (j.is_array()) return j.get<std::vector<double>>();
    double t0 = j.value("t0", 0.0);
    double t1 = j.value("t1", 1.0);
    int depth = j.value("depth", 6);
    return dyadic_grid(t0, t1, depth);
}

}  // namespace

GridRoughPath load_driver(const Json& spec, const std::string& dir) {
    std::string type = spec.at("type").get<std::string>();
    if (type == "file") {
        std::string path = spec.at("path").get<std::string>();
        if (!path.empty() && path[0] != '/' && !dir.empty()) path = dir + "/" + path;
        std::ifstream in(path);
        if (!in) throw std::invalid_argument("cannot open driver file: " + path);
        return load_rough_path(in);
    }
    double p = spec.at("p").get<double>();
    int n = static_cast<int>(std::floor(p));
    std::vector<double> grid = parse_grid(spec.at("grid"));
    if (type == "smooth_lift") {
        PolyMap path = parse_polymap(spec.at("path"), 1);
        int d = path.target_dim();
        Extension ext = spec.value("extension", std::string("simple")) == "none"
                            ? Extension::none
                            : Extension::simple;
        auto plain = ForestBasis::make(Alphabet::numeric(d), Extension::none, n);
        SmoothLift lift(plain, path, p);
        GridRoughPath base = lift.materialize(grid);
        if (ext == Extension::none) return base;
        auto extended = ForestBasis::make(Alphabet::numeric(d), Extension::simple, n);
        return with_zero_extension(base, extended);
    }
    if (type == "quasi_exp") {
        int d = spec.at("d").get<int>();
        auto basis = ForestBasis::make(Alphabet::numeric(d), Extension::simple, n);
        std::map<Label, double> rates;
        for (const Json& r : spec.at("rates")) {
            std::vector<Atom> atoms;
            for (int id : r.at("letter").get<std::vector<int>>())
                atoms.push_back(Atom{id, 1});
            rates[Label::multiset(atoms)] = r.at("rate").get<double>();
        }
        return quasi_exp_driver(basis, p, grid, rates);
    }
    if (type == "pure_bracket") {
        int d = spec.at("d").get<int>();
        auto q = spec.at("q").get<std::vector<std::vector<double>>>();
        return pure_bracket_level2(d, q, p, grid);
    }
    throw std::invalid_argument("unknown driver type: " + type);
}

ManifoldScenario load_manifold_scenario(const Json& j, const std::string& dir) {
    ManifoldScenario sc;
    sc.tolerance = j.value("tolerance", 1e-8);
    sc.mx.grid = parse_grid(j.at("grid"));

    const Json& charts = j.at("charts");
    int m = j.at("dim").get<int>();
    for (const Json& cj : charts) {
        Chart chart;
        chart.name = cj.at("name").get<std::string>();
        if (cj.contains("box")) {
            chart.lo = cj.at("box").at("lo").get<std::vector<double>>();
            chart.hi = cj.at("box").at("hi").get<std::vector<double>>();
        }
        sc.mx.atlas.charts.push_back(chart);
    }
    for (size_t ci = 0; ci < charts.size(); ++ci) {
        const Json& cj = charts[ci];
        if (!cj.contains("transition_to")) continue;
        for (auto it = cj.at("transition_to").begin(); it != cj.at("transition_to").end();
             ++it) {
            int to = sc.mx.atlas.find_chart(it.key());
            if (to < 0) throw std::invalid_argument("unknown chart: " + it.key());
            sc.mx.atlas.transitions[{static_cast<int>(ci), to}] =
                parse_polymap(it.value(), m);
        }
    }
    if (j.contains("christoffel")) {
        for (const Json& cj : charts) {
            std::string name = cj.at("name").get<std::string>();
            sc.connections.push_back(
                parse_connection(j.at("christoffel").at(name), m));
        }
    } else {
        sc.connections.assign(charts.size(), Connection::flat(m));
    }
    for (const Json& seg : j.at("segments")) {
        ManifoldSegment s;
        s.chart = sc.mx.atlas.find_chart(seg.at("chart").get<std::string>());
        s.i0 = seg.at("i0").get<int>();
        s.i1 = seg.at("i1").get<int>();
        s.x0 = seg.at("x0").get<std::vector<double>>();
        s.path = std::make_shared<GridRoughPath>(load_driver(seg.at("driver"), dir));
        sc.mx.segments.push_back(std::move(s));
    }
    if (j.contains("one_form"))
        for (const Json& cj : charts)
            sc.one_form.push_back(parse_polynomials(
                j.at("one_form").at(cj.at("name").get<std::string>()), m));
    if (j.contains("g"))
        for (const Json& cj : charts)
            sc.g.push_back(
                parse_polynomial(j.at("g").at(cj.at("name").get<std::string>()), m));
    sc.i = j.value("i", 0);
    sc.j = j.value("j", static_cast<int>(sc.mx.grid.size()) - 1);
    return sc;
}

namespace {

class Timer {
  public:
    Timer() : start_(std::chrono::steady_clock::now()) {}
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_)
            .count();
    }

  private:
    std::chrono::steady_clock::time_point start_;
};

}  // namespace

Report quasi_check_report(const Json& scenario, const std::string& dir, double tol) {
    Report report;
    report.suite = "quasi-check";
    Timer t;
    GridRoughPath x = load_driver(scenario.at("driver"), dir);
    QuasiGeometricReport q = quasi_geometric_defect(x);
    // one check per forest, plus the joining relations
    for (const auto& [f, d] : q.ladder_defect)
        report.add("word-expansion " + print(f, x.basis().base()), d <= tol, d, tol, 0);
    for (const auto& [f, d] : q.joining_defect)
        report.add("label-joining " + print(f, x.basis().base()), d <= tol, d, tol, 0);
    if (!report.checks.empty()) report.checks.back().seconds = t.seconds();
    return report;
}

Report bracket_scenario_report(const Json& scenario, const std::string& dir, double tol) {
    Report report;
    report.suite = "verify-bracket-driver";
    Timer t;
    GridRoughPath x = load_driver(scenario.at("driver"), dir);
    ConsistencyReport c = consistency_defect(x);
    std::string worst = print(c.worst_f, x.basis().base()) + " at " +
                        print(c.worst_g, x.basis().base());
    report.add("extension-consistency " + worst, c.max_defect <= tol, c.max_defect, tol,
               t.seconds());
    return report;
}

Report transfer_symbols_report(const Json& scenario, double tol, std::string* table_text) {
    Report report;
    report.suite = "transfer-symbols";
    Timer t;
    int m = scenario.at("dim").get<int>();
    int order = scenario.value("order", 3);
    Connection conn = parse_connection(scenario.at("christoffel"), m);
    SymTensorTable tg = transfer_symbols(conn, order);
    SymTensorTable lt = covariant_coeffs(conn, order);

    std::vector<std::vector<double>> points;
    if (scenario.contains("points"))
        points = scenario.at("points").get<std::vector<std::vector<double>>>();
    else
        points.push_back(std::vector<double>(m, 0.1));

    double worst = 0;
    for (const auto& x : points) {
        auto lmat = lt.eval(x);
        auto gmat = tg.eval(x);
        int dim = tg.space->size();
        for (int r = 0; r < dim; ++r)
            for (int c = 0; c < dim; ++c) {
                double s = 0;
                for (int k = 0; k < dim; ++k) s += lmat[r][k] * gmat[k][c];
                worst = std::max(worst, std::abs(s - (r == c ? 1.0 : 0.0)));
            }
    }
    report.add("right-inverse-residual", worst <= tol, worst, tol, t.seconds());

    if (table_text) {
        std::ostringstream os;
        const auto& x = points.front();
        auto gmat = tg.eval(x);
        os << "transfer symbols at (";
        for (size_t i = 0; i < x.size(); ++i) os << (i ? "," : "") << x[i];
        os << ")\n";
        for (int l = 0; l < tg.space->size(); ++l)
            for (int u = 0; u < tg.space->size(); ++u) {
                if (gmat[l][u] == 0.0) continue;
                os << "  lower=";
                for (int v : tg.space->tuples[l]) os << v;
                os << " upper=";
                for (int v : tg.space->tuples[u]) os << v;
                os << " value=" << gmat[l][u] << "\n";
            }
        *table_text = os.str();
    }
    return report;
}

Report lift_report(const Json& scenario, const std::string& dir, double tol,
                   const std::string& out_path) {
    Report report;
    report.suite = "lift";
    Timer t;
    GridRoughPath x = load_driver(scenario.at("driver"), dir);
    auto driver = std::make_shared<GridRoughPath>(std::move(x));

    // Controlled path: an RDE solution driven by the path.
    int e = 0;
    ControlledPath h = [&]() {
        const Json& sys = scenario.at("system");
        e = static_cast<int>(sys.at("F").size());
        RdeSystem rde;
        rde.e = e;
        for (int a = 0; a < driver->basis().base().size(); ++a)
            rde.letters.push_back(Label::atom(driver->basis().base().atom(a)));
        rde.f = PolyMap(e, e * static_cast<int>(rde.letters.size()));
        for (int k = 0; k < e; ++k) {
            auto row = parse_polynomials(sys.at("F").at(k), e);
            for (size_t b = 0; b < row.size() && b < rde.letters.size(); ++b)
                rde.f.comps[rde.col(k, static_cast<int>(b))] = row[b];
        }
        std::vector<double> y0 = sys.at("y0").get<std::vector<double>>();
        return davie_solve(rde, driver, y0);
    }();

    auto target =
        ForestBasis::make(Alphabet::numeric(e), Extension::none, driver->truncation());
    SewStats stats;
    GridRoughPath lifted = lift(h, target, tol, &stats);
    report.add("sewing-converged", stats.converged, stats.last_diff, tol, t.seconds());
    if (!out_path.empty()) {
        std::ofstream out(out_path);
        save_rough_path(lifted, out);
    }
    return report;
}

Report pushforward_report(const Json& scenario, const std::string& dir, double tol,
                          const std::string& out_path) {
    Report report;
    report.suite = "pushforward";
    Timer t;
    GridRoughPath x = load_driver(scenario.at("driver"), dir);
    int d = x.basis().base().size();
    PolyMap f = parse_polymap(scenario.at("map"), d);
    std::vector<double> x0 = scenario.value("x0", std::vector<double>(d, 0.0));
    bool with_bracket = scenario.value("bracket", true);
    GridRoughPath pushed = with_bracket ? pushforward_bracket(f, x, x0, tol)
                                        : pushforward(f, x, x0, tol);
    double chen = pushed.max_dyadic_chen_defect();
    double prod = pushed.max_dyadic_grouplike_defect();
    report.add("pushforward-multiplicativity", chen <= tol, chen, tol, t.seconds());
    report.add("pushforward-products", prod <= tol, prod, tol, 0);
    if (with_bracket) {
        ConsistencyReport c = consistency_defect(pushed);
        report.add("pushforward-bracket-consistency", c.max_defect <= std::sqrt(tol),
                   c.max_defect, std::sqrt(tol), 0);
    }
    if (!out_path.empty()) {
        std::ofstream out(out_path);
        save_rough_path(pushed, out);
    }
    return report;
}

Report integrate_manifold_report(const Json& scenario, const std::string& dir,
                                 double tol) {
    Report report;
    report.suite = "integrate-manifold";
    Timer t;
    ManifoldScenario sc = load_manifold_scenario(scenario, dir);
    double compat = atlas_compatibility_defect(sc.mx, tol);
    report.add("chart-compatibility", compat <= std::sqrt(tol) * 10, compat,
               std::sqrt(tol) * 10, t.seconds());
    if (!sc.one_form.empty()) {
        Timer t2;
        double v = manifold_integral(sc.one_form, sc.mx, sc.connections, sc.i, sc.j, tol);
        // decomposition independence: flip the schedule preference
        Schedule sched = greedy_schedule(sc.mx, sc.i, sc.j);
        std::reverse(sc.mx.segments.begin(), sc.mx.segments.end());
        Schedule alt = greedy_schedule(sc.mx, sc.i, sc.j);
        for (auto& step : alt)
            step[0] = static_cast<int>(sc.mx.segments.size()) - 1 - step[0];
        std::reverse(sc.mx.segments.begin(), sc.mx.segments.end());
        double v2 =
            manifold_integral(sc.one_form, sc.mx, sc.connections, sc.i, sc.j, tol, &alt);
        double diff = std::abs(v - v2);
        report.add("decomposition-independence", diff <= std::sqrt(tol) * 10, diff,
                   std::sqrt(tol) * 10, t2.seconds());
    }
    if (!sc.g.empty()) {
        Timer t3;
        double defect =
            ito_kelly_manifold_defect(sc.g, sc.mx, sc.connections, sc.i, sc.j, tol);
        report.add("covariant-change-of-variable", defect <= std::sqrt(tol) * 10, defect,
                   std::sqrt(tol) * 10, t3.seconds());
    }
    return report;
}

Report rde_manifold_report(const Json& scenario, const std::string& dir, double tol) {
    Report report;
    report.suite = "rde-manifold";
    Timer t;
    int m = scenario.at("dim").get<int>();
    int e = scenario.at("solution_dim").get<int>();
    GridRoughPath x = load_driver(scenario.at("driver"), dir);
    Connection conn_m = scenario.contains("christoffel_m")
                            ? parse_connection(scenario.at("christoffel_m"), m)
                            : Connection::flat(m);
    Atlas atlas;
    std::vector<Connection> conn_n;
    std::vector<PolyMap> f_n;
    for (const Json& cj : scenario.at("charts_n")) {
        Chart chart;
        chart.name = cj.at("name").get<std::string>();
        if (cj.contains("box")) {
            chart.lo = cj.at("box").at("lo").get<std::vector<double>>();
            chart.hi = cj.at("box").at("hi").get<std::vector<double>>();
        }
        atlas.charts.push_back(chart);
        conn_n.push_back(cj.contains("christoffel")
                             ? parse_connection(cj.at("christoffel"), e)
                             : Connection::flat(e));
        PolyMap f(e, e * m);
        const Json& fj = cj.at("F");  // [k][gamma] -> poly in y
        for (int k = 0; k < e; ++k)
            for (int g = 0; g < m; ++g)
                f.comps[size_t(k) * m + g] = parse_polynomial(fj.at(k).at(g), e);
        f_n.push_back(std::move(f));
    }
    for (size_t ci = 0; ci < atlas.charts.size(); ++ci) {
        const Json& cj = scenario.at("charts_n").at(ci);
        if (!cj.contains("transition_to")) continue;
        for (auto it = cj.at("transition_to").begin(); it != cj.at("transition_to").end();
             ++it) {
            int to = atlas.find_chart(it.key());
            atlas.transitions[{static_cast<int>(ci), to}] = parse_polymap(it.value(), e);
        }
    }
    std::vector<double> x0 = scenario.value("x0", std::vector<double>(m, 0.0));
    std::vector<double> y0 = scenario.at("y0").get<std::vector<double>>();
    int chart0 = scenario.value("chart0", 0);

    QuasiGeometricReport q = quasi_geometric_defect(x);
    report.add("driver-quasi-geometric", q.max_defect <= std::sqrt(tol) * 10,
               q.max_defect, std::sqrt(tol) * 10, t.seconds());

    Timer t2;
    ManifoldRdeResult result =
        manifold_rde_solve(f_n, conn_m, conn_n, atlas, x, x0, y0, chart0);
    bool finite = true;
    for (const auto& yv : result.y)
        for (double v : yv)
            if (!std::isfinite(v)) finite = false;
    report.add("solution-finite", finite, 0, 0, t2.seconds());
    return report;
}

}  // namespace bramble
