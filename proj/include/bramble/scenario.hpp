#pragma once

#include <json.hpp>

#include "bramble/geometry.hpp"
#include "bramble/verify.hpp"

namespace bramble {

using Json = nlohmann::json;

Json report_to_json(const Report& report);
std::string report_to_text(const Report& report);

/// [[ "num/den", [e0, e1, ...] ], ...]
Polynomial parse_polynomial(const Json& j, int nvars);
/// list of polynomials
std::vector<Polynomial> parse_polynomials(const Json& j, int nvars);
PolyMap parse_polymap(const Json& j, int source_dim);
/// christoffel table: nested [c][a][b] -> polynomial
Connection parse_connection(const Json& j, int dim);

/// Builds a driver from its spec: {"type": "smooth_lift" | "quasi_exp" |
/// "pure_bracket" | "file", ...}. `dir` resolves relative file names.
GridRoughPath load_driver(const Json& spec, const std::string& dir);

struct ManifoldScenario {
    ManifoldRoughPath mx;
    std::vector<Connection> connections;
    std::vector<std::vector<Polynomial>> one_form;  // per chart, may be empty
    std::vector<Polynomial> g;                      // per chart, may be empty
    double tolerance = 1e-8;
    int i = 0, j = 0;
};

ManifoldScenario load_manifold_scenario(const Json& j, const std::string& dir);

/// Scenario-driven suites used by the command line tool.
Report quasi_check_report(const Json& scenario, const std::string& dir, double tol);
Report bracket_scenario_report(const Json& scenario, const std::string& dir, double tol);
Report transfer_symbols_report(const Json& scenario, double tol, std::string* table_text);
Report lift_report(const Json& scenario, const std::string& dir, double tol,
                   const std::string& out_path);
Report pushforward_report(const Json& scenario, const std::string& dir, double tol,
                          const std::string& out_path);
Report integrate_manifold_report(const Json& scenario, const std::string& dir,
                                 double tol);
Report rde_manifold_report(const Json& scenario, const std::string& dir, double tol);

}  // namespace bramble
