#include <CLI11.hpp>

#include <fstream>
#include <iostream>

#include "bramble/scenario.hpp"

namespace {

struct Options {
    std::string scenario;
    double tolerance = 1e-8;
    int max_degree = 4;
    int letters = 2;
    int grid_depth = 8;
    long seed = 0;
    std::string out;
    std::string format = "text";
};

bramble::Json load_scenario(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot open scenario: " + path);
    bramble::Json j;
    in >> j;
    return j;
}

std::string dir_of(const std::string& path) {
    auto slash = path.find_last_of('/');
    return slash == std::string::npos ? std::string(".") : path.substr(0, slash);
}

int emit(const bramble::Report& report, const Options& opt) {
    if (!opt.out.empty()) {
        std::ofstream out(opt.out);
        out << bramble::report_to_json(report).dump(2) << "\n";
    }
    if (opt.format == "json")
        std::cout << bramble::report_to_json(report).dump(2) << "\n";
    else
        std::cout << bramble::report_to_text(report);
    return report.all_pass() ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"calculus of branched rough paths: verification suites and transforms"};
    app.require_subcommand(1);

    Options opt;
    app.add_option("--scenario", opt.scenario, "scenario file (JSON)");
    app.add_option("--tolerance", opt.tolerance, "numeric tolerance")->capture_default_str();
    app.add_option("--max-degree", opt.max_degree, "degree bound for sweeps")
        ->capture_default_str();
    app.add_option("--letters", opt.letters, "alphabet size for sweeps")
        ->capture_default_str();
    app.add_option("--grid-depth", opt.grid_depth, "dyadic grid depth")
        ->capture_default_str();
    app.add_option("--seed", opt.seed, "seed for randomized sweeps");
    app.add_option("--out", opt.out, "write the report as JSON to this path");
    app.add_option("--format", opt.format, "output format: text|json")
        ->check(CLI::IsMember({"text", "json"}))
        ->capture_default_str();

    auto* verify_hopf = app.add_subcommand("verify-hopf", "exhaustive bialgebra sweeps");
    auto* verify_bracket =
        app.add_subcommand("verify-bracket", "bracket polynomial and consistency checks");
    auto* lift_cmd = app.add_subcommand("lift", "lift a controlled path to a rough path");
    auto* pushforward_cmd =
        app.add_subcommand("pushforward", "push a rough path through a polynomial map");
    auto* quasi_cmd =
        app.add_subcommand("quasi-check", "word-expansion and label-joining defects");
    auto* transfer_cmd =
        app.add_subcommand("transfer-symbols", "connection-weighted substitution table");
    auto* integrate_cmd =
        app.add_subcommand("integrate-manifold", "chart-invariant rough integration");
    auto* rde_cmd = app.add_subcommand("rde-manifold", "chart-invariant rough equations");
    auto* report_cmd = app.add_subcommand("report", "run every suite in a scenario list");

    CLI11_PARSE(app, argc, argv);

    try {
        using namespace bramble;
        if (verify_hopf->parsed()) {
            Report r = bramble::verify_hopf(opt.max_degree, opt.letters);
            Report golden = golden_values();
            for (auto& c : golden.checks) r.checks.push_back(c);
            return emit(r, opt);
        }
        if (verify_bracket->parsed()) {
            Report r = bramble::verify_bracket(opt.max_degree, opt.letters);
            if (!opt.scenario.empty()) {
                Json j = load_scenario(opt.scenario);
                Report extra =
                    bracket_scenario_report(j, dir_of(opt.scenario), opt.tolerance);
                for (auto& c : extra.checks) r.checks.push_back(c);
            }
            return emit(r, opt);
        }
        Json j;
        std::string dir;
        if (!opt.scenario.empty()) {
            j = load_scenario(opt.scenario);
            dir = dir_of(opt.scenario);
        }
        if (lift_cmd->parsed()) return emit(lift_report(j, dir, opt.tolerance, opt.out), opt);
        if (pushforward_cmd->parsed())
            return emit(pushforward_report(j, dir, opt.tolerance, opt.out), opt);
        if (quasi_cmd->parsed())
            return emit(quasi_check_report(j, dir, opt.tolerance), opt);
        if (transfer_cmd->parsed()) {
            std::string table;
            Report r = transfer_symbols_report(j, opt.tolerance, &table);
            if (opt.format == "text") std::cout << table;
            return emit(r, opt);
        }
        if (integrate_cmd->parsed())
            return emit(integrate_manifold_report(j, dir, opt.tolerance), opt);
        if (rde_cmd->parsed()) return emit(rde_manifold_report(j, dir, opt.tolerance), opt);
        if (report_cmd->parsed()) {
            Report all;
            all.suite = "report";
            for (const Json& entry : j.at("suites")) {
                std::string name = entry.at("suite").get<std::string>();
                Report r;
                if (name == "verify-hopf")
                    r = bramble::verify_hopf(entry.value("max_degree", opt.max_degree),
                                             entry.value("letters", opt.letters));
                else if (name == "golden")
                    r = golden_values();
                else if (name == "verify-bracket")
                    r = bramble::verify_bracket(entry.value("max_degree", opt.max_degree),
                                                entry.value("letters", opt.letters));
                else if (name == "quasi-check")
                    r = quasi_check_report(entry, dir, opt.tolerance);
                else if (name == "transfer-symbols")
                    r = transfer_symbols_report(entry, opt.tolerance, nullptr);
                else if (name == "integrate-manifold")
                    r = integrate_manifold_report(entry, dir, opt.tolerance);
                else if (name == "rde-manifold")
                    r = rde_manifold_report(entry, dir, opt.tolerance);
                else
                    throw std::invalid_argument("unknown suite: " + name);
                for (auto& c : r.checks) {
                    c.id = name + "/" + c.id;
                    all.checks.push_back(c);
                }
            }
            return emit(all, opt);
        }
    } catch (const std::invalid_argument& err) {
        std::cerr << "scenario error: " << err.what() << "\n";
        return 2;
    } catch (const std::exception& err) {
        std::cerr << "error: " << err.what() << "\n";
        return 1;
    }
    return 2;
}
