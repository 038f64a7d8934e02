#include <iostream>
#include <map>
#include <string>

#include <CLI11.hpp>

#include "torusfol/pipeline.hpp"

namespace {

enum Exit { ok = 0, usage = 1, resonance = 2, invalid = 3, other = 4 };

void error_block(const std::string& kind, const std::string& message) {
    std::cerr << "[error]\nkind = " << kind << "\nmessage = " << message << '\n';
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Vertical linearization of deck-map families near a complex torus"};
    app.require_subcommand(1);
    std::string problem_path, out_dir = "out", precision;
    torusfol::RunFlags flags;
    int order = 0, pmax = -1, qmax = -1;
    double epsilon = 0, radius = 0;

    const std::map<std::string, std::string> verbs{
        {"check-diophantine", "scan small divisors and fit (D, tau)"},
        {"domain-geometry", "log-polytopes, convex hull and Hartogs margin"},
        {"linearize", "compute phi^v order by order"},
        {"certify", "linearize and run the majorant certificate"},
        {"report", "all stages with a combined summary"},
    };
    for (const auto& [name, help] : verbs) {
        auto* sub = app.add_subcommand(name, help);
        sub->add_option("problem", problem_path, "problem file")->required()->check(CLI::ExistingFile);
        sub->add_option("--out", out_dir, "output directory");
        sub->add_option("--order", order, "truncation order M");
        sub->add_option("--pmax", pmax, "horizontal scan range");
        sub->add_option("--qmax", qmax, "vertical scan range");
        sub->add_option("--epsilon", epsilon, "epsilon_1");
        sub->add_option("--radius", radius, "r_1");
        sub->add_option("--precision", precision, "double or extended")
            ->check(CLI::IsMember({"double", "extended"}));
        sub->add_flag("--dual-route", flags.dual_route, "also solve the direct forward and inverse routes");
    }
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? Exit::ok : Exit::usage;
    }
    const std::string verb = app.get_subcommands().front()->get_name();
    if (order)
        flags.order = order;
    if (pmax >= 0)
        flags.pmax = pmax;
    if (qmax >= 0)
        flags.qmax = qmax;
    if (epsilon)
        flags.epsilon = epsilon;
    if (radius)
        flags.radius = radius;
    if (!precision.empty())
        flags.precision = torusfol::parse_precision(precision);

    try {
        auto problem = torusfol::read_problem_file(problem_path);
        auto outcome = torusfol::run_command(verb, problem, flags);
        torusfol::write_artifacts(outcome.files, out_dir);
        for (const auto& [name, text] : outcome.files)
            std::cout << "wrote " << out_dir << '/' << name << '\n';
        if (outcome.resonant) {
            error_block("resonance", "resonant divisors found; see " + out_dir + "/resonances.csv");
            return Exit::resonance;
        }
        return Exit::ok;
    } catch (const torusfol::ResonanceError& e) {
        error_block(e.kind(), e.what());
        std::cerr << "P = " << torusfol::format_ivec(e.P(), ',') << "\nQ = " << torusfol::format_ivec(e.Q(), ',')
                  << "\nj = " << e.j() << '\n';
        return Exit::resonance;
    } catch (const torusfol::InvalidInput& e) {
        error_block(e.kind(), e.what());
        return Exit::invalid;
    } catch (const torusfol::Error& e) {
        error_block(e.kind(), e.what());
        return Exit::other;
    } catch (const std::exception& e) {
        error_block("internal", e.what());
        return Exit::other;
    }
}
