#ifndef TORUSFOL_PIPELINE_HPP
#define TORUSFOL_PIPELINE_HPP

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "torusfol/divisors.hpp"
#include "torusfol/lattice.hpp"
#include "torusfol/linearizer.hpp"
#include "torusfol/majorant.hpp"
#include "torusfol/problem.hpp"

namespace torusfol {

enum class Stage { diophantine, geometry, linearize, certify };

struct RunFlags {
    std::optional<int> order, pmax, qmax;
    std::optional<double> epsilon, radius;
    std::optional<Precision> precision;
    bool dual_route = false;
};

/// Problem with the command-line overrides folded into its run block.
Problem apply_flags(Problem p, const RunFlags& flags);

struct DualRouteReport {
    double forward_inverse = 0; // max |φ^v(+) - φ^v(-)|
    double step_direct = 0;     // max |φ^v(step) - φ^v(+)|
};

template <typename Real> struct PipelineState {
    Problem problem;
    LatticeSpec lat;
    DeckMapFamily<Real> fam;

    std::vector<DivisorEntry<Real>> table; // weak form, 1-norm
    DiophantineFit<Real> weak, strong, inverse, weak_max;
    std::optional<DiophantineFit<Real>> wide;
    std::string wide_note;
    EnhancedReport enhanced;

    bool have_geometry = false;
    UnionHull hull;
    double margin_at_eps = 0;

    bool have_constants = false;
    double R = 1;
    bool R_defaulted = false;
    ConstantsBundle k;
    Schedule schedule;

    bool have_linearization = false;
    LinearizationResult<Real> lin;
    std::optional<DualRouteReport> dual;

    bool have_certificate = false;
    EtaSequence eta;
    MajorantCoefficients maj;
    Certificate cert;
};

/// Runs the stages up to `upto` on a parsed problem; flags must already be applied.
template <typename Real> PipelineState<Real> run_pipeline(const Problem& p, Stage upto, bool dual_route = false);

/// File name -> contents, in emission order.
using Artifacts = std::vector<std::pair<std::string, std::string>>;

struct CommandOutcome {
    Artifacts files;
    bool resonant = false;
};

/// Runs a verb (check-diophantine, domain-geometry, linearize, certify, report) and renders its artifacts.
CommandOutcome run_command(const std::string& verb, const Problem& problem, const RunFlags& flags);

void write_artifacts(const Artifacts& files, const std::string& dir);

//// Renderers, shared by the verbs

template <typename Real> std::string divisor_csv(const std::vector<DivisorEntry<Real>>& rows, int n, int d);
template <typename Real> std::string diophantine_report(const PipelineState<Real>& st);
template <typename Real> std::string geometry_report(const PipelineState<Real>& st);
template <typename Real> std::string polytope_listing(const PipelineState<Real>& st);
template <typename Real> std::string degree_norms_csv(const PipelineState<Real>& st);
template <typename Real> std::string residuals_csv(const PipelineState<Real>& st);
template <typename Real> std::string linearize_report(const PipelineState<Real>& st);
template <typename Real> std::string ledger_csv(const PipelineState<Real>& st);
template <typename Real> std::string majorant_csv(const PipelineState<Real>& st);
template <typename Real> std::string certificate_report(const PipelineState<Real>& st);

} // namespace torusfol

#endif // TORUSFOL_PIPELINE_HPP
