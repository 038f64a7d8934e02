#ifndef TORUSFOL_PROBLEM_HPP
#define TORUSFOL_PROBLEM_HPP

#include <optional>
#include <string>
#include <vector>

#include "torusfol/lattice.hpp"
#include "torusfol/linearizer.hpp"
#include "torusfol/multipliers.hpp"

namespace torusfol {

enum class Precision { double_, extended };

struct MuEntry {
    int l = 0, j = 0; // 0-based
    bool complex_form = false;
    long double a = 0, b = 0; // turns (a) or (re, im)

    bool operator==(const MuEntry&) const = default;
};

struct LambdaOverride {
    int l = 0, k = 0;
    long double re = 0, im = 0;

    bool operator==(const LambdaOverride&) const = default;
};

struct PerturbationTerm {
    int i = 0;        // generator, 0-based
    bool inverse = false;
    bool vertical = false;
    int k = 0;        // component, 0-based
    IVec P, Q;
    long double re = 0, im = 0;

    bool operator==(const PerturbationTerm&) const = default;
};

struct RunConfig {
    int vmax = 8;
    int hband = 8;
    double epsilon = 0.2;
    double radius = 0.5;
    int order = 8;
    int pmax = 20;
    int qmax = 20;
    double compat_tol = 1e-10;
    double residual_tol = 1e-9;
    Precision precision = Precision::double_;

    bool operator==(const RunConfig&) const = default;
};

struct Problem {
    int n = 0, d = 0;
    Eigen::MatrixXcd periods; // column l is e_{n+l}
    bool unitary = true;
    std::vector<MuEntry> mu;
    std::vector<LambdaOverride> lambda;
    std::vector<PerturbationTerm> terms;
    RunConfig run;

    LatticeSpec lattice() const { return LatticeSpec::from_periods(d, periods); }

    bool operator==(const Problem&) const = default;
};

/// Parses the line-oriented problem grammar; errors name the offending line.
Problem parse_problem(const std::string& text);
Problem read_problem_file(const std::string& path);
std::string serialize_problem(const Problem& p);

std::string precision_name(Precision p);
Precision parse_precision(const std::string& s);

template <typename Real> MultiplierData<Real> build_multipliers(const Problem& p) {
    const LatticeSpec lat = p.lattice();
    CMat<Real> mt = CMat<Real>::Zero(p.n, p.d);
    for (const auto& e : p.mu) {
        if (e.complex_form)
            mt(e.l, e.j) = turns_of(Complex<Real>(Real(e.a), Real(e.b)));
        else
            mt(e.l, e.j) = Complex<Real>(Real(e.a), 0);
    }
    MultiplierData<Real> m = MultiplierData<Real>::from_lattice(lat, mt, p.unitary);
    return m;
}

template <typename Real> DeckMapFamily<Real> build_family(const Problem& p) {
    MultiplierData<Real> m = build_multipliers<Real>(p);
    const int vmax = p.run.vmax, hband = p.run.hband;
    std::vector<DeckPerturbation<Real>> fwd, inv;
    bool explicit_inverse = false;
    for (int i = 0; i < p.n; ++i) {
        fwd.push_back(zero_perturbation<Real>(p.n, p.d, vmax, hband));
        inv.push_back(zero_perturbation<Real>(p.n, p.d, vmax, hband));
    }
    for (const auto& t : p.terms) {
        auto& target = t.inverse ? inv[t.i] : fwd[t.i];
        explicit_inverse = explicit_inverse || t.inverse;
        Series<Real>& s = t.vertical ? target.v : target.h;
        s.add(s.make_index(t.k, t.P, t.Q), Complex<Real>(Real(t.re), Real(t.im)));
    }
    return explicit_inverse ? make_family(m, fwd, &inv) : make_family(m, fwd);
}

} // namespace torusfol

#endif // TORUSFOL_PROBLEM_HPP
