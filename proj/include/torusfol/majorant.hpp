#ifndef TORUSFOL_MAJORANT_HPP
#define TORUSFOL_MAJORANT_HPP

#include <cmath>
#include <string>
#include <vector>

#include "torusfol/lattice.hpp"
#include "torusfol/linearizer.hpp"

namespace torusfol {

struct ConstantsBundle {
    int n = 0, d = 0;
    double kappa = 0;
    double nu = 0;
    double tau = 0;
    double D = 0;
    double Dprime = 0;
    double alpha = 0; // τ + ν
    double C1 = 0;
    double C = 0;
    double Cp = 0;  // C'
    double Cpp = 0; // C''
    double R = 1;
    double eta_ratio = 0; // η / κ
    double eta = 0;
    double eps1 = 0;
    double r1 = 0;
    double margin_min = 0; // smallest Hartogs margin over [ε_1/2, ε_1] before capping
    std::vector<std::string> notes;
};

inline constexpr double schedule_ratio_cap = 0.25;

/// Assembles κ, ν, C_1, C, C', C'', η from the lattice, the fit and the perturbation growth R.
ConstantsBundle constants_bundle(const LatticeSpec& lat, double D, double tau, double Dprime, double R,
                                 double eps1, double r1, bool R_defaulted = false);

/// C_1 = (2τ/e)^τ 5^n 3^d / D, bounding Σ_{P,Q} e^{-δ|P|-ρ|Q|} (|P|+|Q|)^τ / D by C_1(δ^{-(τ+ν)} + ρ^{-(τ+ν)}).
double cohomology_constant(int n, int d, double tau, double D);

struct EtaSequence {
    std::vector<double> log_eta; // index m (0 unused)
    std::vector<double> eta;
    double log_K = 0;
    double D_env = 0;
    bool envelope_ok = false;
};

EtaSequence eta_sequence(int M, const ConstantsBundle& k);

struct Schedule {
    std::vector<double> eps; // index m >= 1 (index 0 repeats ε_1)
    std::vector<double> r;
    std::vector<double> eps_gap;   // ε_m - ε_∞ = ε_1 (η/κ) 2^{1-m}
    std::vector<double> r_log_gap; // log(r_m / r_∞) = 2^{1-m}
    double eps_inf = 0;
    double r_inf = 0;
    bool floors_ok = false;
};

Schedule domain_schedule(int M, double eps1, double r1, double eta_ratio);

struct MajorantCoefficients {
    std::vector<double> A;              // index m
    std::vector<std::vector<double>> B; // index 2i (minus), 2i + 1 (plus); then m
    bool B_coincide = false;
    bool A_equals_B = false;
};

/// Degree-by-degree solution of the functional system for A(t) and B^{±e_i}(t).
MajorantCoefficients majorant_coefficients(int M, const ConstantsBundle& k);

/// Right-hand sides of the functional system evaluated on truncated series (degree <= M).
void majorant_rhs(int M, const ConstantsBundle& k, const std::vector<double>& A,
                  const std::vector<std::vector<double>>& B, std::vector<double>& rhsA,
                  std::vector<std::vector<double>>& rhsB);

struct LedgerRow {
    int m = 0;
    std::string domain;
    double norm = 0;
    double majorant = 0;
    bool flag = false;
};

struct Certificate {
    std::vector<LedgerRow> rows;
    bool all_dominated = false;
    double radius = 0;           // 1 / max (A_m η_m)^{1/m} over the window
    double stabilization = 0;    // (max - min) / min of (A_m η_m)^{1/m} over the window
    double empirical_radius = 0; // 1 / max ‖[φ]_m‖^{1/m} over the window
    int window_lo = 0, window_hi = 0;
    bool infinite_radius = false;
    std::string status;
};

Certificate dominance_and_radius(const std::vector<DegreeRecord>& degrees, const EtaSequence& eta,
                                 const MajorantCoefficients& maj, int n, int M);

/// (A_m η_m)^{1/m} over lo <= m <= hi.
std::vector<double> root_sequence(const MajorantCoefficients& maj, const EtaSequence& eta, int lo, int hi);

/// max over maps, components and Q of (Σ_P |c| sup_ext |h^P|)^{1/|Q|}, the extended domain being
/// the union of Ω_{ε_1} and its ±1, ±2 translates.
template <typename Real>
double perturbation_growth(const DeckMapFamily<Real>& fam, const LatticeSpec& lat, double eps1, bool& defaulted) {
    std::vector<Word> words{{}};
    for (int g = 0; g < lat.n; ++g)
        for (int k : {-2, -1, 1, 2})
            words.push_back({{g, k}});
    double R = 0;
    auto visit = [&](const Series<Real>& f) {
        std::map<std::uint64_t, std::vector<double>> per; // (k, Q) -> per-word sums
        KeyCodec qc(f.n(), f.d());
        IVec P(f.n());
        for (const auto& t : f.terms()) {
            Index g = t.ix;
            for (int i = 0; i < f.n(); ++i) {
                P[i] = t.ix.p[i];
                g.p[i] = 0;
            }
            auto& acc = per[qc.pack(g)];
            acc.resize(words.size(), 0.0);
            for (std::size_t w = 0; w < words.size(); ++w)
                acc[w] += static_cast<double>(std::abs(t.c)) * sup_abs_monomial(lat, eps1, P, words[w]);
        }
        for (const auto& [key, acc] : per) {
            Index g = qc.unpack(key);
            int q = f.degree(g);
            double mx = 0;
            for (double x : acc)
                mx = std::max(mx, x);
            if (q > 0 && mx > 0)
                R = std::max(R, std::pow(mx, 1.0 / q));
        }
    };
    for (int i = 0; i < fam.n(); ++i)
        for (int s : {1, -1}) {
            visit(fam.pert(i, s).h);
            visit(fam.pert(i, s).v);
        }
    defaulted = R == 0;
    return defaulted ? 1.0 : R;
}

} // namespace torusfol

#endif // TORUSFOL_MAJORANT_HPP
