#ifndef TORUSFOL_DIVISORS_HPP
#define TORUSFOL_DIVISORS_HPP

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "torusfol/multipliers.hpp"

namespace torusfol {

enum class DivisorForm { weak, strong, inverse };
enum class TieBreak { smallest, largest };
enum class ScanNorm { l1, max };

inline std::string form_name(DivisorForm f) {
    switch (f) {
    case DivisorForm::weak:
        return "weak";
    case DivisorForm::strong:
        return "strong";
    default:
        return "inverse";
    }
}

/// Per-generator divisors |(λ_l^P μ_l^Q)^s - μ_{l,j}^s| at one index, with the maximizing l.
template <typename Real> struct DivisorRecord {
    IVec P, Q;
    int j = 0;
    std::vector<Real> perl;
    Real maxval = 0;
    Real minval = 0;
    int argmax = 0;
};

template <typename Real>
DivisorRecord<Real> divisor_values(const MultiplierData<Real>& m, const IVec& P, const IVec& Q, int j,
                                   int s = 1, TieBreak tie = TieBreak::smallest) {
    if (norm1(Q) < 2)
        throw DomainError("divisors are defined for |Q| >= 2");
    for (int q : Q)
        if (q < 0)
            throw DomainError("vertical exponents must be nonnegative");
    DivisorRecord<Real> r;
    r.P = P;
    r.Q = Q;
    r.j = j;
    r.perl.resize(m.n);
    for (int l = 0; l < m.n; ++l)
        r.perl[l] = std::abs(m.divisor(l, P, Q, j, s));
    r.maxval = r.perl[0];
    r.minval = r.perl[0];
    r.argmax = 0;
    for (int l = 1; l < m.n; ++l) {
        if (r.perl[l] > r.maxval || (tie == TieBreak::largest && r.perl[l] == r.maxval)) {
            r.maxval = r.perl[l];
            r.argmax = l;
        }
        r.minval = std::min(r.minval, r.perl[l]);
    }
    return r;
}

template <typename Real> struct DivisorEntry {
    IVec P, Q;
    int j = 0;
    Real value = 0;
    int argmax = 0;
};

template <typename Real> struct DiophantineFit {
    DivisorForm form = DivisorForm::weak;
    ScanNorm norm = ScanNorm::l1;
    double D = 0;
    double tau = 0;
    int pmax = 0, qmax = 0;
    std::size_t scanned = 0;
    double min_value = 0;
    bool resonant = false;
    std::vector<DivisorEntry<Real>> resonances;
};

inline constexpr double tau_floor = 1e-3;

/// Calls fn(P) for every P ∈ Z^n with |P|_1 <= pmax, lexicographically.
template <typename Fn> void for_each_lattice_point(int n, int pmax, Fn&& fn) {
    IVec P(n, -pmax);
    while (true) {
        if (norm1(P) <= pmax)
            fn(P);
        int i = n - 1;
        while (i >= 0 && P[i] == pmax) {
            P[i] = -pmax;
            --i;
        }
        if (i < 0)
            return;
        ++P[i];
    }
}

/// Calls fn(Q) for every Q ∈ N^d with lo <= |Q|_1 <= hi, lexicographically.
template <typename Fn> void for_each_vertical_exponent(int d, int lo, int hi, Fn&& fn) {
    IVec Q(d, 0);
    while (true) {
        int s = norm1(Q);
        if (s >= lo && s <= hi)
            fn(Q);
        int i = d - 1;
        while (i >= 0 && Q[i] == hi) {
            Q[i] = 0;
            --i;
        }
        if (i < 0)
            return;
        ++Q[i];
    }
}

template <typename Real>
DivisorEntry<Real> divisor_entry(const MultiplierData<Real>& m, const IVec& P, const IVec& Q, int j,
                                 DivisorForm form, TieBreak tie = TieBreak::smallest) {
    auto rec = divisor_values(m, P, Q, j, form == DivisorForm::inverse ? -1 : 1, tie);
    DivisorEntry<Real> e;
    e.P = P;
    e.Q = Q;
    e.j = j;
    e.value = form == DivisorForm::strong ? rec.minval : rec.maxval;
    e.argmax = rec.argmax;
    return e;
}

template <typename Real>
std::vector<DivisorEntry<Real>> scan_divisors(const MultiplierData<Real>& m, int pmax, int qmax, DivisorForm form) {
    if (pmax < 0 || qmax < 2)
        throw DomainError("scan needs pmax >= 0 and qmax >= 2");
    std::vector<DivisorEntry<Real>> table;
    for_each_lattice_point(m.n, pmax, [&](const IVec& P) {
        for_each_vertical_exponent(m.d, 2, qmax, [&](const IVec& Q) {
            for (int j = 0; j < m.d; ++j)
                table.push_back(divisor_entry(m, P, Q, j, form));
        });
    });
    return table;
}

inline int scan_size(const IVec& P, const IVec& Q, ScanNorm norm) {
    return (norm == ScanNorm::l1 ? norm1(P) : norm_inf(P)) + norm1(Q);
}

/// Fits value >= D / N^τ, N = |P| + |Q|, over the non-resonant entries.
template <typename Real>
DiophantineFit<Real> fit_diophantine(const std::vector<DivisorEntry<Real>>& table, int pmax, int qmax,
                                     DivisorForm form, ScanNorm norm = ScanNorm::l1) {
    DiophantineFit<Real> fit;
    fit.form = form;
    fit.norm = norm;
    fit.pmax = pmax;
    fit.qmax = qmax;
    fit.scanned = table.size();
    std::vector<std::pair<double, double>> pts; // (log N, log value)
    int nmin = std::numeric_limits<int>::max();
    for (const auto& e : table) {
        if (e.value == Real(0)) {
            fit.resonances.push_back(e);
            continue;
        }
        int N = scan_size(e.P, e.Q, norm);
        nmin = std::min(nmin, N);
        pts.emplace_back(std::log(double(N)), std::log(static_cast<double>(e.value)));
    }
    fit.resonant = !fit.resonances.empty();
    if (pts.empty())
        return fit;
    double logd0 = std::numeric_limits<double>::infinity();
    double minv = std::numeric_limits<double>::infinity();
    for (const auto& e : table) {
        if (e.value == Real(0))
            continue;
        minv = std::min(minv, static_cast<double>(e.value));
        if (scan_size(e.P, e.Q, norm) == nmin)
            logd0 = std::min(logd0, std::log(static_cast<double>(e.value)));
    }
    double tau = tau_floor;
    for (auto [x, y] : pts)
        tau = std::max(tau, (logd0 - y) / x);
    double logD = std::numeric_limits<double>::infinity();
    for (auto [x, y] : pts)
        logD = std::min(logD, y + tau * x);
    fit.tau = tau;
    fit.D = std::exp(logD) * (1 - 1e-9);
    fit.min_value = minv;
    return fit;
}

template <typename Real>
std::pair<std::vector<DivisorEntry<Real>>, DiophantineFit<Real>>
scan_and_fit(const MultiplierData<Real>& m, int pmax, int qmax, DivisorForm form, ScanNorm norm = ScanNorm::l1) {
    auto table = scan_divisors(m, pmax, qmax, form);
    auto fit = fit_diophantine(table, pmax, qmax, form, norm);
    return {std::move(table), std::move(fit)};
}

/// Checks max_l|λ_l^Pμ_l^Q - μ_{l,j}| >= D' max_k|λ_k^Pμ_k^Q| / N^τ with the two-branch argument.
struct EnhancedReport {
    double B = 0;
    double Dprime = 0;           // D / B
    double Dprime_empirical = 0; // min value N^τ / max_k|λ_k^Pμ_k^Q|
    std::size_t checked = 0;
    std::size_t small_branch = 0;
    std::size_t large_branch = 0;
    std::size_t failures = 0;
    bool pass = true;
};

template <typename Real>
EnhancedReport enhanced_bound_check(const MultiplierData<Real>& m, const DiophantineFit<Real>& fit, int pmax,
                                    int qmax) {
    EnhancedReport rep;
    double mu_max = 0;
    for (int l = 0; l < m.n; ++l)
        for (int j = 0; j < m.d; ++j)
            mu_max = std::max(mu_max, static_cast<double>(std::abs(m.mu(l, j))));
    rep.B = 2 * mu_max;
    rep.Dprime = fit.D / rep.B;
    rep.Dprime_empirical = std::numeric_limits<double>::infinity();
    const int s = fit.form == DivisorForm::inverse ? -1 : 1;
    for_each_lattice_point(m.n, pmax, [&](const IVec& P) {
        for_each_vertical_exponent(m.d, 2, qmax, [&](const IVec& Q) {
            double mx = 0;
            for (int k = 0; k < m.n; ++k)
                mx = std::max(mx, static_cast<double>(std::abs(m.monomial(k, P, Q, s))));
            double N = scan_size(P, Q, fit.norm);
            for (int j = 0; j < m.d; ++j) {
                double value = static_cast<double>(divisor_values(m, P, Q, j, s).maxval);
                ++rep.checked;
                bool ok;
                if (mx < rep.B) {
                    ++rep.small_branch;
                    ok = value >= rep.Dprime * mx / std::pow(N, fit.tau);
                } else {
                    ++rep.large_branch;
                    ok = value >= mx / 2;
                }
                if (!ok)
                    ++rep.failures;
                rep.Dprime_empirical = std::min(rep.Dprime_empirical, value * std::pow(N, fit.tau) / mx);
            }
        });
    });
    rep.pass = rep.failures == 0;
    return rep;
}

} // namespace torusfol

#endif // TORUSFOL_DIVISORS_HPP
