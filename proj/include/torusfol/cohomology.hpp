#ifndef TORUSFOL_COHOMOLOGY_HPP
#define TORUSFOL_COHOMOLOGY_HPP

#include <algorithm>
#include <cmath>
#include <set>
#include <vector>

#include "torusfol/divisors.hpp"
#include "torusfol/series.hpp"

namespace torusfol {

/// F_1..F_n, each with d components.
template <typename Real> using Family = std::vector<Series<Real>>;

/// L_{s i}^v(G) = G∘τ̂_i^s - M_i^s G.
template <typename Real>
Series<Real> apply_cohomological(const Series<Real>& G, const MultiplierData<Real>& m, int i, int s = 1) {
    return sub(compose_diagonal(G, m, i, s), apply_vertical_linear(G, m, i, s));
}

namespace detail {

template <typename Real> std::set<std::uint64_t> union_support(const Family<Real>& F) {
    std::set<std::uint64_t> keys;
    for (const auto& f : F)
        for (const auto& [key, c] : f.coeffs())
            keys.insert(key);
    return keys;
}

template <typename Real> void check_family_shape(const Family<Real>& F, const MultiplierData<Real>& m) {
    if (static_cast<int>(F.size()) != m.n)
        throw InvalidInput("family must have one series per generator");
    for (const auto& f : F) {
        if (f.n() != m.n || f.d() != m.d || f.components() != m.d)
            throw InvalidInput("family series must have d components over (n, d)");
        F[0].check_shape(f, "family");
    }
}

template <typename Real> void split_index(const Index& ix, int n, int d, IVec& P, IVec& Q) {
    P.assign(n, 0);
    Q.assign(d, 0);
    for (int i = 0; i < n; ++i)
        P[i] = ix.p[i];
    for (int j = 0; j < d; ++j)
        Q[j] = ix.q[j];
}

} // namespace detail

struct CompatibilityReport {
    double residual = 0; // max |d_a F_b - d_b F_a|
    double scale = 0;    // max |d_a F_b|, |d_b F_a|
    double relative = 0;
    int pairs = 0;
};

/// Coefficient identity (λ_a^P μ_a^Q - μ_{a,k}) F_{b,k,Q,P} = (λ_b^P μ_b^Q - μ_{b,k}) F_{a,k,Q,P}
/// over |Q| = m (all degrees when m < 0); s = -1 checks the inverse operators.
template <typename Real>
CompatibilityReport check_compatibility(const Family<Real>& F, const MultiplierData<Real>& m, int degree = -1,
                                        int s = 1) {
    detail::check_family_shape(F, m);
    CompatibilityReport rep;
    const auto keys = detail::union_support(F);
    const KeyCodec& codec = F[0].codec();
    IVec P, Q;
    for (int a = 0; a < m.n; ++a)
        for (int b = a + 1; b < m.n; ++b) {
            ++rep.pairs;
            for (auto key : keys) {
                Index ix = codec.unpack(key);
                if (degree >= 0 && F[0].degree(ix) != degree)
                    continue;
                detail::split_index<Real>(ix, m.n, m.d, P, Q);
                Complex<Real> lhs = m.divisor(a, P, Q, ix.k, s) * F[b].coeff(ix);
                Complex<Real> rhs = m.divisor(b, P, Q, ix.k, s) * F[a].coeff(ix);
                rep.residual = std::max(rep.residual, static_cast<double>(std::abs(lhs - rhs)));
                rep.scale = std::max({rep.scale, static_cast<double>(std::abs(lhs)), static_cast<double>(std::abs(rhs))});
            }
        }
    rep.relative = rep.scale > 0 ? rep.residual / rep.scale : 0.0;
    return rep;
}

struct DivisorUse {
    Index ix;
    int l = 0;
    double value = 0;
};

template <typename Real> struct Solution {
    Series<Real> G;
    std::vector<DivisorUse> uses;
    CompatibilityReport compatibility;
};

struct SolveOptions {
    double compat_tol = 1e-10;
    TieBreak tie = TieBreak::smallest;
};

template <typename Real> void require_family_order_two(const Family<Real>& F) {
    for (const auto& f : F)
        require_order_two(f, "solve");
}

template <typename Real>
[[noreturn]] void throw_resonance(const Index& ix, int n, int d, const char* where) {
    IVec P, Q;
    detail::split_index<Real>(ix, n, d, P, Q);
    throw ResonanceError(std::string(where) + ": resonant divisor at P=(" + format_ivec(P, ',') + ") Q=(" +
                             format_ivec(Q, ',') + ") j=" + std::to_string(ix.k + 1),
                         P, Q, ix.k + 1);
}

/// Solves L_i^v(G) = F_i for all i (L_{-i}^v when inverse), dividing each coefficient by the
/// largest divisor over the generators.
template <typename Real>
Solution<Real> solve_family(const Family<Real>& F, const MultiplierData<Real>& m, bool inverse = false,
                            const SolveOptions& opt = {}) {
    detail::check_family_shape(F, m);
    require_family_order_two(F);
    const int s = inverse ? -1 : 1;
    Solution<Real> sol;
    sol.compatibility = check_compatibility(F, m, -1, s);
    if (sol.compatibility.relative > opt.compat_tol)
        throw CompatibilityError("family fails compatibility: relative residual " +
                                     format_real(sol.compatibility.relative),
                                 sol.compatibility.relative);
    sol.G = F[0].like();
    for (const auto& f : F)
        sol.G = Series<Real>(f.n(), f.d(), f.components(), std::min(sol.G.vmax(), f.vmax()),
                             std::min(sol.G.hband(), f.hband()));
    const KeyCodec& codec = F[0].codec();
    IVec P, Q;
    for (auto key : detail::union_support(F)) {
        Index ix = codec.unpack(key);
        detail::split_index<Real>(ix, m.n, m.d, P, Q);
        auto rec = divisor_values(m, P, Q, ix.k, s, opt.tie);
        int l = rec.argmax;
        Complex<Real> f = F[l].coeff(ix);
        if (f == Complex<Real>(0))
            continue;
        if (rec.maxval == Real(0))
            throw_resonance<Real>(ix, m.n, m.d, "solve_family");
        sol.G.add(ix, f / m.divisor(l, P, Q, ix.k, s));
        sol.uses.push_back({ix, l, static_cast<double>(rec.maxval)});
    }
    return sol;
}

/// Solves the single equation L_{s i}^v(G) = F.
template <typename Real>
Solution<Real> solve_single(const Series<Real>& F, const MultiplierData<Real>& m, int i, int s = 1) {
    if (F.components() != m.d || F.n() != m.n || F.d() != m.d)
        throw InvalidInput("solve_single: series must have d components over (n, d)");
    require_order_two(F, "solve_single");
    Solution<Real> sol;
    sol.G = F.like();
    IVec P, Q;
    for (const auto& [key, c] : F.coeffs()) {
        Index ix = F.codec().unpack(key);
        detail::split_index<Real>(ix, m.n, m.d, P, Q);
        Complex<Real> div = m.divisor(i, P, Q, ix.k, s);
        if (div == Complex<Real>(0))
            throw_resonance<Real>(ix, m.n, m.d, "solve_single");
        sol.G.add(ix, c / div);
        sol.uses.push_back({ix, i, static_cast<double>(std::abs(div))});
    }
    return sol;
}

/// Plug-back residual max_i max|L_{s i}(G) - F_i|.
template <typename Real>
Real plug_back_residual(const Series<Real>& G, const Family<Real>& F, const MultiplierData<Real>& m, int s = 1) {
    Real r = 0;
    for (int i = 0; i < m.n; ++i)
        r = std::max(r, max_abs_diff(apply_cohomological(G, m, i, s), F[i]));
    return r;
}

//// Norm certificates

struct CertificateSetup {
    double eps = 0;
    double r = 0;
    double delta = 0;
    double rho = 0;
    double kappa = 0;
    double C1 = 0;
    double alpha = 0; // τ + ν
};

struct CertificateEntry {
    NormBound empirical; // bound of G on the shrunk (translated) domain
    double source = 0;   // max_i ‖F_i‖ on the unshrunk (translated) domain
    double theoretical = 0;
    bool pass = false;
};

struct SolutionCertificate {
    std::vector<CertificateEntry> entries; // base domain first, then translates
    bool pass = false;
};

/// Compares ‖G‖ on Ω_{ε-δ/κ, r e^{-ρ}} and its translates with max_i ‖F_i‖ C_1 (δ^{-α} + ρ^{-α}).
template <typename Real>
SolutionCertificate norm_certificate(const Series<Real>& G, const Family<Real>& F, const LatticeSpec& lat,
                                     const CertificateSetup& cs, const std::vector<Word>& words) {
    if (cs.delta <= 0 || cs.rho <= 0)
        throw DomainError("certificate needs δ > 0 and ρ > 0");
    if (cs.delta >= cs.kappa * cs.eps)
        throw DomainError("certificate needs δ < κ ε");
    const double factor = cs.C1 * (std::pow(cs.delta, -cs.alpha) + std::pow(cs.rho, -cs.alpha));
    SolutionCertificate cert;
    cert.pass = true;
    std::vector<Word> all{{}};
    all.insert(all.end(), words.begin(), words.end());
    for (const Word& w : all) {
        CertificateEntry e;
        DomainSpec small{cs.eps - cs.delta / cs.kappa, cs.r * std::exp(-cs.rho), w, {}};
        DomainSpec big{cs.eps, cs.r, w, {}};
        e.empirical = sup_norm_bound(G, lat, small);
        for (const auto& f : F)
            e.source = std::max(e.source, triangle_bound(f, lat, big));
        e.theoretical = e.source * factor;
        e.pass = e.empirical.value <= e.theoretical;
        cert.pass = cert.pass && e.pass;
        cert.entries.push_back(e);
    }
    return cert;
}

} // namespace torusfol

#endif // TORUSFOL_COHOMOLOGY_HPP
