#ifndef TORUSFOL_LINEARIZER_HPP
#define TORUSFOL_LINEARIZER_HPP

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "torusfol/cohomology.hpp"
#include "torusfol/divisors.hpp"
#include "torusfol/series.hpp"

namespace torusfol {

/// Perturbation of one deck map (T^s h + h, M^s v + v); h has n components, v has d.
template <typename Real> struct DeckPerturbation {
    Series<Real> h;
    Series<Real> v;
};

/// τ_i (fwd[i]) and τ_i^{-1} (inv[i]) as perturbations of the diagonal maps τ̂_i^{±1}.
template <typename Real> struct DeckMapFamily {
    MultiplierData<Real> mult;
    std::vector<DeckPerturbation<Real>> fwd;
    std::vector<DeckPerturbation<Real>> inv;

    int n() const { return mult.n; }
    int d() const { return mult.d; }
    int vmax() const { return fwd.empty() ? 0 : fwd[0].v.vmax(); }
    int hband() const { return fwd.empty() ? 0 : fwd[0].v.hband(); }

    const DeckPerturbation<Real>& pert(int i, int s) const { return s > 0 ? fwd[i] : inv[i]; }

    NearDiagonalMap<Real> map(int i, int s) const { return {i, s, pert(i, s).h, pert(i, s).v}; }
};

template <typename Real>
DeckPerturbation<Real> zero_perturbation(int n, int d, int vmax, int hband) {
    return {Series<Real>(n, d, n, vmax, hband), Series<Real>(n, d, d, vmax, hband)};
}

/// Perturbation of σ^{-1} for σ = (T_i^s h + a, M_i^s v + b), by fixed-point iteration.
template <typename Real>
DeckPerturbation<Real> invert_deck_map(const DeckPerturbation<Real>& p, const MultiplierData<Real>& m, int i, int s) {
    require_order_two(p.h, "invert_deck_map");
    require_order_two(p.v, "invert_deck_map");
    const int vmax = p.v.vmax(), hband = p.v.hband();
    DeckPerturbation<Real> q = zero_perturbation<Real>(m.n, m.d, vmax, hband);
    for (int it = 0; it <= vmax; ++it) {
        NearDiagonalMap<Real> inv{i, -s, q.h, q.v};
        DeckPerturbation<Real> next;
        next.h = scale(apply_horizontal_linear(compose(p.h, inv, m), m, i, -s), Complex<Real>(-1));
        next.v = scale(apply_vertical_linear(compose(p.v, inv, m), m, i, -s), Complex<Real>(-1));
        q = next;
    }
    return q;
}

/// Builds the family from forward perturbations, computing inverse perturbations.
template <typename Real>
DeckMapFamily<Real> make_family(const MultiplierData<Real>& m, const std::vector<DeckPerturbation<Real>>& fwd,
                                const std::vector<DeckPerturbation<Real>>* inv = nullptr) {
    if (static_cast<int>(fwd.size()) != m.n)
        throw InvalidInput("family needs one perturbation per generator");
    DeckMapFamily<Real> fam;
    fam.mult = m;
    fam.fwd = fwd;
    for (int i = 0; i < m.n; ++i) {
        const auto& p = fwd[i];
        if (p.h.components() != m.n || p.v.components() != m.d || p.h.n() != m.n || p.h.d() != m.d)
            throw InvalidInput("perturbation of generator " + std::to_string(i + 1) + " has wrong shape");
        try {
            require_order_two(p.h, "perturbation");
            require_order_two(p.v, "perturbation");
        } catch (const PreconditionError&) {
            throw InvalidInput("invariant violated: perturbation of generator " + std::to_string(i + 1) +
                               " has order < 2 in v (split tangent bundle)");
        }
        fam.inv.push_back(inv ? (*inv)[i] : invert_deck_map(p, m, i, 1));
    }
    return fam;
}

/// Splits full maps τ_i (n + d components: horizontal then vertical) into diagonal part and perturbation.
template <typename Real>
DeckMapFamily<Real> decompose_deck_family(const std::vector<Series<Real>>& raw, bool unitary = true) {
    if (raw.empty())
        throw InvalidInput("no deck maps given");
    const int n = raw[0].n(), d = raw[0].d();
    if (static_cast<int>(raw.size()) != n)
        throw InvalidInput("need one deck map per generator");
    MultiplierData<Real> m;
    m.n = n;
    m.d = d;
    m.unitary = unitary;
    m.lt.resize(n, n);
    m.mt.resize(n, d);
    std::vector<DeckPerturbation<Real>> fwd;
    for (int i = 0; i < n; ++i) {
        const auto& f = raw[i];
        if (f.components() != n + d || f.n() != n || f.d() != d)
            throw InvalidInput("deck map must have n + d components");
        DeckPerturbation<Real> p = zero_perturbation<Real>(n, d, f.vmax(), f.hband());
        std::vector<bool> seen(n + d, false);
        for (const auto& t : f.terms()) {
            const int k = t.ix.k;
            bool linear_slot = false;
            if (k < n) {
                bool is_hk = t.deg == 0;
                for (int a = 0; a < n; ++a)
                    is_hk = is_hk && t.ix.p[a] == (a == k ? 1 : 0);
                if (is_hk) {
                    m.lt(i, k) = turns_of(t.c);
                    seen[k] = true;
                    linear_slot = true;
                } else if (t.deg < 2) {
                    throw InvalidInput("deck map " + std::to_string(i + 1) +
                                       ": non-diagonal linear part or low-order horizontal term");
                }
            } else {
                const int j = k - n;
                bool is_vj = t.deg == 1 && t.ix.q[j] == 1;
                for (int a = 0; a < n; ++a)
                    is_vj = is_vj && t.ix.p[a] == 0;
                if (is_vj) {
                    m.mt(i, j) = turns_of(t.c);
                    seen[k] = true;
                    linear_slot = true;
                } else if (t.deg == 1) {
                    throw InvalidInput("deck map " + std::to_string(i + 1) + ": non-diagonal linear part");
                } else if (t.deg == 0) {
                    throw InvalidInput("deck map " + std::to_string(i + 1) +
                                       ": vertical perturbation of order < 2 (split tangent bundle violated)");
                }
            }
            if (linear_slot)
                continue;
            Index ix = t.ix;
            if (k < n)
                p.h.add(ix, t.c);
            else {
                ix.k = k - n;
                p.v.add(ix, t.c);
            }
        }
        for (int k = 0; k < n + d; ++k)
            if (!seen[k])
                throw InvalidInput("deck map " + std::to_string(i + 1) + ": missing diagonal multiplier");
        fwd.push_back(p);
    }
    m.validate();
    return make_family(m, fwd);
}

/// τ_i^s as a full (n + d)-component map.
template <typename Real> Series<Real> full_map(const DeckMapFamily<Real>& fam, int i, int s) {
    const int n = fam.n(), d = fam.d();
    const auto& p = fam.pert(i, s);
    Series<Real> h = p.h, v = p.v;
    for (int k = 0; k < n; ++k) {
        IVec P(n, 0);
        P[k] = 1;
        h.add(k, P, IVec(d, 0), exp_turns<Real>(Real(s) * fam.mult.lt(i, k)));
    }
    for (int j = 0; j < d; ++j) {
        IVec Q(d, 0);
        Q[j] = 1;
        v.add(j, IVec(n, 0), Q, exp_turns<Real>(Real(s) * fam.mult.mt(i, j)));
    }
    return stack<Real>({h, v});
}

//// Commutation

struct CommutationRow {
    int i = 0, j = 0, m = 0;
    double residual = 0;
};

/// Perturbation of τ_i∘τ_j relative to T_iT_j, M_iM_j.
template <typename Real> DeckPerturbation<Real> compose_perturbations(const DeckMapFamily<Real>& fam, int i, int j) {
    const auto& m = fam.mult;
    const auto& pi = fam.fwd[i];
    const auto& pj = fam.fwd[j];
    auto inner = fam.map(j, 1);
    DeckPerturbation<Real> out;
    out.h = add(apply_horizontal_linear(pj.h, m, i, 1), compose(pi.h, inner, m));
    out.v = add(apply_vertical_linear(pj.v, m, i, 1), compose(pi.v, inner, m));
    return out;
}

template <typename Real> std::vector<CommutationRow> check_commutation(const DeckMapFamily<Real>& fam, int M) {
    std::vector<CommutationRow> rows;
    for (int i = 0; i < fam.n(); ++i)
        for (int j = i + 1; j < fam.n(); ++j) {
            auto ij = compose_perturbations(fam, i, j);
            auto ji = compose_perturbations(fam, j, i);
            auto dh = sub(ij.h, ji.h);
            auto dv = sub(ij.v, ji.v);
            for (int m = 0; m <= std::min(M, fam.vmax()); ++m) {
                double r = std::max(static_cast<double>(max_abs_coeff(homogeneous_part(dh, m))),
                                    static_cast<double>(max_abs_coeff(homogeneous_part(dv, m))));
                rows.push_back({i, j, m, r});
            }
        }
    return rows;
}

//// Conjugation

/// Family Ψ τ Ψ^{-1} for Ψ = (h + χ(h, v), v + ψ(h, v)), χ and ψ of order >= 2 in v.
template <typename Real>
DeckMapFamily<Real> conjugate(const DeckMapFamily<Real>& fam, const Series<Real>& chi, const Series<Real>& psi) {
    const auto& m = fam.mult;
    require_order_two(chi, "conjugate");
    require_order_two(psi, "conjugate");
    const int vmax = fam.vmax(), hband = fam.hband();
    // Ψ^{-1} = (h + a', v + b').
    Series<Real> ai(m.n, m.d, m.n, vmax, hband), bi(m.n, m.d, m.d, vmax, hband);
    if (chi.empty()) {
        if (!psi.empty())
            bi = invert_vertical_map(psi.with_limits(vmax, hband));
    } else {
        for (int it = 0; it <= vmax; ++it) {
            NearDiagonalMap<Real> cur{-1, 1, ai, bi};
            Series<Real> na = scale(compose(chi, cur, m), Complex<Real>(-1));
            Series<Real> nb = scale(compose(psi, cur, m), Complex<Real>(-1));
            ai = na.with_limits(vmax, hband);
            bi = nb.with_limits(vmax, hband);
        }
    }
    NearDiagonalMap<Real> psi_inv{-1, 1, ai, bi};
    DeckMapFamily<Real> out = fam;
    for (int s : {1, -1})
        for (int i = 0; i < m.n; ++i) {
            const auto& p = fam.pert(i, s);
            Series<Real> a1 = add(apply_horizontal_linear(ai, m, i, s), compose(p.h, psi_inv, m));
            Series<Real> b1 = add(apply_vertical_linear(bi, m, i, s), compose(p.v, psi_inv, m));
            NearDiagonalMap<Real> mid{i, s, a1, b1};
            DeckPerturbation<Real> q;
            q.h = chi.empty() ? a1 : add(a1, compose(chi, mid, m));
            q.v = psi.empty() ? b1 : add(b1, compose(psi, mid, m));
            (s > 0 ? out.fwd : out.inv)[i] = q;
        }
    return out;
}

template <typename Real>
DeckMapFamily<Real> conjugate_vertical(const DeckMapFamily<Real>& fam, const Series<Real>& G) {
    return conjugate(fam, Series<Real>(fam.n(), fam.d(), fam.n(), fam.vmax(), fam.hband()), G);
}

//// Linearization

template <typename Real> struct StepResult {
    Series<Real> G;
    Series<Real> G_inverse_route;
    double dual_difference = 0;
    CompatibilityReport compatibility;
    double plug_back = 0;
    DeckMapFamily<Real> family;
};

/// One induction step: solve L_i^v(G) = -[τ*_{i,v}]_m and conjugate by (h, v + G).
template <typename Real>
StepResult<Real> linearize_step(const DeckMapFamily<Real>& fam, int m, const SolveOptions& opt = {},
                                bool dual_check = true) {
    const auto& mu = fam.mult;
    Family<Real> F, Fi;
    for (int i = 0; i < mu.n; ++i) {
        F.push_back(scale(homogeneous_part(fam.fwd[i].v, m), Complex<Real>(-1)));
        Fi.push_back(scale(homogeneous_part(fam.inv[i].v, m), Complex<Real>(-1)));
    }
    StepResult<Real> r;
    auto sol = solve_family(F, mu, false, opt);
    r.G = sol.G;
    r.compatibility = sol.compatibility;
    r.plug_back = static_cast<double>(plug_back_residual(r.G, F, mu, 1));
    if (dual_check) {
        r.G_inverse_route = solve_family(Fi, mu, true, opt).G;
        r.dual_difference = static_cast<double>(max_abs_diff(r.G, r.G_inverse_route));
    }
    r.family = r.G.empty() ? fam : conjugate_vertical(fam, r.G);
    return r;
}

/// Right-hand side [(I) - (II)]_m of L_{s i}^v(φ) for the conjugation equation Φ∘τ̃ = τ∘Φ.
template <typename Real>
Series<Real> conjugacy_rhs(const DeckMapFamily<Real>& fam, const Series<Real>& phi, int i, int s, int m) {
    const auto& mu = fam.mult;
    const auto& p = fam.pert(i, s);
    Series<Real> first = substitute_vertical(p.v, phi);
    Series<Real> ah = substitute_vertical(p.h, phi);
    Series<Real> second = sub(compose(phi, NearDiagonalMap<Real>{i, s, ah, Series<Real>()}, mu),
                              compose_diagonal(phi, mu, i, s));
    return homogeneous_part(sub(first, second), m);
}

template <typename Real> struct DirectRoute {
    Series<Real> phi;
    std::vector<double> compatibility; // per degree, index m
};

/// φ^v degree by degree from the conjugation equations with L_i^v (s = 1) or L_{-i}^v (s = -1).
template <typename Real>
DirectRoute<Real> direct_route(const DeckMapFamily<Real>& fam, int M, int s, const SolveOptions& opt = {}) {
    const auto& mu = fam.mult;
    DirectRoute<Real> out;
    out.phi = Series<Real>(mu.n, mu.d, mu.d, fam.vmax(), fam.hband());
    out.compatibility.assign(M + 1, 0.0);
    for (int m = 2; m <= std::min(M, fam.vmax()); ++m) {
        Family<Real> F;
        for (int i = 0; i < mu.n; ++i)
            F.push_back(conjugacy_rhs(fam, out.phi, i, s, m));
        auto sol = solve_family(F, mu, s < 0, opt);
        out.compatibility[m] = sol.compatibility.relative;
        out.phi = add(out.phi, sol.G);
    }
    return out;
}

struct ResidualRow {
    int generator = 0;
    int m = 0;
    double horizontal = 0;
    double vertical = 0;
};

/// Per generator and degree, coefficient max of Φ∘τ̃_i - τ_i∘Φ for Φ = (h, v + φ).
template <typename Real>
std::vector<ResidualRow> conjugacy_residual(const Series<Real>& phi, const DeckMapFamily<Real>& original,
                                            const DeckMapFamily<Real>& linearized, int M) {
    const auto& mu = original.mult;
    std::vector<ResidualRow> rows;
    for (int i = 0; i < mu.n; ++i) {
        const auto& p = original.fwd[i];
        const auto& q = linearized.fwd[i];
        Series<Real> rh = sub(q.h, substitute_vertical(p.h, phi));
        Series<Real> lhs = add(q.v, compose(phi, linearized.map(i, 1), mu));
        Series<Real> rhs = add(apply_vertical_linear(phi, mu, i, 1), substitute_vertical(p.v, phi));
        Series<Real> rv = sub(lhs, rhs);
        for (int m = 2; m <= M; ++m)
            rows.push_back({i, m, static_cast<double>(max_abs_coeff(homogeneous_part(rh, m))),
                            static_cast<double>(max_abs_coeff(homogeneous_part(rv, m)))});
    }
    return rows;
}

/// First exactly vanishing weak divisor with |P|_∞ <= hband and 2 <= |Q| <= vmax, if any.
template <typename Real>
bool find_resonance(const MultiplierData<Real>& m, int hband, int vmax, DivisorEntry<Real>& hit) {
    bool found = false;
    IVec P(m.n, -hband);
    while (!found) {
        for_each_vertical_exponent(m.d, 2, vmax, [&](const IVec& Q) {
            for (int j = 0; j < m.d && !found; ++j) {
                auto e = divisor_entry(m, P, Q, j, DivisorForm::weak);
                if (e.value == Real(0)) {
                    hit = e;
                    found = true;
                }
            }
        });
        int i = m.n - 1;
        while (i >= 0 && P[i] == hband) {
            P[i] = -hband;
            --i;
        }
        if (i < 0)
            break;
        ++P[i];
    }
    return found;
}

template <typename Real> void require_nonresonant(const MultiplierData<Real>& m, int hband, int vmax) {
    DivisorEntry<Real> hit;
    if (find_resonance(m, hband, vmax, hit))
        throw ResonanceError("linearize refused: resonant divisor at P=(" + format_ivec(hit.P, ',') + ") Q=(" +
                                 format_ivec(hit.Q, ',') + ") j=" + std::to_string(hit.j + 1),
                             hit.P, hit.Q, hit.j + 1);
}

struct WordNorm {
    Word word;
    double norm = 0;
};

struct DegreeRecord {
    int m = 0;
    double eps = 0, r = 0;
    std::vector<WordNorm> norms; // base, then (i, -2), (i, -1), (i, 1), (i, 2)
    double goal = 0;                 // max over base and ±1 words
    std::vector<double> goal_prime;  // index 2i (minus) and 2i + 1 (plus): max over ±1, ±2 words
    double rhs_norm = 0;
    double theoretical = 0;
    double compatibility = 0;
    double plug_back = 0;
    double dual_difference = 0;
};

struct LinearizeOptions {
    int order = 8;
    double eps1 = 0.2;
    double r1 = 0.5;
    std::vector<double> eps_schedule; // index m; empty means ε_1 throughout
    std::vector<double> r_schedule;
    double C1 = 0;    // theoretical column is left at 0 when C1 is 0
    double alpha = 0; // τ + ν
    double kappa = 1;
    double eta = 0;   // schedule margin η (δ_m = ε_1 η / 2^m)
    SolveOptions solve;
    bool dual_check = true;
};

template <typename Real> struct LinearizationResult {
    Series<Real> phi;
    Series<Real> S; // vertical part of the accumulated forward change Φ^{-1}
    std::vector<Series<Real>> steps; // G_m, index m
    DeckMapFamily<Real> linearized;
    std::vector<DegreeRecord> degrees;
    std::vector<ResidualRow> residuals;
    double max_residual = 0;
    double band_loss = 0;
};

inline std::vector<Word> schedule_words(int n) {
    std::vector<Word> words{{}};
    for (int i = 0; i < n; ++i)
        for (int k : {-2, -1, 1, 2})
            words.push_back({{i, k}});
    return words;
}

template <typename Real>
LinearizationResult<Real> linearize(const DeckMapFamily<Real>& fam, const LatticeSpec& lat,
                                    const LinearizeOptions& opt) {
    const auto& mu = fam.mult;
    const int M = opt.order;
    if (M < 2 || M > fam.vmax())
        throw DomainError("order must satisfy 2 <= M <= vmax");
    require_nonresonant(mu, fam.hband(), fam.vmax());
    LinearizationResult<Real> res;
    res.S = Series<Real>(mu.n, mu.d, mu.d, fam.vmax(), fam.hband());
    res.steps.assign(M + 1, res.S);
    DeckMapFamily<Real> cur = fam;
    std::vector<StepResult<Real>> info(M + 1);
    for (int m = 2; m <= M; ++m) {
        auto step = linearize_step(cur, m, opt.solve, opt.dual_check);
        res.steps[m] = step.G;
        res.S = add(res.S, substitute_vertical(step.G, res.S)).with_limits(fam.vmax(), fam.hband());
        cur = step.family;
        info[m] = step;
        info[m].family = DeckMapFamily<Real>();
    }
    res.linearized = cur;
    res.phi = invert_vertical_map(res.S);
    res.residuals = conjugacy_residual(res.phi, fam, cur, M);
    for (const auto& row : res.residuals)
        res.max_residual = std::max({res.max_residual, row.horizontal, row.vertical});
    res.band_loss = static_cast<double>(res.phi.band_loss() + res.S.band_loss());

    const auto words = schedule_words(mu.n);
    for (int m = 2; m <= M; ++m) {
        DegreeRecord rec;
        rec.m = m;
        rec.eps = opt.eps_schedule.empty() ? opt.eps1 : opt.eps_schedule.at(m);
        rec.r = opt.r_schedule.empty() ? opt.r1 : opt.r_schedule.at(m);
        Series<Real> pm = homogeneous_part(res.phi, m);
        for (const Word& w : words)
            rec.norms.push_back({w, triangle_bound(pm, lat, DomainSpec{rec.eps, rec.r, w, {}})});
        rec.goal = rec.norms[0].norm;
        rec.goal_prime.assign(2 * mu.n, 0.0);
        for (std::size_t k = 1; k < rec.norms.size(); ++k) {
            auto [g, e] = rec.norms[k].word[0];
            if (std::abs(e) == 1)
                rec.goal = std::max(rec.goal, rec.norms[k].norm);
            int slot = 2 * g + (e > 0 ? 1 : 0);
            rec.goal_prime[slot] = std::max(rec.goal_prime[slot], rec.norms[k].norm);
        }
        // Right-hand side of the degree-m equation on the previous domain.
        Series<Real> lower = degree_range(res.phi, 2, m - 1);
        double prev_eps = opt.eps_schedule.empty() ? opt.eps1 : opt.eps_schedule.at(m - 1);
        double prev_r = opt.r_schedule.empty() ? opt.r1 : opt.r_schedule.at(m - 1);
        for (int i = 0; i < mu.n; ++i)
            rec.rhs_norm = std::max(rec.rhs_norm, triangle_bound(conjugacy_rhs(fam, lower, i, 1, m), lat,
                                                                 DomainSpec{prev_eps, prev_r, {}, {}}));
        if (opt.C1 > 0 && opt.eta > 0) {
            double delta = opt.eps1 * opt.eta / std::ldexp(1.0, m);
            double rho = std::ldexp(1.0, -m);
            rec.theoretical = rec.rhs_norm * opt.C1 * (std::pow(delta, -opt.alpha) + std::pow(rho, -opt.alpha));
        }
        rec.compatibility = info[m].compatibility.relative;
        rec.plug_back = info[m].plug_back;
        rec.dual_difference = info[m].dual_difference;
        res.degrees.push_back(rec);
    }
    return res;
}

} // namespace torusfol

#endif // TORUSFOL_LINEARIZER_HPP
