#ifndef TORUSFOL_MULTIPLIERS_HPP
#define TORUSFOL_MULTIPLIERS_HPP

#include <cmath>

#include "torusfol/core.hpp"
#include "torusfol/lattice.hpp"

namespace torusfol {

/// exp(2πi u) - 1 without cancellation, after reducing Re u modulo 1.
template <typename Real> Complex<Real> expm1_turns(Complex<Real> u) {
    const Real pi = std::numbers::pi_v<Real>;
    Real a = std::remainder(u.real(), Real(1));
    Complex<Real> w(a, u.imag());
    if (a == Real(0) && u.imag() == Real(0))
        return Complex<Real>(0);
    Complex<Real> i(0, 1);
    return Real(2) * i * std::sin(pi * w) * std::exp(i * pi * w);
}

template <typename Real> Complex<Real> exp_turns(Complex<Real> u) {
    Real a = std::remainder(u.real(), Real(1));
    return std::exp(Complex<Real>(0, two_pi<Real>) * Complex<Real>(a, u.imag()));
}

/// Diagonal multipliers of the deck maps τ̂_l(h, v) = (T_l h, M_l v).
/// Entries are stored as turns: λ_{l,k} = exp(2πi lt(l,k)), μ_{l,j} = exp(2πi mt(l,j)).
template <typename Real> struct MultiplierData {
    int n = 0;
    int d = 0;
    CMat<Real> lt; // n x n
    CMat<Real> mt; // n x d
    bool unitary = true;

    Complex<Real> lambda(int l, int k) const { return exp_turns<Real>(lt(l, k)); }
    Complex<Real> mu(int l, int j) const { return exp_turns<Real>(mt(l, j)); }

    /// Turns of λ_l^P μ_l^Q.
    Complex<Real> turns(int l, const IVec& P, const IVec& Q) const {
        Complex<Real> z(0);
        for (int k = 0; k < n; ++k)
            if (P[k])
                z += Real(P[k]) * lt(l, k);
        for (int j = 0; j < d; ++j)
            if (Q[j])
                z += Real(Q[j]) * mt(l, j);
        return z;
    }

    /// (λ_l^P μ_l^Q)^s, s = ±1.
    Complex<Real> monomial(int l, const IVec& P, const IVec& Q, int s = 1) const {
        return exp_turns<Real>(Real(s) * turns(l, P, Q));
    }

    /// (λ_l^P μ_l^Q)^s - μ_{l,j}^s.
    Complex<Real> divisor(int l, const IVec& P, const IVec& Q, int j, int s = 1) const {
        Complex<Real> u = Real(s) * (turns(l, P, Q) - mt(l, j));
        return exp_turns<Real>(Real(s) * mt(l, j)) * expm1_turns<Real>(u);
    }

    void validate(Real unit_tol = Real(1e-12)) const {
        if (lt.rows() != n || lt.cols() != n || mt.rows() != n || mt.cols() != d)
            throw InvalidInput("multiplier tables have inconsistent shapes");
        for (int l = 0; l < n; ++l)
            for (int j = 0; j < d; ++j)
                if (unitary && std::abs(mt(l, j).imag()) * two_pi<Real> > unit_tol)
                    throw InvalidInput("invariant violated: |mu_" + std::to_string(l + 1) + "," +
                                       std::to_string(j + 1) + "| != 1 in unitary mode");
    }

    /// λ derived from the lattice, λ_{l,k} = exp(2πi (e_{n+l})_k); μ given in turns.
    static MultiplierData from_lattice(const LatticeSpec& lat, const CMat<Real>& mu_turns,
                                       bool unitary = true) {
        MultiplierData m;
        m.n = lat.n;
        m.d = lat.d;
        m.lt.resize(lat.n, lat.n);
        for (int l = 0; l < lat.n; ++l)
            for (int k = 0; k < lat.n; ++k) {
                std::complex<double> e = lat.gens(k, lat.n + l);
                m.lt(l, k) = Complex<Real>(Real(e.real()), Real(e.imag()));
            }
        m.mt = mu_turns;
        m.unitary = unitary;
        m.validate();
        return m;
    }

    template <typename Other> MultiplierData<Other> cast() const {
        MultiplierData<Other> m;
        m.n = n;
        m.d = d;
        m.lt = lt.template cast<Complex<Other>>();
        m.mt = mt.template cast<Complex<Other>>();
        m.unitary = unitary;
        return m;
    }
};

/// Turns of a nonzero complex number: u with exp(2πi u) = z, Re u in (-1/2, 1/2].
template <typename Real> Complex<Real> turns_of(Complex<Real> z) {
    if (z == Complex<Real>(0))
        throw InvalidInput("multipliers must be nonzero");
    Complex<Real> lg = std::log(z);
    return Complex<Real>(lg.imag() / two_pi<Real>, -lg.real() / two_pi<Real>);
}

} // namespace torusfol

#endif // TORUSFOL_MULTIPLIERS_HPP
