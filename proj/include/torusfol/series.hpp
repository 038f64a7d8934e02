#ifndef TORUSFOL_SERIES_HPP
#define TORUSFOL_SERIES_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <vector>

#include "torusfol/core.hpp"
#include "torusfol/lattice.hpp"
#include "torusfol/multipliers.hpp"

namespace torusfol {

inline constexpr int max_vars = 7;

/// Exponent of a monomial h^P v^Q in component k, unpacked.
struct Index {
    int k = 0;
    std::array<int, max_vars> p{};
    std::array<int, max_vars> q{};
};

/// Packs (k, P, Q) into one word so that integer order is lexicographic order on (k, P, Q).
class KeyCodec {
  public:
    KeyCodec() = default;
    KeyCodec(int n, int d) : n_(n), d_(d) {}

    std::uint64_t pack(const Index& ix) const {
        std::uint64_t key = static_cast<std::uint64_t>(ix.k);
        for (int i = 0; i < n_; ++i)
            key = (key << 8) | static_cast<std::uint64_t>(ix.p[i] + 128);
        for (int j = 0; j < d_; ++j)
            key = (key << 8) | static_cast<std::uint64_t>(ix.q[j]);
        return key;
    }

    Index unpack(std::uint64_t key) const {
        Index ix;
        for (int j = d_ - 1; j >= 0; --j) {
            ix.q[j] = static_cast<int>(key & 0xff);
            key >>= 8;
        }
        for (int i = n_ - 1; i >= 0; --i) {
            ix.p[i] = static_cast<int>(key & 0xff) - 128;
            key >>= 8;
        }
        ix.k = static_cast<int>(key);
        return ix;
    }

  private:
    int n_ = 0, d_ = 0;
};

/// A coefficient with its unpacked exponent.
template <typename Real> struct Term {
    Index ix;
    int deg = 0; // |Q|
    int hmax = 0; // |P|_∞
    Complex<Real> c;
};

/// Truncated Taylor-Laurent series Σ f_{k,Q,P} h^P v^Q with |Q| <= vmax, |P|_∞ <= hband.
template <typename Real> class Series {
  public:
    using C = Complex<Real>;

    Series() = default;
    Series(int n, int d, int components, int vmax, int hband)
        : n_(n), d_(d), comps_(components), vmax_(vmax), hband_(hband), codec_(n, d) {
        if (n < 1 || d < 1 || n + d > max_vars)
            throw CapabilityError("series dimensions require 1 <= n, d and n + d <= 7");
        if (components < 1 || vmax < 0 || vmax > 255 || hband < 0 || hband > 127)
            throw InvalidInput("series truncation out of range");
    }

    int n() const { return n_; }
    int d() const { return d_; }
    int components() const { return comps_; }
    int vmax() const { return vmax_; }
    int hband() const { return hband_; }
    bool tailflag() const { return tailflag_; }
    Real tail_mass() const { return tail_mass_; }
    Real band_loss() const { return band_loss_; }
    const std::map<std::uint64_t, C>& coeffs() const { return c_; }
    const KeyCodec& codec() const { return codec_; }
    std::size_t size() const { return c_.size(); }
    bool empty() const { return c_.empty(); }

    static Real prune_threshold() { return Real(1e-300); }

    Series like(int components = 0) const {
        return Series(n_, d_, components ? components : comps_, vmax_, hband_);
    }

    Index make_index(int k, const IVec& P, const IVec& Q) const {
        if (static_cast<int>(P.size()) != n_ || static_cast<int>(Q.size()) != d_)
            throw InvalidInput("monomial exponent has wrong length");
        Index ix;
        ix.k = k;
        for (int i = 0; i < n_; ++i)
            ix.p[i] = P[i];
        for (int j = 0; j < d_; ++j) {
            if (Q[j] < 0)
                throw InvalidInput("vertical exponents must be nonnegative");
            ix.q[j] = Q[j];
        }
        return ix;
    }

    int degree(const Index& ix) const {
        int s = 0;
        for (int j = 0; j < d_; ++j)
            s += ix.q[j];
        return s;
    }

    int hmax(const Index& ix) const {
        int s = 0;
        for (int i = 0; i < n_; ++i)
            s = std::max(s, std::abs(ix.p[i]));
        return s;
    }

    bool in_range(const Index& ix) const { return degree(ix) <= vmax_ && hmax(ix) <= hband_; }

    C coeff(const Index& ix) const {
        if (!in_range(ix) || ix.k < 0 || ix.k >= comps_)
            return C(0);
        auto it = c_.find(codec_.pack(ix));
        return it == c_.end() ? C(0) : it->second;
    }
    C coeff(int k, const IVec& P, const IVec& Q) const { return coeff(make_index(k, P, Q)); }

    /// Adds c to the coefficient; entries outside truncation are dropped and flagged.
    void add(const Index& ix, C c) {
        if (ix.k < 0 || ix.k >= comps_)
            throw InvalidInput("component index out of range");
        if (c == C(0))
            return;
        if (degree(ix) > vmax_ || hmax(ix) > hband_) {
            tailflag_ = true;
            tail_mass_ += std::abs(c);
            if (degree(ix) <= vmax_)
                band_loss_ += std::abs(c);
            return;
        }
        auto key = codec_.pack(ix);
        auto [it, fresh] = c_.try_emplace(key, c);
        if (!fresh) {
            it->second += c;
            if (std::abs(it->second) < prune_threshold())
                c_.erase(it);
        } else if (std::abs(c) < prune_threshold()) {
            c_.erase(it);
        }
    }
    void add(int k, const IVec& P, const IVec& Q, C c) { add(make_index(k, P, Q), c); }

    void set(const Index& ix, C c) {
        if (!in_range(ix))
            throw InvalidInput("coefficient index outside truncation");
        auto key = codec_.pack(ix);
        if (std::abs(c) < prune_threshold())
            c_.erase(key);
        else
            c_[key] = c;
    }
    void set(int k, const IVec& P, const IVec& Q, C c) { set(make_index(k, P, Q), c); }

    std::vector<Term<Real>> terms() const {
        std::vector<Term<Real>> out;
        out.reserve(c_.size());
        for (const auto& [key, c] : c_) {
            Term<Real> t;
            t.ix = codec_.unpack(key);
            t.deg = degree(t.ix);
            t.hmax = hmax(t.ix);
            t.c = c;
            out.push_back(t);
        }
        return out;
    }

    void merge_tail(const Series& o) {
        tailflag_ = tailflag_ || o.tailflag_;
        tail_mass_ += o.tail_mass_;
        band_loss_ += o.band_loss_;
    }

    void clear_tail() {
        tailflag_ = false;
        tail_mass_ = 0;
        band_loss_ = 0;
    }

    void check_shape(const Series& o, const char* op) const {
        if (n_ != o.n_ || d_ != o.d_)
            throw InvalidInput(std::string(op) + ": dimension mismatch");
    }

    /// Re-truncates to a smaller (vmax, hband), flagging what is dropped.
    Series truncated(int vmax, int hband) const {
        Series out(n_, d_, comps_, std::min(vmax, vmax_), std::min(hband, hband_));
        out.merge_tail(*this);
        for (const auto& [key, c] : c_)
            out.add(codec_.unpack(key), c);
        return out;
    }

    Series with_limits(int vmax, int hband) const {
        Series out(n_, d_, comps_, vmax, hband);
        out.merge_tail(*this);
        for (const auto& [key, c] : c_)
            out.add(codec_.unpack(key), c);
        return out;
    }

    template <typename Other> Series<Other> cast() const {
        Series<Other> out(n_, d_, comps_, vmax_, hband_);
        for (const auto& [key, c] : c_)
            out.add(codec_.unpack(key), Complex<Other>(Other(c.real()), Other(c.imag())));
        return out;
    }

  private:
    int n_ = 0, d_ = 0, comps_ = 0, vmax_ = 0, hband_ = 0;
    KeyCodec codec_;
    std::map<std::uint64_t, C> c_;
    bool tailflag_ = false;
    Real tail_mass_ = 0;
    Real band_loss_ = 0;
};

//// Ring operations

template <typename Real> Series<Real> add(const Series<Real>& f, const Series<Real>& g, Complex<Real> gscale = 1) {
    f.check_shape(g, "add");
    if (f.components() != g.components())
        throw InvalidInput("add: component count mismatch");
    Series<Real> out(f.n(), f.d(), f.components(), std::min(f.vmax(), g.vmax()),
                     std::min(f.hband(), g.hband()));
    out.merge_tail(f);
    out.merge_tail(g);
    for (const auto& [key, c] : f.coeffs())
        out.add(f.codec().unpack(key), c);
    for (const auto& [key, c] : g.coeffs())
        out.add(g.codec().unpack(key), gscale * c);
    return out;
}

template <typename Real> Series<Real> sub(const Series<Real>& f, const Series<Real>& g) {
    return add(f, g, Complex<Real>(-1));
}

template <typename Real> Series<Real> scale(const Series<Real>& f, Complex<Real> s) {
    Series<Real> out = f.like();
    out.merge_tail(f);
    for (const auto& [key, c] : f.coeffs())
        out.add(f.codec().unpack(key), s * c);
    return out;
}

/// Multiplies component k by s[k].
template <typename Real>
Series<Real> scale_components(const Series<Real>& f, const std::vector<Complex<Real>>& s) {
    if (static_cast<int>(s.size()) != f.components())
        throw InvalidInput("scale_components: wrong number of factors");
    Series<Real> out = f.like();
    out.merge_tail(f);
    for (const auto& [key, c] : f.coeffs()) {
        Index ix = f.codec().unpack(key);
        out.add(ix, s[ix.k] * c);
    }
    return out;
}

/// Cauchy product. Equal component counts multiply componentwise; a scalar factor broadcasts.
template <typename Real> Series<Real> multiply(const Series<Real>& f, const Series<Real>& g) {
    f.check_shape(g, "multiply");
    int comps;
    if (f.components() == g.components())
        comps = f.components();
    else if (f.components() == 1)
        comps = g.components();
    else if (g.components() == 1)
        comps = f.components();
    else
        throw InvalidInput("multiply: incompatible component counts");
    const int n = f.n(), d = f.d();
    Series<Real> out(n, d, comps, std::min(f.vmax(), g.vmax()), std::min(f.hband(), g.hband()));
    out.merge_tail(f);
    out.merge_tail(g);
    auto ft = f.terms();
    auto gt = g.terms();
    const bool pairwise = f.components() == g.components();
    for (const auto& a : ft)
        for (const auto& b : gt) {
            if (pairwise && a.ix.k != b.ix.k)
                continue;
            Index ix;
            ix.k = f.components() == 1 ? b.ix.k : a.ix.k;
            for (int i = 0; i < n; ++i)
                ix.p[i] = a.ix.p[i] + b.ix.p[i];
            for (int j = 0; j < d; ++j)
                ix.q[j] = a.ix.q[j] + b.ix.q[j];
            out.add(ix, a.c * b.c);
        }
    return out;
}

//// Component handling

template <typename Real> Series<Real> component(const Series<Real>& f, int k) {
    Series<Real> out = f.like(1);
    for (const auto& [key, c] : f.coeffs()) {
        Index ix = f.codec().unpack(key);
        if (ix.k == k) {
            ix.k = 0;
            out.add(ix, c);
        }
    }
    return out;
}

template <typename Real> Series<Real> stack(const std::vector<Series<Real>>& parts) {
    if (parts.empty())
        throw InvalidInput("stack: no components");
    int comps = 0, vmax = 255, hband = 127;
    for (const auto& p : parts) {
        parts[0].check_shape(p, "stack");
        comps += p.components();
        vmax = std::min(vmax, p.vmax());
        hband = std::min(hband, p.hband());
    }
    Series<Real> out(parts[0].n(), parts[0].d(), comps, vmax, hband);
    int base = 0;
    for (const auto& p : parts) {
        out.merge_tail(p);
        for (const auto& [key, c] : p.coeffs()) {
            Index ix = p.codec().unpack(key);
            ix.k += base;
            out.add(ix, c);
        }
        base += p.components();
    }
    return out;
}

/// Scalar series h^P v^Q (coefficient c).
template <typename Real>
Series<Real> monomial(int n, int d, int vmax, int hband, const IVec& P, const IVec& Q, Complex<Real> c = 1) {
    Series<Real> out(n, d, 1, vmax, hband);
    out.add(0, P, Q, c);
    return out;
}

//// Degree structure

/// [f]_m: the part with |Q| = m.
template <typename Real> Series<Real> homogeneous_part(const Series<Real>& f, int m) {
    Series<Real> out = f.like();
    for (const auto& [key, c] : f.coeffs()) {
        Index ix = f.codec().unpack(key);
        if (f.degree(ix) == m)
            out.add(ix, c);
    }
    return out;
}

/// Keeps degrees lo <= |Q| <= hi.
template <typename Real> Series<Real> degree_range(const Series<Real>& f, int lo, int hi) {
    Series<Real> out = f.like();
    for (const auto& [key, c] : f.coeffs()) {
        Index ix = f.codec().unpack(key);
        int m = f.degree(ix);
        if (m >= lo && m <= hi)
            out.add(ix, c);
    }
    return out;
}

/// Smallest |Q| carrying a nonzero coefficient (vmax + 1 for the zero series).
template <typename Real> int vertical_order(const Series<Real>& f) {
    int m = f.vmax() + 1;
    for (const auto& [key, c] : f.coeffs())
        m = std::min(m, f.degree(f.codec().unpack(key)));
    return m;
}

template <typename Real> Real max_abs_coeff(const Series<Real>& f) {
    Real m = 0;
    for (const auto& [key, c] : f.coeffs())
        m = std::max(m, std::abs(c));
    return m;
}

/// max |f_{k,Q,P} - g_{k,Q,P}| over the union of supports.
template <typename Real> Real max_abs_diff(const Series<Real>& f, const Series<Real>& g) {
    Real m = 0;
    for (const auto& [key, c] : f.coeffs()) {
        auto it = g.coeffs().find(key);
        m = std::max(m, std::abs(c - (it == g.coeffs().end() ? Complex<Real>(0) : it->second)));
    }
    for (const auto& [key, c] : g.coeffs())
        if (!f.coeffs().count(key))
            m = std::max(m, std::abs(c));
    return m;
}

//// Diagonal composition

/// f∘τ̂_l^s: coefficient of h^P v^Q multiplied by (λ_l^P μ_l^Q)^s.
template <typename Real>
Series<Real> compose_diagonal(const Series<Real>& f, const MultiplierData<Real>& m, int l, int s) {
    Series<Real> out = f.like();
    out.merge_tail(f);
    IVec P(f.n()), Q(f.d());
    for (const auto& [key, c] : f.coeffs()) {
        Index ix = f.codec().unpack(key);
        for (int i = 0; i < f.n(); ++i)
            P[i] = ix.p[i];
        for (int j = 0; j < f.d(); ++j)
            Q[j] = ix.q[j];
        out.add(ix, c * m.monomial(l, P, Q, s));
    }
    return out;
}

/// M_l^s applied to a d-component series.
template <typename Real>
Series<Real> apply_vertical_linear(const Series<Real>& f, const MultiplierData<Real>& m, int l, int s) {
    std::vector<Complex<Real>> f_s(f.components());
    for (int j = 0; j < f.components(); ++j)
        f_s[j] = exp_turns<Real>(Real(s) * m.mt(l, j));
    return scale_components(f, f_s);
}

/// T_l^s applied to an n-component series.
template <typename Real>
Series<Real> apply_horizontal_linear(const Series<Real>& f, const MultiplierData<Real>& m, int l, int s) {
    std::vector<Complex<Real>> f_s(f.components());
    for (int k = 0; k < f.components(); ++k)
        f_s[k] = exp_turns<Real>(Real(s) * m.lt(l, k));
    return scale_components(f, f_s);
}

//// Substitution v <- v + φ(h, v)

template <typename Real> void require_order_two(const Series<Real>& phi, const char* op) {
    for (const auto& [key, c] : phi.coeffs())
        if (phi.degree(phi.codec().unpack(key)) < 2)
            throw PreconditionError(std::string(op) + ": series must vanish to order 2 in v");
}

template <typename Real> Series<Real> substitute_vertical(const Series<Real>& f, const Series<Real>& phi) {
    f.check_shape(phi, "substitute_vertical");
    if (phi.components() != f.d())
        throw InvalidInput("substitute_vertical: substituted series needs d components");
    require_order_two(phi, "substitute_vertical");
    if (phi.empty())
        return f;
    const int n = f.n(), d = f.d();
    const int vmax = std::min(f.vmax(), phi.vmax() + 1);
    const int hband = f.hband();

    // Powers (v_j + φ_j)^q.
    std::vector<std::vector<Series<Real>>> pw(d);
    int qmax = 0;
    for (const auto& t : f.terms())
        qmax = std::max(qmax, t.deg);
    qmax = std::min(qmax, vmax);
    for (int j = 0; j < d; ++j) {
        IVec e(d, 0);
        e[j] = 1;
        Series<Real> w = add(monomial<Real>(n, d, vmax, hband, IVec(n, 0), e).with_limits(vmax, hband),
                             component(phi, j).with_limits(vmax, hband));
        pw[j].push_back(monomial<Real>(n, d, vmax, hband, IVec(n, 0), IVec(d, 0)));
        for (int q = 1; q <= qmax; ++q)
            pw[j].push_back(multiply(pw[j].back(), w));
    }

    // Group f by (k, Q).
    std::map<std::uint64_t, Series<Real>> groups;
    KeyCodec qcodec(n, d);
    for (const auto& t : f.terms()) {
        Index g = t.ix;
        for (int i = 0; i < n; ++i)
            g.p[i] = 0;
        auto key = qcodec.pack(g);
        auto it = groups.find(key);
        if (it == groups.end())
            it = groups.emplace(key, Series<Real>(n, d, 1, vmax, hband)).first;
        Index h = t.ix;
        h.k = 0;
        for (int j = 0; j < d; ++j)
            h.q[j] = 0;
        it->second.add(h, t.c);
    }

    Series<Real> out(n, d, f.components(), vmax, hband);
    out.merge_tail(f);
    for (const auto& [key, hpoly] : groups) {
        Index g = qcodec.unpack(key);
        int deg = 0;
        for (int j = 0; j < d; ++j)
            deg += g.q[j];
        if (deg > vmax) {
            for (const auto& [hk, c] : hpoly.coeffs()) {
                Index ix = hpoly.codec().unpack(hk);
                ix.k = g.k;
                ix.q = g.q;
                out.add(ix, c);
            }
            continue;
        }
        Series<Real> prod = hpoly;
        for (int j = 0; j < d; ++j)
            if (g.q[j])
                prod = multiply(prod, pw[j][g.q[j]]);
        for (const auto& [pk, c] : prod.coeffs()) {
            Index ix = prod.codec().unpack(pk);
            ix.k = g.k;
            out.add(ix, c);
        }
        out.merge_tail(prod);
    }
    return out;
}

//// Horizontal derivatives

/// ∂_h^{P0} f. The band widens by max P0 so no coefficient is lost.
template <typename Real> Series<Real> partial_h(const Series<Real>& f, const IVec& P0) {
    if (static_cast<int>(P0.size()) != f.n())
        throw InvalidInput("partial_h: multi-index has wrong length");
    int widen = 0;
    for (int p : P0) {
        if (p < 0)
            throw DomainError("partial_h: derivative orders must be nonnegative");
        widen = std::max(widen, p);
    }
    Series<Real> out(f.n(), f.d(), f.components(), f.vmax(), std::min(127, f.hband() + widen));
    out.merge_tail(f);
    for (const auto& [key, c] : f.coeffs()) {
        Index ix = f.codec().unpack(key);
        Real factor = 1;
        for (int i = 0; i < f.n(); ++i) {
            for (int r = 0; r < P0[i]; ++r)
                factor *= Real(ix.p[i] - r);
            ix.p[i] -= P0[i];
        }
        if (factor != Real(0))
            out.add(ix, c * factor);
    }
    return out;
}

//// General near-diagonal composition

/// The map (h, v) -> (T_l^s h + a(h, v), M_l^s v + b(h, v)); l = -1 means T = M = identity.
template <typename Real> struct NearDiagonalMap {
    int l = -1;
    int s = 1;
    Series<Real> a; // n components, order >= 2 in v (or empty)
    Series<Real> b; // d components, order >= 2 in v (or empty)
};

/// All P0 ∈ N^n with 1 <= |P0| <= maxdeg, in graded lexicographic order.
inline std::vector<IVec> multi_indices(int n, int maxdeg) {
    std::vector<IVec> out;
    for (int total = 1; total <= maxdeg; ++total) {
        IVec cur(n, 0);
        std::function<void(int, int)> rec = [&](int i, int left) {
            if (i == n - 1) {
                cur[i] = left;
                out.push_back(cur);
                return;
            }
            for (int v = left; v >= 0; --v) {
                cur[i] = v;
                rec(i + 1, left - v);
            }
        };
        rec(0, total);
    }
    return out;
}

/// f∘σ for σ near-diagonal: Σ_{P0} (1/P0!) ((∂^{P0} f)∘τ̂_l^s)(h, v + M_l^{-s} b) a^{P0}.
template <typename Real>
Series<Real> compose(const Series<Real>& f, const NearDiagonalMap<Real>& map, const MultiplierData<Real>& m) {
    const int n = f.n();
    auto diag = [&](const Series<Real>& g) {
        return map.l < 0 ? g : compose_diagonal(g, m, map.l, map.s);
    };
    Series<Real> shift;
    bool has_b = map.b.components() > 0 && !map.b.empty();
    if (has_b) {
        require_order_two(map.b, "compose");
        shift = map.l < 0 ? map.b : apply_vertical_linear(map.b, m, map.l, -map.s);
    }
    auto vsub = [&](const Series<Real>& g) { return has_b ? substitute_vertical(g, shift) : g; };

    Series<Real> out = vsub(diag(f)).with_limits(f.vmax(), f.hband());
    bool has_a = map.a.components() > 0 && !map.a.empty();
    if (!has_a)
        return out;
    require_order_two(map.a, "compose");
    const int maxdeg = f.vmax() / 2;
    const int wide = std::min(127, f.hband() + maxdeg);
    std::vector<Series<Real>> ak;
    for (int k = 0; k < n; ++k)
        ak.push_back(component(map.a, k).with_limits(f.vmax(), wide));
    for (const IVec& P0 : multi_indices(n, maxdeg)) {
        Series<Real> term = vsub(diag(partial_h(f, P0)));
        Real fact = 1;
        for (int k = 0; k < n; ++k)
            for (int r = 2; r <= P0[k]; ++r)
                fact *= Real(r);
        for (int k = 0; k < n; ++k)
            for (int r = 0; r < P0[k]; ++r)
                term = multiply(term, ak[k]);
        out = add(out, scale(term.with_limits(f.vmax(), f.hband()), Complex<Real>(Real(1) / fact)));
    }
    return out;
}

/// H with (h, v + H) the inverse of (h, v + G), solving H + G(h, v + H) = 0.
template <typename Real> Series<Real> invert_vertical_map(const Series<Real>& G) {
    if (G.components() != G.d())
        throw InvalidInput("invert_vertical_map: series needs d components");
    require_order_two(G, "invert_vertical_map");
    Series<Real> H = scale(G, Complex<Real>(-1));
    for (int it = 0; it < G.vmax(); ++it)
        H = scale(substitute_vertical(G, H), Complex<Real>(-1)).with_limits(G.vmax(), G.hband());
    return H;
}

//// Evaluation and norms

template <typename Real>
std::vector<Complex<Real>> evaluate(const Series<Real>& f, const std::vector<Complex<Real>>& h,
                                    const std::vector<Complex<Real>>& v) {
    std::vector<Complex<Real>> out(f.components(), Complex<Real>(0));
    for (const auto& [key, c] : f.coeffs()) {
        Index ix = f.codec().unpack(key);
        Complex<Real> t = c;
        for (int i = 0; i < f.n(); ++i)
            if (ix.p[i])
                t *= std::pow(h[i], ix.p[i]);
        for (int j = 0; j < f.d(); ++j)
            if (ix.q[j])
                t *= std::pow(v[j], ix.q[j]);
        out[ix.k] += t;
    }
    return out;
}

/// Ω_{ε,r} or a translate of it. `rv` overrides the vertical radius per coordinate.
struct DomainSpec {
    double eps = 0.0;
    double r = 0.0;
    Word word;
    std::vector<double> rv;

    double radius(int j) const { return rv.empty() ? r : rv[j]; }
};

inline std::string domain_label(const DomainSpec& dom) { return word_label(dom.word); }

struct NormBound {
    DomainSpec domain;
    double value = 0.0;   // triangle-inequality upper bound
    double sampled = 0.0; // sampled lower bound (0 when not sampled)
};

/// max over components of Σ |f_{k,Q,P}| sup|h^P| Π r_j^{q_j}.
template <typename Real>
double triangle_bound(const Series<Real>& f, const LatticeSpec& lat, const DomainSpec& dom) {
    std::vector<double> per(f.components(), 0.0);
    IVec P(f.n());
    for (const auto& [key, c] : f.coeffs()) {
        Index ix = f.codec().unpack(key);
        for (int i = 0; i < f.n(); ++i)
            P[i] = ix.p[i];
        double lg = log_sup_abs_monomial(lat, dom.eps, P, dom.word);
        for (int j = 0; j < f.d(); ++j)
            if (ix.q[j])
                lg += ix.q[j] * std::log(dom.radius(j));
        per[ix.k] += static_cast<double>(std::abs(c)) * std::exp(lg);
    }
    double m = 0;
    for (double x : per)
        m = std::max(m, x);
    return m;
}

namespace detail {

inline double halton(std::uint64_t index, int base) {
    double f = 1, r = 0;
    while (index > 0) {
        f /= base;
        r += f * static_cast<double>(index % base);
        index /= base;
    }
    return r;
}

inline constexpr std::array<int, 16> primes{2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53};

} // namespace detail

/// max |f| over a quasi-random sample (Halton) of the closed domain.
template <typename Real>
double sampled_sup(const Series<Real>& f, const LatticeSpec& lat, const DomainSpec& dom, int npoints) {
    const int n = f.n(), d = f.d();
    LogPolytope poly = log_indicatrix(lat, dom.eps, dom.word);
    double best = 0;
    std::vector<Complex<Real>> h(n), v(d);
    RVec t(n);
    for (int s = 0; s < npoints; ++s) {
        std::uint64_t idx = static_cast<std::uint64_t>(s) + 1;
        int b = 0;
        for (int i = 0; i < n; ++i)
            t(i) = -dom.eps + (1 + 2 * dom.eps) * detail::halton(idx, detail::primes[b++]);
        RVec x = poly.offset + poly.generators * t;
        for (int i = 0; i < n; ++i) {
            double arg = two_pi<double> * detail::halton(idx, detail::primes[b++]);
            h[i] = std::polar(Real(std::exp(x(i))), Real(arg));
        }
        for (int j = 0; j < d; ++j) {
            double arg = two_pi<double> * detail::halton(idx, detail::primes[b++]);
            v[j] = std::polar(Real(dom.radius(j)), Real(arg));
        }
        for (const auto& val : evaluate(f, h, v))
            best = std::max(best, static_cast<double>(std::abs(val)));
    }
    return best;
}

template <typename Real>
NormBound sup_norm_bound(const Series<Real>& f, const LatticeSpec& lat, const DomainSpec& dom, int samples = 0) {
    if (dom.eps < 0 || dom.r <= 0)
        throw DomainError("domain needs ε >= 0 and r > 0");
    for (auto [g, k] : dom.word)
        if (k < -2 || k > 2)
            throw DomainError("translate exponent must lie in -2..2");
    NormBound nb;
    nb.domain = dom;
    nb.value = triangle_bound(f, lat, dom);
    if (samples > 0)
        nb.sampled = sampled_sup(f, lat, dom, samples);
    return nb;
}

} // namespace torusfol

#endif // TORUSFOL_SERIES_HPP
