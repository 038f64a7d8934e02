#ifndef TORUSFOL_SERIES_IO_HPP
#define TORUSFOL_SERIES_IO_HPP

#include <sstream>
#include <string>

#include "torusfol/series.hpp"

namespace torusfol {

/// TLS text form: header `TLS n d components vmax hband`, then `k p.. q.. re im` per
/// coefficient (k 1-based), sorted by (k, P, Q), reals in shortest round-trip form.
template <typename Real> std::string write_tls(const Series<Real>& f) {
    std::string out = "TLS " + std::to_string(f.n()) + ' ' + std::to_string(f.d()) + ' ' +
                      std::to_string(f.components()) + ' ' + std::to_string(f.vmax()) + ' ' +
                      std::to_string(f.hband()) + '\n';
    for (const auto& [key, c] : f.coeffs()) {
        Index ix = f.codec().unpack(key);
        out += std::to_string(ix.k + 1);
        for (int i = 0; i < f.n(); ++i)
            out += ' ' + std::to_string(ix.p[i]);
        for (int j = 0; j < f.d(); ++j)
            out += ' ' + std::to_string(ix.q[j]);
        out += ' ' + format_real(c.real()) + ' ' + format_real(c.imag()) + '\n';
    }
    return out;
}

template <typename Real> Series<Real> read_tls(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    auto fail = [&](const std::string& msg) {
        throw InvalidInput("TLS line " + std::to_string(lineno) + ": " + msg);
    };
    if (!std::getline(in, line))
        throw InvalidInput("TLS: empty input");
    ++lineno;
    std::istringstream hs(line);
    std::string tag;
    int n, d, comps, vmax, hband;
    if (!(hs >> tag >> n >> d >> comps >> vmax >> hband) || tag != "TLS")
        fail("malformed header");
    Series<Real> f(n, d, comps, vmax, hband);
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty())
            continue;
        std::istringstream ls(line);
        int k;
        IVec P(n), Q(d);
        std::string re, im;
        if (!(ls >> k))
            fail("missing component");
        for (int& p : P)
            if (!(ls >> p))
                fail("missing horizontal exponent");
        for (int& q : Q)
            if (!(ls >> q))
                fail("missing vertical exponent");
        if (!(ls >> re >> im))
            fail("missing coefficient");
        std::string extra;
        if (ls >> extra)
            fail("trailing field '" + extra + "'");
        Index ix = f.make_index(k - 1, P, Q);
        if (k < 1 || k > comps || !f.in_range(ix))
            fail("index outside declared truncation");
        try {
            f.add(ix, Complex<Real>(parse_real<Real>(re), parse_real<Real>(im)));
        } catch (const InvalidInput& e) {
            fail(e.what());
        }
    }
    return f;
}

} // namespace torusfol

#endif // TORUSFOL_SERIES_IO_HPP
