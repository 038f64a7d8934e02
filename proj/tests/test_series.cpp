#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <map>
#include <random>

#include "torusfol/series.hpp"
#include "torusfol/series_io.hpp"

using namespace torusfol;
using S = Series<double>;
using cd = std::complex<double>;

namespace {

/// Naive polynomial keyed by (P..., Q...), no truncation in P.
using Poly = std::map<std::vector<int>, cd>;

Poly poly_mul(const Poly& a, const Poly& b, int n, int vmax) {
    Poly c;
    for (const auto& [ka, va] : a)
        for (const auto& [kb, vb] : b) {
            std::vector<int> k(ka.size());
            int deg = 0;
            for (std::size_t i = 0; i < k.size(); ++i) {
                k[i] = ka[i] + kb[i];
                if (static_cast<int>(i) >= n)
                    deg += k[i];
            }
            if (deg <= vmax)
                c[k] += va * vb;
        }
    return c;
}

Poly poly_of(const S& f, int comp) {
    Poly p;
    for (const auto& t : f.terms())
        if (t.ix.k == comp) {
            std::vector<int> k;
            for (int i = 0; i < f.n(); ++i)
                k.push_back(t.ix.p[i]);
            for (int j = 0; j < f.d(); ++j)
                k.push_back(t.ix.q[j]);
            p[k] += t.c;
        }
    return p;
}

/// f(h, v + φ) by expanding every monomial with repeated products.
Poly brute_substitute(const S& f, const S& phi, int comp, int vmax) {
    const int n = f.n(), d = f.d();
    std::vector<Poly> shifted(d);
    for (int j = 0; j < d; ++j) {
        shifted[j] = poly_of(phi, j);
        std::vector<int> k(n + d, 0);
        k[n + j] = 1;
        shifted[j][k] += 1.0;
    }
    Poly out;
    for (const auto& t : f.terms()) {
        if (t.ix.k != comp)
            continue;
        std::vector<int> k(n + d, 0);
        for (int i = 0; i < n; ++i)
            k[i] = t.ix.p[i];
        Poly term{{k, t.c}};
        for (int j = 0; j < d; ++j)
            for (int r = 0; r < t.ix.q[j]; ++r)
                term = poly_mul(term, shifted[j], n, vmax);
        for (const auto& [key, c] : term)
            out[key] += c;
    }
    return out;
}

double poly_diff(const Poly& p, const S& f, int comp) {
    Poly q = poly_of(f, comp);
    double m = 0;
    for (const auto& [k, v] : p) {
        auto it = q.find(k);
        m = std::max(m, std::abs(v - (it == q.end() ? cd(0) : it->second)));
    }
    for (const auto& [k, v] : q)
        if (!p.count(k))
            m = std::max(m, std::abs(v));
    return m;
}

/// Random series with |P|_∞ <= pmax and lo <= |Q| <= hi, roughly `terms` coefficients.
S random_series(std::mt19937_64& rng, int n, int d, int comps, int vmax, int hband, int pmax, int lo, int hi,
                int terms, double scale = 1) {
    S f(n, d, comps, vmax, hband);
    std::uniform_int_distribution<int> P(-pmax, pmax), Q(0, hi), K(0, comps - 1);
    std::uniform_real_distribution<double> U(-scale, scale);
    for (int t = 0; t < terms; ++t) {
        IVec p(n), q(d);
        for (int& x : p)
            x = P(rng);
        int left = hi;
        for (int& x : q) {
            x = std::min(Q(rng), left);
            left -= x;
        }
        if (norm1(q) < lo)
            q[0] += lo - norm1(q);
        f.add(K(rng), p, q, cd(U(rng), U(rng)));
    }
    return f;
}

MultiplierData<double> golden() {
    auto lat = LatticeSpec::from_periods(1, Eigen::MatrixXcd::Constant(1, 1, {0.3, 1.1}));
    CMat<double> mt(1, 1);
    mt(0, 0) = (std::sqrt(5.0) - 1) / 2;
    return MultiplierData<double>::from_lattice(lat, mt);
}

LatticeSpec golden_lattice() { return LatticeSpec::from_periods(1, Eigen::MatrixXcd::Constant(1, 1, {0.3, 1.1})); }

} // namespace

TEST_CASE("ring operations") {
    S a = monomial<double>(1, 1, 8, 4, {1}, {2});
    S b = monomial<double>(1, 1, 8, 4, {-1}, {3});
    S ab = multiply(a, b);
    CHECK(ab.size() == 1);
    CHECK(ab.coeff(0, {0}, {5}) == cd(1));

    S one = monomial<double>(1, 1, 4, 4, {0}, {0});
    S x = monomial<double>(1, 1, 4, 4, {1}, {2});
    S prod = multiply(add(one, x), sub(one, x));
    CHECK(prod.size() == 2);
    CHECK(prod.coeff(0, {0}, {0}) == cd(1));
    CHECK(prod.coeff(0, {2}, {4}) == cd(-1));

    S zero(1, 1, 1, 4, 4);
    CHECK(max_abs_diff(add(x, zero), x) == 0);
}

TEST_CASE("truncation marks discarded mass") {
    S a = monomial<double>(1, 1, 4, 4, {0}, {3});
    S sq = multiply(a, a);
    CHECK(sq.empty());
    CHECK(sq.tailflag());
    CHECK(sq.tail_mass() == doctest::Approx(1.0));
    S hb = monomial<double>(1, 1, 8, 2, {2}, {1});
    S hsq = multiply(hb, hb);
    CHECK(hsq.empty());
    CHECK(hsq.band_loss() == doctest::Approx(1.0));
}

TEST_CASE("multiplication against naive convolution") {
    std::mt19937_64 rng(1);
    for (int t = 0; t < 20; ++t) {
        int d = 1 + t % 2;
        S f = random_series(rng, 1, d, 1, 6, 12, 3, 0, 4, 8);
        S g = random_series(rng, 1, d, 1, 6, 12, 3, 0, 4, 8);
        Poly ref = poly_mul(poly_of(f, 0), poly_of(g, 0), 1, 6);
        CHECK(poly_diff(ref, multiply(f, g), 0) <= 1e-14);
    }
}

TEST_CASE("homogeneous parts") {
    S f(1, 2, 1, 4, 2);
    f.add(0, {0}, {2, 0}, 1.0);
    f.add(0, {0}, {1, 2}, 1.0);
    S f2 = homogeneous_part(f, 2);
    CHECK(f2.size() == 1);
    CHECK(f2.coeff(0, {0}, {2, 0}) == cd(1));
    CHECK(homogeneous_part(f, 4).empty());

    std::mt19937_64 rng(2);
    for (int t = 0; t < 10; ++t) {
        S g = random_series(rng, 2, 2, 2, 6, 3, 3, 0, 6, 30);
        S sum = g.like();
        for (int m = 0; m <= 6; ++m) {
            S part = homogeneous_part(g, m);
            for (const auto& term : part.terms())
                CHECK(term.deg == m);
            sum = add(sum, part);
        }
        CHECK(max_abs_diff(sum, g) == 0);
    }
}

TEST_CASE("homogeneous splitting commutes with products") {
    std::mt19937_64 rng(4);
    for (int t = 0; t < 10; ++t) {
        S f = random_series(rng, 1, 2, 1, 6, 20, 2, 0, 5, 10);
        S g = random_series(rng, 1, 2, 1, 6, 20, 2, 0, 5, 10);
        S fg = multiply(f, g);
        for (int m = 0; m <= 6; ++m) {
            S acc = f.like();
            for (int a = 0; a <= m; ++a)
                acc = add(acc, multiply(homogeneous_part(f, a), homogeneous_part(g, m - a)));
            CHECK(max_abs_diff(homogeneous_part(fg, m), acc) <= 1e-14);
        }
    }
}

TEST_CASE("diagonal composition") {
    auto m = golden();
    CMat<double> neg(1, 1);
    neg(0, 0) = 0.5;
    auto mneg = MultiplierData<double>::from_lattice(golden_lattice(), neg);
    S v2 = monomial<double>(1, 1, 4, 2, {0}, {2});
    CHECK(std::abs(compose_diagonal(v2, mneg, 0, 1).coeff(0, {0}, {2}) - cd(1)) <= 1e-15);

    S hv2 = monomial<double>(1, 1, 4, 2, {1}, {2});
    cd c = compose_diagonal(hv2, m, 0, 1).coeff(0, {1}, {2});
    cd lam = std::exp(cd(-2.2 * M_PI, 0.6 * M_PI));
    cd mu = std::exp(cd(0, 2 * M_PI * (std::sqrt(5.0) - 1) / 2));
    CHECK(std::abs(c - lam * mu * mu) <= 1e-15);
    CHECK(std::abs(c) == doctest::Approx(std::exp(-2.2 * M_PI)).epsilon(1e-13));

    std::mt19937_64 rng(5);
    for (int t = 0; t < 10; ++t) {
        S f = random_series(rng, 1, 1, 1, 6, 4, 2, 0, 3, 8);
        S g = random_series(rng, 1, 1, 1, 6, 4, 2, 0, 3, 8);
        CHECK(max_abs_diff(compose_diagonal(compose_diagonal(f, m, 0, 1), m, 0, -1), f) <= 1e-12);
        S lhs = compose_diagonal(multiply(f, g), m, 0, 1);
        S rhs = multiply(compose_diagonal(f, m, 0, 1), compose_diagonal(g, m, 0, 1));
        CHECK(max_abs_diff(lhs, rhs) <= 1e-12 * std::max(1.0, max_abs_coeff(lhs)));
    }
}

TEST_CASE("vertical substitution") {
    S f = monomial<double>(1, 1, 4, 2, {0}, {2});
    S zero(1, 1, 1, 4, 2);
    CHECK(max_abs_diff(substitute_vertical(f, zero), f) == 0);

    const cd c(0.3, -0.2);
    S phi = monomial<double>(1, 1, 4, 2, {0}, {2}, c);
    S r = substitute_vertical(f, phi);
    CHECK(std::abs(r.coeff(0, {0}, {2}) - 1.0) <= 1e-15);
    CHECK(std::abs(r.coeff(0, {0}, {3}) - 2.0 * c) <= 1e-15);
    CHECK(std::abs(r.coeff(0, {0}, {4}) - c * c) <= 1e-15);

    S low = monomial<double>(1, 1, 4, 2, {0}, {1});
    CHECK_THROWS_AS(substitute_vertical(f, low), PreconditionError);
}

TEST_CASE("vertical substitution against brute-force expansion") {
    std::mt19937_64 rng(6);
    for (int t = 0; t < 20; ++t) {
        int d = 1 + t % 2;
        S f = random_series(rng, 1, d, d, 6, 30, 2, 0, 6, 12);
        S phi = random_series(rng, 1, d, d, 6, 30, 2, 2, 4, 6);
        S r = substitute_vertical(f, phi);
        for (int k = 0; k < d; ++k)
            CHECK(poly_diff(brute_substitute(f, phi, k, 6), r, k) <= 1e-12);
    }
}

TEST_CASE("substitution degree filtration for f of order two") {
    std::mt19937_64 rng(7);
    for (int t = 0; t < 10; ++t) {
        S f = random_series(rng, 1, 1, 1, 6, 20, 2, 2, 6, 10);
        S phi = random_series(rng, 1, 1, 1, 6, 20, 2, 2, 6, 10);
        S base = substitute_vertical(f, phi);
        for (int m = 2; m <= 6; ++m) {
            S noisy = add(degree_range(phi, 2, m - 1), random_series(rng, 1, 1, 1, 6, 20, 2, m, 6, 6));
            S moved = substitute_vertical(f, noisy);
            CHECK(max_abs_diff(homogeneous_part(base, m), homogeneous_part(moved, m)) <= 1e-14);
        }
    }
}

TEST_CASE("horizontal derivatives") {
    S h = monomial<double>(1, 1, 4, 4, {1}, {0});
    CHECK(partial_h(h, {1}).coeff(0, {0}, {0}) == cd(1));
    S hinv = monomial<double>(1, 1, 4, 4, {-1}, {0});
    CHECK(partial_h(hinv, {1}).coeff(0, {-2}, {0}) == cd(-1));
    S h3 = monomial<double>(1, 1, 4, 4, {3}, {2});
    S d2 = partial_h(h3, {2});
    CHECK(d2.size() == 1);
    CHECK(d2.coeff(0, {1}, {2}) == cd(6));

    std::mt19937_64 rng(8);
    std::uniform_real_distribution<double> U(-1, 1);
    for (int t = 0; t < 10; ++t) {
        S f = random_series(rng, 2, 1, 1, 4, 4, 3, 0, 4, 12);
        std::vector<cd> hp{std::polar(1.0 + 0.3 * U(rng), M_PI * U(rng)), std::polar(1.0 + 0.3 * U(rng), M_PI * U(rng))};
        std::vector<cd> vp{cd(0.3 * U(rng), 0.3 * U(rng))};
        for (int i = 0; i < 2; ++i) {
            IVec e(2, 0);
            e[i] = 1;
            const double step = 1e-5;
            auto hplus = hp, hminus = hp;
            hplus[i] += step;
            hminus[i] -= step;
            cd fd = (evaluate(f, hplus, vp)[0] - evaluate(f, hminus, vp)[0]) / (2 * step);
            cd exact = evaluate(partial_h(f, e), hp, vp)[0];
            CHECK(std::abs(fd - exact) <= 1e-6 * std::max(1.0, std::abs(exact)));
        }
    }
}

TEST_CASE("near-diagonal composition matches pointwise evaluation") {
    auto m = golden();
    std::mt19937_64 rng(9);
    for (int t = 0; t < 10; ++t) {
        S f = random_series(rng, 1, 1, 1, 8, 30, 2, 0, 4, 8);
        S a = random_series(rng, 1, 1, 1, 8, 30, 1, 2, 3, 3, 0.1);
        S b = random_series(rng, 1, 1, 1, 8, 30, 1, 2, 3, 3, 0.1);
        S comp = compose(f, NearDiagonalMap<double>{0, 1, a, b}, m);
        std::vector<cd> h{std::polar(50.0, 0.7)}, v{cd(4e-4, -3e-4)};
        cd lam = m.lambda(0, 0), mu = m.mu(0, 0);
        std::vector<cd> h2{lam * h[0] + evaluate(a, h, v)[0]};
        std::vector<cd> v2{mu * v[0] + evaluate(b, h, v)[0]};
        cd direct = evaluate(f, h2, v2)[0];
        cd series = evaluate(comp, h, v)[0];
        CHECK(std::abs(direct - series) <= 1e-12 * std::max(1.0, std::abs(direct)));
    }
}

TEST_CASE("formal inverse of (h, v + G)") {
    S zero(1, 1, 1, 4, 2);
    CHECK(invert_vertical_map(zero).empty());

    const cd c(0.5, 0.0);
    S G = monomial<double>(1, 1, 4, 2, {0}, {2}, c);
    S H = invert_vertical_map(G);
    CHECK(std::abs(H.coeff(0, {0}, {2}) + c) <= 1e-15);
    CHECK(std::abs(H.coeff(0, {0}, {3}) - 2.0 * c * c) <= 1e-15);
    CHECK(std::abs(H.coeff(0, {0}, {4}) + 5.0 * c * c * c) <= 1e-15);

    std::mt19937_64 rng(10);
    for (int t = 0; t < 10; ++t) {
        int d = 1 + t % 2;
        S g = random_series(rng, 1, d, d, 6, 30, 1, 2, 6, 8, 0.2);
        S h = invert_vertical_map(g);
        CHECK(max_abs_coeff(add(h, substitute_vertical(g, h))) <= 1e-12);
        CHECK(max_abs_coeff(add(g, substitute_vertical(h, g))) <= 1e-12);
    }
    S low = monomial<double>(1, 1, 4, 2, {0}, {1});
    CHECK_THROWS_AS(invert_vertical_map(low), PreconditionError);
}

TEST_CASE("norm bounds on reference domains") {
    auto lat = golden_lattice();
    S v2 = monomial<double>(1, 1, 4, 2, {0}, {2});
    auto nb = sup_norm_bound(v2, lat, DomainSpec{0.1, 0.5, {}, {}}, 2000);
    CHECK(nb.value == doctest::Approx(0.25).epsilon(1e-15));
    CHECK(nb.sampled == doctest::Approx(0.25).epsilon(1e-12));
    S hv2 = monomial<double>(1, 1, 4, 2, {1}, {2});
    CHECK(sup_norm_bound(hv2, lat, DomainSpec{0.1, 0.5, {}, {}}).value ==
          doctest::Approx(std::exp(0.22 * M_PI) * 0.25).epsilon(1e-14));
    CHECK_THROWS_AS(sup_norm_bound(hv2, lat, DomainSpec{0.1, 0.5, {{0, 3}}, {}}), DomainError);
}

TEST_CASE("Cauchy coefficient estimate") {
    auto lat = golden_lattice();
    std::mt19937_64 rng(12);
    for (int t = 0; t < 20; ++t) {
        S f = random_series(rng, 1, 1, 1, 6, 4, 3, 0, 6, 15);
        DomainSpec dom{0.1, 0.4, {}, {}};
        double bound = triangle_bound(f, lat, dom);
        for (const auto& term : f.terms())
            CHECK(std::abs(term.c) * sup_abs_monomial(lat, 0.1, {term.ix.p[0]}) * std::pow(0.4, term.deg) <=
                  bound * (1 + 1e-14));
    }
}

TEST_CASE("triangle bound dominates sampled sup") {
    auto lat = golden_lattice();
    std::mt19937_64 rng(13);
    int violations = 0;
    std::vector<DomainSpec> domains{{0.0, 0.5, {}, {}}, {0.1, 0.3, {}, {}}, {0.2, 0.5, {{0, 1}}, {}},
                                    {0.1, 0.2, {{0, -1}}, {}}, {0.05, 0.4, {{0, 2}}, {}}};
    for (int t = 0; t < 20; ++t) {
        S f = random_series(rng, 1, 1, 1, 6, 3, 3, 0, 6, 10);
        for (const auto& dom : domains) {
            auto nb = sup_norm_bound(f, lat, dom, 2000);
            violations += nb.sampled > nb.value * (1 + 1e-12);
        }
    }
    CHECK(violations == 0);
}

TEST_CASE("TLS round trip and parse errors") {
    std::mt19937_64 rng(14);
    S f = random_series(rng, 2, 2, 2, 6, 3, 3, 0, 6, 25);
    std::string text = write_tls(f);
    S g = read_tls<double>(text);
    CHECK(max_abs_diff(f, g) == 0);
    CHECK(write_tls(g) == text);
    CHECK(text.rfind("TLS 2 2 2 6 3\n", 0) == 0);
    try {
        read_tls<double>("TLS 1 1 1 4 2\n1 0 2 1 0\n1 0 9 1 0\n");
        FAIL("expected a parse error");
    } catch (const InvalidInput& e) {
        CHECK(std::string(e.what()).find("line 3") != std::string::npos);
    }
    CHECK_THROWS_AS(read_tls<double>("TLS 1 1 1 4 2\n1 0 2 x 0\n"), InvalidInput);
}

TEST_CASE("extended precision instantiation") {
    Series<long double> f(1, 1, 1, 4, 2);
    f.add(0, {1}, {2}, {0.5L, 0.25L});
    auto g = multiply(f, f);
    CHECK(g.coeff(0, {2}, {4}) == std::complex<long double>(0.1875L, 0.25L));
    CHECK(max_abs_diff(f.cast<double>().cast<long double>(), f) == 0);
}
