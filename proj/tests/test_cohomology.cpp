#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <map>
#include <random>

#include <Eigen/Dense>

#include "torusfol/cohomology.hpp"
#include "torusfol/majorant.hpp"

using namespace torusfol;
using S = Series<double>;
using cd = std::complex<double>;

namespace {

S random_series(std::mt19937_64& rng, int n, int d, int pmax, int lo, int hi, int terms, double scale = 1) {
    S f(n, d, d, hi, pmax);
    std::uniform_int_distribution<int> P(-pmax, pmax), Q(0, hi), K(0, d - 1);
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

LatticeSpec plane_lattice(int d) {
    Eigen::MatrixXcd P(2, 2);
    P << cd(0.2, 0.3), cd(0.05, 0.02), cd(-0.1, 0.0), cd(0.3, 0.35);
    return LatticeSpec::from_periods(d, P);
}

MultiplierData<double> plane(int d) {
    CMat<double> mt(2, d);
    const double g = (std::sqrt(5.0) - 1) / 2, r = std::sqrt(2.0) - 1;
    for (int j = 0; j < d; ++j) {
        mt(0, j) = g * (j + 1);
        mt(1, j) = r / (j + 1);
    }
    return MultiplierData<double>::from_lattice(plane_lattice(d), mt);
}

Family<double> image(const S& G, const MultiplierData<double>& m, int s = 1) {
    Family<double> F;
    for (int i = 0; i < m.n; ++i)
        F.push_back(apply_cohomological(G, m, i, s));
    return F;
}

/// Equilibrated least-squares solve of the stacked operators, assembled column by column from basis monomials.
S dense_solve(const Family<double>& F, const MultiplierData<double>& m, int s) {
    std::vector<std::uint64_t> keys;
    for (const auto& f : F)
        for (const auto& [key, c] : f.coeffs())
            keys.push_back(key);
    std::sort(keys.begin(), keys.end());
    keys.erase(std::unique(keys.begin(), keys.end()), keys.end());
    const int N = static_cast<int>(keys.size());
    std::map<std::uint64_t, int> row;
    for (int k = 0; k < N; ++k)
        row[keys[k]] = k;
    Eigen::MatrixXcd A = Eigen::MatrixXcd::Zero(m.n * N, N);
    Eigen::VectorXcd b(m.n * N);
    const KeyCodec& codec = F[0].codec();
    for (int col = 0; col < N; ++col) {
        S e = F[0].like();
        e.add(codec.unpack(keys[col]), 1.0);
        for (int i = 0; i < m.n; ++i) {
            S Le = apply_cohomological(e, m, i, s);
            for (const auto& [key, c] : Le.coeffs())
                A(i * N + row.at(key), col) = c;
        }
    }
    for (int i = 0; i < m.n; ++i)
        for (int k = 0; k < N; ++k)
            b(i * N + k) = F[i].coeff(codec.unpack(keys[k]));
    Eigen::VectorXd rs = A.rowwise().norm(), cs = A.colwise().norm();
    for (int r = 0; r < rs.size(); ++r)
        if (rs(r) == 0)
            rs(r) = 1;
    Eigen::MatrixXcd As = rs.cwiseInverse().asDiagonal() * A * cs.cwiseInverse().asDiagonal();
    Eigen::VectorXcd y = As.completeOrthogonalDecomposition().solve(rs.cwiseInverse().asDiagonal() * b);
    Eigen::VectorXcd g = cs.cwiseInverse().asDiagonal() * y;
    S G = F[0].like();
    for (int k = 0; k < N; ++k)
        G.add(codec.unpack(keys[k]), g(k));
    return G;
}

double max_coeff(const S& f) {
    double r = 0;
    for (const auto& [key, c] : f.coeffs())
        r = std::max(r, std::abs(c));
    return r;
}

} // namespace

TEST_CASE("family solve matches the dense least-squares oracle") {
    std::mt19937_64 rng(11);
    int cases = 0;
    for (int trial = 0; trial < 24; ++trial) {
        int d = 1 + trial % 2;
        auto m = trial % 3 == 0 ? golden() : plane(d);
        if (m.n == 1)
            d = 1;
        int s = trial % 4 == 3 ? -1 : 1;
        S G0 = random_series(rng, m.n, d, 2, 2, 4, 12);
        auto F = image(G0, m, s);
        auto sol = solve_family(F, m, s < 0);
        S oracle = dense_solve(F, m, s);
        double scale = std::max(1.0, max_coeff(G0));
        CHECK(max_abs_diff(sol.G, oracle) <= 1e-12 * scale);
        CHECK(max_abs_diff(sol.G, G0) <= 1e-12 * scale);
        CHECK(sol.compatibility.relative <= 1e-12);
        ++cases;
    }
    CHECK(cases >= 20);
}

TEST_CASE("incompatible family is rejected") {
    std::mt19937_64 rng(12);
    auto m = plane(1);
    S G0 = random_series(rng, 2, 1, 0, 2, 4, 10);
    auto F = image(G0, m);
    F[1].add(0, {0, 0}, {2}, cd(0.5, 0.0));
    CHECK(check_compatibility(F, m).relative > 1e-3);
    CHECK_THROWS_AS(solve_family(F, m), CompatibilityError);
}

TEST_CASE("single-equation solves agree with the family solve") {
    std::mt19937_64 rng(13);
    for (int trial = 0; trial < 10; ++trial) {
        auto m = plane(2);
        S G0 = random_series(rng, 2, 2, 3, 2, 5, 15);
        auto F = image(G0, m);
        auto fam = solve_family(F, m);
        for (int i = 0; i < 2; ++i) {
            auto single = solve_single(F[i], m, i);
            CHECK(max_abs_diff(single.G, fam.G) <= 1e-12 * std::max(1.0, max_coeff(G0)));
        }
        double fscale = std::max(max_coeff(F[0]), max_coeff(F[1]));
        CHECK(plug_back_residual(fam.G, F, m) <= 1e-14 * fscale);
    }
}

TEST_CASE("divisor uses record the largest generator") {
    std::mt19937_64 rng(14);
    auto m = plane(1);
    auto F = image(random_series(rng, 2, 1, 2, 2, 4, 8), m);
    auto sol = solve_family(F, m);
    REQUIRE_FALSE(sol.uses.empty());
    IVec P, Q;
    for (const auto& u : sol.uses) {
        detail::split_index<double>(u.ix, 2, 1, P, Q);
        for (int l = 0; l < 2; ++l)
            CHECK(std::abs(m.divisor(l, P, Q, u.ix.k)) <= u.value * (1 + 1e-15));
        CHECK(std::abs(m.divisor(u.l, P, Q, u.ix.k)) == doctest::Approx(u.value).epsilon(1e-14));
    }
}

TEST_CASE("solver preconditions") {
    auto m = golden();
    S low(1, 1, 1, 4, 2);
    low.add(0, {0}, {1}, 1.0);
    CHECK_THROWS_AS(solve_family(Family<double>{low}, m), PreconditionError);
    CHECK_THROWS_AS(solve_single(low, m, 0), PreconditionError);

    CMat<double> mt(1, 1);
    mt(0, 0) = 0.0;
    auto trivial = MultiplierData<double>::from_lattice(
        LatticeSpec::from_periods(1, Eigen::MatrixXcd::Constant(1, 1, {0.3, 1.1})), mt);
    S res(1, 1, 1, 4, 2);
    res.add(0, {0}, {2}, 1.0);
    CHECK_THROWS_AS(solve_family(Family<double>{res}, trivial), ResonanceError);
    try {
        solve_single(res, trivial, 0);
    } catch (const ResonanceError& e) {
        CHECK(e.P() == IVec{0});
        CHECK(e.Q() == IVec{2});
        CHECK(e.j() == 1);
    }
    CHECK_THROWS_AS(solve_family(Family<double>{res, res}, trivial), InvalidInput);
}

TEST_CASE("solution norms stay under the cohomological estimate") {
    std::mt19937_64 rng(15);
    auto m = golden();
    auto lat = LatticeSpec::from_periods(1, Eigen::MatrixXcd::Constant(1, 1, {0.3, 1.1}));
    auto fit = scan_and_fit(m, 20, 20, DivisorForm::weak).second;
    REQUIRE_FALSE(fit.resonant);
    CertificateSetup cs;
    cs.eps = 0.2;
    cs.r = 0.5;
    cs.kappa = decay_constant_kappa(lat);
    cs.delta = cs.kappa * cs.eps / 4;
    cs.rho = 0.25;
    cs.alpha = fit.tau + 2;
    cs.C1 = cohomology_constant(1, 1, fit.tau, fit.D);
    for (int trial = 0; trial < 10; ++trial) {
        auto F = image(random_series(rng, 1, 1, 3, 2, 6, 12), m);
        auto sol = solve_family(F, m);
        auto cert = norm_certificate(sol.G, F, lat, cs, {{{0, 1}}, {{0, -1}}});
        CHECK(cert.entries.size() == 3);
        CHECK(cert.pass);
        for (const auto& e : cert.entries)
            CHECK(e.empirical.value <= e.theoretical);
    }
    CertificateSetup bad = cs;
    bad.delta = cs.kappa * cs.eps;
    CHECK_THROWS_AS(norm_certificate(S(1, 1, 1, 4, 2), Family<double>{S(1, 1, 1, 4, 2)}, lat, bad, {}), DomainError);
}
