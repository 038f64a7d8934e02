#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "torusfol/lattice.hpp"

using namespace torusfol;

namespace {

LatticeSpec lattice1(double re, double im) {
    return LatticeSpec::from_periods(1, Eigen::MatrixXcd::Constant(1, 1, {re, im}));
}

LatticeSpec lattice2(std::complex<double> a, std::complex<double> b, std::complex<double> c, std::complex<double> e) {
    Eigen::MatrixXcd P(2, 2);
    P << a, c, b, e;
    return LatticeSpec::from_periods(1, P);
}

LatticeSpec standard2() { return lattice2({0, 1}, {0, 0}, {0, 0}, {0, 1}); }

/// Random n=2 lattice with well-conditioned imaginary part.
LatticeSpec random2(std::mt19937_64& rng) {
    std::uniform_real_distribution<double> U(-0.4, 0.4);
    std::uniform_real_distribution<double> D(0.6, 1.4);
    return lattice2({U(rng), D(rng)}, {U(rng), U(rng) * 0.5}, {U(rng), U(rng) * 0.5}, {U(rng), D(rng)});
}

using Pt = std::pair<double, double>;

double cross(const Pt& o, const Pt& a, const Pt& b) {
    return (a.first - o.first) * (b.second - o.second) - (a.second - o.second) * (b.first - o.first);
}

/// Andrew's monotone chain, counter-clockwise, collinear points dropped.
std::vector<Pt> monotone_chain(std::vector<Pt> pts) {
    std::sort(pts.begin(), pts.end());
    pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
    std::vector<Pt> h(2 * pts.size());
    std::size_t k = 0;
    for (std::size_t i = 0; i < pts.size(); ++i) {
        while (k >= 2 && cross(h[k - 2], h[k - 1], pts[i]) <= 1e-12)
            --k;
        h[k++] = pts[i];
    }
    for (std::size_t i = pts.size() - 1, t = k + 1; i > 0; --i) {
        while (k >= t && cross(h[k - 2], h[k - 1], pts[i - 1]) <= 1e-12)
            --k;
        h[k++] = pts[i - 1];
    }
    h.resize(k - 1);
    return h;
}

bool in_chain(const std::vector<Pt>& h, const Pt& p, double tol) {
    for (std::size_t i = 0; i < h.size(); ++i) {
        const Pt& a = h[i];
        const Pt& b = h[(i + 1) % h.size()];
        double len = std::hypot(b.first - a.first, b.second - a.second);
        if (cross(a, b, p) / len < -tol)
            return false;
    }
    return true;
}

std::vector<Pt> union_cloud(const LatticeSpec& lat, double eps) {
    std::vector<Pt> pts;
    std::vector<Word> words{{}};
    for (int i = 0; i < lat.n; ++i)
        for (int k : {-2, -1, 1, 2})
            words.push_back({{i, k}});
    for (const auto& w : words) {
        auto p = log_indicatrix(lat, eps, w);
        for (int r = 0; r < p.vertices.rows(); ++r)
            pts.emplace_back(p.vertices(r, 0), p.vertices(r, 1));
    }
    return pts;
}

/// Grid search over η: largest grid value whose ±1 translates sit in the oracle hull.
double grid_margin(const LatticeSpec& lat, double eps) {
    auto hull = monotone_chain(union_cloud(lat, eps));
    auto ok = [&](double eta) {
        for (int i = 0; i < 2; ++i)
            for (int k : {-1, 1}) {
                auto p = log_indicatrix(lat, eps + eta, {{i, k}});
                for (int r = 0; r < p.vertices.rows(); ++r)
                    if (!in_chain(hull, {p.vertices(r, 0), p.vertices(r, 1)}, 1e-9))
                        return false;
            }
        return true;
    };
    double best = 0;
    for (double step : {1e-2, 1e-4, 1e-6, 1e-8}) {
        while (best + step <= 2.0 && ok(best + step))
            best += step;
    }
    return best;
}

} // namespace

TEST_CASE("lattice validation") {
    CHECK_NOTHROW(lattice1(0.3, 1.1));
    CHECK_THROWS_AS(lattice1(0.3, 0.0), InvalidInput);
    CHECK_THROWS_AS(lattice2({0, 1}, {0, 1}, {0, 1}, {0, 1}), InvalidInput);
    CHECK_THROWS_AS(LatticeSpec::from_periods(3, Eigen::MatrixXcd::Identity(5, 5) * std::complex<double>(0, 1)),
                    CapabilityError);
}

TEST_CASE("n=1 hull is the interval spanned by the translates") {
    auto lat = lattice1(0.3, 1.1);
    const double v = -2 * M_PI * 1.1;
    for (double eps : {0.0, 0.1, 0.25}) {
        auto uh = union_and_hull(lat, eps);
        REQUIRE(uh.pieces.size() == 5);
        REQUIRE(uh.hull.vertices.rows() == 2);
        double lo = std::min((-2 - eps) * v, (3 + eps) * v);
        double hi = std::max((-2 - eps) * v, (3 + eps) * v);
        CHECK(uh.hull.vertices(0, 0) == doctest::Approx(lo).epsilon(1e-14));
        CHECK(uh.hull.vertices(1, 0) == doctest::Approx(hi).epsilon(1e-14));
    }
}

TEST_CASE("n=2 hull agrees with a monotone-chain oracle") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> U(-1, 1);
    for (int trial = 0; trial < 10; ++trial) {
        auto lat = trial == 0 ? standard2() : random2(rng);
        double eps = 0.05 + 0.02 * trial;
        auto uh = union_and_hull(lat, eps);
        auto chain = monotone_chain(union_cloud(lat, eps));
        CHECK(uh.hull.vertices.rows() == static_cast<int>(chain.size()));
        double scale = 0;
        for (auto& p : chain)
            scale = std::max({scale, std::abs(p.first), std::abs(p.second)});
        for (int s = 0; s < 400; ++s) {
            Pt p{1.3 * scale * U(rng), 1.3 * scale * U(rng)};
            RVec x(2);
            x << p.first, p.second;
            bool oracle = in_chain(chain, p, 0);
            bool near = in_chain(chain, p, 1e-7 * scale) != in_chain(chain, p, -1e-7 * scale);
            if (!near)
                CHECK(uh.hull.contains(x) == oracle);
        }
    }
}

TEST_CASE("Hartogs margin is exactly one for every n=1 lattice") {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> re(-2, 2), im(0.2, 3);
    for (int t = 0; t < 12; ++t) {
        double y = (t % 2 ? 1 : -1) * im(rng);
        auto lat = lattice1(re(rng), y);
        for (double eps : {0.0, 0.1, 0.3})
            CHECK(std::abs(max_margin_eta(lat, eps) - 1.0) <= 1e-9);
    }
}

TEST_CASE("n=2 standard lattice margin matches a grid search") {
    auto lat = standard2();
    double eta = max_margin_eta(lat, 0.1);
    CHECK(eta > 0);
    CHECK(std::abs(eta - grid_margin(lat, 0.1)) <= 1e-6);
    CHECK(max_margin_eta(lat, 0.2) <= max_margin_eta(lat, 0.1) + 0.1);
}

TEST_CASE("margin is maximal and sound on random n=2 lattices") {
    std::mt19937_64 rng(23);
    for (int t = 0; t < 6; ++t) {
        auto lat = random2(rng);
        double eps = 0.1;
        double eta = max_margin_eta(lat, eps);
        CHECK(eta > 0);
        CHECK(std::abs(eta - grid_margin(lat, eps)) <= 1e-6);
        auto hull = union_and_hull(lat, eps).hull;
        bool fails = false;
        for (int i = 0; i < 2; ++i)
            for (int k : {-1, 1}) {
                auto inside = log_indicatrix(lat, eps + eta, {{i, k}});
                for (int r = 0; r < inside.vertices.rows(); ++r)
                    CHECK(hull.contains(inside.vertices.row(r).transpose()));
                auto outside = log_indicatrix(lat, eps + eta + 1e-6, {{i, k}});
                for (int r = 0; r < outside.vertices.rows(); ++r)
                    fails = fails || !hull.contains(outside.vertices.row(r).transpose());
            }
        CHECK(fails);
    }
}

TEST_CASE("monomial sup on reference domains") {
    auto lat = lattice1(0.3, 1.1);
    CHECK(sup_abs_monomial(lat, 0.1, {0}) == 1.0);
    CHECK(sup_abs_monomial(lat, 0.1, {0}, {{0, 2}}) == 1.0);
    CHECK(sup_abs_monomial(lat, 0.1, {1}) == doctest::Approx(std::exp(2 * M_PI * 0.11)).epsilon(1e-14));
    double lam = std::exp(-2 * M_PI * 1.1);
    CHECK(sup_abs_monomial(lat, 0.1, {-3}, {{0, 1}}) ==
          doctest::Approx(sup_abs_monomial(lat, 0.1, {-3}) * std::pow(lam, -3)).epsilon(1e-12));
}

TEST_CASE("hull sup equals the max over the translates") {
    std::mt19937_64 rng(3);
    std::uniform_int_distribution<int> P(-6, 6);
    for (int n : {1, 2}) {
        auto lat = n == 1 ? lattice1(0.3, 1.1) : random2(rng);
        auto uh = union_and_hull(lat, 0.1);
        for (int t = 0; t < 50; ++t) {
            IVec p(n);
            for (int& x : p)
                x = P(rng);
            double pieces = -1e300;
            for (const auto& w : uh.words)
                pieces = std::max(pieces, log_sup_abs_monomial(lat, 0.1, p, w));
            double hull = -1e300;
            for (int r = 0; r < uh.hull.vertices.rows(); ++r) {
                double s = 0;
                for (int i = 0; i < n; ++i)
                    s += p[i] * uh.hull.vertices(r, i);
                hull = std::max(hull, s);
            }
            CHECK(std::abs(std::exp(hull - pieces) - 1) <= 1e-12);
        }
    }
}

TEST_CASE("decay constant against a lattice-point oracle") {
    CHECK(decay_constant_kappa(lattice1(0.3, 1.1)) == doctest::Approx(2 * M_PI * 1.1).epsilon(1e-14));
    CHECK(decay_constant_kappa(standard2()) == doctest::Approx(2 * M_PI).epsilon(1e-14));
    std::mt19937_64 rng(17);
    for (int t = 0; t < 5; ++t) {
        auto lat = random2(rng);
        double kappa = decay_constant_kappa(lat);
        double best = 1e300;
        for (int a = -25; a <= 25; ++a)
            for (int b = -25; b <= 25; ++b) {
                if (!a && !b)
                    continue;
                IVec P{a, b};
                double ratio = (log_sup_abs_monomial(lat, 0.3, P) - log_sup_abs_monomial(lat, 0.1, P)) /
                               (0.2 * (std::abs(a) + std::abs(b)));
                best = std::min(best, ratio);
            }
        CHECK(kappa <= best + 1e-9);
        CHECK(best <= kappa * 1.05);
    }
}

TEST_CASE("indicatrix containment and translation") {
    std::mt19937_64 rng(29);
    for (int t = 0; t < 5; ++t) {
        auto lat = t == 0 ? standard2() : random2(rng);
        auto small = log_indicatrix(lat, 0.05);
        auto big = log_indicatrix(lat, 0.2);
        for (int r = 0; r < small.vertices.rows(); ++r)
            CHECK(big.contains(small.vertices.row(r).transpose()));
        RMat V = lat.log_generators();
        for (int i = 0; i < 2; ++i)
            for (int k : {-2, -1, 1, 2}) {
                auto moved = log_indicatrix(lat, 0.1, {{i, k}});
                auto base = log_indicatrix(lat, 0.1);
                for (int r = 0; r < base.vertices.rows(); ++r)
                    CHECK((moved.vertices.row(r) - base.vertices.row(r) - k * V.col(i).transpose()).norm() <= 1e-12);
            }
    }
}

TEST_CASE("neighbouring translates overlap at eps = 0.25") {
    auto lat = standard2();
    RMat V = lat.log_generators();
    for (int i = 0; i < 2; ++i)
        for (int k : {-2, -1, 0, 1}) {
            Word a = k ? Word{{i, k}} : Word{};
            Word b = k + 1 ? Word{{i, k + 1}} : Word{};
            auto pa = log_indicatrix(lat, 0.25, a);
            auto pb = log_indicatrix(lat, 0.25, b);
            RVec t = RVec::Constant(2, 0.5);
            t(i) = 1.1;
            RVec x = pa.offset + V * t;
            CHECK(pa.contains(x));
            CHECK(pb.contains(x));
        }
}

TEST_CASE("hull enumeration is capped") {
    Eigen::MatrixXcd P = Eigen::MatrixXcd::Identity(5, 5) * std::complex<double>(0, 1);
    auto lat = LatticeSpec::from_periods(1, P);
    CHECK_THROWS_AS(union_and_hull(lat, 0.1), CapabilityError);
}

TEST_CASE("vertex listing format") {
    RMat v(2, 2);
    v << 1, -0.5, 2.25, 3;
    CHECK(format_vertices(v) == "1 -0.5\n2.25 3\n");
}
