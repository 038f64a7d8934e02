#include "torusfol/lattice.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace torusfol {

LatticeSpec LatticeSpec::from_periods(int d, const Eigen::MatrixXcd& periods) {
    LatticeSpec lat;
    lat.n = static_cast<int>(periods.rows());
    lat.d = d;
    if (periods.cols() != lat.n)
        throw InvalidInput("lattice periods must form an n x n matrix");
    lat.gens.resize(lat.n, 2 * lat.n);
    lat.gens.leftCols(lat.n) = Eigen::MatrixXcd::Identity(lat.n, lat.n);
    lat.gens.rightCols(lat.n) = periods;
    lat.validate();
    return lat;
}

void LatticeSpec::validate() const {
    if (n < 1)
        throw InvalidInput("lattice dimension n must be at least 1");
    if (d < 1)
        throw InvalidInput("codimension d must be at least 1");
    if (n + d > 7)
        throw CapabilityError("n + d must not exceed 7");
    if (gens.rows() != n || gens.cols() != 2 * n)
        throw InvalidInput("lattice must have 2n generators in C^n");
    for (int i = 0; i < n; ++i)
        for (int k = 0; k < n; ++k)
            if (gens(k, i) != std::complex<double>(i == k ? 1.0 : 0.0, 0.0))
                throw InvalidInput("invariant violated: e_1..e_n must be the standard basis");
    RMat im = gens.rightCols(n).imag();
    Eigen::FullPivLU<RMat> lu(im);
    lu.setThreshold(1e-12);
    if (lu.rank() < n)
        throw InvalidInput("invariant violated: Im e_{n+1..2n} do not form a basis of R^n");
    RMat real(2 * n, 2 * n);
    real.topRows(n) = gens.real();
    real.bottomRows(n) = gens.imag();
    Eigen::FullPivLU<RMat> lu2(real);
    lu2.setThreshold(1e-12);
    if (lu2.rank() < 2 * n)
        throw InvalidInput("invariant violated: generators are not R-linearly independent");
}

RMat LatticeSpec::log_generators() const {
    return -two_pi<double> * RMat(gens.rightCols(n).imag());
}

RVec word_shift(const LatticeSpec& lat, const Word& word) {
    RMat V = lat.log_generators();
    RVec s = RVec::Zero(lat.n);
    for (auto [g, k] : word) {
        if (g < 0 || g >= lat.n)
            throw InvalidInput("translate word names generator " + std::to_string(g + 1));
        if (k < -2 || k > 2)
            throw DomainError("translate exponent must lie in -2..2");
        s += k * V.col(g);
    }
    return s;
}

std::string word_label(const Word& word) {
    if (word.empty())
        return "base";
    std::string out;
    for (auto [g, k] : word) {
        if (!out.empty())
            out += '.';
        out += "t" + std::to_string(g + 1) + (k >= 0 ? "^+" : "^") + std::to_string(k);
    }
    return out;
}

void LogPolytope::rebuild() {
    const int n = static_cast<int>(generators.cols());
    const int nv = 1 << n;
    vertices.resize(nv, n);
    for (int c = 0; c < nv; ++c) {
        RVec x = offset;
        for (int i = 0; i < n; ++i)
            x += ((c >> i) & 1 ? 1.0 + eps : -eps) * generators.col(i);
        vertices.row(c) = x.transpose();
    }
}

bool LogPolytope::contains(const RVec& x, double tol) const {
    RVec t = generators.fullPivLu().solve(x - offset);
    for (int i = 0; i < t.size(); ++i)
        if (t(i) < -eps - tol || t(i) > 1.0 + eps + tol)
            return false;
    return true;
}

LogPolytope log_indicatrix(const LatticeSpec& lat, double eps, const Word& word) {
    lat.validate();
    if (eps < 0)
        throw DomainError("fattening ε must be nonnegative");
    LogPolytope p;
    p.generators = lat.log_generators();
    p.eps = eps;
    p.offset = word_shift(lat, word);
    p.rebuild();
    return p;
}

bool Hull::contains(const RVec& x, double tol) const {
    for (int f = 0; f < normals.rows(); ++f)
        if (normals.row(f).dot(x) > offsets(f) + tol * (1.0 + std::abs(offsets(f))))
            return false;
    return true;
}

namespace {

int affine_rank(const std::vector<RVec>& pts) {
    if (pts.size() < 2)
        return 0;
    RMat m(pts[0].size(), pts.size() - 1);
    for (std::size_t k = 1; k < pts.size(); ++k)
        m.col(k - 1) = pts[k] - pts[0];
    Eigen::FullPivLU<RMat> lu(m);
    lu.setThreshold(1e-9);
    return static_cast<int>(lu.rank());
}

} // namespace

UnionHull union_and_hull(const LatticeSpec& lat, double eps, int hull_limit) {
    lat.validate();
    const int n = lat.n;
    if (n > hull_limit)
        throw CapabilityError("hull enumeration limited to n <= " + std::to_string(hull_limit));
    UnionHull out;
    out.words.push_back({});
    for (int i = 0; i < n; ++i)
        for (int k : {-2, -1, 1, 2})
            out.words.push_back({{i, k}});
    for (const Word& w : out.words)
        out.pieces.push_back(log_indicatrix(lat, eps, w));

    std::vector<RVec> cloud;
    for (const LogPolytope& p : out.pieces)
        for (int r = 0; r < p.vertices.rows(); ++r) {
            RVec x = p.vertices.row(r).transpose();
            bool dup = false;
            for (const RVec& y : cloud)
                if ((x - y).lpNorm<Eigen::Infinity>() <= 1e-12 * (1.0 + x.lpNorm<Eigen::Infinity>())) {
                    dup = true;
                    break;
                }
            if (!dup)
                cloud.push_back(x);
        }

    // In parameter coordinates the hull is a box plus a scaled cross-polytope,
    // whose facet normals all lie in {-1,0,1}^n.
    RMat VinvT = lat.log_generators().transpose().inverse();
    std::vector<RVec> normals;
    std::vector<double> offsets;
    int ncand = 1;
    for (int i = 0; i < n; ++i)
        ncand *= 3;
    for (int c = 0; c < ncand; ++c) {
        RVec u(n);
        int code = c;
        bool zero = true;
        for (int i = 0; i < n; ++i) {
            u(i) = code % 3 - 1;
            code /= 3;
            if (u(i) != 0)
                zero = false;
        }
        if (zero)
            continue;
        RVec nu = VinvT * u;
        nu /= nu.norm();
        double b = -std::numeric_limits<double>::infinity();
        for (const RVec& x : cloud)
            b = std::max(b, nu.dot(x));
        std::vector<RVec> active;
        for (const RVec& x : cloud)
            if (b - nu.dot(x) <= 1e-10 * (1.0 + std::abs(b)))
                active.push_back(x);
        if (affine_rank(active) == n - 1 && static_cast<int>(active.size()) >= n) {
            normals.push_back(nu);
            offsets.push_back(b);
        }
    }
    out.hull.normals.resize(static_cast<Eigen::Index>(normals.size()), n);
    out.hull.offsets.resize(static_cast<Eigen::Index>(offsets.size()));
    for (std::size_t f = 0; f < normals.size(); ++f) {
        out.hull.normals.row(static_cast<Eigen::Index>(f)) = normals[f].transpose();
        out.hull.offsets(static_cast<Eigen::Index>(f)) = offsets[f];
    }

    std::vector<RVec> verts;
    for (const RVec& x : cloud) {
        std::vector<RVec> act;
        for (std::size_t f = 0; f < normals.size(); ++f)
            if (offsets[f] - normals[f].dot(x) <= 1e-10 * (1.0 + std::abs(offsets[f])))
                act.push_back(normals[f]);
        if (static_cast<int>(act.size()) < n)
            continue;
        RMat a(n, static_cast<Eigen::Index>(act.size()));
        for (std::size_t k = 0; k < act.size(); ++k)
            a.col(static_cast<Eigen::Index>(k)) = act[k];
        Eigen::FullPivLU<RMat> lu(a);
        lu.setThreshold(1e-9);
        if (lu.rank() == n)
            verts.push_back(x);
    }
    std::sort(verts.begin(), verts.end(), [](const RVec& a, const RVec& b) {
        for (int i = 0; i < a.size(); ++i)
            if (a(i) != b(i))
                return a(i) < b(i);
        return false;
    });
    out.hull.vertices.resize(static_cast<Eigen::Index>(verts.size()), n);
    for (std::size_t k = 0; k < verts.size(); ++k)
        out.hull.vertices.row(static_cast<Eigen::Index>(k)) = verts[k].transpose();
    return out;
}

double max_margin_eta(const LatticeSpec& lat, double eps, double tol) {
    if (eps < 0)
        throw DomainError("fattening ε must be nonnegative");
    const Hull hull = union_and_hull(lat, eps).hull;
    auto feasible = [&](double eta) {
        for (int i = 0; i < lat.n; ++i)
            for (int k : {-1, 1}) {
                LogPolytope p = log_indicatrix(lat, eps + eta, {{i, k}});
                for (int r = 0; r < p.vertices.rows(); ++r)
                    if (!hull.contains(p.vertices.row(r).transpose()))
                        return false;
            }
        return true;
    };
    double lo = 0.0, hi = 2.0;
    if (feasible(hi))
        return hi;
    while (hi - lo > tol) {
        double mid = 0.5 * (lo + hi);
        if (feasible(mid))
            lo = mid;
        else
            hi = mid;
    }
    return lo;
}

double log_sup_abs_monomial(const LatticeSpec& lat, double eps, const IVec& P, const Word& word) {
    if (static_cast<int>(P.size()) != lat.n)
        throw InvalidInput("monomial exponent has wrong length");
    bool zero = std::all_of(P.begin(), P.end(), [](int p) { return p == 0; });
    if (zero)
        return 0.0;
    RMat V = lat.log_generators();
    RVec p(lat.n);
    for (int i = 0; i < lat.n; ++i)
        p(i) = P[i];
    RVec w = V.transpose() * p;
    double s = word_shift(lat, word).dot(p);
    for (int i = 0; i < lat.n; ++i)
        s += std::max((1.0 + eps) * w(i), -eps * w(i));
    return s;
}

double sup_abs_monomial(const LatticeSpec& lat, double eps, const IVec& P, const Word& word) {
    return std::exp(log_sup_abs_monomial(lat, eps, P, word));
}

double decay_constant_kappa(const LatticeSpec& lat) {
    RMat VinvT = lat.log_generators().transpose().inverse();
    return 1.0 / VinvT.cwiseAbs().colwise().sum().maxCoeff();
}

std::string format_vertices(const RMat& vertices) {
    std::string out;
    for (int r = 0; r < vertices.rows(); ++r) {
        for (int c = 0; c < vertices.cols(); ++c) {
            if (c)
                out += ' ';
            out += format_real(vertices(r, c));
        }
        out += '\n';
    }
    return out;
}

} // namespace torusfol
