#include "torusfol/majorant.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace torusfol {

double cohomology_constant(int n, int d, double tau, double D) {
    if (D <= 0)
        throw DomainError("Diophantine constant D must be positive");
    double lead = tau > 0 ? std::pow(2 * tau / std::exp(1.0), tau) : 1.0;
    return lead * std::pow(5.0, n) * std::pow(3.0, d) / D;
}

ConstantsBundle constants_bundle(const LatticeSpec& lat, double D, double tau, double Dprime, double R,
                                 double eps1, double r1, bool R_defaulted) {
    if (eps1 <= 0 || r1 <= 0)
        throw DomainError("ε_1 and r_1 must be positive");
    ConstantsBundle k;
    k.n = lat.n;
    k.d = lat.d;
    k.kappa = decay_constant_kappa(lat);
    k.nu = lat.n + lat.d;
    k.tau = tau;
    k.D = D;
    k.Dprime = Dprime;
    k.alpha = tau + k.nu;
    k.C1 = cohomology_constant(lat.n, lat.d, tau, std::min(D, Dprime));
    k.C = std::pow(5.0, lat.n);
    double X = 0;
    const Hull hull = union_and_hull(lat, eps1).hull;
    for (int r = 0; r < hull.vertices.rows(); ++r)
        X = std::max(X, hull.vertices.row(r).cwiseAbs().maxCoeff());
    k.Cp = std::exp(X);
    k.R = R;
    k.Cpp = 2 * k.Cp * std::max(1.0, R);
    k.eps1 = eps1;
    k.r1 = r1;
    k.margin_min = std::numeric_limits<double>::infinity();
    const int samples = 11;
    for (int s = 0; s < samples; ++s) {
        double e = eps1 / 2 + (eps1 / 2) * s / (samples - 1);
        k.margin_min = std::min(k.margin_min, max_margin_eta(lat, e));
    }
    k.eta_ratio = std::min(k.margin_min, schedule_ratio_cap);
    if (k.eta_ratio < k.margin_min)
        k.notes.push_back("schedule ratio η/κ capped at " + format_real(schedule_ratio_cap) +
                          " (smallest margin " + format_real(k.margin_min) + ")");
    if (!(k.eta_ratio > 0))
        throw DomainError("Hartogs margin vanished on [ε_1/2, ε_1]");
    k.eta = k.eta_ratio * k.kappa;
    if (R_defaulted)
        k.notes.push_back("zero perturbation: R set to 1 by convention");
    return k;
}

EtaSequence eta_sequence(int M, const ConstantsBundle& k) {
    if (M < 1)
        throw DomainError("order must be at least 1");
    EtaSequence out;
    const double ninf = -std::numeric_limits<double>::infinity();
    out.log_eta.assign(M + 1, 0.0);
    out.eta.assign(M + 1, 1.0);
    out.log_K = std::log(k.C1) - k.alpha * std::log(k.eta);
    for (int m = 2; m <= M; ++m) {
        // W[j]: best log-product of parts in [1, m-1] with total <= j.
        std::vector<double> W(m + 1, ninf);
        W[0] = 0;
        for (int j = 1; j <= m; ++j) {
            W[j] = W[j - 1];
            for (int p = 1; p <= std::min(j, m - 1); ++p)
                W[j] = std::max(W[j], out.log_eta[p] + W[j - p]);
        }
        out.log_eta[m] = out.log_K + m * k.alpha * std::log(2.0) + W[m];
        out.eta[m] = std::exp(out.log_eta[m]);
    }
    double logD = ninf;
    for (int m = 1; m <= M; ++m)
        logD = std::max(logD, out.log_eta[m] / m);
    out.D_env = std::exp(logD);
    out.envelope_ok = true;
    for (int m = 1; m <= M; ++m)
        if (out.log_eta[m] > m * logD + 1e-12 * std::max(1.0, std::abs(m * logD)))
            out.envelope_ok = false;
    return out;
}

Schedule domain_schedule(int M, double eps1, double r1, double eta_ratio) {
    if (eps1 <= 0 || r1 <= 0)
        throw DomainError("ε_1 and r_1 must be positive");
    if (!(eta_ratio > 0) || eta_ratio >= 0.5)
        throw InvalidInput("invalid constants: schedule needs 0 < η/κ < 1/2");
    Schedule s;
    s.eps_inf = eps1 * (1 - eta_ratio);
    s.r_inf = r1 / std::exp(1.0);
    s.eps.assign(M + 1, eps1);
    s.r.assign(M + 1, r1);
    s.eps_gap.assign(M + 1, eps1 * eta_ratio);
    s.r_log_gap.assign(M + 1, 1.0);
    // ε_{m+1} = ε_m - ε_1 (η/κ) 2^{-m} and r_{m+1} = r_m e^{-2^{-m}}, summed in closed form.
    for (int m = 1; m <= M; ++m) {
        s.eps_gap[m] = eps1 * eta_ratio * std::ldexp(1.0, 1 - m);
        s.r_log_gap[m] = std::ldexp(1.0, 1 - m);
        if (m > 1) {
            s.eps[m] = s.eps_inf + s.eps_gap[m];
            s.r[m] = s.r_inf * std::exp(s.r_log_gap[m]);
        }
    }
    s.floors_ok = s.eps_inf > eps1 / 2;
    for (int m = 1; m <= M; ++m)
        if (!(s.eps_gap[m] > 0) || !(s.r_log_gap[m] > 0) || s.r[m] < s.r_inf || s.eps[m] < s.eps_inf)
            s.floors_ok = false;
    return s;
}

namespace {

using Poly = std::vector<double>;

Poly mul(const Poly& a, const Poly& b, int M) {
    Poly c(M + 1, 0.0);
    for (int i = 0; i <= M; ++i) {
        if (a[i] == 0)
            continue;
        for (int j = 0; i + j <= M; ++j)
            c[i + j] += a[i] * b[j];
    }
    return c;
}

double binom(int a, int b) {
    double r = 1;
    for (int i = 1; i <= b; ++i)
        r = r * (a - b + i) / i;
    return r;
}

/// G(t, U) = Σ_{q>=2} binom(q+d-1, d-1) R^q (t + U)^q, truncated at degree M.
Poly big_g(const Poly& U, const ConstantsBundle& k, int M) {
    Poly base = U;
    base[1] += 1.0;
    Poly pw(M + 1, 0.0), out(M + 1, 0.0);
    pw[0] = 1;
    for (int q = 1; q <= M; ++q) {
        pw = mul(pw, base, M);
        if (q < 2)
            continue;
        double c = binom(q + k.d - 1, k.d - 1) * std::pow(k.R, q);
        for (int i = 0; i <= M; ++i)
            out[i] += c * pw[i];
    }
    return out;
}

/// (1 - y)^{-n} - 1 for y without constant term.
Poly inverse_power_minus_one(const Poly& y, int n, int M) {
    Poly pw(M + 1, 0.0), out(M + 1, 0.0);
    pw[0] = 1;
    for (int j = 1; j <= M; ++j) {
        pw = mul(pw, y, M);
        double c = binom(n + j - 1, j);
        for (int i = 0; i <= M; ++i)
            out[i] += c * pw[i];
    }
    return out;
}

Poly side(const Poly& X, const Poly& sum, const ConstantsBundle& k, int M) {
    Poly g = big_g(X, k, M);
    Poly y = g;
    for (double& c : y)
        c *= k.Cp / k.Cpp;
    Poly w = mul(sum, inverse_power_minus_one(y, k.n, M), M);
    const double c0 = k.C / std::pow(k.Cpp, k.nu);
    Poly out(M + 1, 0.0);
    for (int i = 0; i <= M; ++i)
        out[i] = g[i] + c0 * w[i];
    return out;
}

} // namespace

void majorant_rhs(int M, const ConstantsBundle& k, const std::vector<double>& A,
                  const std::vector<std::vector<double>>& B, std::vector<double>& rhsA,
                  std::vector<std::vector<double>>& rhsB) {
    Poly sum = A;
    for (const auto& b : B)
        for (int i = 0; i <= M; ++i)
            sum[i] += b[i];
    rhsA = side(A, sum, k, M);
    rhsB.assign(B.size(), Poly());
    for (std::size_t s = 0; s < B.size(); ++s)
        rhsB[s] = side(B[s], sum, k, M);
}

MajorantCoefficients majorant_coefficients(int M, const ConstantsBundle& k) {
    MajorantCoefficients out;
    out.A.assign(M + 1, 0.0);
    out.B.assign(2 * k.n, Poly(M + 1, 0.0));
    std::vector<double> rA;
    std::vector<std::vector<double>> rB;
    for (int m = 2; m <= M; ++m) {
        majorant_rhs(M, k, out.A, out.B, rA, rB);
        out.A[m] = rA[m];
        for (std::size_t s = 0; s < out.B.size(); ++s)
            out.B[s][m] = rB[s][m];
    }
    out.B_coincide = true;
    out.A_equals_B = true;
    for (const auto& b : out.B) {
        if (b != out.B[0])
            out.B_coincide = false;
        if (b != out.A)
            out.A_equals_B = false;
    }
    return out;
}

std::vector<double> root_sequence(const MajorantCoefficients& maj, const EtaSequence& eta, int lo, int hi) {
    std::vector<double> out;
    for (int m = lo; m <= hi; ++m)
        out.push_back(std::exp((std::log(maj.A[m]) + eta.log_eta[m]) / m));
    return out;
}

Certificate dominance_and_radius(const std::vector<DegreeRecord>& degrees, const EtaSequence& eta,
                                 const MajorantCoefficients& maj, int n, int M) {
    if (static_cast<int>(maj.A.size()) < M + 1 || static_cast<int>(eta.eta.size()) < M + 1)
        throw DomainError("majorant state does not reach the requested order");
    if (degrees.empty() || degrees.back().m != M)
        throw DomainError("linearization ledger and majorant order differ");
    Certificate cert;
    cert.all_dominated = true;
    bool all_zero = true;
    for (const auto& rec : degrees) {
        const int m = rec.m;
        double bound = maj.A[m] * eta.eta[m];
        LedgerRow row{m, "base|t*^-1|t*^+1", rec.goal, bound, rec.goal <= bound};
        cert.rows.push_back(row);
        cert.all_dominated = cert.all_dominated && row.flag;
        if (rec.goal > 0)
            all_zero = false;
        for (int i = 0; i < n; ++i)
            for (int sgn : {1, -1}) {
                int slot = 2 * i + (sgn > 0 ? 1 : 0);
                double b = maj.B[slot][m] * eta.eta[m];
                std::string g = "t" + std::to_string(i + 1);
                std::string label = sgn > 0 ? g + "^+1|" + g + "^+2" : g + "^-1|" + g + "^-2";
                LedgerRow r{m, label, rec.goal_prime[slot], b, rec.goal_prime[slot] <= b};
                cert.rows.push_back(r);
                cert.all_dominated = cert.all_dominated && r.flag;
            }
    }
    cert.window_lo = std::max(2, (M + 1) / 2);
    cert.window_hi = M;
    auto roots = root_sequence(maj, eta, cert.window_lo, cert.window_hi);
    double mx = *std::max_element(roots.begin(), roots.end());
    double mn = *std::min_element(roots.begin(), roots.end());
    cert.radius = mx > 0 ? 1.0 / mx : std::numeric_limits<double>::infinity();
    cert.stabilization = mn > 0 ? (mx - mn) / mn : std::numeric_limits<double>::infinity();
    double emp = 0;
    for (const auto& rec : degrees)
        if (rec.m >= cert.window_lo && rec.m <= cert.window_hi && rec.goal > 0)
            emp = std::max(emp, std::pow(rec.goal, 1.0 / rec.m));
    cert.empirical_radius = emp > 0 ? 1.0 / emp : std::numeric_limits<double>::infinity();
    cert.infinite_radius = all_zero;
    if (all_zero) {
        cert.radius = std::numeric_limits<double>::infinity();
        cert.status = "no obstruction detected";
    } else if (cert.all_dominated && cert.radius > 0) {
        cert.status = "dominated at desk scale";
    } else {
        cert.status = "inconclusive at desk scale";
    }
    return cert;
}

} // namespace torusfol
