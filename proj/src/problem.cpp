#include "torusfol/problem.hpp"

#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace torusfol {

std::string precision_name(Precision p) { return p == Precision::extended ? "extended" : "double"; }

Precision parse_precision(const std::string& s) {
    if (s == "double")
        return Precision::double_;
    if (s == "extended")
        return Precision::extended;
    throw InvalidInput("precision must be 'double' or 'extended', got '" + s + "'");
}

namespace {

class LineError {
  public:
    explicit LineError(int line) : line_(line) {}
    [[noreturn]] void operator()(const std::string& msg) const {
        throw InvalidInput("problem line " + std::to_string(line_) + ": " + msg);
    }

  private:
    int line_;
};

std::vector<std::string> split(const std::string& line) {
    std::istringstream in(line);
    std::vector<std::string> out;
    std::string tok;
    while (in >> tok)
        out.push_back(tok);
    return out;
}

int to_int(const std::string& s, const LineError& fail) {
    int x{};
    auto res = std::from_chars(s.data(), s.data() + s.size(), x);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size())
        fail("not an integer: '" + s + "'");
    return x;
}

template <typename Real> Real to_real(const std::string& s, const LineError& fail) {
    try {
        return parse_real<Real>(s);
    } catch (const InvalidInput& e) {
        fail(e.what());
    }
}

void expect_fields(const std::vector<std::string>& f, std::size_t count, const LineError& fail) {
    if (f.size() != count)
        fail("'" + f[0] + "' expects " + std::to_string(count - 1) + " fields, got " + std::to_string(f.size() - 1));
}

} // namespace

Problem parse_problem(const std::string& text) {
    Problem p;
    std::istringstream in(text);
    std::string line, section;
    int lineno = 0;
    std::set<std::string> seen_sections;
    std::map<int, int> period_line;
    std::map<std::pair<int, int>, int> mu_line;
    std::vector<int> term_line, lambda_line;
    int n_line = 0, d_line = 0;

    auto need_dims = [&](const LineError& fail) {
        if (p.n <= 0 || p.d <= 0)
            fail("n and d must be declared first");
    };

    while (std::getline(in, line)) {
        ++lineno;
        LineError fail(lineno);
        auto hash = line.find('#');
        if (hash != std::string::npos)
            line.erase(hash);
        auto f = split(line);
        if (f.empty())
            continue;
        if (f[0].front() == '[') {
            if (f.size() != 1 || f[0].back() != ']')
                fail("malformed section header");
            section = f[0].substr(1, f[0].size() - 2);
            if (section != "lattice" && section != "multipliers" && section != "perturbation" && section != "run")
                fail("unknown section '" + section + "'");
            if (!seen_sections.insert(section).second)
                fail("duplicate section '" + section + "'");
            continue;
        }
        if (section.empty())
            fail("entry outside any section");
        const std::string& key = f[0];
        if (section == "lattice") {
            if (key == "n" || key == "d") {
                expect_fields(f, 2, fail);
                int v = to_int(f[1], fail);
                if (v < 1)
                    fail(key + " must be at least 1");
                (key == "n" ? p.n : p.d) = v;
                (key == "n" ? n_line : d_line) = lineno;
                if (p.n > 0 && p.n + std::max(p.d, 1) > 7)
                    fail("n + d must not exceed 7");
                if (key == "n")
                    p.periods = Eigen::MatrixXcd::Zero(p.n, p.n);
            } else if (key == "period") {
                need_dims(fail);
                expect_fields(f, 2 + 2 * p.n, fail);
                int l = to_int(f[1], fail);
                if (l < 1 || l > p.n)
                    fail("period index out of range");
                if (period_line.count(l - 1))
                    fail("period " + std::to_string(l) + " given twice");
                period_line[l - 1] = lineno;
                for (int k = 0; k < p.n; ++k)
                    p.periods(k, l - 1) = {to_real<double>(f[2 + 2 * k], fail), to_real<double>(f[3 + 2 * k], fail)};
            } else {
                fail("unknown lattice entry '" + key + "'");
            }
        } else if (section == "multipliers") {
            if (key == "mode") {
                expect_fields(f, 2, fail);
                if (f[1] != "unitary" && f[1] != "general")
                    fail("mode must be 'unitary' or 'general'");
                p.unitary = f[1] == "unitary";
            } else if (key == "mu") {
                need_dims(fail);
                if (f.size() < 4)
                    fail("'mu' expects l j form values");
                MuEntry e;
                e.l = to_int(f[1], fail) - 1;
                e.j = to_int(f[2], fail) - 1;
                if (e.l < 0 || e.l >= p.n || e.j < 0 || e.j >= p.d)
                    fail("mu index out of range");
                if (mu_line.count({e.l, e.j}))
                    fail("mu " + f[1] + " " + f[2] + " given twice");
                if (f[3] == "turns") {
                    expect_fields(f, 5, fail);
                    e.a = to_real<long double>(f[4], fail);
                } else if (f[3] == "complex") {
                    expect_fields(f, 6, fail);
                    e.complex_form = true;
                    e.a = to_real<long double>(f[4], fail);
                    e.b = to_real<long double>(f[5], fail);
                    long double r = std::hypot(e.a, e.b);
                    if (r == 0)
                        fail("multipliers must be nonzero");
                } else {
                    fail("mu form must be 'turns' or 'complex'");
                }
                mu_line[{e.l, e.j}] = lineno;
                p.mu.push_back(e);
            } else if (key == "lambda") {
                need_dims(fail);
                expect_fields(f, 5, fail);
                LambdaOverride o;
                o.l = to_int(f[1], fail) - 1;
                o.k = to_int(f[2], fail) - 1;
                if (o.l < 0 || o.l >= p.n || o.k < 0 || o.k >= p.n)
                    fail("lambda index out of range");
                o.re = to_real<long double>(f[3], fail);
                o.im = to_real<long double>(f[4], fail);
                p.lambda.push_back(o);
                lambda_line.push_back(lineno);
            } else {
                fail("unknown multipliers entry '" + key + "'");
            }
        } else if (section == "perturbation") {
            if (key != "term" && key != "inverse")
                fail("unknown perturbation entry '" + key + "'");
            need_dims(fail);
            expect_fields(f, 6 + p.n + p.d, fail);
            PerturbationTerm t;
            t.inverse = key == "inverse";
            t.i = to_int(f[1], fail) - 1;
            if (t.i < 0 || t.i >= p.n)
                fail("generator index out of range");
            if (f[2] != "h" && f[2] != "v")
                fail("part must be 'h' or 'v'");
            t.vertical = f[2] == "v";
            t.k = to_int(f[3], fail) - 1;
            if (t.k < 0 || t.k >= (t.vertical ? p.d : p.n))
                fail("component index out of range");
            for (int i = 0; i < p.n; ++i)
                t.P.push_back(to_int(f[4 + i], fail));
            for (int j = 0; j < p.d; ++j) {
                int q = to_int(f[4 + p.n + j], fail);
                if (q < 0)
                    fail("vertical exponents must be nonnegative");
                t.Q.push_back(q);
            }
            if (norm1(t.Q) < 2)
                fail("invariant violated: perturbation term has order < 2 in v");
            t.re = to_real<long double>(f[4 + p.n + p.d], fail);
            t.im = to_real<long double>(f[5 + p.n + p.d], fail);
            p.terms.push_back(t);
            term_line.push_back(lineno);
        } else {
            expect_fields(f, 2, fail);
            auto& r = p.run;
            if (key == "vmax")
                r.vmax = to_int(f[1], fail);
            else if (key == "hband")
                r.hband = to_int(f[1], fail);
            else if (key == "epsilon")
                r.epsilon = to_real<double>(f[1], fail);
            else if (key == "radius")
                r.radius = to_real<double>(f[1], fail);
            else if (key == "order")
                r.order = to_int(f[1], fail);
            else if (key == "pmax")
                r.pmax = to_int(f[1], fail);
            else if (key == "qmax")
                r.qmax = to_int(f[1], fail);
            else if (key == "compat_tol")
                r.compat_tol = to_real<double>(f[1], fail);
            else if (key == "residual_tol")
                r.residual_tol = to_real<double>(f[1], fail);
            else if (key == "precision") {
                try {
                    r.precision = parse_precision(f[1]);
                } catch (const InvalidInput& e) {
                    fail(e.what());
                }
            } else
                fail("unknown run entry '" + key + "'");
        }
    }

    LineError at_end(lineno);
    if (!n_line || !d_line)
        at_end("lattice block must declare n and d");
    for (int l = 0; l < p.n; ++l)
        if (!period_line.count(l))
            at_end("missing period " + std::to_string(l + 1));
    try {
        p.lattice();
    } catch (const Error& e) {
        LineError{period_line.begin()->second}(e.what());
    }
    for (const auto& e : p.mu)
        if (p.unitary && e.complex_form && std::abs(std::hypot(e.a, e.b) - 1) > 1e-12L)
            LineError{mu_line[{e.l, e.j}]}("invariant violated: |mu_" + std::to_string(e.l + 1) + "," +
                                           std::to_string(e.j + 1) + "| != 1 in unitary mode");
    for (int l = 0; l < p.n; ++l)
        for (int j = 0; j < p.d; ++j)
            if (!mu_line.count({l, j}))
                at_end("missing mu " + std::to_string(l + 1) + " " + std::to_string(j + 1));
    for (std::size_t s = 0; s < p.lambda.size(); ++s) {
        const auto& o = p.lambda[s];
        std::complex<long double> e(p.periods(o.k, o.l).real(), p.periods(o.k, o.l).imag());
        std::complex<long double> derived = exp_turns<long double>(e);
        std::complex<long double> given(o.re, o.im);
        if (std::abs(derived - given) > 1e-12L * std::max(1.0L, std::abs(derived)))
            LineError{lambda_line[s]}("inconsistent lambda override: derived " + format_real(derived.real()) + " " +
                                      format_real(derived.imag()));
    }
    const auto& r = p.run;
    if (r.vmax < 2 || r.vmax > 64)
        at_end("run vmax must lie in [2, 64]");
    if (r.hband < 0 || r.hband > 100)
        at_end("run hband must lie in [0, 100]");
    if (r.order < 2 || r.order > r.vmax)
        at_end("run order must satisfy 2 <= order <= vmax");
    if (!(r.epsilon > 0) || !(r.radius > 0))
        at_end("run epsilon and radius must be positive");
    if (r.pmax < 0 || r.qmax < 2)
        at_end("run needs pmax >= 0 and qmax >= 2");
    if (!(r.compat_tol > 0) || !(r.residual_tol > 0))
        at_end("run tolerances must be positive");
    for (std::size_t s = 0; s < p.terms.size(); ++s) {
        const auto& t = p.terms[s];
        if (norm1(t.Q) > r.vmax || norm_inf(t.P) > r.hband)
            LineError{term_line[s]}("term outside the run truncation (vmax, hband)");
    }
    return p;
}

Problem read_problem_file(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw InvalidInput("cannot open problem file '" + path + "'");
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_problem(buf.str());
}

std::string serialize_problem(const Problem& p) {
    std::string out = "[lattice]\nn " + std::to_string(p.n) + "\nd " + std::to_string(p.d) + '\n';
    for (int l = 0; l < p.n; ++l) {
        out += "period " + std::to_string(l + 1);
        for (int k = 0; k < p.n; ++k)
            out += ' ' + format_real(p.periods(k, l).real()) + ' ' + format_real(p.periods(k, l).imag());
        out += '\n';
    }
    out += "\n[multipliers]\nmode ";
    out += p.unitary ? "unitary\n" : "general\n";
    for (const auto& e : p.mu) {
        out += "mu " + std::to_string(e.l + 1) + ' ' + std::to_string(e.j + 1);
        if (e.complex_form)
            out += " complex " + format_real(e.a) + ' ' + format_real(e.b) + '\n';
        else
            out += " turns " + format_real(e.a) + '\n';
    }
    for (const auto& o : p.lambda)
        out += "lambda " + std::to_string(o.l + 1) + ' ' + std::to_string(o.k + 1) + ' ' + format_real(o.re) + ' ' +
               format_real(o.im) + '\n';
    out += "\n[perturbation]\n";
    for (const auto& t : p.terms) {
        out += t.inverse ? "inverse " : "term ";
        out += std::to_string(t.i + 1) + (t.vertical ? " v " : " h ") + std::to_string(t.k + 1) + ' ' +
               format_ivec(t.P) + ' ' + format_ivec(t.Q) + ' ' + format_real(t.re) + ' ' + format_real(t.im) + '\n';
    }
    const auto& r = p.run;
    out += "\n[run]\nvmax " + std::to_string(r.vmax) + "\nhband " + std::to_string(r.hband) + "\nepsilon " +
           format_real(r.epsilon) + "\nradius " + format_real(r.radius) + "\norder " + std::to_string(r.order) +
           "\npmax " + std::to_string(r.pmax) + "\nqmax " + std::to_string(r.qmax) + "\ncompat_tol " +
           format_real(r.compat_tol) + "\nresidual_tol " + format_real(r.residual_tol) + "\nprecision " +
           precision_name(r.precision) + '\n';
    return out;
}

} // namespace torusfol
