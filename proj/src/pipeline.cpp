#include "torusfol/pipeline.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>

#include "torusfol/series_io.hpp"

namespace torusfol {

Problem apply_flags(Problem p, const RunFlags& flags) {
    auto& r = p.run;
    if (flags.order)
        r.order = *flags.order;
    if (flags.pmax)
        r.pmax = *flags.pmax;
    if (flags.qmax)
        r.qmax = *flags.qmax;
    if (flags.epsilon)
        r.epsilon = *flags.epsilon;
    if (flags.radius)
        r.radius = *flags.radius;
    if (flags.precision)
        r.precision = *flags.precision;
    if (r.order < 2 || r.order > r.vmax)
        throw InvalidInput("order must satisfy 2 <= order <= vmax (" + std::to_string(r.vmax) + ")");
    if (r.pmax < 0 || r.qmax < 2)
        throw InvalidInput("scan needs pmax >= 0 and qmax >= 2");
    if (!(r.epsilon > 0) || !(r.radius > 0))
        throw InvalidInput("epsilon and radius must be positive");
    return p;
}

namespace {

double binom(int a, int b) {
    if (b < 0 || b > a)
        return 0;
    double r = 1;
    for (int i = 1; i <= b; ++i)
        r = r * (a - b + i) / i;
    return r;
}

/// Number of scanned (P, Q, j) for |P|_1 <= pmax and 2 <= |Q|_1 <= qmax.
double scan_count(int n, int d, int pmax, int qmax) {
    double lattice = 0;
    for (int k = 0; k <= n; ++k)
        lattice += std::ldexp(binom(n, k), k) * binom(pmax, k);
    return lattice * (binom(qmax + d, d) - 1 - d) * d;
}

constexpr double wide_scan_limit = 2e6;

std::string fmt(double x) {
    if (std::isinf(x))
        return x > 0 ? "inf" : "-inf";
    return format_real(x);
}

std::string yes_no(bool b) { return b ? "yes" : "no"; }

class Report {
  public:
    void section(const std::string& name) {
        if (!text_.empty())
            text_ += '\n';
        text_ += '[' + name + "]\n";
    }
    void kv(const std::string& key, const std::string& value) { text_ += key + " = " + value + '\n'; }
    void kv(const std::string& key, double value) { kv(key, fmt(value)); }
    void kv(const std::string& key, int value) { kv(key, std::to_string(value)); }
    void kv(const std::string& key, std::size_t value) { kv(key, std::to_string(value)); }
    void kv(const std::string& key, bool value) { kv(key, yes_no(value)); }
    void kv(const std::string& key, const char* value) { kv(key, std::string(value)); }
    void line(const std::string& s) { text_ += s + '\n'; }
    const std::string& str() const { return text_; }

  private:
    std::string text_;
};

template <typename Real> void fit_block(Report& r, const std::string& name, const DiophantineFit<Real>& f) {
    r.section(name);
    r.kv("form", form_name(f.form));
    r.kv("norm", f.norm == ScanNorm::l1 ? "l1" : "max");
    r.kv("pmax", f.pmax);
    r.kv("qmax", f.qmax);
    r.kv("scanned", f.scanned);
    r.kv("D", f.D);
    r.kv("tau", f.tau);
    r.kv("min_value", f.min_value);
    r.kv("resonant", f.resonant);
    r.kv("resonances", f.resonances.size());
}

template <typename Real> void run_info(Report& r, const PipelineState<Real>& st) {
    const auto& run = st.problem.run;
    r.section("run");
    r.kv("n", st.problem.n);
    r.kv("d", st.problem.d);
    r.kv("precision", precision_name(run.precision));
    r.kv("vmax", run.vmax);
    r.kv("hband", run.hband);
    r.kv("order", run.order);
    r.kv("epsilon", run.epsilon);
    r.kv("radius", run.radius);
    r.kv("pmax", run.pmax);
    r.kv("qmax", run.qmax);
    r.kv("perturbation_terms", st.problem.terms.size());
}

} // namespace

template <typename Real> PipelineState<Real> run_pipeline(const Problem& p, Stage upto, bool dual_route) {
    PipelineState<Real> st;
    st.problem = p;
    st.lat = p.lattice();
    st.fam = build_family<Real>(p);
    const auto& run = p.run;
    const bool linearizing = upto == Stage::linearize || upto == Stage::certify;
    if (linearizing)
        require_nonresonant(st.fam.mult, run.hband, run.vmax);

    if (upto != Stage::geometry) {
        auto [table, weak] = scan_and_fit(st.fam.mult, run.pmax, run.qmax, DivisorForm::weak);
        st.table = std::move(table);
        st.weak = std::move(weak);
        st.weak_max = fit_diophantine(st.table, run.pmax, run.qmax, DivisorForm::weak, ScanNorm::max);
        st.strong = scan_and_fit(st.fam.mult, run.pmax, run.qmax, DivisorForm::strong).second;
        st.inverse = scan_and_fit(st.fam.mult, run.pmax, run.qmax, DivisorForm::inverse).second;
        st.enhanced = enhanced_bound_check(st.fam.mult, st.weak, run.pmax, run.qmax);
        const int wp = 2 * run.pmax, wq = 2 * run.qmax;
        if (scan_count(p.n, p.d, wp, wq) <= wide_scan_limit)
            st.wide = scan_and_fit(st.fam.mult, wp, wq, DivisorForm::weak).second;
        else
            st.wide_note = "skipped: scan at doubled range exceeds " + fmt(wide_scan_limit) + " entries";
    }
    if (upto != Stage::diophantine) {
        st.hull = union_and_hull(st.lat, run.epsilon);
        st.margin_at_eps = max_margin_eta(st.lat, run.epsilon);
        st.have_geometry = true;
    }
    if (!linearizing)
        return st;

    st.R = perturbation_growth(st.fam, st.lat, run.epsilon, st.R_defaulted);
    st.k = constants_bundle(st.lat, st.weak.D, st.weak.tau, st.enhanced.Dprime, st.R, run.epsilon, run.radius,
                            st.R_defaulted);
    st.schedule = domain_schedule(run.order, run.epsilon, run.radius, st.k.eta_ratio);
    st.have_constants = true;

    LinearizeOptions opt;
    opt.order = run.order;
    opt.eps1 = run.epsilon;
    opt.r1 = run.radius;
    opt.eps_schedule = st.schedule.eps;
    opt.r_schedule = st.schedule.r;
    opt.C1 = st.k.C1;
    opt.alpha = st.k.alpha;
    opt.kappa = st.k.kappa;
    opt.eta = st.k.eta;
    opt.solve.compat_tol = run.compat_tol;
    st.lin = linearize(st.fam, st.lat, opt);
    st.have_linearization = true;
    if (dual_route) {
        auto fwd = direct_route(st.fam, run.order, 1, opt.solve);
        auto inv = direct_route(st.fam, run.order, -1, opt.solve);
        st.dual = DualRouteReport{static_cast<double>(max_abs_diff(fwd.phi, inv.phi)),
                                  static_cast<double>(max_abs_diff(st.lin.phi, fwd.phi))};
    }
    if (upto != Stage::certify)
        return st;

    st.eta = eta_sequence(run.order, st.k);
    st.maj = majorant_coefficients(run.order, st.k);
    st.cert = dominance_and_radius(st.lin.degrees, st.eta, st.maj, p.n, run.order);
    st.have_certificate = true;
    return st;
}

template <typename Real> std::string divisor_csv(const std::vector<DivisorEntry<Real>>& rows, int n, int d) {
    std::string out;
    for (int i = 1; i <= n; ++i)
        out += "p_" + std::to_string(i) + ',';
    for (int j = 1; j <= d; ++j)
        out += "q_" + std::to_string(j) + ',';
    out += "j,value,argmax\n";
    for (const auto& e : rows) {
        out += format_ivec(e.P, ',') + ',' + format_ivec(e.Q, ',') + ',' + std::to_string(e.j + 1) + ',' +
               fmt(static_cast<double>(e.value)) + ',' + std::to_string(e.argmax + 1) + '\n';
    }
    return out;
}

template <typename Real> std::string diophantine_report(const PipelineState<Real>& st) {
    Report r;
    run_info(r, st);
    fit_block(r, "fit.weak", st.weak);
    fit_block(r, "fit.strong", st.strong);
    fit_block(r, "fit.inverse", st.inverse);
    fit_block(r, "fit.weak.max_norm", st.weak_max);
    r.kv("differs_from_l1", st.weak_max.D != st.weak.D || st.weak_max.tau != st.weak.tau);
    r.section("fit.weak.doubled_range");
    if (st.wide) {
        r.kv("pmax", st.wide->pmax);
        r.kv("qmax", st.wide->qmax);
        r.kv("D", st.wide->D);
        r.kv("tau", st.wide->tau);
        r.kv("tau_change", st.wide->tau - st.weak.tau);
    } else {
        r.kv("status", st.wide_note);
    }
    const auto& e = st.enhanced;
    r.section("enhanced_bound");
    r.kv("B", e.B);
    r.kv("Dprime", e.Dprime);
    r.kv("Dprime_empirical", e.Dprime_empirical);
    r.kv("checked", e.checked);
    r.kv("small_modulus_branch", e.small_branch);
    r.kv("large_modulus_branch", e.large_branch);
    r.kv("failures", e.failures);
    r.kv("pass", e.pass);
    r.section("scope");
    r.line("fit holds over the scanned range |P|_1 <= " + std::to_string(st.problem.run.pmax) + ", 2 <= |Q|_1 <= " +
           std::to_string(st.problem.run.qmax) + " only");
    return r.str();
}

template <typename Real> std::string geometry_report(const PipelineState<Real>& st) {
    Report r;
    r.section("geometry");
    r.kv("n", st.problem.n);
    r.kv("epsilon", st.problem.run.epsilon);
    r.kv("kappa", decay_constant_kappa(st.lat));
    r.kv("hartogs_margin_eta", st.margin_at_eps);
    r.kv("pieces", st.hull.pieces.size());
    r.kv("hull_vertices", static_cast<int>(st.hull.hull.vertices.rows()));
    r.kv("hull_facets", static_cast<int>(st.hull.hull.normals.rows()));
    RMat V = st.lat.log_generators();
    for (int i = 0; i < V.cols(); ++i) {
        std::string col;
        for (int k = 0; k < V.rows(); ++k)
            col += (k ? " " : "") + fmt(V(k, i));
        r.kv("log_generator_" + std::to_string(i + 1), col);
    }
    return r.str();
}

template <typename Real> std::string polytope_listing(const PipelineState<Real>& st) {
    std::string out;
    for (std::size_t w = 0; w < st.hull.pieces.size(); ++w) {
        out += "# " + word_label(st.hull.words[w]) + '\n';
        out += format_vertices(st.hull.pieces[w].vertices);
        out += '\n';
    }
    return out;
}

template <typename Real> std::string degree_norms_csv(const PipelineState<Real>& st) {
    std::string out = "m,domain,norm,theoretical\n";
    for (const auto& rec : st.lin.degrees)
        for (const auto& wn : rec.norms)
            out += std::to_string(rec.m) + ',' + word_label(wn.word) + ',' + fmt(wn.norm) + ',' +
                   fmt(rec.theoretical) + '\n';
    return out;
}

template <typename Real> std::string residuals_csv(const PipelineState<Real>& st) {
    std::string out = "generator,m,horizontal,vertical\n";
    for (const auto& row : st.lin.residuals)
        out += std::to_string(row.generator + 1) + ',' + std::to_string(row.m) + ',' + fmt(row.horizontal) + ',' +
               fmt(row.vertical) + '\n';
    return out;
}

template <typename Real> std::string linearize_report(const PipelineState<Real>& st) {
    Report r;
    run_info(r, st);
    const auto& run = st.problem.run;
    const auto& lin = st.lin;
    r.section("linearization");
    r.kv("max_residual", lin.max_residual);
    r.kv("residual_tol", run.residual_tol);
    r.kv("residual_pass", lin.max_residual <= run.residual_tol);
    r.kv("phi_terms", lin.phi.size());
    r.kv("band_loss", lin.band_loss);
    r.kv("tail_mass", static_cast<double>(lin.phi.tail_mass()));
    double compat = 0, plug = 0;
    for (const auto& rec : lin.degrees) {
        compat = std::max(compat, rec.compatibility);
        plug = std::max(plug, rec.plug_back);
    }
    r.kv("max_compatibility", compat);
    r.kv("max_plug_back", plug);
    if (!lin.degrees.empty())
        r.kv("degree2_inverse_route_difference", lin.degrees.front().dual_difference);
    if (st.dual) {
        r.section("dual_route");
        r.kv("forward_vs_inverse", st.dual->forward_inverse);
        r.kv("step_vs_forward", st.dual->step_direct);
    }
    r.section("schedule");
    r.kv("eta_over_kappa", st.k.eta_ratio);
    r.kv("eta", st.k.eta);
    r.kv("eps_floor", st.schedule.eps_inf);
    r.kv("r_floor", st.schedule.r_inf);
    r.kv("floors_ok", st.schedule.floors_ok);
    for (int m = 1; m <= run.order; ++m)
        r.kv("m" + std::to_string(m), fmt(st.schedule.eps[m]) + " " + fmt(st.schedule.r[m]));
    return r.str();
}

template <typename Real> std::string ledger_csv(const PipelineState<Real>& st) {
    std::string out = "m,domain,norm,majorant,flag\n";
    for (const auto& row : st.cert.rows)
        out += std::to_string(row.m) + ',' + row.domain + ',' + fmt(row.norm) + ',' + fmt(row.majorant) + ',' +
               (row.flag ? "pass" : "fail") + '\n';
    return out;
}

template <typename Real> std::string majorant_csv(const PipelineState<Real>& st) {
    std::string out = "m,eta,A";
    for (int i = 1; i <= st.problem.n; ++i)
        out += ",B_t" + std::to_string(i) + "^-1,B_t" + std::to_string(i) + "^+1";
    out += ",A_eta,root\n";
    for (int m = 2; m <= st.problem.run.order; ++m) {
        double aeta = st.maj.A[m] * st.eta.eta[m];
        out += std::to_string(m) + ',' + fmt(st.eta.eta[m]) + ',' + fmt(st.maj.A[m]);
        for (const auto& b : st.maj.B)
            out += ',' + fmt(b[m]);
        out += ',' + fmt(aeta) + ',' + fmt(std::exp((std::log(st.maj.A[m]) + st.eta.log_eta[m]) / m)) + '\n';
    }
    return out;
}

template <typename Real> std::string certificate_report(const PipelineState<Real>& st) {
    Report r;
    const auto& k = st.k;
    r.section("constants");
    r.kv("kappa", k.kappa);
    r.kv("nu", k.nu);
    r.kv("tau", k.tau);
    r.kv("D", k.D);
    r.kv("Dprime", k.Dprime);
    r.kv("alpha", k.alpha);
    r.kv("C1", k.C1);
    r.kv("C1_assembly", "(2 tau / e)^tau * 5^n * 3^d / min(D, Dprime)");
    r.kv("C", k.C);
    r.kv("Cprime", k.Cp);
    r.kv("Cdoubleprime", k.Cpp);
    r.kv("R", k.R);
    r.kv("R_defaulted", st.R_defaulted);
    r.kv("margin_min", k.margin_min);
    r.kv("eta_over_kappa", k.eta_ratio);
    r.kv("eta", k.eta);
    for (std::size_t i = 0; i < k.notes.size(); ++i)
        r.kv("note_" + std::to_string(i + 1), k.notes[i]);
    r.section("eta_sequence");
    r.kv("log_K", st.eta.log_K);
    r.kv("D_env", st.eta.D_env);
    r.kv("envelope_ok", st.eta.envelope_ok);
    r.section("schedule");
    r.kv("floors_ok", st.schedule.floors_ok);
    r.section("majorant");
    r.kv("A_2", st.maj.A.size() > 2 ? st.maj.A[2] : 0.0);
    r.kv("B_coincide", st.maj.B_coincide);
    r.kv("A_equals_B", st.maj.A_equals_B);
    const auto& c = st.cert;
    r.section("certificate");
    r.kv("all_dominated", c.all_dominated);
    int failed = 0;
    for (const auto& row : c.rows)
        failed += row.flag ? 0 : 1;
    r.kv("failed_rows", failed);
    r.kv("window", std::to_string(c.window_lo) + ".." + std::to_string(c.window_hi));
    r.kv("radius", c.radius);
    r.kv("stabilization", c.stabilization);
    r.kv("empirical_radius", c.empirical_radius);
    r.kv("status", c.status);
    return r.str();
}

namespace {

template <typename Real> std::string summary_report(const PipelineState<Real>& st) {
    Report r;
    run_info(r, st);
    r.section("fit");
    r.kv("D", st.weak.D);
    r.kv("tau", st.weak.tau);
    r.kv("scan", "|P|_1 <= " + std::to_string(st.problem.run.pmax) + ", 2 <= |Q|_1 <= " +
                     std::to_string(st.problem.run.qmax));
    r.kv("strong_resonant", st.strong.resonant);
    r.kv("enhanced_pass", st.enhanced.pass);
    r.section("schedule");
    r.kv("eta_over_kappa", st.k.eta_ratio);
    r.kv("eps_M", st.schedule.eps.back());
    r.kv("r_M", st.schedule.r.back());
    r.kv("floors_ok", st.schedule.floors_ok);
    r.section("residuals");
    r.kv("max_residual", st.lin.max_residual);
    r.kv("residual_pass", st.lin.max_residual <= st.problem.run.residual_tol);
    r.section("certificate");
    r.kv("all_dominated", st.cert.all_dominated);
    r.kv("radius", st.cert.radius);
    r.kv("stabilization", st.cert.stabilization);
    r.kv("status", st.cert.status);
    return r.str();
}

template <typename Real> CommandOutcome run_verb(const std::string& verb, const Problem& p, bool dual_route) {
    CommandOutcome out;
    auto& files = out.files;
    const int n = p.n, d = p.d;
    auto diophantine_files = [&](const PipelineState<Real>& st) {
        files.emplace_back("divisors.csv", divisor_csv(st.table, n, d));
        files.emplace_back("resonances.csv", divisor_csv(st.weak.resonances, n, d));
        files.emplace_back("diophantine.txt", diophantine_report(st));
    };
    auto geometry_files = [&](const PipelineState<Real>& st) {
        files.emplace_back("geometry.txt", geometry_report(st));
        files.emplace_back("polytopes.txt", polytope_listing(st));
        files.emplace_back("hull_vertices.txt", format_vertices(st.hull.hull.vertices));
        std::string facets;
        for (int i = 1; i <= n; ++i)
            facets += "n_" + std::to_string(i) + ',';
        facets += "offset\n";
        const Hull& h = st.hull.hull;
        for (int f = 0; f < h.normals.rows(); ++f) {
            for (int i = 0; i < n; ++i)
                facets += fmt(h.normals(f, i)) + ',';
            facets += fmt(h.offsets(f)) + '\n';
        }
        files.emplace_back("hull_facets.csv", facets);
    };
    auto linearize_files = [&](const PipelineState<Real>& st) {
        files.emplace_back("phi_v.tls", write_tls(st.lin.phi));
        files.emplace_back("degree_norms.csv", degree_norms_csv(st));
        files.emplace_back("residuals.csv", residuals_csv(st));
        files.emplace_back("linearize.txt", linearize_report(st));
    };
    auto certify_files = [&](const PipelineState<Real>& st) {
        files.emplace_back("ledger.csv", ledger_csv(st));
        files.emplace_back("majorant.csv", majorant_csv(st));
        files.emplace_back("certificate.txt", certificate_report(st));
    };
    if (verb == "check-diophantine") {
        auto st = run_pipeline<Real>(p, Stage::diophantine);
        diophantine_files(st);
        out.resonant = st.weak.resonant;
    } else if (verb == "domain-geometry") {
        geometry_files(run_pipeline<Real>(p, Stage::geometry));
    } else if (verb == "linearize") {
        linearize_files(run_pipeline<Real>(p, Stage::linearize, dual_route));
    } else if (verb == "certify") {
        auto st = run_pipeline<Real>(p, Stage::certify, dual_route);
        linearize_files(st);
        certify_files(st);
    } else if (verb == "report") {
        auto st = run_pipeline<Real>(p, Stage::certify, dual_route);
        files.emplace_back("problem.txt", serialize_problem(p));
        diophantine_files(st);
        geometry_files(st);
        linearize_files(st);
        certify_files(st);
        files.emplace_back("report.txt", summary_report(st));
    } else {
        throw InvalidInput("unknown verb '" + verb + "'");
    }
    return out;
}

} // namespace

CommandOutcome run_command(const std::string& verb, const Problem& problem, const RunFlags& flags) {
    Problem p = apply_flags(problem, flags);
    if (p.run.precision == Precision::extended)
        return run_verb<long double>(verb, p, flags.dual_route);
    return run_verb<double>(verb, p, flags.dual_route);
}

void write_artifacts(const Artifacts& files, const std::string& dir) {
    std::filesystem::create_directories(dir);
    for (const auto& [name, text] : files) {
        std::ofstream out(std::filesystem::path(dir) / name, std::ios::binary);
        out << text;
        if (!out)
            throw Error("io", "cannot write '" + name + "' in '" + dir + "'");
    }
}

#define TORUSFOL_INSTANTIATE(Real)                                                                               \
    template PipelineState<Real> run_pipeline<Real>(const Problem&, Stage, bool);                                \
    template std::string divisor_csv<Real>(const std::vector<DivisorEntry<Real>>&, int, int);                   \
    template std::string diophantine_report<Real>(const PipelineState<Real>&);                                   \
    template std::string geometry_report<Real>(const PipelineState<Real>&);                                      \
    template std::string polytope_listing<Real>(const PipelineState<Real>&);                                     \
    template std::string degree_norms_csv<Real>(const PipelineState<Real>&);                                     \
    template std::string residuals_csv<Real>(const PipelineState<Real>&);                                        \
    template std::string linearize_report<Real>(const PipelineState<Real>&);                                     \
    template std::string ledger_csv<Real>(const PipelineState<Real>&);                                           \
    template std::string majorant_csv<Real>(const PipelineState<Real>&);                                         \
    template std::string certificate_report<Real>(const PipelineState<Real>&);

TORUSFOL_INSTANTIATE(double)
TORUSFOL_INSTANTIATE(long double)

} // namespace torusfol
