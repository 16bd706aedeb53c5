#include "bopp/experiments.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <numeric>
#include <random>

#include "bopp/effective.hpp"
#include "bopp/propagators.hpp"
#include "bopp/semiclassics.hpp"
#include "bopp/twist.hpp"

namespace bopp {

std::string Check::describe() const {
    return fmt::format("{}: {:.6g} {} {:.6g} [{}]", name, value, op, threshold, pass ? "ok" : "FAILED");
}

Check make_check(std::string name, double value, std::string op, double threshold) {
    bool ok = false;
    if (op == "<=") ok = value <= threshold;
    else if (op == ">=") ok = value >= threshold;
    else if (op == "<") ok = value < threshold;
    else if (op == ">") ok = value > threshold;
    else throw std::invalid_argument("make_check: unknown comparison " + op);
    return Check{std::move(name), value, std::move(op), threshold, ok};
}

std::string csv_number(double v) { return fmt::format("{:.17g}", v); }

void CsvTable::add(const std::vector<double>& values) {
    std::vector<std::string> cells;
    for (double v : values) cells.push_back(csv_number(v));
    add_row(std::move(cells));
}

void CsvTable::add_row(std::vector<std::string> cells) {
    if (cells.size() != columns.size())
        throw std::invalid_argument(fmt::format("{}: row has {} cells, header has {}", file, cells.size(), columns.size()));
    rows.push_back(std::move(cells));
}

std::string format_csv(const CsvTable& t) {
    std::string s;
    auto line = [&s](const std::vector<std::string>& cells) {
        for (size_t i = 0; i < cells.size(); ++i) s += (i ? "," : "") + cells[i];
        s += '\n';
    };
    line(t.columns);
    for (const auto& r : t.rows) line(r);
    return s;
}

void write_csv(const std::string& dir, const CsvTable& t) {
    std::filesystem::create_directories(dir);
    const auto path = std::filesystem::path(dir) / t.file;
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot write " + path.string());
    os << format_csv(t);
}

bool ExperimentResult::pass() const {
    return std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.pass; });
}

std::vector<Check> ExperimentResult::failures() const {
    std::vector<Check> out;
    for (const auto& c : checks)
        if (!c.pass) out.push_back(c);
    return out;
}

namespace {

constexpr double kMinR2 = 0.98;

// Platform-independent uniform draw (std distributions are implementation-defined).
double uniform(std::mt19937_64& rng, double lo, double hi) {
    return lo + (hi - lo) * static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

void add_slope(ExperimentResult& r, const std::string& name, const std::vector<double>& h,
               const std::vector<double>& err, double min_slope) {
    try {
        const SlopeFit f = fit_slope(h, err);
        r.checks.push_back(make_check(name + " slope", f.slope, ">=", min_slope));
        r.checks.push_back(make_check(name + " R^2", f.r2, ">=", kMinR2));
        r.notes.push_back(name + ": " + f.describe());
    } catch (const std::invalid_argument& e) {
        const auto usable = std::count_if(err.begin(), err.end(), [](double v) { return v > kFitFloor; });
        r.checks.push_back(make_check(name + " usable fit points", static_cast<double>(usable), ">=", 3));
        r.notes.push_back(name + ": " + e.what());
    }
}

// Smallest err[i]/err[i+1] over halvings that start above the fit floor.
double min_decay_ratio(const std::vector<double>& err) {
    double m = std::numeric_limits<double>::infinity();
    for (size_t i = 0; i + 1 < err.size(); ++i)
        if (err[i] > kFitFloor) m = std::min(m, err[i] / std::max(err[i + 1], 1e-300));
    return m;
}

void add_decay(ExperimentResult& r, const std::string& name, const std::vector<double>& err, double factor = 8.0) {
    r.checks.push_back(make_check(name + " min decay per halving", min_decay_ratio(err), ">=", factor));
}

double max_of(const std::vector<double>& v) { return v.empty() ? 0.0 : *std::max_element(v.begin(), v.end()); }

template <class T>
std::vector<T> sweep(const RunConfig& c, const std::function<T(const GridSpec&)>& fn) {
    return parallel_map<T>(static_cast<int>(c.h.size()), c.threads,
                           [&](int i) { return fn(c.grid(c.h[i])); });
}

// Mass within L/8 of the boundary.
double boundary_mass(const GridWaveFunction& psi) {
    const double L = psi.g.L;
    return support_mass(psi, -0.5 * L + L / 8, 0.5 * L - L / 8);
}

// Evolved tails may reach the boundary band at the coarsest h; on the torus this is reported, not enforced.
void note_boundary(ExperimentResult& r, double h, double mass) {
    if (mass >= 1e-10) r.notes.push_back(fmt::format("h={:g}: evolved boundary mass {:.3g} (reported only)", h, mass));
}

ElectronicModel load_model(const RunConfig& c) {
    ElectronicModel m = make_model(c);
    for (double h : c.h) m.validate(c.grid(h));
    return m;
}

// amp·sin(kx + phase) with exact derivatives.
ScalarFunction sine(double amp, double k, double phase) {
    return [=](double x, int m) { return amp * std::pow(k, m) * std::sin(k * x + phase + 0.5 * M_PI * m); };
}

XFunction matrix_trig(const CMat& A, double k, double phase) {
    return [=](double x, int m) -> CMat {
        return A * cplx(std::pow(k, m) * std::sin(k * x + phase + 0.5 * M_PI * m), 0.0);
    };
}

XFunction xf_sum(std::vector<XFunction> fs) {
    return [fs = std::move(fs)](double x, int m) {
        CMat s = fs.front()(x, m);
        for (size_t i = 1; i < fs.size(); ++i) s += fs[i](x, m);
        return s;
    };
}

XFunction xf_constant(const CMat& c) {
    return [c](double, int m) -> CMat { return m == 0 ? c : CMat::Zero(c.rows(), c.cols()); };
}

// ---------------------------------------------------------------- moyal-laws

SymbolPtr random_polynomial(std::mt19937_64& rng, int dim, int degree) {
    std::vector<PolyTerm> terms;
    for (int d = 0; d <= degree; ++d)
        for (int p = 0; p <= d; ++p) {
            CMat c(dim, dim);
            for (int i = 0; i < dim; ++i)
                for (int j = 0; j < dim; ++j) c(i, j) = cplx(uniform(rng, -1, 1), uniform(rng, -1, 1));
            terms.push_back({{d - p, p}, c});
        }
    return polynomial_symbol(1, dim, std::move(terms));
}

SymbolSeries random_series(std::mt19937_64& rng, int dim, int order, int degree) {
    std::vector<SymbolPtr> c;
    for (int k = 0; k <= order; ++k) c.push_back(random_polynomial(rng, dim, degree));
    return SymbolSeries(std::move(c));
}

double series_gap(const SymbolSeries& a, const SymbolSeries& b, int upto, const std::vector<std::pair<RVec, RVec>>& pts) {
    double d = 0.0;
    for (int k = 0; k <= upto; ++k)
        for (const auto& [x, xi] : pts) {
            const CMat va = k <= a.order() ? a[k]->eval(x, xi) : CMat::Zero(a.dim(), a.dim());
            const CMat vb = k <= b.order() ? b[k]->eval(x, xi) : CMat::Zero(b.dim(), b.dim());
            d = std::max(d, (va - vb).cwiseAbs().maxCoeff());
        }
    return d;
}

ExperimentResult moyal_laws(const RunConfig& c) {
    ExperimentResult r;
    std::mt19937_64 rng(c.seed);
    const int dim = static_cast<int>(c.param("dim", 2));
    const int M = 3;
    std::vector<std::pair<RVec, RVec>> pts;
    for (int i = 0; i < static_cast<int>(c.param("samples", 8)); ++i) {
        RVec x(1), xi(1);
        x(0) = uniform(rng, -1, 1);
        xi(0) = uniform(rng, -1, 1);
        pts.emplace_back(x, xi);
    }
    CsvTable laws{"moyal-laws.csv", {"law", "value", "tolerance"}, {}};
    auto law = [&](const std::string& name, double v, double tol) {
        r.checks.push_back(make_check(name, v, "<=", tol));
        laws.add_row({name, csv_number(v), csv_number(tol)});
    };

    const SymbolSeries a = random_series(rng, dim, M, 3), b = random_series(rng, dim, M, 3),
                       cc = random_series(rng, dim, M, 3);
    const SymbolSeries one({constant_symbol(CMat::Identity(dim, dim))});
    law("identity a#1 = a", series_gap(moyal_product(a, one, M), a, M, pts), 1e-13);
    law("identity 1#a = a", series_gap(moyal_product(one, a, M), a, M, pts), 1e-13);
    law("associativity (a#b)#c = a#(b#c)",
        series_gap(moyal_product(moyal_product(a, b, M), cc, M), moyal_product(a, moyal_product(b, cc, M), M), M, pts),
        1e-9);
    law("adjoint (a#b)* = b*#a*",
        series_gap(symbol_adjoint(moyal_product(a, b, M), M, true),
                   moyal_product(symbol_adjoint(b, M, true), symbol_adjoint(a, M, true), M), M, pts),
        1e-9);

    const SymbolSeries s({random_polynomial(rng, 1, 3)}), t({random_polynomial(rng, 1, 3)});
    const SymbolSeries st = moyal_product(s, t, 1), ts = moyal_product(t, s, 1);
    double pb = 0.0;
    for (const auto& [x, xi] : pts) {
        const cplx lhs = (st[1]->eval(x, xi) - ts[1]->eval(x, xi))(0, 0);
        const cplx pois = s[0]->eval(x, xi, {0, 1})(0, 0) * t[0]->eval(x, xi, {1, 0})(0, 0) -
                          s[0]->eval(x, xi, {1, 0})(0, 0) * t[0]->eval(x, xi, {0, 1})(0, 0);
        pb = std::max(pb, std::abs(lhs - pois / I_c));
    }
    law("leading commutator = (1/i){a,b}", pb, 1e-10);
    r.tables.push_back(laws);

    // Quantization consistency on smooth periodic symbols of degree 4 in ξ. The norm is taken after a smooth
    // momentum cutoff G, which keeps the product away from the Nyquist wrap of the periodic grid.
    const double k = 2.0 * M_PI / c.L;
    CMat sx(2, 2), sz(2, 2), id = CMat::Identity(2, 2);
    sx << 0, 1, 1, 0;
    sz << 1, 0, 0, -1;
    const SymbolPtr qa = xi_poly_symbol(2, {xf_sum({matrix_trig(sz, k, 0.5), xf_constant(0.3 * sx)}),
                                            matrix_trig(0.5 * id, k, 0.0), xf_constant(0.5 * id),
                                            matrix_trig(0.2 * sx, 2 * k, 1.0), xf_constant(0.1 * id)});
    const SymbolPtr qb = xi_poly_symbol(2, {xf_sum({matrix_trig(sz, k, 0.0), matrix_trig(0.4 * sx, k, 0.5 * M_PI)}),
                                            matrix_trig(0.3 * id, k, 0.5 * M_PI)});
    const SymbolSeries A({qa}), B({qb});
    const double cut = c.param("xi_cut", 1.5);
    CsvTable qt{"moyal-laws-quantization.csv", {"h", "M", "err_windowed", "err_raw"}, {}};
    for (int m : c.M) {
        const SymbolSeries AB = moyal_product(A, B, m);
        struct Point {
            double win, raw;
        };
        auto pts_h = sweep<Point>(c, [&](const GridSpec& g) {
            const CMat X = quantize(AB, g) - quantize(A, g) * quantize(B, g);
            const EnergyWindow w{-1e300, cut, 0.5};
            const CMat G = fourier_multiplier(g, [&w](double xi) { return cplx(w(std::abs(xi)), 0.0); }, 2);
            return Point{op_norm(G * X * G), op_norm(X)};
        });
        std::vector<double> e;
        for (size_t i = 0; i < c.h.size(); ++i) {
            e.push_back(pts_h[i].win);
            qt.add({c.h[i], double(m), pts_h[i].win, pts_h[i].raw});
        }
        add_slope(r, fmt::format("quantize(a#b) - Op(a)Op(b), M={}", m), c.h, e, m + 0.7);
    }
    r.tables.push_back(qt);
    return r;
}

// ---------------------------------------------------------- adiabatic-defects

std::vector<std::pair<RVec, RVec>> phase_points(std::mt19937_64& rng, int n, double L, double xi_max) {
    std::vector<std::pair<RVec, RVec>> pts;
    for (int i = 0; i < n; ++i) {
        RVec x(1), xi(1);
        x(0) = uniform(rng, -0.5 * L, 0.5 * L);
        xi(0) = uniform(rng, -xi_max, xi_max);
        pts.emplace_back(x, xi);
    }
    return pts;
}

ExperimentResult adiabatic_defects(const RunConfig& c) {
    ExperimentResult r;
    const ElectronicModel m = load_model(c);
    std::mt19937_64 rng(c.seed);
    const auto pts = phase_points(rng, static_cast<int>(c.param("samples", 6)), c.L, 2.0);
    const int Mmax = *std::max_element(c.M.begin(), c.M.end());
    std::vector<ProjectionHierarchy> hs;
    for (int M = 0; M <= Mmax; ++M) hs.push_back(M == 0 ? ProjectionHierarchy::build(m, 0) : hs.back().step());

    CsvTable sym{"adiabatic-defects-symbolic.csv", {"M", "projection_defect", "commutator_defect"}, {}};
    for (int M : c.M) {
        const auto& H = hs[M];
        const SymbolSeries PP = moyal_product(H.Pi(), H.Pi(), M);
        const SymbolSeries pP = moyal_product(H.p(), H.Pi(), M), Pp = moyal_product(H.Pi(), H.p(), M);
        const double dproj = series_gap(PP, H.Pi(), M, pts), dcomm = series_gap(pP, Pp, M, pts);
        r.checks.push_back(make_check(fmt::format("symbolic Pi#Pi - Pi coefficients 0..{}", M), dproj, "<=", 1e-9));
        r.checks.push_back(make_check(fmt::format("symbolic [p, Pi]# coefficients 0..{}", M), dcomm, "<=", 1e-9));
        sym.add({double(M), dproj, dcomm});
    }
    r.tables.push_back(sym);

    struct Point {
        std::vector<double> proj, comm;
    };
    auto res = sweep<Point>(c, [&](const GridSpec& g) {
        const CMat P = hamiltonian_operator(m, g);
        const HermEig e = herm_eig(P);
        const CMat G = window_operator(e, c.g);
        Point p;
        for (int M : c.M) {
            const ProjectionBuild b = build_projection_operator(hs[M], g);
            p.proj.push_back(windowed_norm(b.Pi_g - b.Pi_hat, G));
            p.comm.push_back(commutator_defect(e, b.Pi_g, c.f));
        }
        return p;
    });
    CsvTable op{"adiabatic-defects.csv", {"h", "M", "proj_defect_windowed", "commutator_f_Pi_g"}, {}};
    for (size_t k = 0; k < c.M.size(); ++k) {
        std::vector<double> ep, ec;
        for (size_t i = 0; i < c.h.size(); ++i) {
            ep.push_back(res[i].proj[k]);
            ec.push_back(res[i].comm[k]);
            op.add({c.h[i], double(c.M[k]), ep.back(), ec.back()});
        }
        add_slope(r, fmt::format("||G(Pi_g - Pi_hat)G||, M={}", c.M[k]), c.h, ep, c.M[k] + 0.7);
        add_slope(r, fmt::format("||[f(P), Pi_g]||, M={}", c.M[k]), c.h, ec, c.M[k] + 0.7);
    }
    r.tables.push_back(op);
    return r;
}

// --------------------------------------------------------------- nagy-reduce

ExperimentResult nagy_reduce(const RunConfig& c) {
    ExperimentResult r;
    const ElectronicModel m = load_model(c);
    const ProjectionHierarchy H = ProjectionHierarchy::build(m, c.M.front());
    const double hi = c.f.plateau_hi();
    struct Point {
        double vv, vvs, inter, ww, wsw, spec, v_minus_i, w_minus_z;
        int count;
    };
    auto res = sweep<Point>(c, [&](const GridSpec& g) {
        const SpectralFrame f = gauge_fix(m, g);
        const CMat P = hamiltonian_operator(m, g);
        const ReductionArtifacts a = reduce(H, f, P);
        const CMat Pi0 = projection_operator(f);
        const auto n = a.V.rows(), nr = a.W.rows();
        Point p;
        p.vv = (a.V.adjoint() * a.V - CMat::Identity(n, n)).cwiseAbs().maxCoeff();
        p.vvs = (a.V * a.V.adjoint() - CMat::Identity(n, n)).cwiseAbs().maxCoeff();
        p.inter = (Pi0 * a.V - a.V * a.proj.Pi_g).cwiseAbs().maxCoeff();
        p.ww = (a.W * a.W.adjoint() - CMat::Identity(nr, nr)).cwiseAbs().maxCoeff();
        p.wsw = (a.W.adjoint() * a.W - a.proj.Pi_g).cwiseAbs().maxCoeff();
        // Oracle: P compressed to Ran Π_g, with the complement lifted far above the window.
        const double lift = herm_norm(P) + std::abs(hi) + 10.0;
        const CMat Q = a.proj.Pi_g * P * a.proj.Pi_g + lift * (CMat::Identity(n, n) - a.proj.Pi_g);
        const RVec ea = herm_eig(herm_part(a.A)).values, eq = herm_eig(Q).values;
        p.count = 0;
        p.spec = 0.0;
        for (int i = 0; i < ea.size() && ea(i) <= hi; ++i, ++p.count) p.spec = std::max(p.spec, std::abs(ea(i) - eq(i)));
        p.v_minus_i = op_norm(a.V - CMat::Identity(n, n));
        p.w_minus_z = op_norm(a.W - z_operator(f));
        return p;
    });
    CsvTable t{"nagy-reduce.csv",
               {"h", "VsV_minus_I", "VVs_minus_I", "Pi0V_minus_VPig", "WWs_minus_I", "WsW_minus_Pig",
                "spectrum_gap", "window_eigs", "V_minus_I", "W_minus_Z"},
               {}};
    std::vector<double> vi, wz;
    double worst[6] = {0, 0, 0, 0, 0, 0};
    int fewest = std::numeric_limits<int>::max();
    for (size_t i = 0; i < c.h.size(); ++i) {
        const Point& p = res[i];
        t.add({c.h[i], p.vv, p.vvs, p.inter, p.ww, p.wsw, p.spec, double(p.count), p.v_minus_i, p.w_minus_z});
        const double v[6] = {p.vv, p.vvs, p.inter, p.ww, p.wsw, p.spec};
        for (int k = 0; k < 6; ++k) worst[k] = std::max(worst[k], v[k]);
        fewest = std::min(fewest, p.count);
        vi.push_back(p.v_minus_i);
        wz.push_back(p.w_minus_z);
    }
    const char* names[6] = {"V*V = I", "VV* = I", "Pi0_hat V = V Pi_g", "WW* = I", "W*W = Pi_g",
                            "spectrum of A vs P on Ran Pi_g in window"};
    for (int k = 0; k < 6; ++k) r.checks.push_back(make_check(names[k], worst[k], "<=", 1e-8));
    r.checks.push_back(make_check("eigenvalues compared in window (min over sweep)", fewest, ">=", 1));
    add_slope(r, "||V - I||", c.h, vi, 0.8);
    add_slope(r, "||W - Z_L||", c.h, wz, 0.8);
    r.tables.push_back(t);
    return r;
}

// ---------------------------------------------------- effective-consistency

// Taylor coefficients of (1 - s)^{-1/2} by the ratio recurrence c_k = c_{k-1}(2k - 1)/(2k).
std::vector<Rational> binomial_half_series(int kmax) {
    std::vector<Rational> out{{1, 1}};
    for (int k = 1; k <= kmax; ++k) {
        long long num = out.back().num * (2 * k - 1), den = out.back().den * (2 * k);
        const long long g = std::gcd(num, den);
        out.push_back({num / g, den / g});
    }
    return out;
}

ExperimentResult effective_consistency(const RunConfig& c) {
    ExperimentResult r;
    const ElectronicModel m = load_model(c);
    const int M = std::max(3, c.M.front());
    const ProjectionHierarchy H = ProjectionHierarchy::build(m, M);

    const auto nu = nu_constants(10), oracle = binomial_half_series(10);
    int mismatches = 0;
    for (int k = 0; k <= 10; ++k) mismatches += nu[k] == oracle[k] ? 0 : 1;
    r.checks.push_back(make_check("nu_k rational mismatches for k <= 10", mismatches, "<=", 0));

    struct Point {
        double d2, d3, closed, noh1;
    };
    auto res = sweep<Point>(c, [&](const GridSpec& g) {
        const double h = g.h;
        const SpectralFrame f = gauge_fix(m, g);
        const CMat P = hamiltonian_operator(m, g);
        const ReductionArtifacts a = reduce(H, f, P);
        const CMat G = window_operator(herm_eig(P), c.g);
        const CMat Gr = a.W * G * a.W.adjoint();
        const EffectiveOperators E = effective_operator_forms(H, f, P);
        const CMat B2 = E.A0 + h * h * E.A2;
        const CMat closed = quantize(effective_symbol_closed_form(f, m).series, g);
        return Point{windowed_norm(a.A - B2, Gr), windowed_norm(a.A - B2 - h * h * h * E.A3, Gr),
                     windowed_norm(closed - B2, Gr), no_h1_term_check(H, f).ratio};
    });
    CsvTable t{"effective-consistency.csv", {"h", "A_minus_A0_A2", "A_minus_A0_A2_A3", "closed_minus_A0_A2", "no_h1_ratio"}, {}};
    std::vector<double> d2, d3, dc, nh;
    for (size_t i = 0; i < c.h.size(); ++i) {
        d2.push_back(res[i].d2);
        d3.push_back(res[i].d3);
        dc.push_back(res[i].closed);
        nh.push_back(res[i].noh1);
        t.add({c.h[i], d2.back(), d3.back(), dc.back(), nh.back()});
    }
    add_slope(r, "||A - (A0 + h^2 A2)||_G", c.h, d2, 2.7);
    add_slope(r, "||A - (A0 + h^2 A2 + h^3 A3)||_G", c.h, d3, 3.7);
    add_slope(r, "||Op(a0 + h a1 + h^2 a2) - (A0 + h^2 A2)||_G", c.h, dc, 2.7);
    r.checks.push_back(make_check("no-h1 ratio ||Z C1 Z*|| / ||C1||", max_of(nh), "<=", 1e-8));
    r.tables.push_back(t);
    return r;
}

// ----------------------------------------------------------- projection-clean

ExperimentResult projection_clean(const RunConfig& c) {
    ExperimentResult r;
    const ElectronicModel m = load_model(c);
    const int M = c.M.front();
    const ProjectionHierarchy H = ProjectionHierarchy::build(m, M);
    struct Point {
        ProjectionBuild b;
        double d_win, herm_win;
    };
    // Slopes use ‖G X G‖ with G = g(P̂); raw norms go to the CSV only.
    auto res = sweep<Point>(c, [&](const GridSpec& g) {
        Point p{build_projection_operator(H, g), 0.0, 0.0};
        const CMat G = window_operator(herm_eig(hamiltonian_operator(m, g)), c.g);
        p.d_win = windowed_norm(p.b.Pi_g - p.b.Pi_hat, G);
        p.herm_win = windowed_norm(p.b.Pi_hat - p.b.Pi_hat.adjoint(), G);
        return p;
    });
    CsvTable t{"projection-clean.csv",
               {"h", "Pi_g_minus_Pi_hat_windowed", "hermiticity_windowed", "Pi_g_minus_Pi_hat_raw", "hermiticity_raw", "rank",
                "expected_rank", "cut_margin", "idempotency"},
               {}};
    std::vector<double> d, herm;
    int rank_errors = 0;
    double idem = 0.0;
    for (size_t i = 0; i < c.h.size(); ++i) {
        const ProjectionBuild& b = res[i].b;
        const int expected = m.L() * c.grid(c.h[i]).N;
        rank_errors += b.rank == expected ? 0 : 1;
        const double id = (b.Pi_g * b.Pi_g - b.Pi_g).cwiseAbs().maxCoeff();
        idem = std::max(idem, id);
        d.push_back(res[i].d_win);
        herm.push_back(res[i].herm_win);
        t.add({c.h[i], d.back(), herm.back(), op_norm(b.Pi_g - b.Pi_hat), op_norm(b.Pi_hat - b.Pi_hat.adjoint()),
               double(b.rank), double(expected), b.cut_margin, id});
    }
    r.checks.push_back(make_check("sweep points with rank(Pi_g) != L*N", rank_errors, "<=", 0));
    r.checks.push_back(make_check("||Pi_g^2 - Pi_g||", idem, "<=", 1e-10));
    add_slope(r, fmt::format("||Pi_g - Pi_hat||_G, M={}", M), c.h, d, M + 0.7);
    add_slope(r, fmt::format("||Pi_hat - Pi_hat*||_G, M={}", M), c.h, herm, M + 0.7);
    r.tables.push_back(t);
    return r;
}

// ------------------------------------------------------------- evolve-compare

struct PacketSpec {
    double x0, xi0, k0;
};

PacketSpec packet_spec(const RunConfig& c, double x0, double xi0, double k0) {
    return {c.param("x0", x0), c.param("xi0", xi0), c.param("k0_radius", k0)};
}

ExperimentResult evolve_compare(const RunConfig& c) {
    ExperimentResult r;
    if (c.t.empty()) throw ConfigError("time.t: at least one time is required");
    const ElectronicModel m = load_model(c);
    const int M = c.M.front();
    const ProjectionHierarchy H = ProjectionHierarchy::build(m, M);
    const PacketSpec ps = packet_spec(c, 0.0, 0.5, 1.5);
    struct Point {
        double outside, leak_proj, leak_win, boundary0, boundary;
        std::vector<double> exact, k0, k2;
    };
    auto res = sweep<Point>(c, [&](const GridSpec& g) {
        const double h = g.h;
        const SpectralFrame f = gauge_fix(m, g);
        const FullPropagator fp(m, g);
        const ReductionArtifacts a = reduce(H, f, fp.P());
        const LocalizedState st = prepare_localized_state(m, f, a.proj.Pi_g, fp.eig(), ps.x0, ps.xi0, c.f, ps.k0);
        const EffectiveOperators E = effective_operator_forms(H, f, fp.P());
        const CMat K0 = herm_part(E.A0), K2 = herm_part(E.A0 + h * h * E.A2), Aex = herm_part(a.A);
        const CVec Wphi = a.W * st.phi.values;
        Point p{st.outside_mass, st.projection_leak, st.window_leak, boundary_mass(st.phi), 0.0, {}, {}, {}};
        for (double t : c.t) {
            const GridWaveFunction full = fp.exact(st.phi, t);
            p.boundary = std::max(p.boundary, boundary_mass(full));
            auto err = [&](const CMat& A) {
                return grid_norm(g, full.values - a.W.adjoint() * reduced_propagate(A, Wphi, t, h));
            };
            p.exact.push_back(err(Aex));
            p.k0.push_back(err(K0));
            p.k2.push_back(err(K2));
        }
        return p;
    });
    CsvTable main{"evolve-compare.csv", {"h", "t", "err_full_vs_reduced"}, {}};
    CsvTable routes{"evolve-compare-routes.csv", {"h", "t", "err_exact_A", "err_K0", "err_K2"}, {}};
    CsvTable prep{"evolve-compare-state.csv",
                  {"h", "outside_mass", "projection_leak", "window_leak", "boundary_mass_initial", "boundary_mass_evolved"},
                  {}};
    double boundary = 0.0;
    for (size_t i = 0; i < c.h.size(); ++i) {
        prep.add({c.h[i], res[i].outside, res[i].leak_proj, res[i].leak_win, res[i].boundary0, res[i].boundary});
        boundary = std::max(boundary, res[i].boundary0);
        note_boundary(r, c.h[i], res[i].boundary);
        for (size_t k = 0; k < c.t.size(); ++k) {
            main.add({c.h[i], c.t[k], res[i].k2[k]});
            routes.add({c.h[i], c.t[k], res[i].exact[k], res[i].k0[k], res[i].k2[k]});
        }
    }
    for (size_t k = 0; k < c.t.size(); ++k) {
        std::vector<double> ex, k0, k2;
        for (const auto& p : res) {
            ex.push_back(p.exact[k]);
            k0.push_back(p.k0[k]);
            k2.push_back(p.k2[k]);
        }
        const std::string tag = fmt::format("t={:g}", c.t[k]);
        add_decay(r, "exact route A = WPW*, " + tag, ex);
        add_slope(r, "K=0 route, " + tag, c.h, k0, 0.7);
        add_slope(r, "K=2 route, " + tag, c.h, k2, 2.7);
    }
    r.checks.push_back(make_check("boundary mass of prepared state", boundary, "<", 1e-10));
    r.tables.push_back(main);
    r.tables.push_back(routes);
    r.tables.push_back(prep);
    return r;
}

// ----------------------------------------------------------------- two-branch

ExperimentResult two_branch(const RunConfig& c) {
    ExperimentResult r;
    if (c.t.empty()) throw ConfigError("time.t: at least one time is required");
    const ElectronicModel m = load_model(c);
    if (m.N_el != 2 || m.L() != 1) throw ConfigError("model.name: two-branch needs a two-level model with L = 1");
    const int M = c.M.front();
    const ProjectionHierarchy H = ProjectionHierarchy::build(m, M);
    const PacketSpec ps = packet_spec(c, 0.0, 1.0, 1.5);
    struct Point {
        std::vector<double> err;
        double upper_weight;
    };
    auto res = sweep<Point>(c, [&](const GridSpec& g) {
        const SpectralFrame f = gauge_fix(m, g);
        const FullPropagator fp(m, g);
        const ProjectionBuild b = build_projection_operator(H, g);
        // Both bands populated: coherent ⊗ (u + u⊥)/√2, then the energy window.
        const GridWaveFunction c0 = coherent_state(ps.x0, ps.xi0, g);
        CVec v(g.N * 2);
        for (int j = 0; j < g.N; ++j) {
            const CMat U = herm_eig(m.q(g.x(j))).vectors;
            v.segment(2 * j, 2) = c0.values(j) * (U.col(0) + U.col(1)) / std::sqrt(2.0);
        }
        GridWaveFunction phi(g, 2, window_operator(fp.eig(), c.f) * v);
        phi.normalize();
        const CMat n = CMat::Identity(2 * g.N, 2 * g.N);
        const CMat Q = n - b.Pi_g;
        const SpectralPropagator p1(herm_part(b.Pi_g * fp.P() * b.Pi_g)), p2(herm_part(Q * fp.P() * Q));
        const CVec a = b.Pi_g * phi.values, bb = Q * phi.values;
        Point p{{}, bb.squaredNorm() * g.dx()};
        for (double t : c.t) {
            const CVec split = p1.apply(a, t, g.h) + p2.apply(bb, t, g.h);
            p.err.push_back(grid_norm(g, fp.exact(phi, t).values - split));
        }
        return p;
    });
    CsvTable t{"two-branch.csv", {"h", "t", "err_full_vs_branches", "upper_branch_weight"}, {}};
    for (size_t i = 0; i < c.h.size(); ++i)
        for (size_t k = 0; k < c.t.size(); ++k) t.add({c.h[i], c.t[k], res[i].err[k], res[i].upper_weight});
    for (size_t k = 0; k < c.t.size(); ++k) {
        std::vector<double> e;
        for (const auto& p : res) e.push_back(p.err[k]);
        add_slope(r, fmt::format("branch decomposition error, t={:g}", c.t[k]), c.h, e, c.param("min_slope", M));
    }
    double w = 1.0;
    for (const auto& p : res) w = std::min(w, p.upper_weight);
    r.checks.push_back(make_check("weight of the (1 - Pi_g) branch", w, ">=", 0.1));
    r.tables.push_back(t);
    return r;
}

// ------------------------------------------------------------------ wavepacket

ExperimentResult wavepacket(const RunConfig& c) {
    ExperimentResult r;
    if (c.t.empty()) throw ConfigError("time.t: at least one time is required");
    const ElectronicModel m = load_model(c);
    if (m.L() != 1) throw ConfigError("model.name: wavepacket needs a single tracked level");
    const PacketSpec ps = packet_spec(c, 0.0, 0.5, 1.5);
    const double dt = c.param("dt", 0.005);
    const double tmax = *std::max_element(c.t.begin(), c.t.end());
    const double omega = c.param("omega_half_width", 4.0);
    const double ehrenfest = c.param("ehrenfest_c", 1.0) * std::log(1.0 / c.h.front());

    const SymbolPtr a0 = band_symbol(m);
    const Trajectory tr = hamilton_flow(*a0, ps.x0, ps.xi0, tmax, dt);
    const double escape = escape_time(tr, ps.x0 - omega, ps.x0 + omega);
    const double cap = std::min(escape, ehrenfest);
    if (tmax > cap)
        throw ConfigError(fmt::format("time.t: {} exceeds min(T_Omega', c ln(1/h)) = {:.4g}", tmax, cap));
    r.checks.push_back(make_check("band trajectory symplectic defect", tr.symplectic_defect(), "<=", 1e-8));
    r.checks.push_back(make_check("band trajectory energy drift", tr.energy_drift(), "<=", 1e-8));
    r.checks.push_back(make_check("band trajectory min Im Gamma", tr.min_im_gamma(), ">", 0.0));

    // Free flow: δ_t vanishes. Harmonic flow: Γ_t = i.
    const SymbolPtr free0 = polynomial_symbol(1, 1, {{{0, 2}, CMat::Constant(1, 1, 0.5)}});
    const Trajectory tf = hamilton_flow(*free0, -1.0, 1.0, 3.0, 0.01);
    double free_delta = 0.0;
    for (const auto& s : tf.samples) free_delta = std::max(free_delta, std::abs(s.delta));
    r.checks.push_back(make_check("free flow |delta_t|", free_delta, "<=", 1e-8));
    const SymbolPtr ho = polynomial_symbol(1, 1, {{{0, 2}, CMat::Constant(1, 1, 0.5)}, {{2, 0}, CMat::Constant(1, 1, 0.5)}});
    const Trajectory th = hamilton_flow(*ho, 1.0, 0.0, 2.0 * M_PI, 0.01);
    double gamma_dev = 0.0;
    for (const auto& s : th.samples) gamma_dev = std::max(gamma_dev, std::abs(s.Gamma - I_c));
    r.checks.push_back(make_check("harmonic flow |Gamma_t - i|", gamma_dev, "<=", 1e-8));
    r.checks.push_back(make_check("free flow symplectic defect", tf.symplectic_defect(), "<=", 1e-8));
    r.checks.push_back(make_check("harmonic flow symplectic defect", th.symplectic_defect(), "<=", 1e-8));

    const ProjectionHierarchy H = ProjectionHierarchy::build(m, c.M.front());
    struct Point {
        std::vector<double> err;
        double boundary;
    };
    auto res = sweep<Point>(c, [&](const GridSpec& g) {
        const SpectralFrame f = gauge_fix(m, g);
        const FullPropagator fp(m, g);
        const ProjectionBuild b = build_projection_operator(H, g);
        const GridWaveFunction packet = molecular_packet(coherent_state(ps.x0, ps.xi0, g), f);
        GridWaveFunction phi(g, m.N_el, b.Pi_g * packet.values);
        phi.normalize();
        Point p{{}, 0.0};
        for (double t : c.t) {
            const GridWaveFunction full = fp.exact(phi, t);
            p.boundary = std::max(p.boundary, boundary_mass(full));
            p.err.push_back(grid_norm(g, full.values - molecular_packet(propagate_gaussian(tr, t, g), f).values));
        }
        return p;
    });
    CsvTable t{"wavepacket.csv", {"h", "t", "err_ansatz_vs_full"}, {}};
    double boundary = 0.0;
    for (size_t i = 0; i < c.h.size(); ++i) {
        boundary = std::max(boundary, res[i].boundary);
        for (size_t k = 0; k < c.t.size(); ++k) t.add({c.h[i], c.t[k], res[i].err[k]});
    }
    for (size_t k = 0; k < c.t.size(); ++k) {
        std::vector<double> e;
        for (const auto& p : res) e.push_back(p.err[k]);
        add_slope(r, fmt::format("Gaussian ansatz error, t={:g}", c.t[k]), c.h, e, 0.4);
    }
    r.checks.push_back(make_check("boundary mass of evolved state", boundary, "<", 1e-10));
    CsvTable traj{"wavepacket-trajectory.csv",
                  {"t", "x", "xi", "delta", "A", "B", "C", "D", "re_Gamma", "im_Gamma", "energy"}, {}};
    for (const auto& s : tr.samples)
        traj.add({s.t, s.x, s.xi, s.delta, s.F(0, 0), s.F(0, 1), s.F(1, 0), s.F(1, 1), s.Gamma.real(), s.Gamma.imag(), s.energy});
    r.tables.push_back(t);
    r.tables.push_back(traj);
    return r;
}

// -------------------------------------------------------------- support-speed

ExperimentResult support_speed(const RunConfig& c) {
    ExperimentResult r;
    const ElectronicModel m = load_model(c);
    if (m.kinetic.magnetic()) throw ConfigError("model.A_amp: support-speed needs a non-magnetic kinetic term");
    const PacketSpec ps = packet_spec(c, -2.0, 1.0, 0.75);
    const double T = c.param("T", 2.0), eps = c.param("eps", 0.0), b = m.kinetic.b;
    struct Point {
        double C1, inside, control, boundary;
    };
    auto res = sweep<Point>(c, [&](const GridSpec& g) {
        const FullPropagator fp(m, g);
        const CMat G = window_operator(fp.eig(), c.g);
        const CMat dxi = fourier_multiplier(g, [b](double xi) { return cplx(xi / b, 0.0); }, m.N_el);
        const double C1 = 0.5 * op_norm(dxi * G);
        GridWaveFunction psi = coherent_state(ps.x0, ps.xi0, g);
        if (m.N_el > 1) psi = molecular_packet(psi, gauge_fix(m, g));
        const GridWaveFunction pt = fp.exact(psi, T);
        auto outside = [&](double C) {
            const double reach = ps.k0 + eps + C * T;
            return support_mass(pt, ps.x0 - reach, ps.x0 + reach);
        };
        return Point{C1, outside(C1), outside(0.5 * C1), boundary_mass(pt)};
    });
    CsvTable t{"support-speed.csv", {"h", "C1", "mass_outside_K", "mass_outside_K_half_C1"}, {}};
    std::vector<double> in, ctl;
    double boundary = 0.0;
    for (size_t i = 0; i < c.h.size(); ++i) {
        t.add({c.h[i], res[i].C1, res[i].inside, res[i].control});
        in.push_back(res[i].inside);
        ctl.push_back(res[i].control);
        boundary = std::max(boundary, res[i].boundary);
    }
    add_decay(r, "mass outside K_{T,eps}", in);
    r.checks.push_back(make_check("negative control (C1/2) min decay per halving", min_decay_ratio(ctl), "<", 8.0));
    r.checks.push_back(make_check("boundary mass of evolved state", boundary, "<", 1e-10));
    r.tables.push_back(t);
    return r;
}

// ------------------------------------------------------------- classical-flow

ExperimentResult classical_flow(const RunConfig& c) {
    ExperimentResult r;
    const double T = c.param("T", 20.0), dt = c.param("dt", 0.005);
    const double x0 = c.param("x0", -1.2), xi0 = c.param("xi0", 0.6);
    // Double well ξ²/2 + (x² - 1)².
    const SymbolPtr dw = polynomial_symbol(1, 1,
                                           {{{0, 2}, CMat::Constant(1, 1, 0.5)},
                                            {{4, 0}, CMat::Constant(1, 1, 1.0)},
                                            {{2, 0}, CMat::Constant(1, 1, -2.0)},
                                            {{0, 0}, CMat::Constant(1, 1, 1.0)}});
    const Trajectory tr = hamilton_flow(*dw, x0, xi0, T, dt);
    r.checks.push_back(make_check("double-well symplectic defect on [0, T]", tr.symplectic_defect(), "<=", 1e-8));
    r.checks.push_back(make_check("double-well energy drift", tr.energy_drift(), "<=", 1e-8));
    r.checks.push_back(make_check("double-well min Im Gamma", tr.min_im_gamma(), ">", 0.0));
    const auto& end = tr.samples.back();
    const Trajectory back = hamilton_flow(*dw, end.x, end.xi, -T, dt);
    const double rev = std::hypot(back.samples.back().x - x0, back.samples.back().xi - xi0);
    r.checks.push_back(make_check("reversibility |(x, xi)(T, -T) - (x0, xi0)|", rev, "<=", 1e-8));

    // Escape time against the same flow sampled ten times more densely.
    const double lo = c.param("omega_lo", -1.6), hi = c.param("omega_hi", -0.8);
    const Trajectory dense = hamilton_flow(*dw, x0, xi0, T, dt / 10);
    const double te = escape_time(tr, lo, hi), td = escape_time(dense, lo, hi);
    r.checks.push_back(make_check("escape time vs dense oracle", std::abs(te - td), "<=", 2 * dt));
    const SymbolPtr free0 = polynomial_symbol(1, 1, {{{0, 2}, CMat::Constant(1, 1, 0.5)}});
    const double tfree = escape_time(hamilton_flow(*free0, 0.0, 1.0, 3.0, dt), -1.0, 1.0);
    r.checks.push_back(make_check("free escape time |T - 1|", std::abs(tfree - 1.0), "<=", 1e-9));

    CsvTable t{"classical-flow.csv", {"t", "x", "xi", "delta", "A", "B", "C", "D", "re_Gamma", "im_Gamma", "energy"}, {}};
    const int stride = std::max(1, static_cast<int>(std::lround(c.param("csv_every", 0.1) / dt)));
    for (size_t i = 0; i < tr.samples.size(); i += stride) {
        const auto& s = tr.samples[i];
        t.add({s.t, s.x, s.xi, s.delta, s.F(0, 0), s.F(0, 1), s.F(1, 0), s.F(1, 1), s.Gamma.real(), s.Gamma.imag(), s.energy});
    }
    CsvTable e{"classical-flow-escape.csv", {"omega_lo", "omega_hi", "escape", "escape_dense"}, {}};
    e.add({lo, hi, te, td});
    r.tables.push_back(t);
    r.tables.push_back(e);
    return r;
}

// --------------------------------------------------------------- twist-compat

struct TwoChartSetup {
    Covering cov, cov_alt;
    std::vector<ChartUnitary> units;
    SymbolSeries a;
};

// Two charts centered at ±L/4 with radius 5L/16, rotations exp(iθ_j(x)σ_x), and a lattice symbol on chart 0.
TwoChartSetup two_chart_setup(const RunConfig& c) {
    const double L = c.L, k = 2.0 * M_PI / L;
    const std::vector<Chart> charts{{-0.25 * L, 0.3125 * L}, {0.25 * L, 0.3125 * L}};
    TwoChartSetup s{Covering(L, charts, c.param("margin", 0.4), c.param("width", 0.8)),
                    Covering(L, charts, c.param("alt_margin", 0.6), c.param("alt_width", 1.2)),
                    {},
                    {}};
    CMat G(2, 2), sz(2, 2), sx(2, 2);
    G << 0, 1, 1, 0;
    sz << 1, 0, 0, -1;
    sx = G;
    s.units = {rotation_unitary(0, G, sine(c.param("theta0", 0.7), k, 0.0)),
               rotation_unitary(1, G, sine(c.param("theta1", 0.4), 2 * k, 0.5 * M_PI))};
    s.a = SymbolSeries({lattice_symbol(2, xf_sum({matrix_trig(sz, k, 0.5 * M_PI), xf_constant(0.3 * sx)}))});
    return s;
}

std::function<double(double)> bump(double center, double radius, double L) {
    return [=](double x) {
        const double d = std::abs(std::remainder(x - center, L));
        return smooth_step((radius - d) / (0.5 * radius));
    };
}

ExperimentResult twist_compat(const RunConfig& c) {
    ExperimentResult r;
    const TwoChartSetup s = two_chart_setup(c);
    const double L = c.L;
    // Overlap cutoff around x = 0, where both charts are defined.
    const double oc = c.param("overlap_radius", 0.7), ow = c.param("overlap_width", 0.4);
    const auto phi = [=](double x) { return smooth_step((oc - std::abs(std::remainder(x, L))) / ow); };

    CsvTable ct{"twist-compat.csv", {"h", "M", "compatibility_residual"}, {}};
    for (int M : c.M) {
        const TwistedSymbol fam = moyal_conjugate_family(s.a, 0, s.units, M);
        auto e = sweep<double>(c, [&](const GridSpec& g) { return compatibility_residual(fam, s.units, 0, 1, s.cov, phi, g); });
        for (size_t i = 0; i < c.h.size(); ++i) ct.add({c.h[i], double(M), e[i]});
        add_slope(r, fmt::format("compatibility residual, M={}", M), c.h, e, M + 0.7);
    }
    r.tables.push_back(ct);

    // Iterated commutators of the twisted operator with ad of trigonometric cutoffs.
    const TwistedSymbol fam = moyal_conjugate_family(s.a, 0, s.units, static_cast<int>(c.param("commutator_M", 2)));
    std::vector<std::function<double(double)>> cut;
    for (int l = 0; l < 3; ++l) cut.push_back([L, l](double x) { return std::cos(2 * M_PI * x / L + l); });
    const auto grids = c.grids();
    const CommutatorReport cr = commutator_order_check(
        [&](const GridSpec& g) { return twisted_quantize(fam, s.cov, s.units, g); }, cut, grids, 2);
    CsvTable it{"twist-commutators.csv", {"h", "N", "norm"}, {}};
    for (int n = 0; n < 3; ++n) {
        for (size_t i = 0; i < c.h.size(); ++i) it.add({c.h[i], double(n + 1), cr.norms[n][i]});
        add_slope(r, fmt::format("iterated commutator, N={}", n + 1), c.h, cr.norms[n], n + 1 - 0.2);
    }
    r.tables.push_back(it);

    // Partition independence: two admissible (χ, φ) choices for the same compatible family.
    const int pm = static_cast<int>(c.param("partition_M", 4));
    const int pn = static_cast<int>(c.param("partition_points", 3));
    if (pn < 3 || pn > static_cast<int>(c.h.size())) throw ConfigError("params.partition_points: need 3 <= n <= len(grid.h)");
    const TwistedSymbol pfam = moyal_conjugate_family(s.a, 0, s.units, pm);
    RunConfig pc = c;
    pc.h.resize(pn);
    auto pd = sweep<double>(pc, [&](const GridSpec& g) {
        return op_norm(twisted_quantize(pfam, s.cov, s.units, g) - twisted_quantize(pfam, s.cov_alt, s.units, g));
    });
    CsvTable pt{"twist-partition.csv", {"h", "partition_difference"}, {}};
    for (int i = 0; i < pn; ++i) pt.add({pc.h[i], pd[i]});
    add_decay(r, "partition difference (faster than h^3)", pd);
    r.tables.push_back(pt);

    // Disjoint supports: smooth compactly ξ-supported symbol decays, a ξ-discontinuous one stalls.
    const auto chi = bump(0.0, 1.5, L), psi = bump(0.5 * L, 1.5, L);
    const double R = c.param("xi_support", 1.5);
    const SymbolPtr smooth = lambda_symbol(1, 1, 0, -1, [R](const RVec&, const RVec& xi, int o) {
        Jet j(2, o, 1, 1);
        j.coeff(0)(0, 0) = smooth_step(2.0 * (1.0 - std::abs(xi(0)) / R));
        return j;
    });
    const SymbolPtr rough = lambda_symbol(1, 1, 0, -1, [R](const RVec&, const RVec& xi, int o) {
        Jet j(2, o, 1, 1);
        j.coeff(0)(0, 0) = std::abs(xi(0)) < R ? 1.0 : 0.0;
        return j;
    });
    const DecayReport ds = disjoint_support_decay([&](const GridSpec& g) { return quantize(smooth, g); }, chi, psi, grids, 1);
    const DecayReport dr = disjoint_support_decay([&](const GridSpec& g) { return quantize(rough, g); }, chi, psi, grids, 1);
    CsvTable dt{"twist-disjoint.csv", {"h", "smooth_symbol", "discontinuous_symbol"}, {}};
    for (size_t i = 0; i < c.h.size(); ++i) dt.add({c.h[i], ds.norms[i], dr.norms[i]});
    add_decay(r, "||chi A psi||, smooth symbol", ds.norms);
    r.checks.push_back(make_check("negative control (discontinuous symbol) min decay per halving", min_decay_ratio(dr.norms), "<", 8.0));
    r.tables.push_back(dt);

    // cusp model.
    CuspParams kp;
    kp.gamma = c.param("cusp_gamma", kp.gamma);
    kp.Y = c.param("cusp_Y", kp.Y);
    kp.n_el = static_cast<int>(c.param("cusp_n_el", kp.n_el));
    kp.omega = c.param("cusp_omega", kp.omega);
    kp.flat = c.param("cusp_flat", kp.flat);
    kp.reach = c.param("cusp_reach", kp.reach);
    kp.L = c.param("cusp_L", kp.L);
    kp.charts = static_cast<int>(c.param("cusp_charts", kp.charts));
    kp.chart_radius = c.param("cusp_chart_radius", kp.chart_radius);
    const CuspModel km(kp);
    CsvTable kt{"twist-cusp.csv", {"chart", "unitarity_defect", "min_jacobian", "raw_growth", "conj_ratio"}, {}};
    double unit = 0.0, growth = std::numeric_limits<double>::infinity(), ratio = 0.0;
    for (int j = 0; j < km.covering().size(); ++j) {
        const auto u = cusp_unitarity(km, j);
        const auto cv = cusp_curvature(km, j);
        kt.add({double(j), u.max_defect, u.min_jacobian, cv.raw_growth, cv.conj_ratio});
        unit = std::max(unit, u.max_defect);
        growth = std::min(growth, cv.raw_growth);
        ratio = std::max(ratio, cv.conj_ratio);
    }
    r.checks.push_back(make_check("cusp unitarity defect (max over charts)", unit, "<=", 1e-8));
    r.checks.push_back(make_check("cusp raw second-difference growth (min over charts)", growth, ">", 1e3));
    r.checks.push_back(make_check("cusp conjugated second differences / center (max over charts)", ratio, "<=", 10.0));
    r.tables.push_back(kt);
    return r;
}

// --------------------------------------------------------- propagator-hygiene

ExperimentResult propagator_hygiene(const RunConfig& c) {
    ExperimentResult r;
    if (c.t.empty()) throw ConfigError("time.t: at least one time is required");
    const ElectronicModel m = load_model(c);
    const PacketSpec ps = packet_spec(c, 0.0, 0.5, 1.5);
    struct Row {
        double t, unit_exact, unit_split, cross, reverse, drift_exact, drift_split, dt;
        int halvings;
    };
    auto res = sweep<std::vector<Row>>(c, [&](const GridSpec& g) {
        const FullPropagator fp(m, g);
        GridWaveFunction psi = coherent_state(ps.x0, ps.xi0, g);
        if (m.N_el > 1) psi = molecular_packet(psi, gauge_fix(m, g));
        const double e0 = fp.energy(psi);
        std::vector<Row> rows;
        for (double t : c.t) {
            PropagationInfo info;
            const GridWaveFunction sp = full_propagate(fp, psi, t, PropagationMethod::SplitStep, &info);
            const GridWaveFunction ex = fp.exact(psi, t);
            const GridWaveFunction back = fp.exact(ex, -t);
            rows.push_back({t, std::abs(ex.norm() - 1.0), std::abs(sp.norm() - 1.0), grid_norm(g, sp.values - ex.values),
                            grid_norm(g, back.values - psi.values), std::abs(fp.energy(ex) - e0) / std::abs(e0),
                            std::abs(fp.energy(sp) - e0) / std::abs(e0), info.dt, info.halvings});
        }
        return rows;
    });
    CsvTable t{"propagator-hygiene.csv",
               {"h", "t", "unitarity_exact", "unitarity_split", "split_vs_exact", "reversal", "energy_drift_exact",
                "energy_drift_split", "dt", "halvings"},
               {}};
    double w[6] = {0, 0, 0, 0, 0, 0};
    for (size_t i = 0; i < c.h.size(); ++i)
        for (const Row& x : res[i]) {
            t.add({c.h[i], x.t, x.unit_exact, x.unit_split, x.cross, x.reverse, x.drift_exact, x.drift_split, x.dt, double(x.halvings)});
            // Unitarity is budgeted per unit time.
            const double span = std::max(1.0, std::abs(x.t));
            const double v[6] = {x.unit_exact / span, x.unit_split / span, x.cross, x.reverse, x.drift_exact, x.drift_split};
            for (int k = 0; k < 6; ++k) w[k] = std::max(w[k], v[k]);
        }
    r.checks.push_back(make_check("unitarity per unit time, exact-diag", w[0], "<=", 1e-10));
    r.checks.push_back(make_check("unitarity per unit time, split-step", w[1], "<=", 1e-10));
    r.checks.push_back(make_check("split-step vs exact-diag at accepted dt", w[2], "<=", 1e-7));
    r.checks.push_back(make_check("time reversal t then -t", w[3], "<=", 1e-7));
    r.checks.push_back(make_check("relative energy drift, exact-diag", w[4], "<=", 1e-8));
    r.checks.push_back(make_check("relative energy drift, split-step", w[5], "<=", 1e-6));
    r.tables.push_back(t);

    // Determinism: the same config twice, and once more on two threads, must give identical CSV bytes.
    RunConfig dc;
    dc.experiment = "classical-flow";
    dc.h = c.h;
    dc.seed = c.seed;
    auto bytes = [](const ExperimentResult& e) {
        std::string s;
        for (const auto& tb : e.tables) s += tb.file + "\n" + format_csv(tb);
        return s;
    };
    const std::string first = bytes(classical_flow(dc)), second = bytes(classical_flow(dc));
    RunConfig mc = c;
    mc.threads = 1;
    RunConfig mc2 = c;
    mc2.threads = 2;
    mc.t = mc2.t = {c.t.front()};
    auto hyg = [&](const RunConfig& cc) {
        // Only the sweep part, to keep the re-run cheap.
        auto rows = sweep<double>(cc, [&](const GridSpec& g) {
            const FullPropagator fp(m, g);
            GridWaveFunction psi = coherent_state(ps.x0, ps.xi0, g);
            if (m.N_el > 1) psi = molecular_packet(psi, gauge_fix(m, g));
            return fp.exact(psi, cc.t.front()).values.real().sum();
        });
        std::string s;
        for (double v : rows) s += csv_number(v) + "\n";
        return s;
    };
    const int mismatches = (first == second ? 0 : 1) + (hyg(mc) == hyg(mc2) ? 0 : 1);
    r.checks.push_back(make_check("determinism mismatches (repeat run, 1 vs 2 threads)", mismatches, "<=", 0));
    return r;
}

}  // namespace

const std::map<std::string, ExperimentFn>& experiment_catalog() {
    static const std::map<std::string, ExperimentFn> catalog{
        {"moyal-laws", moyal_laws},
        {"twist-compat", twist_compat},
        {"adiabatic-defects", adiabatic_defects},
        {"projection-clean", projection_clean},
        {"nagy-reduce", nagy_reduce},
        {"effective-consistency", effective_consistency},
        {"evolve-compare", evolve_compare},
        {"two-branch", two_branch},
        {"wavepacket", wavepacket},
        {"support-speed", support_speed},
        {"classical-flow", classical_flow},
        {"propagator-hygiene", propagator_hygiene},
    };
    return catalog;
}

ExperimentResult run_experiment(const RunConfig& cfg) {
    const auto& cat = experiment_catalog();
    auto it = cat.find(cfg.experiment);
    if (it == cat.end()) throw ConfigError(fmt::format("experiment.name: unknown experiment '{}'", cfg.experiment));
    validate_config(cfg);
    ExperimentResult r = it->second(cfg);
    r.name = cfg.experiment;
    return r;
}

}  // namespace bopp
