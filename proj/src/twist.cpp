#include "bopp/twist.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <memory>
#include <mutex>

namespace bopp {

namespace {

double step_derivative(double t) {
    if (t <= 0.0 || t >= 1.0) return 0.0;
    const double a = std::exp(-1.0 / t), b = std::exp(-1.0 / (1.0 - t));
    return a * b * (1.0 / (t * t) + 1.0 / ((1.0 - t) * (1.0 - t))) / ((a + b) * (a + b));
}

double binom(int n, int k) { return factorial(n) / (factorial(k) * factorial(n - k)); }

// L(x_i) A_ik R(x_k) blockwise; all-zero factors skip their blocks.
CMat block_sandwich(const CMat& A, const GridSpec& g, int d, const std::function<CMat(double)>& Lf,
                    const std::function<CMat(double)>& Rf) {
    const int N = g.N;
    std::vector<CMat> Lm(N), Rm(N);
    std::vector<char> lz(N), rz(N);
    for (int i = 0; i < N; ++i) {
        Lm[i] = Lf(g.x(i));
        Rm[i] = Rf(g.x(i));
        lz[i] = Lm[i].cwiseAbs().maxCoeff() == 0.0;
        rz[i] = Rm[i].cwiseAbs().maxCoeff() == 0.0;
    }
    CMat out = CMat::Zero(N * d, N * d);
    for (int i = 0; i < N; ++i) {
        if (lz[i]) continue;
        for (int k = 0; k < N; ++k) {
            if (rz[k]) continue;
            out.block(i * d, k * d, d, d) = Lm[i] * A.block(i * d, k * d, d, d) * Rm[k];
        }
    }
    return out;
}

// m-th derivative of A(x)B(x) by Leibniz.
XFunction xf_product(XFunction A, XFunction B) {
    return [A, B](double x, int m) {
        CMat r = A(x, 0) * B(x, m);
        for (int i = 1; i <= m; ++i) r += binom(m, i) * (A(x, i) * B(x, m - i));
        return r;
    };
}

XFunction xf_adjoint(XFunction A) {
    return [A](double x, int m) -> CMat { return A(x, m).adjoint(); };
}

// Remembers the derivatives at the most recent x; quantization sweeps ξ with x fixed.
XFunction xf_cached(XFunction A) {
    struct Cache {
        std::mutex mu;
        double x = NAN;
        std::vector<CMat> d;
    };
    auto c = std::make_shared<Cache>();
    return [A, c](double x, int m) -> CMat {
        std::lock_guard<std::mutex> lk(c->mu);
        if (!(c->x == x)) {
            c->x = x;
            c->d.clear();
        }
        while (static_cast<int>(c->d.size()) <= m) c->d.push_back(A(x, static_cast<int>(c->d.size())));
        return c->d[m];
    };
}

void check_sizes(const TwistedSymbol& a, const Covering& cov, const std::vector<ChartUnitary>& units) {
    if (static_cast<int>(a.size()) != cov.size() || static_cast<int>(units.size()) != cov.size())
        throw std::invalid_argument(fmt::format("twisted symbol: {} symbols and {} unitaries for {} charts", a.size(),
                                                units.size(), cov.size()));
    for (size_t j = 0; j < units.size(); ++j)
        if (units[j].chart != static_cast<int>(j))
            throw std::invalid_argument("twisted symbol: unitaries must be listed in chart order");
}

}  // namespace

double smooth_step(double t) {
    if (t <= 0.0) return 0.0;
    if (t >= 1.0) return 1.0;
    const double a = std::exp(-1.0 / t), b = std::exp(-1.0 / (1.0 - t));
    return a / (a + b);
}

Covering::Covering(double L, std::vector<Chart> charts, double margin, double width)
    : L_(L), margin_(margin), width_(width), charts_(std::move(charts)) {
    if (!(L > 0.0) || !(margin > 0.0) || !(width > 0.0)) throw std::invalid_argument("Covering: L, margin, width > 0");
    if (charts_.empty()) throw std::invalid_argument("Covering: no charts");
    for (const Chart& c : charts_)
        if (c.radius < 0.5 * L && !(c.radius - margin - width > 0.0))
            throw std::invalid_argument("Covering: chart radius must exceed margin + width");
}

Covering Covering::uniform(double L, int count, double radius, double margin, double width) {
    if (count < 1) throw std::invalid_argument("Covering::uniform: count >= 1");
    const double s = L / count;
    std::vector<Chart> c;
    for (int j = 0; j < count; ++j) c.push_back({-0.5 * L + 0.5 * s + j * s, radius});
    return Covering(L, std::move(c), margin, width);
}

double Covering::distance(int j, double x) const { return std::abs(std::remainder(x - charts_[j].center, L_)); }

bool Covering::contains(int j, double x) const { return global(j) || distance(j, x) < charts_[j].radius; }

double Covering::raw(int j, double x) const {
    if (global(j)) return 1.0;
    return smooth_step((charts_[j].radius - margin_ - distance(j, x)) / width_);
}

double Covering::chi(int j, double x) const {
    double s = 0.0;
    for (int k = 0; k < size(); ++k) s += raw(k, x);
    if (!(s > 0.0)) throw ModelError(fmt::format("Covering: x = {} lies in no partition support", x));
    return raw(j, x) / s;
}

double Covering::fattener(int j, double x) const {
    if (global(j)) return 1.0;
    const double h = 0.5 * margin_;
    return smooth_step((charts_[j].radius - h - distance(j, x)) / h);
}

double Covering::partition_defect(const GridSpec& g) const {
    double d = 0.0;
    for (int i = 0; i < g.N; ++i) {
        double s = 0.0;
        for (int j = 0; j < size(); ++j) {
            const double c = chi(j, g.x(i));
            if (c < 0.0 || c > 1.0) return INFINITY;
            s += c;
        }
        d = std::max(d, std::abs(s - 1.0));
    }
    return d;
}

double Covering::support_margin(const GridSpec& g) const {
    double m = INFINITY;
    for (int j = 0; j < size(); ++j) {
        if (global(j)) continue;
        for (int i = 0; i < g.N; ++i)
            if (raw(j, g.x(i)) > 0.0) m = std::min(m, charts_[j].radius - distance(j, g.x(i)));
    }
    return m;
}

void Covering::validate(const GridSpec& g) const {
    if (std::abs(g.L - L_) > 1e-12 * L_) throw ModelError("Covering: torus length differs from the grid");
    const double d = partition_defect(g);
    if (!(d <= 1e-12)) throw ModelError(fmt::format("Covering: partition of unity defect {} exceeds 1e-12", d));
    const double m = support_margin(g);
    if (!(m >= margin_ - 1e-12)) throw ModelError(fmt::format("Covering: support margin {} below {}", m, margin_));
}

ChartUnitary identity_unitary(int chart, int dim) {
    return {chart, [dim](double, int m) -> CMat {
                return m == 0 ? CMat(CMat::Identity(dim, dim)) : CMat(CMat::Zero(dim, dim));
            }};
}

ChartUnitary rotation_unitary(int chart, const CMat& G, ScalarFunction theta) {
    if (hermiticity_defect(G) > 1e-12) throw std::invalid_argument("rotation_unitary: generator must be Hermitian");
    const HermEig e = herm_eig(G);
    return {chart, [e, theta](double x, int m) -> CMat {
                std::vector<double> th(m + 1);
                for (int k = 0; k <= m; ++k) th[k] = theta(x, k) / factorial(k);
                const int d = static_cast<int>(e.values.size());
                CVec diag(d);
                for (int a = 0; a < d; ++a) {
                    // Taylor coefficients of exp(u), u = iθg: f_n = (1/n)Σ_k k u_k f_{n-k}.
                    std::vector<cplx> f(m + 1);
                    f[0] = std::exp(I_c * e.values(a) * th[0]);
                    for (int n = 1; n <= m; ++n) {
                        cplx s = 0.0;
                        for (int k = 1; k <= n; ++k) s += static_cast<double>(k) * (I_c * e.values(a) * th[k]) * f[n - k];
                        f[n] = s / static_cast<double>(n);
                    }
                    diag(a) = f[m] * factorial(m);
                }
                return e.vectors * diag.asDiagonal() * e.vectors.adjoint();
            }};
}

double unitarity_defect(const ChartUnitary& u, const Covering& cov, const GridSpec& g) {
    double d = 0.0;
    for (int i = 0; i < g.N; ++i) {
        if (!cov.contains(u.chart, g.x(i))) continue;
        const CMat U = u(g.x(i));
        d = std::max(d, op_norm(U * U.adjoint() - CMat::Identity(U.rows(), U.cols())));
    }
    return d;
}

CMat twisted_quantize(const TwistedSymbol& a, const Covering& cov, const std::vector<ChartUnitary>& units,
                      const GridSpec& g) {
    check_sizes(a, cov, units);
    cov.validate(g);
    const int d = a.front().dim();
    CMat A = CMat::Zero(g.N * d, g.N * d);
    for (int j = 0; j < cov.size(); ++j) {
        if (a[j].dim() != d) throw std::invalid_argument("twisted_quantize: symbols differ in dimension");
        const CMat op = quantize(a[j], g);
        const ChartUnitary& u = units[j];
        A += block_sandwich(
            op, g, d,
            [&](double x) -> CMat {
                const double c = cov.chi(j, x);
                return c == 0.0 ? CMat::Zero(d, d) : CMat(c * u(x).adjoint());
            },
            [&](double x) -> CMat {
                const double p = cov.fattener(j, x);
                return p == 0.0 ? CMat::Zero(d, d) : CMat(p * u(x));
            });
    }
    return A;
}

double compatibility_residual(const TwistedSymbol& a, const std::vector<ChartUnitary>& units, int j, int k,
                              const Covering& cov, const std::function<double(double)>& phi, const GridSpec& g) {
    check_sizes(a, cov, units);
    for (int i = 0; i < g.N; ++i) {
        const double x = g.x(i);
        if (phi(x) != 0.0 && !(cov.contains(j, x) && cov.contains(k, x)))
            throw std::invalid_argument(
                fmt::format("compatibility_residual: cutoff nonzero at x = {} outside the chart overlap", x));
    }
    const int d = a[j].dim();
    auto side = [&](int c) {
        const ChartUnitary& u = units[c];
        return block_sandwich(
            quantize(a[c], g), g, d,
            [&](double x) -> CMat {
                const double p = phi(x);
                return p == 0.0 ? CMat::Zero(d, d) : CMat(p * u(x).adjoint());
            },
            [&](double x) -> CMat {
                const double p = phi(x);
                return p == 0.0 ? CMat::Zero(d, d) : CMat(u(x) * p);
            });
    };
    return op_norm(side(j) - side(k));
}

TwistedSymbol moyal_conjugate_family(const SymbolSeries& a, int j, const std::vector<ChartUnitary>& units, int M) {
    const int d = a.dim();
    TwistedSymbol out;
    for (size_t k = 0; k < units.size(); ++k) {
        const XFunction T = xf_cached(xf_product(units[k].U, xf_adjoint(units[j].U)));
        const SymbolSeries Ts({xi_poly_symbol(d, {T})});
        const SymbolSeries Ti({xi_poly_symbol(d, {xf_cached(xf_adjoint(T))})});
        out.push_back(moyal_product(moyal_product(Ts, a, M), Ti, M));
    }
    return out;
}

SymbolPtr lattice_symbol(int dim, XFunction V, double hop) {
    return lambda_symbol(dim, 1, PhaseSymbol::kUnlimited, -1, [dim, V, hop](const RVec& x, const RVec& xi, int order) {
        Jet j(2, order, dim, dim);
        const CMat I = CMat::Identity(dim, dim);
        for (int p = 0; p <= order; ++p) j.coeff({p, 0}) += V(x(0), p) / factorial(p);
        j.coeff({0, 0}) += hop * I;
        for (int q = 0; q <= order; ++q) j.coeff({0, q}) -= (hop * std::cos(xi(0) + 0.5 * M_PI * q) / factorial(q)) * I;
        return j;
    });
}

double iterated_commutator_norm(const CMat& A, const std::vector<std::function<double(double)>>& cutoffs, int n,
                                const GridSpec& g, int dim) {
    if (n > static_cast<int>(cutoffs.size())) throw std::invalid_argument("iterated_commutator_norm: too few cutoffs");
    const int N = g.N;
    RMat c(n, N);
    for (int l = 0; l < n; ++l)
        for (int i = 0; i < N; ++i) c(l, i) = cutoffs[l](g.x(i));
    CMat B = A;
    for (int i = 0; i < N; ++i)
        for (int k = 0; k < N; ++k) {
            double w = 1.0;
            for (int l = 0; l < n; ++l) w *= c(l, i) - c(l, k);
            B.block(i * dim, k * dim, dim, dim) *= w;
        }
    return op_norm(B);
}

CommutatorReport commutator_order_check(const OperatorBuilder& A,
                                        const std::vector<std::function<double(double)>>& cutoffs,
                                        const std::vector<GridSpec>& grids, int dim) {
    CommutatorReport r;
    r.norms.assign(3, {});
    for (const GridSpec& g : grids) {
        r.h.push_back(g.h);
        const CMat op = A(g);
        for (int n = 1; n <= 3; ++n) r.norms[n - 1].push_back(iterated_commutator_norm(op, cutoffs, n, g, dim));
    }
    r.pass = true;
    for (int n = 1; n <= 3; ++n) {
        const auto& v = r.norms[n - 1];
        const bool zero = std::all_of(v.begin(), v.end(), [](double e) { return e <= kFitFloor; });
        r.vanishing.push_back(zero);
        if (zero) {
            r.fits.emplace_back();
            continue;
        }
        r.fits.push_back(fit_slope(r.h, v));
        if (!(r.fits.back().slope >= n - 0.2)) r.pass = false;
    }
    return r;
}

DecayReport disjoint_support_decay(const OperatorBuilder& A, const std::function<double(double)>& chi,
                                   const std::function<double(double)>& psi, const std::vector<GridSpec>& grids,
                                   int dim) {
    DecayReport r;
    for (const GridSpec& g : grids) {
        for (int i = 0; i < g.N; ++i)
            if (chi(g.x(i)) != 0.0 && psi(g.x(i)) != 0.0)
                throw std::invalid_argument(fmt::format("disjoint_support_decay: supports overlap at x = {}", g.x(i)));
        const CMat op = A(g);
        const CMat I = CMat::Identity(dim, dim);
        const CMat B = block_sandwich(
            op, g, dim, [&](double x) -> CMat { return chi(x) * I; }, [&](double x) -> CMat { return psi(x) * I; });
        r.h.push_back(g.h);
        r.norms.push_back(op_norm(B));
    }
    r.ratios = successive_ratios(r.norms);
    r.pass = true;
    for (size_t i = 0; i < r.ratios.size(); ++i)
        if (r.norms[i + 1] > kFitFloor && !(r.ratios[i] >= 8.0)) r.pass = false;
    return r;
}

namespace {

CMat cusp_raw_matrix(const CuspParams& p, const RVec& y, double dy, double x) {
    const int n = p.n_el;
    CMat Q = CMat::Zero(n, n);
    const double k = 0.5 / (dy * dy);
    for (int i = 0; i < n; ++i) {
        Q(i, i) = 2.0 * k + 0.5 * p.omega * p.omega * y(i) * y(i) - p.gamma * std::exp(-std::abs(x - y(i)));
        if (i + 1 < n) Q(i, i + 1) = Q(i + 1, i) = -k;
    }
    return Q;
}

}  // namespace

CuspModel::CuspModel(CuspParams p)
    : p_(p), cov_(Covering::uniform(p.L, p.charts, p.chart_radius, p.margin, p.width)) {
    if (p_.n_el < 2 || p_.n_el > 64) throw std::invalid_argument("cusp: n_el must lie in [2, 64]");
    if (!(p_.flat > 0.0 && p_.reach > p_.flat)) throw std::invalid_argument("cusp: need 0 < flat < reach");
    if (!(p_.chart_radius < p_.flat))
        throw ModelError("cusp: chart radius must stay below the flat radius of the chart map");
    for (int j = 0; j < cov_.size(); ++j)
        if (std::abs(cov_.chart(j).center) + p_.reach >= p_.Y)
            throw ModelError("cusp: chart map support leaves the electron box");
    dy_ = 2.0 * p_.Y / (p_.n_el + 1);
    y_.resize(p_.n_el);
    for (int i = 0; i < p_.n_el; ++i) y_(i) = -p_.Y + (i + 1) * dy_;
    model_.name = "cusp";
    model_.N_el = p_.n_el;
    model_.cluster = {0};
    const CuspParams pc = p_;
    const RVec yc = y_;
    const double dyc = dy_;
    model_.Q = [pc, yc, dyc](double x, int m) -> CMat {
        if (m != 0) throw ModelError("cusp: the raw electronic operator has no x-derivatives at the cusp");
        return cusp_raw_matrix(pc, yc, dyc, x);
    };
}

double CuspModel::f(double s) const { return smooth_step((p_.reach - std::abs(s)) / (p_.reach - p_.flat)); }

double CuspModel::df(double s) const {
    const double w = p_.reach - p_.flat;
    const double v = step_derivative((p_.reach - std::abs(s)) / w) / w;
    return s > 0.0 ? -v : v;
}

double CuspModel::G(double x0, double x, double y) const { return y + (x - x0) * f(y - x0); }

double CuspModel::dG(double x0, double x, double y) const { return 1.0 + (x - x0) * df(y - x0); }

std::function<double(double)> CuspModel::pullback(double x0, double x, const std::function<double(double)>& v) const {
    return [this, x0, x, v](double y) { return std::sqrt(std::abs(dG(x0, x, y))) * v(G(x0, x, y)); };
}

CMat CuspModel::raw(double x) const { return cusp_raw_matrix(p_, y_, dy_, x); }

CMat CuspModel::conjugated(double x0, double x) const {
    const int n = p_.n_el;
    RVec Jn(n), c(n + 1);
    for (int i = 0; i < n; ++i) Jn(i) = dG(x0, x, y_(i));
    for (int i = 0; i <= n; ++i) c(i) = 1.0 / dG(x0, x, -p_.Y + (i + 0.5) * dy_);  // c(i) sits at y_{i-1/2}
    CMat Q = CMat::Zero(n, n);
    const double s = 1.0 / (dy_ * dy_);
    for (int i = 0; i < n; ++i) {
        const double ri = 1.0 / std::sqrt(Jn(i));
        Q(i, i) = 0.5 * s * (c(i) + c(i + 1)) * ri * ri;
        if (i + 1 < n) Q(i, i + 1) = Q(i + 1, i) = -0.5 * s * c(i + 1) * ri / std::sqrt(Jn(i + 1));
        const double gy = G(x0, x, y_(i));
        Q(i, i) += vext(gy) + vint(x - gy);
    }
    return Q;
}

CuspUnitarityReport cusp_unitarity(const CuspModel& m, int chart, int fine) {
    const CuspParams& p = m.params();
    const double x0 = m.covering().chart(chart).center, r = p.chart_radius;
    const double dz = 2.0 * p.Y / (fine - 1);
    auto norm2 = [&](const std::function<double(double)>& v) {
        double s = 0.0;
        for (int i = 0; i < fine; ++i) {
            const double w = (i == 0 || i == fine - 1) ? 0.5 : 1.0;
            const double val = v(-p.Y + i * dz);
            s += w * val * val;
        }
        return s * dz;
    };
    const std::vector<std::function<double(double)>> tests = {
        [x0](double y) { return std::exp(-(y - x0) * (y - x0)); },
        [x0](double y) { return (y - x0) * std::exp(-2.0 * (y - x0 - 0.3) * (y - x0 - 0.3)); },
        [&p](double y) { return std::sin(M_PI * (y + p.Y) / (2.0 * p.Y)) * std::exp(-0.25 * y * y); },
    };
    CuspUnitarityReport rep;
    rep.min_jacobian = INFINITY;
    for (int k = -4; k <= 4; ++k) {
        const double x = x0 + r * k / 4.0;
        for (int i = 0; i < fine; ++i) rep.min_jacobian = std::min(rep.min_jacobian, m.dG(x0, x, -p.Y + i * dz));
        if (rep.min_jacobian <= 0.2)
            throw ModelError(fmt::format("cusp: chart map Jacobian {} too small; chart too large", rep.min_jacobian));
        for (const auto& v : tests) {
            const double a = norm2(v);
            rep.max_defect = std::max(rep.max_defect, std::abs(norm2(m.pullback(x0, x, v)) - a) / a);
        }
    }
    rep.pass = rep.max_defect <= 1e-8;
    return rep;
}

CuspCurvatureReport cusp_curvature(const CuspModel& m, int chart, double delta0, int levels) {
    const double x0 = m.covering().chart(chart).center, r = m.params().chart_radius;
    auto curv = [](const std::function<CMat(double)>& M, double x, double d) {
        return (M(x + d) - 2.0 * M(x) + M(x - d)).cwiseAbs().maxCoeff() / (d * d);
    };
    const std::function<CMat(double)> raw = [&m](double x) { return m.raw(x); };
    const std::function<CMat(double)> conj = [&m, x0](double x) { return m.conjugated(x0, x); };
    CuspCurvatureReport rep;
    rep.raw_center = curv(raw, x0, delta0);
    rep.conj_center = curv(conj, x0, delta0);
    std::vector<double> xs;
    for (int k = -10; k <= 10; ++k) xs.push_back(x0 + r * k / 10.0);
    for (int i = 0; i < m.electron_grid().size(); ++i)
        if (std::abs(m.electron_grid()(i) - x0) <= r) xs.push_back(m.electron_grid()(i));
    double d = delta0;
    for (int i = 0; i <= levels; ++i, d *= 0.5) {
        double a = 0.0, b = 0.0;
        for (double x : xs) {
            a = std::max(a, curv(raw, x, d));
            b = std::max(b, curv(conj, x, d));
        }
        rep.delta.push_back(d);
        rep.raw_max.push_back(a);
        rep.conj_max.push_back(b);
        rep.conj_ratio = std::max(rep.conj_ratio, b / rep.conj_center);
    }
    rep.raw_growth = rep.raw_max.back() / rep.raw_center;
    rep.pass = rep.raw_growth > 1e3 && rep.conj_ratio <= 10.0;
    return rep;
}

}  // namespace bopp
