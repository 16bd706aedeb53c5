#include "bopp/electronic.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace bopp {

namespace {

double binom_d(int n, int k) {
    double r = 1.0;
    for (int t = 1; t <= k; ++t) r = r * (n - k + t) / t;
    return r;
}

// m-th derivative of A(x)² by Leibniz.
double a_squared(const Kinetic& k, double x, int m) {
    double s = 0.0;
    for (int j = 0; j <= m; ++j) s += binom_d(m, j) * k.a(x, j) * k.a(x, m - j);
    return s;
}

CMat scalar(int dim, cplx v) { return v * CMat::Identity(dim, dim); }

// Derivatives of cos(kx) and sin(kx).
double dcos(double k, double x, int m) {
    const double p = std::pow(k, m);
    switch (m % 4) {
        case 0: return p * std::cos(k * x);
        case 1: return -p * std::sin(k * x);
        case 2: return -p * std::cos(k * x);
        default: return p * std::sin(k * x);
    }
}
double dsin(double k, double x, int m) {
    const double p = std::pow(k, m);
    switch (m % 4) {
        case 0: return p * std::sin(k * x);
        case 1: return p * std::cos(k * x);
        case 2: return -p * std::sin(k * x);
        default: return -p * std::cos(k * x);
    }
}

CMat cluster_vectors(const CMat& Q, const std::vector<int>& cluster) {
    HermEig e = herm_eig(Q);
    CMat v(Q.rows(), cluster.size());
    for (size_t k = 0; k < cluster.size(); ++k) v.col(k) = e.vectors.col(cluster[k]);
    return v;
}

// Unitary R with (raw R)* ref Hermitian positive.
CMat polar_align(const CMat& raw, const CMat& ref) {
    CMat o = raw.adjoint() * ref;
    Eigen::JacobiSVD<CMat> svd(o, Eigen::ComputeFullU | Eigen::ComputeFullV);
    return svd.matrixU() * svd.matrixV().adjoint();
}

}  // namespace

LocalSpectrum local_spectrum(const CMat& Q, const std::vector<int>& cluster) {
    HermEig e = herm_eig(Q);
    LocalSpectrum s{e.values, e.vectors, std::vector<bool>(Q.rows(), false)};
    for (int c : cluster) {
        if (c < 0 || c >= Q.rows()) throw ModelError("cluster index out of range");
        s.in[c] = true;
    }
    return s;
}

// Off-diagonal (cluster vs rest) Y with [Q, Y] = R on those blocks.
CMat offdiag_solve(const LocalSpectrum& s, const CMat& R) {
    CMat r = s.V.adjoint() * R * s.V;
    CMat y = CMat::Zero(r.rows(), r.cols());
    for (int a = 0; a < r.rows(); ++a)
        for (int b = 0; b < r.cols(); ++b)
            if (s.in[a] != s.in[b]) y(a, b) = r(a, b) / (s.lam(a) - s.lam(b));
    return s.V * y * s.V.adjoint();
}

SymbolSeries Kinetic::series(int dim) const {
    const double b2 = 2.0 * b;
    std::vector<SymbolPtr> s;
    Kinetic k = *this;
    s.push_back(xi_poly_symbol(dim, {[k, dim, b2](double x, int m) { return scalar(dim, k.c * k.c * a_squared(k, x, m) / b2); },
                                     [k, dim, b2](double x, int m) { return scalar(dim, -2.0 * k.c * k.a(x, m) / b2); },
                                     [dim, b2](double, int m) { return scalar(dim, m == 0 ? 1.0 / b2 : 0.0); }}));
    if (!magnetic()) return SymbolSeries(std::move(s));
    s.push_back(xi_poly_symbol(
        dim, {[k, dim, b2](double x, int m) {
                  return scalar(dim, cplx(2.0 * k.c * k.d * a_squared(k, x, m), k.c * k.a(x, m + 1)) / b2);
              },
              [k, dim, b2](double x, int m) { return scalar(dim, -2.0 * k.d * k.a(x, m) / b2); }}));
    s.push_back(xi_poly_symbol(dim, {[k, dim, b2](double x, int m) {
                                   return scalar(dim, cplx(k.d * k.d * a_squared(k, x, m), k.d * k.a(x, m + 1)) / b2);
                               }}));
    return SymbolSeries(std::move(s));
}

double Kinetic::omega0(double x, double xi) const {
    const double p = xi - c * a(x, 0);
    return p * p / (2.0 * b);
}

double Kinetic::d_xi_omega0(double x, double xi) const { return (xi - c * a(x, 0)) / b; }

double ElectronicModel::gap(double x) const {
    RVec ev = herm_eig(q(x)).values;
    const int lo = cluster.front(), hi = cluster.back();
    double g = INFINITY;
    if (lo > 0) g = std::min(g, ev(lo) - ev(lo - 1));
    if (hi + 1 < N_el) g = std::min(g, ev(hi + 1) - ev(hi));
    return g;
}

void ElectronicModel::validate(const GridSpec& g) const {
    if (cluster.empty()) throw ModelError(name + ": empty cluster");
    for (size_t k = 1; k < cluster.size(); ++k)
        if (cluster[k] != cluster[k - 1] + 1) throw ModelError(name + ": cluster must be contiguous");
    for (int j = 0; j < g.N; ++j) {
        CMat qq = q(g.x(j));
        if (qq.rows() != N_el) throw ModelError(name + ": Q has wrong size");
        if (hermiticity_defect(qq) > 1e-12) throw ModelError(name + ": Q(x) not Hermitian");
        // A closed gap is rejected even when the declared margin is zero.
        if (const double gp = gap(g.x(j)); gp < gap_margin || !(gp > 1e-12))
            throw ModelError(name + ": gap below gap_margin at x = " + std::to_string(g.x(j)));
    }
}

Jet ElectronicModel::q_jet(double x, int order) const {
    Jet j(1, order, N_el, N_el);
    for (int m = 0; m <= order; ++m) j.coeff(m) = Q(x, m) / factorial(m);
    return j;
}

ElectronicModel constant_model(const RVec& levels, double w, double period) {
    ElectronicModel m;
    m.name = "constant";
    m.N_el = static_cast<int>(levels.size());
    CMat d = levels.cast<cplx>().asDiagonal();
    m.Q = [d](double, int k) { return k == 0 ? d : CMat(CMat::Zero(d.rows(), d.cols())); };
    const double kw = 2.0 * M_PI / period;
    m.W = [w, kw](double x, int k) { return w * dcos(kw, x, k); };
    m.cluster = {0};
    RVec s = levels;
    std::sort(s.data(), s.data() + s.size());
    m.gap_margin = s.size() > 1 ? 0.5 * (s(1) - s(0)) : 0.0;
    return m;
}

ElectronicModel avoided_crossing_model(double a, double delta, double w, double period) {
    ElectronicModel m;
    m.name = "avoided-crossing";
    m.N_el = 2;
    const double k = 2.0 * M_PI / period;
    m.Q = [a, delta, k](double x, int n) {
        CMat q = CMat::Zero(2, 2);
        const double e = a * dsin(k, x, n);
        q(0, 0) = e;
        q(1, 1) = -e;
        if (n == 0) q(0, 1) = q(1, 0) = delta;
        return q;
    };
    m.W = [w, k](double x, int n) { return w * dcos(k, x, n); };
    m.cluster = {0};
    m.gap_margin = 1.9 * std::abs(delta);
    return m;
}

ElectronicModel angle_model(double E, double theta0, double theta1, int winding, double period) {
    ElectronicModel m;
    m.name = "angle";
    m.N_el = 2;
    const double k = 2.0 * M_PI / period;
    const double wk = winding * k;
    // Derivatives of cos θ(x), sin θ(x) via Faà di Bruno through the jet product.
    m.Q = [E, theta0, theta1, k, wk](double x, int n) {
        Jet th(1, n, 1, 1);
        for (int r = 0; r <= n; ++r) {
            double v = theta1 * dsin(k, x, r);
            if (r == 0) v += theta0 + wk * x;
            if (r == 1) v += wk;
            th.coeff(r)(0, 0) = v / factorial(r);
        }
        // exp(iθ) jet: e^{iθ₀}·Σ (iδθ)^j / j!.
        Jet d = th;
        d.coeff(0)(0, 0) = 0.0;
        Jet e(1, n, 1, 1), p(1, n, 1, 1);
        p.coeff(0)(0, 0) = 1.0;
        for (int j = 0; j <= n; ++j) {
            e += (std::pow(I_c, j) / factorial(j)) * p;
            p = p * d;
        }
        const cplx z = std::exp(I_c * th.coeff(0)(0, 0)) * e.coeff(n)(0, 0) * factorial(n);
        CMat q(2, 2);
        q << E * z.real(), E * z.imag(), E * z.imag(), -E * z.real();
        return q;
    };
    m.W = [](double, int) { return 0.0; };
    m.cluster = {0};
    m.gap_margin = 1.9 * E;
    return m;
}

ElectronicModel random_smooth_model(int n_el, const std::vector<int>& cluster, double amp, double period,
                                    std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> nd(0.0, 1.0);
    auto herm = [&]() {
        CMat a(n_el, n_el);
        for (int i = 0; i < n_el; ++i)
            for (int j = 0; j < n_el; ++j) a(i, j) = cplx(nd(rng), nd(rng));
        CMat hmat = 0.5 * (a + a.adjoint());
        return CMat(hmat / op_norm(hmat));
    };
    // Levels spaced by 1 with the cluster block separated by a wider gap.
    RVec lv(n_el);
    double e = 0.0;
    for (int i = 0; i < n_el; ++i) {
        const bool edge = i > 0 && (i == cluster.front() || i == cluster.back() + 1);
        e += i == 0 ? 0.0 : (edge ? 2.0 : 0.6);
        lv(i) = e;
    }
    for (int i = cluster.front(); i <= cluster.back(); ++i)
        lv(i) = lv(cluster.front()) + 0.3 * (i - cluster.front());
    CMat D = lv.cast<cplx>().asDiagonal();
    std::vector<CMat> A{herm(), herm()}, B{herm(), herm()};
    const double k = 2.0 * M_PI / period;
    ElectronicModel m;
    m.name = "random-smooth";
    m.N_el = n_el;
    m.Q = [D, A, B, k, amp](double x, int n) {
        CMat q = n == 0 ? D : CMat(CMat::Zero(D.rows(), D.cols()));
        for (int r = 1; r <= 2; ++r)
            q += (amp / r) * (dcos(r * k, x, n) * A[r - 1] + dsin(r * k, x, n) * B[r - 1]);
        return q;
    };
    m.W = [](double, int) { return 0.0; };
    m.cluster = cluster;
    m.gap_margin = 2.0 - 4.0 * amp * 1.5 - 0.3 * (cluster.size() - 1);
    if (m.gap_margin <= 0.0) m.gap_margin = 0.05;
    return m;
}

CMat spectral_projection(const CMat& Q, const std::vector<int>& cluster) {
    CMat v = cluster_vectors(Q, cluster);
    return v * v.adjoint();
}

CMat spectral_projection_contour(const CMat& Q, const std::vector<int>& cluster, int nodes) {
    RVec ev = herm_eig(Q).values;
    const int lo = cluster.front(), hi = cluster.back();
    const double c = 0.5 * (ev(lo) + ev(hi));
    const double hw = 0.5 * (ev(hi) - ev(lo));
    double dist = INFINITY;
    if (lo > 0) dist = std::min(dist, c - ev(lo - 1));
    if (hi + 1 < ev.size()) dist = std::min(dist, ev(hi + 1) - c);
    if (!(dist > hw)) throw ModelError("spectral_projection_contour: cluster not separated");
    // Geometric mean balances the inner and outer quadrature errors.
    const double r = hw > 0.0 ? std::sqrt(hw * dist) : 0.5 * dist;
    const int n = static_cast<int>(Q.rows());
    CMat P = CMat::Zero(n, n);
    const CMat Id = CMat::Identity(n, n);
    for (int k = 0; k < nodes; ++k) {
        const cplx e = std::polar(1.0, 2.0 * M_PI * k / nodes);
        const cplx z = c + r * e;
        // dz = i r e dθ, and (1/2πi)·i r e·(2π/nodes) = r e / nodes.
        P += (r * e / static_cast<double>(nodes)) * (z * Id - Q).inverse();
    }
    return P;
}

CMat spectral_projection(const ElectronicModel& m, double x) {
    if (m.gap(x) < m.gap_margin) throw ModelError("spectral_projection: gap violation");
    return spectral_projection(m.q(x), m.cluster);
}

CMat spectral_projection_contour(const ElectronicModel& m, double x, int nodes) {
    if (m.gap(x) < m.gap_margin) throw ModelError("spectral_projection_contour: gap violation");
    return spectral_projection_contour(m.q(x), m.cluster, nodes);
}

CMat reduced_resolvent(const CMat& Q, const std::vector<int>& cluster) {
    if (cluster.size() != 1) throw ModelError("reduced_resolvent: requires a single tracked eigenvalue");
    HermEig e = herm_eig(Q);
    const int c = cluster[0];
    const double lam = e.values(c);
    CMat R = CMat::Zero(Q.rows(), Q.cols());
    for (int b = 0; b < Q.rows(); ++b) {
        if (b == c) continue;
        const double d = lam - e.values(b);
        if (std::abs(d) < 1e-12) throw ModelError("reduced_resolvent: gap violation");
        R += e.vectors.col(b) * e.vectors.col(b).adjoint() / d;
    }
    return R;
}

CMat reduced_resolvent(const ElectronicModel& m, double x) {
    if (m.gap(x) < m.gap_margin) throw ModelError("reduced_resolvent: gap violation");
    return reduced_resolvent(m.q(x), m.cluster);
}

SpectralFrame gauge_fix(const ElectronicModel& m, const GridSpec& g, double twist_threshold,
                        const ScalarFunction& extra_phase) {
    g.validate();
    SpectralFrame f;
    f.g = g;
    f.L = m.L();
    const int N = g.N;
    f.u.resize(N);
    f.lambda.resize(N, f.L);
    // Parallel transport from the leftmost node.
    for (int j = 0; j < N; ++j) {
        const double x = g.x(j);
        if (m.gap(x) < m.gap_margin) throw ModelError("gauge_fix: gap violation at x = " + std::to_string(x));
        HermEig e = herm_eig(m.q(x));
        CMat v(m.N_el, f.L);
        for (int k = 0; k < f.L; ++k) {
            v.col(k) = e.vectors.col(m.cluster[k]);
            f.lambda(j, k) = e.values(m.cluster[k]);
        }
        if (j > 0) {
            CMat o = f.u[j - 1].adjoint() * v;
            if (o.cwiseAbs().maxCoeff() < 0.3) throw ModelError("gauge_fix: cluster crossing detected");
            v = v * polar_align(v, f.u[j - 1]);
        }
        f.u[j] = v;
    }
    // Transport once more onto the first node to read off the holonomy.
    CMat first = cluster_vectors(m.q(g.x(0)), m.cluster);
    CMat closed = first * polar_align(first, f.u[N - 1]);
    CMat hol = f.u[0].adjoint() * closed;
    double twist_phase = 0.0;
    if (f.L == 1) {
        f.holonomy = hol(0, 0);
        const double ph = std::arg(f.holonomy);
        if (std::abs(ph) <= twist_threshold) {
            twist_phase = ph;
            f.twisted = ph != 0.0;
        }
    }
    auto total_phase = [&](double x) {
        double p = -twist_phase * (x - g.x(0)) / g.L;
        if (extra_phase) p += extra_phase(x, 0);
        return p;
    };
    for (int j = 0; j < N; ++j) f.u[j] *= std::polar(1.0, total_phase(g.x(j)));
    // Derivatives: eigenvectors at x ± s aligned to u_j, Richardson over s = δ, δ/2, δ/4 with δ = dx/4.
    f.du.resize(N);
    f.d2u.resize(N);
    f.Pi0.resize(N);
    const double delta = g.dx() / 4.0;
    for (int j = 0; j < N; ++j) {
        const double x = g.x(j);
        auto at = [&](double s) {
            CMat v = cluster_vectors(m.q(x + s), m.cluster);
            v = v * polar_align(v, f.u[j]);
            return CMat(v * std::polar(1.0, total_phase(x + s) - total_phase(x)));
        };
        CMat d1[3], d2[3];
        for (int l = 0; l < 3; ++l) {
            const double s = delta / (1 << l);
            CMat p = at(s), mm = at(-s);
            d1[l] = (p - mm) / (2 * s);
            d2[l] = (p - 2.0 * f.u[j] + mm) / (s * s);
        }
        auto rich = [](CMat* d) {
            CMat a = (4.0 * d[1] - d[0]) / 3.0, b = (4.0 * d[2] - d[1]) / 3.0;
            return CMat((16.0 * b - a) / 15.0);
        };
        f.du[j] = rich(d1);
        f.d2u[j] = rich(d2);
        f.Pi0[j] = f.u[j] * f.u[j].adjoint();
    }
    return f;
}

Jet projection_jet(const Jet& q, const std::vector<int>& cluster) {
    const int n = q.rows();
    LocalSpectrum s = local_spectrum(q.value(), cluster);
    Jet P(q.nv(), q.order(), n, n);
    {
        CMat v(n, cluster.size());
        for (size_t k = 0; k < cluster.size(); ++k) v.col(k) = s.V.col(cluster[k]);
        P.coeff(0) = v * v.adjoint();
    }
    const CMat P0 = P.coeff(0), P0p = CMat::Identity(n, n) - P0;
    const MonomialTable& t = P.table();
    for (int i = 1; i < P.size(); ++i) {
        CMat E = CMat::Zero(n, n), R = CMat::Zero(n, n);
        for (auto [a, b] : t.splits(i)) {
            if (a != 0 && b != 0) E += P.coeff(a) * P.coeff(b);
            if (a != 0) R -= q.coeff(a) * P.coeff(b) - P.coeff(b) * q.coeff(a);
        }
        P.coeff(i) = P0p * E * P0p - P0 * E * P0 + offdiag_solve(s, R);
    }
    return P;
}

CMat projection_operator(const SpectralFrame& f) {
    const int N = f.g.N, d = static_cast<int>(f.u[0].rows());
    CMat P = CMat::Zero(N * d, N * d);
    for (int j = 0; j < N; ++j) P.block(j * d, j * d, d, d) = f.Pi0[j];
    return P;
}

CMat reduced_resolvent_operator(const ElectronicModel& m, const GridSpec& g) {
    const int N = g.N, d = m.N_el;
    CMat R = CMat::Zero(N * d, N * d);
    for (int j = 0; j < N; ++j) R.block(j * d, j * d, d, d) = reduced_resolvent(m, g.x(j));
    return R;
}

CMat z_operator(const SpectralFrame& f) {
    const int N = f.g.N, d = static_cast<int>(f.u[0].rows()), L = f.L;
    CMat Z = CMat::Zero(N * L, N * d);
    for (int j = 0; j < N; ++j) Z.block(j * L, j * d, L, d) = f.u[j].adjoint();
    return Z;
}

}  // namespace bopp
