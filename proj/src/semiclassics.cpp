#include "bopp/semiclassics.hpp"

#include <algorithm>
#include <array>
#include <cmath>

namespace bopp {

const TrajectorySample& Trajectory::at(double t) const {
    if (samples.empty()) throw std::invalid_argument("Trajectory: empty");
    long k = std::lround(t / dt);
    k = std::clamp<long>(k, 0, static_cast<long>(samples.size()) - 1);
    return samples[k];
}

double Trajectory::symplectic_defect() const {
    Mat2 J;
    J << 0, 1, -1, 0;
    double d = 0.0;
    for (const auto& s : samples) d = std::max(d, (s.F.transpose() * J * s.F - J).cwiseAbs().maxCoeff());
    return d;
}

double Trajectory::energy_drift() const {
    double d = 0.0;
    const double e0 = samples.front().energy;
    for (const auto& s : samples) d = std::max(d, std::abs(s.energy - e0) / std::max(1.0, std::abs(e0)));
    return d;
}

double Trajectory::min_im_gamma() const {
    double m = INFINITY;
    for (const auto& s : samples) m = std::min(m, s.Gamma.imag());
    return m;
}

SymbolPtr band_symbol(const ElectronicModel& m) {
    if (m.L() != 1) throw ModelError("band_symbol: a single tracked level is required");
    SymbolPtr om = m.kinetic.series(1)[0];
    ElectronicModel mm = m;
    return lambda_symbol(1, 1, PhaseSymbol::kUnlimited, 2, [mm, om](const RVec& x, const RVec& xi, int order) {
        Jet j = om->jet(x, xi, order);
        Jet q(2, order, mm.N_el, mm.N_el);
        for (int k = 0; k <= order; ++k) q.coeff({k, 0}) = mm.Q(x(0), k) / factorial(k);
        Jet qp = q * projection_jet(q, mm.cluster);
        for (int k = 0; k <= order; ++k) {
            cplx v = qp.coeff({k, 0}).trace();
            if (mm.W) v += mm.W(x(0), k) / factorial(k);
            j.coeff({k, 0})(0, 0) += v;
        }
        return j;
    });
}

namespace {

using State = std::array<double, 7>;  // x, ξ, S, F00, F01, F10, F11

struct Derivs {
    double a, ax, axi, axx, axxi, axixi;
};

Derivs derivs(const PhaseSymbol& a0, double x, double xi) {
    RVec X(1), XI(1);
    X(0) = x;
    XI(0) = xi;
    Jet j = a0.jet(X, XI, 2);
    auto c = [&j](int p, int q) { return j.coeff({p, q})(0, 0).real(); };
    return {c(0, 0), c(1, 0), c(0, 1), 2.0 * c(2, 0), c(1, 1), 2.0 * c(0, 2)};
}

State rhs(const PhaseSymbol& a0, const State& y) {
    Derivs d = derivs(a0, y[0], y[1]);
    // Ḟ = J H F, J = [[0, 1], [-1, 0]], H = Hess a₀.
    const double h00 = d.axx, h01 = d.axxi, h11 = d.axixi;
    const double f00 = y[3], f01 = y[4], f10 = y[5], f11 = y[6];
    const double g00 = h00 * f00 + h01 * f10, g01 = h00 * f01 + h01 * f11;
    const double g10 = h01 * f00 + h11 * f10, g11 = h01 * f01 + h11 * f11;
    return {d.axi, -d.ax, d.axi * y[1] - d.a, g10, g11, -g00, -g01};
}

State rk4(const PhaseSymbol& a0, const State& y, double dt) {
    auto add = [](const State& a, const State& b, double s) {
        State r;
        for (int i = 0; i < 7; ++i) r[i] = a[i] + s * b[i];
        return r;
    };
    State k1 = rhs(a0, y);
    State k2 = rhs(a0, add(y, k1, dt / 2));
    State k3 = rhs(a0, add(y, k2, dt / 2));
    State k4 = rhs(a0, add(y, k3, dt));
    State r;
    for (int i = 0; i < 7; ++i) r[i] = y[i] + dt / 6.0 * (k1[i] + 2 * k2[i] + 2 * k3[i] + k4[i]);
    return r;
}

double energy(const PhaseSymbol& a0, const State& y) { return derivs(a0, y[0], y[1]).a; }

}  // namespace

Trajectory hamilton_flow(const PhaseSymbol& a0, double x0, double xi0, double T, double dt) {
    if (!(dt > 0.0)) throw std::invalid_argument("hamilton_flow: dt must be positive");
    if (a0.dim() != 1 || a0.nuc_dim() != 1) throw std::invalid_argument("hamilton_flow: scalar symbol with n = 1");
    const long steps = std::lround(std::abs(T) / dt);
    const double sdt = T < 0 ? -dt : dt;
    Trajectory tr;
    tr.dt = sdt;
    State y{x0, xi0, 0.0, 1.0, 0.0, 0.0, 1.0};
    cplx amp_prev(1.0, 0.0);
    auto record = [&](double t) {
        TrajectorySample s;
        s.t = t;
        s.x = y[0];
        s.xi = y[1];
        s.delta = y[2] + 0.5 * (x0 * xi0 - y[0] * y[1]);
        s.F << y[3], y[4], y[5], y[6];
        const cplx z(y[3], y[4]);
        s.Gamma = cplx(y[5], y[6]) / z;
        cplx a = 1.0 / std::sqrt(z);
        if (std::abs(a + amp_prev) < std::abs(a - amp_prev)) a = -a;
        s.amp = amp_prev = a;
        s.energy = energy(a0, y);
        tr.samples.push_back(s);
    };
    record(0.0);
    for (long n = 0; n < steps; ++n) {
        int k = 0;
        for (;; ++k) {
            if (k > 20) throw ModelError("hamilton_flow: energy drift per step exceeds 1e-10 after 20 halvings");
            const int sub = 1 << k;
            const double h = sdt / sub;
            State z = y;
            bool ok = true;
            for (int i = 0; i < sub && ok; ++i) {
                const double e0 = energy(a0, z);
                State zn = rk4(a0, z, h);
                if (std::abs(energy(a0, zn) - e0) > 1e-10 * std::max(1.0, std::abs(e0))) ok = false;
                z = zn;
            }
            if (ok) {
                y = z;
                break;
            }
        }
        tr.max_halvings = std::max(tr.max_halvings, k);
        record((n + 1) * sdt);
    }
    return tr;
}

double escape_time(const Trajectory& traj, double lo, double hi) {
    const auto& s = traj.samples;
    for (size_t i = 1; i < s.size(); ++i) {
        const double x = s[i].x;
        if (x > lo && x < hi) continue;
        const double edge = x <= lo ? lo : hi;
        const double w = (edge - s[i - 1].x) / (x - s[i - 1].x);
        return s[i - 1].t + w * (s[i].t - s[i - 1].t);
    }
    return s.back().t;
}

GridWaveFunction coherent_state(double x0, double xi0, const GridSpec& g) {
    g.validate();
    GridWaveFunction psi(g, 1);
    const double h = g.h, pre = std::pow(M_PI * h, -0.25);
    for (int j = 0; j < g.N; ++j) {
        const double x = g.x(j);
        psi.values(j) = pre * std::exp(cplx(-(x - x0) * (x - x0) / (2 * h), x * xi0 / h));
    }
    const int edge = std::max(1, g.N / 20);
    double m = 0.0;
    for (int j = 0; j < edge; ++j) m += std::norm(psi.values(j)) + std::norm(psi.values(g.N - 1 - j));
    if (m * g.dx() > 1e-10) throw ModelError("coherent_state: packet mass at the grid boundary exceeds 1e-10");
    psi.normalize();
    return psi;
}

double position_expectation(const GridWaveFunction& psi) {
    double s = 0.0, w = 0.0;
    for (int j = 0; j < psi.g.N; ++j)
        for (int a = 0; a < psi.n_el; ++a) {
            const double p = std::norm(psi.values(j * psi.n_el + a));
            s += p * psi.g.x(j);
            w += p;
        }
    return s / w;
}

double position_variance(const GridWaveFunction& psi) {
    const double mu = position_expectation(psi);
    double s = 0.0, w = 0.0;
    for (int j = 0; j < psi.g.N; ++j)
        for (int a = 0; a < psi.n_el; ++a) {
            const double p = std::norm(psi.values(j * psi.n_el + a));
            s += p * (psi.g.x(j) - mu) * (psi.g.x(j) - mu);
            w += p;
        }
    return s / w;
}

double momentum_expectation(const GridWaveFunction& psi) {
    CVec v = dft_channels(psi.values, psi.n_el);
    double s = 0.0, w = 0.0;
    for (int q = 0; q < psi.g.N; ++q)
        for (int a = 0; a < psi.n_el; ++a) {
            const double p = std::norm(v(q * psi.n_el + a));
            s += p * psi.g.xi(q);
            w += p;
        }
    return s / w;
}

GridWaveFunction propagate_gaussian(const Trajectory& traj, double t, const GridSpec& g) {
    const TrajectorySample& s = traj.at(t);
    if (std::abs(s.t - t) > 0.5 * std::abs(traj.dt) + 1e-12)
        throw std::invalid_argument("propagate_gaussian: t outside the trajectory");
    if (!(s.Gamma.imag() > 0.0)) throw ModelError("propagate_gaussian: Im Γ lost definiteness");
    const TrajectorySample& s0 = traj.samples.front();
    const double h = g.h;
    GridWaveFunction psi(g, 1);
    const cplx glob = std::exp(cplx(0.0, (s.delta + 0.5 * s0.x * s0.xi) / h)) * s.amp;
    for (int j = 0; j < g.N; ++j) {
        const double x = g.x(j), y = x - s.x;
        psi.values(j) = glob * std::exp(I_c * (s.xi * (x - 0.5 * s.x) + 0.5 * s.Gamma * y * y) / h);
    }
    psi.normalize();
    return psi;
}

GridWaveFunction molecular_packet(const GridWaveFunction& scalar, const SpectralFrame& f) {
    if (f.L != 1) throw ModelError("molecular_packet: L = 1 required");
    const int d = static_cast<int>(f.u[0].rows());
    GridWaveFunction r(scalar.g, d);
    for (int j = 0; j < scalar.g.N; ++j) r.values.segment(j * d, d) = scalar.values(j) * f.u[j].col(0);
    return r;
}

}  // namespace bopp
