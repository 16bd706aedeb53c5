#include "bopp/propagators.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>

#include "bopp/adiabatic.hpp"
#include "bopp/semiclassics.hpp"

namespace bopp {

SpectralPropagator::SpectralPropagator(const CMat& H, double herm_tol) {
    if (hermiticity_defect(H) > herm_tol) throw ModelError("SpectralPropagator: operator is not Hermitian");
    e_ = herm_eig(H);
}

CVec SpectralPropagator::apply(const CVec& v, double t, double h) const {
    CVec c = e_.vectors.adjoint() * v;
    for (int k = 0; k < c.size(); ++k) c(k) *= std::polar(1.0, -t * e_.values(k) / h);
    return e_.vectors * c;
}

FullPropagator::FullPropagator(const ElectronicModel& m, const GridSpec& g) : m_(m), g_(g) {
    g.validate();
    P_ = hamiltonian_operator(m, g);
    node_eig_.reserve(g.N);
    for (int j = 0; j < g.N; ++j) {
        CMat v = m.q(g.x(j));
        v += m.w(g.x(j)) * CMat::Identity(m.N_el, m.N_el);
        node_eig_.push_back(herm_eig(v));
    }
    omega_.resize(g.N);
    for (int q = 0; q < g.N; ++q) omega_(q) = m.kinetic.omega0(0.0, g.xi(q));
}

const HermEig& FullPropagator::eig() const {
    if (!exact_) exact_.emplace(P_);
    return exact_->eig();
}

GridWaveFunction FullPropagator::exact(const GridWaveFunction& psi, double t) const {
    eig();
    return GridWaveFunction(g_, psi.n_el, exact_->apply(psi.values, t, g_.h));
}

GridWaveFunction FullPropagator::split(const GridWaveFunction& psi, double t, double dt) const {
    if (m_.kinetic.magnetic()) throw ModelError("split-step requires a kinetic symbol independent of x");
    if (!(dt > 0.0)) throw std::invalid_argument("split: dt must be positive");
    const int d = m_.N_el, N = g_.N;
    const long steps = std::max<long>(1, static_cast<long>(std::ceil(std::abs(t) / dt - 1e-12)));
    const double s = t / static_cast<double>(steps), h = g_.h;
    CVec half(N);
    for (int q = 0; q < N; ++q) half(q) = std::polar(1.0, -0.5 * s * omega_(q) / h);
    std::vector<CMat> pot(N);
    for (int j = 0; j < N; ++j) {
        const HermEig& e = node_eig_[j];
        CVec ph(d);
        for (int a = 0; a < d; ++a) ph(a) = std::polar(1.0, -s * e.values(a) / h);
        pot[j] = e.vectors * ph.asDiagonal() * e.vectors.adjoint();
    }
    CVec v = psi.values;
    auto kinetic = [&](CVec& u) {
        CVec f = dft_channels(u, d);
        for (int q = 0; q < N; ++q) f.segment(q * d, d) *= half(q);
        u = idft_channels(f, d);
    };
    for (long n = 0; n < steps; ++n) {
        kinetic(v);
        for (int j = 0; j < N; ++j) v.segment(j * d, d) = pot[j] * v.segment(j * d, d);
        kinetic(v);
    }
    return GridWaveFunction(g_, d, v);
}

double FullPropagator::energy(const GridWaveFunction& psi) const {
    return (psi.values.dot(P_ * psi.values)).real() / psi.values.squaredNorm();
}

GridWaveFunction full_propagate(const FullPropagator& prop, const GridWaveFunction& psi0, double t,
                                PropagationMethod method, PropagationInfo* info, double tol) {
    if (method == PropagationMethod::ExactDiag) {
        if (info) *info = PropagationInfo{};
        return prop.exact(psi0, t);
    }
    const GridWaveFunction ref = prop.exact(psi0, t);
    double dt = psi0.g.h / 20.0;
    for (int k = 0; k <= 20; ++k, dt *= 0.5) {
        GridWaveFunction r = prop.split(psi0, t, dt);
        const double diff = grid_norm(psi0.g, r.values - ref.values);
        if (diff <= tol) {
            if (info) *info = PropagationInfo{dt, k, diff};
            return r;
        }
    }
    throw ModelError("full_propagate: split-step does not reach the exact-diag reference after 20 halvings");
}

CVec reduced_propagate(const CMat& A, const CVec& phi, double t, double h) {
    return SpectralPropagator(A).apply(phi, t, h);
}

LocalizedState prepare_localized_state(const ElectronicModel& m, const SpectralFrame& f, const CMat& Pi_g,
                                       const HermEig& P_eig, double x0, double xi0, const EnergyWindow& fw,
                                       double k0_radius) {
    const double e = m.kinetic.omega0(x0, xi0) + herm_eig(m.q(x0)).values(m.cluster[0]) + m.w(x0);
    if (e < fw.plateau_lo() || e > fw.plateau_hi())
        throw ModelError(fmt::format("prepare_localized_state: packet energy {} outside the plateau of f", e));
    const GridSpec& g = f.g;
    GridWaveFunction psi = molecular_packet(coherent_state(x0, xi0, g), f);
    const CMat F = herm_func(P_eig, [&fw](double v) { return fw(v); });
    LocalizedState s;
    s.phi = GridWaveFunction(g, m.N_el, F * (Pi_g * psi.values));
    s.phi.normalize();
    s.outside_mass = std::sqrt(support_mass(s.phi, x0 - k0_radius, x0 + k0_radius));
    s.projection_leak = grid_norm(g, s.phi.values - Pi_g * s.phi.values);
    s.window_leak = grid_norm(g, s.phi.values - F * s.phi.values);
    return s;
}

double support_mass(const GridWaveFunction& psi, double lo, double hi) {
    double m = 0.0;
    for (int j = 0; j < psi.g.N; ++j) {
        const double x = psi.g.x(j);
        if (x >= lo && x <= hi) continue;
        m += psi.values.segment(j * psi.n_el, psi.n_el).squaredNorm();
    }
    return m * psi.g.dx();
}

namespace {

template <typename T>
void put_le(std::ostream& os, T v) {
    static_assert(std::endian::native == std::endian::little || std::endian::native == std::endian::big);
    unsigned char b[sizeof(T)];
    std::memcpy(b, &v, sizeof(T));
    if constexpr (std::endian::native == std::endian::big) std::reverse(b, b + sizeof(T));
    os.write(reinterpret_cast<const char*>(b), sizeof(T));
}

template <typename T>
T get_le(std::istream& is) {
    unsigned char b[sizeof(T)];
    if (!is.read(reinterpret_cast<char*>(b), sizeof(T))) throw std::runtime_error("read_snapshot: truncated file");
    if constexpr (std::endian::native == std::endian::big) std::reverse(b, b + sizeof(T));
    T v;
    std::memcpy(&v, b, sizeof(T));
    return v;
}

constexpr std::uint32_t kSnapshotVersion = 1;

}  // namespace

void write_snapshot(const std::string& path, const GridWaveFunction& psi) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("write_snapshot: cannot open " + path);
    os.write("BOPP", 4);
    put_le<std::uint32_t>(os, kSnapshotVersion);
    put_le<std::uint32_t>(os, static_cast<std::uint32_t>(psi.g.N));
    put_le<std::uint32_t>(os, static_cast<std::uint32_t>(psi.n_el));
    for (int i = 0; i < psi.values.size(); ++i) {
        put_le<double>(os, psi.values(i).real());
        put_le<double>(os, psi.values(i).imag());
    }
}

GridWaveFunction read_snapshot(const std::string& path, const GridSpec& g) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("read_snapshot: cannot open " + path);
    char magic[4];
    if (!is.read(magic, 4) || std::memcmp(magic, "BOPP", 4) != 0) throw std::runtime_error("read_snapshot: bad magic");
    if (get_le<std::uint32_t>(is) != kSnapshotVersion) throw std::runtime_error("read_snapshot: unsupported version");
    const auto n = get_le<std::uint32_t>(is);
    const auto d = get_le<std::uint32_t>(is);
    if (static_cast<int>(n) != g.N) throw std::runtime_error("read_snapshot: grid size mismatch");
    GridWaveFunction psi(g, static_cast<int>(d));
    for (int i = 0; i < psi.values.size(); ++i) {
        const double re = get_le<double>(is);
        psi.values(i) = cplx(re, get_le<double>(is));
    }
    return psi;
}

void write_snapshot_csv(const std::string& path, const GridWaveFunction& psi) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("write_snapshot_csv: cannot open " + path);
    os << "x";
    for (int a = 0; a < psi.n_el; ++a) os << fmt::format(",re_{0},im_{0}", a);
    os << '\n';
    for (int j = 0; j < psi.g.N; ++j) {
        os << fmt::format("{:.17g}", psi.g.x(j));
        for (int a = 0; a < psi.n_el; ++a) {
            const cplx v = psi.values(j * psi.n_el + a);
            os << fmt::format(",{:.17g},{:.17g}", v.real(), v.imag());
        }
        os << '\n';
    }
}

}  // namespace bopp
