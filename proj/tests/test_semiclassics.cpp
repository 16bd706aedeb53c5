#include <gtest/gtest.h>

#include "bopp/adiabatic.hpp"
#include "bopp/fit.hpp"
#include "bopp/propagators.hpp"
#include "bopp/semiclassics.hpp"
#include "support.hpp"

using namespace bopp;

namespace {

ElectronicModel free_model() { return constant_model(RVec::Zero(1), 0.0, 12.8); }

ElectronicModel harmonic_model() {
    ElectronicModel m = constant_model(RVec::Zero(1), 0.0, 12.8);
    m.W = [](double x, int d) { return d == 0 ? 0.5 * x * x : d == 1 ? x : d == 2 ? 1.0 : 0.0; };
    return m;
}

ElectronicModel double_well() {
    ElectronicModel m = constant_model(RVec::Zero(1), 0.0, 12.8);
    m.W = [](double x, int d) {
        switch (d) {
            case 0: return (x * x - 1) * (x * x - 1);
            case 1: return 4 * x * (x * x - 1);
            case 2: return 12 * x * x - 4;
            case 3: return 24 * x;
            case 4: return 24.0;
            default: return 0.0;
        }
    };
    return m;
}

double l2_diff(const GridWaveFunction& a, const GridWaveFunction& b) {
    return grid_norm(a.g, a.values - b.values);
}

}  // namespace

TEST(HamiltonFlow, FreeParticleIsExact) {
    const auto a0 = band_symbol(free_model());
    const Trajectory tr = hamilton_flow(*a0, -0.5, 0.8, 2.0, 0.01);
    for (double t : {0.5, 1.0, 2.0}) {
        const TrajectorySample& s = tr.at(t);
        EXPECT_NEAR(s.x, -0.5 + 0.8 * t, 1e-12);
        EXPECT_NEAR(s.xi, 0.8, 1e-12);
        EXPECT_NEAR(s.delta, 0.0, 1e-8);
        EXPECT_NEAR(std::abs(s.Gamma - I_c / (1.0 + I_c * t)), 0.0, 1e-10);
        EXPECT_NEAR(s.F(0, 1), t, 1e-12);
    }
}

TEST(HamiltonFlow, HarmonicOscillatorKeepsGammaAndRotates) {
    const auto a0 = band_symbol(harmonic_model());
    const Trajectory tr = hamilton_flow(*a0, 1.0, 0.0, 2.0 * M_PI, 0.01);
    for (const auto& s : tr.samples) {
        EXPECT_NEAR(std::abs(s.Gamma - I_c), 0.0, 1e-8);
        EXPECT_NEAR(s.x, std::cos(s.t), 1e-8);
        EXPECT_NEAR(s.xi, -std::sin(s.t), 1e-8);
    }
    EXPECT_LE(tr.symplectic_defect(), 1e-8);
}

TEST(HamiltonFlow, InvariantsOnADoubleWellProperty) {
    const auto a0 = band_symbol(double_well());
    const Trajectory tr = hamilton_flow(*a0, -1.2, 0.6, 10.0, 0.005);
    EXPECT_LE(tr.symplectic_defect(), 1e-8);
    EXPECT_LE(tr.energy_drift(), 1e-8);
    EXPECT_GT(tr.min_im_gamma(), 0.0);
}

TEST(HamiltonFlow, RiccatiEquationHolds) {
    // Γ' = -H_xx - Γ² for H = ξ²/2 + W(x).
    const auto a0 = band_symbol(double_well());
    const double dt = 0.001;
    const Trajectory tr = hamilton_flow(*a0, -1.2, 0.6, 2.0, dt);
    for (size_t i = 1; i + 1 < tr.samples.size(); i += 97) {
        const auto& s = tr.samples[i];
        const cplx dG = (tr.samples[i + 1].Gamma - tr.samples[i - 1].Gamma) / (2 * dt);
        const cplx rhs = -(12 * s.x * s.x - 4) - s.Gamma * s.Gamma;
        EXPECT_NEAR(std::abs(dG - rhs), 0.0, 1e-4 * (1.0 + std::abs(rhs)));
    }
}

TEST(HamiltonFlow, TimeReversalReturnsToStart) {
    const auto a0 = band_symbol(double_well());
    const Trajectory fw = hamilton_flow(*a0, -1.2, 0.6, 5.0, 0.005);
    const TrajectorySample& e = fw.samples.back();
    const Trajectory bw = hamilton_flow(*a0, e.x, e.xi, -5.0, 0.005);
    EXPECT_NEAR(bw.samples.back().x, -1.2, 1e-8);
    EXPECT_NEAR(bw.samples.back().xi, 0.6, 1e-8);
    EXPECT_NEAR(bw.samples.back().delta, -e.delta, 1e-8);
}

TEST(HamiltonFlow, PhaseIsAdditiveAlongTheOrbit) {
    const auto a0 = band_symbol(double_well());
    const Trajectory full = hamilton_flow(*a0, -1.2, 0.6, 3.0, 0.005);
    const Trajectory first = hamilton_flow(*a0, -1.2, 0.6, 1.0, 0.005);
    const TrajectorySample& m = first.samples.back();
    const Trajectory second = hamilton_flow(*a0, m.x, m.xi, 2.0, 0.005);
    EXPECT_NEAR(full.samples.back().delta, m.delta + second.samples.back().delta, 1e-8);
}

TEST(EscapeTime, FreeParticleLeavesAtUnitTime) {
    const auto a0 = band_symbol(free_model());
    const Trajectory tr = hamilton_flow(*a0, 0.0, 1.0, 3.0, 0.01);
    EXPECT_NEAR(escape_time(tr, -1.0, 1.0), 1.0, 1e-9);
    EXPECT_NEAR(escape_time(tr, -10.0, 10.0), 3.0, 1e-12);
}

TEST(CoherentState, NormalizedWithRequestedMoments) {
    const GridSpec g = bopp::testing::grid(0.05, 256);
    const GridWaveFunction psi = coherent_state(0.7, -0.4, g);
    EXPECT_NEAR(psi.norm(), 1.0, 1e-12);
    EXPECT_NEAR(position_expectation(psi), 0.7, 1e-10);
    EXPECT_NEAR(momentum_expectation(psi), -0.4, 1e-10);
    EXPECT_NEAR(position_variance(psi), 0.5 * g.h, 1e-10);
}

TEST(CoherentState, PacketOnTheGridEdgeThrows) {
    const GridSpec g = bopp::testing::grid(0.2, 64);
    EXPECT_THROW(coherent_state(6.0, 0.0, g), ModelError);
}

TEST(GaussianAnsatz, ReproducesCoherentStateAtTimeZero) {
    const GridSpec g = bopp::testing::grid(0.1, 128);
    const auto a0 = band_symbol(double_well());
    const Trajectory tr = hamilton_flow(*a0, -1.2, 0.6, 1.0, 0.01);
    EXPECT_LE(l2_diff(propagate_gaussian(tr, 0.0, g), coherent_state(-1.2, 0.6, g)), 1e-12);
}

TEST(GaussianAnsatz, FreeSpreadingVariance) {
    const GridSpec g = bopp::testing::grid(0.1, 128);
    const auto a0 = band_symbol(free_model());
    const Trajectory tr = hamilton_flow(*a0, -1.0, 0.5, 2.0, 0.01);
    for (double t : {0.5, 1.0, 2.0})
        EXPECT_NEAR(position_variance(propagate_gaussian(tr, t, g)), (1.0 + t * t) * 0.5 * g.h, 1e-8);
}

TEST(GaussianAnsatz, ExactForQuadraticHamiltonians) {
    const GridSpec g = bopp::testing::grid(0.1, 128);
    for (const auto& m : {free_model(), harmonic_model()}) {
        const auto a0 = band_symbol(m);
        const Trajectory tr = hamilton_flow(*a0, -0.8, 0.5, 2.0, 0.005);
        const FullPropagator fp(m, g);
        const GridWaveFunction psi0 = coherent_state(-0.8, 0.5, g);
        for (double t : {1.0, 2.0}) EXPECT_LE(l2_diff(fp.exact(psi0, t), propagate_gaussian(tr, t, g)), 1e-7) << m.name;
    }
}

TEST(MolecularPacket, CarriesTheFrameVector) {
    const GridSpec g = bopp::testing::grid(0.2, 64);
    const ElectronicModel m = avoided_crossing_model(1.0, 1.0, 0.0, g.L);
    const SpectralFrame f = gauge_fix(m, g);
    const GridWaveFunction mp = molecular_packet(coherent_state(0.0, 0.0, g), f);
    EXPECT_EQ(mp.n_el, 2);
    EXPECT_NEAR(mp.norm(), 1.0, 1e-12);
    const CVec v = projection_operator(f) * mp.values;
    EXPECT_LE((v - mp.values).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(EscapeTime, ConfinedOrbitRunsToTheEnd) {
    const auto a0 = band_symbol(harmonic_model());
    const Trajectory tr = hamilton_flow(*a0, 0.5, 0.0, 7.0, 0.01);
    EXPECT_NEAR(escape_time(tr, -1.0, 1.0), 7.0, 1e-12);
}

TEST(MolecularPacket, ConstantFrameIsATensorProduct) {
    const GridSpec g = bopp::testing::grid(0.2, 64);
    RVec lv(2);
    lv << -1.0, 1.0;
    const SpectralFrame f = gauge_fix(constant_model(lv, 0.0, g.L), g);
    const GridWaveFunction s = coherent_state(0.0, 0.3, g);
    const GridWaveFunction mp = molecular_packet(s, f);
    EXPECT_NEAR(mp.norm(), 1.0, 1e-12);
    for (int j = 0; j < g.N; ++j) {
        EXPECT_NEAR(std::abs(mp.values(2 * j)), std::abs(s.values(j)), 1e-15);
        EXPECT_EQ(mp.values(2 * j + 1), cplx(0.0));
    }
}

TEST(MolecularPacket, OverlapWithCleanedProjectionApproachesOne) {
    // 1 - ‖Π_g ψ‖² and the orthogonal mass fall at least like h.
    const ElectronicModel m = avoided_crossing_model(1.0, 1.0, 0.3, 12.8);
    const ProjectionHierarchy H = ProjectionHierarchy::build(m, 1);
    std::vector<double> hs, defect;
    for (double h : {0.2, 0.1, 0.05, 0.025}) {
        const GridSpec g = bopp::testing::grid(h, static_cast<int>(std::lround(12.8 / h)));
        const SpectralFrame f = gauge_fix(m, g);
        const GridWaveFunction mp = molecular_packet(coherent_state(0.0, 0.5, g), f);
        const CMat Pg = build_projection_operator(H, g).Pi_g;
        const CVec v = Pg * mp.values;
        hs.push_back(h);
        defect.push_back(grid_norm(g, mp.values - v) * grid_norm(g, mp.values - v));
    }
    EXPECT_GE(fit_slope(hs, defect).slope, 0.8);
}
