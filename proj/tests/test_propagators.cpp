#include <gtest/gtest.h>

#include <array>
#include <filesystem>
#include <fstream>
#include <random>

#include "bopp/adiabatic.hpp"
#include "bopp/propagators.hpp"
#include "bopp/semiclassics.hpp"
#include "support.hpp"

using namespace bopp;
using bopp::testing::max_abs;

namespace {

const GridSpec kGrid = bopp::testing::grid(0.2, 64);

GridWaveFunction packet(const ElectronicModel& m, const GridSpec& g, double x0 = 0.0, double xi0 = 0.5) {
    return molecular_packet(coherent_state(x0, xi0, g), gauge_fix(m, g));
}

}  // namespace

TEST(SpectralPropagator, UnitaryGroup) {
    std::mt19937_64 rng(2);
    const CMat H = bopp::testing::random_hermitian(12, rng);
    const SpectralPropagator U(H);
    CVec v = CVec::Random(12);
    EXPECT_LE((U.apply(v, 0.0, 0.1) - v).cwiseAbs().maxCoeff(), 1e-14);
    EXPECT_NEAR(U.apply(v, 1.3, 0.1).norm(), v.norm(), 1e-12);
    EXPECT_LE((U.apply(U.apply(v, 0.4, 0.1), 0.6, 0.1) - U.apply(v, 1.0, 0.1)).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_LE((U.apply(U.apply(v, 0.7, 0.1), -0.7, 0.1) - v).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(SpectralPropagator, NonHermitianInputThrows) {
    CMat H = CMat::Identity(3, 3);
    H(0, 1) = 1.0;
    EXPECT_THROW(SpectralPropagator{H}, ModelError);
}

TEST(FullPropagator, SplitStepAgreesWithExactDiagonalization) {
    const ElectronicModel m = avoided_crossing_model(1.0, 1.0, 0.3, kGrid.L);
    const FullPropagator fp(m, kGrid);
    const GridWaveFunction psi = packet(m, kGrid);
    PropagationInfo info;
    const GridWaveFunction a = full_propagate(fp, psi, 1.0, PropagationMethod::SplitStep, &info);
    const GridWaveFunction b = full_propagate(fp, psi, 1.0, PropagationMethod::ExactDiag);
    EXPECT_LE(info.cross_difference, 1e-7);
    EXPECT_LE(grid_norm(kGrid, a.values - b.values), 1e-7);
    EXPECT_NEAR(a.norm(), 1.0, 1e-10);
    EXPECT_NEAR(b.norm(), 1.0, 1e-10);
}

TEST(FullPropagator, EnergyAndNormConserved) {
    const ElectronicModel m = avoided_crossing_model(1.0, 1.0, 0.3, kGrid.L);
    const FullPropagator fp(m, kGrid);
    const GridWaveFunction psi = packet(m, kGrid);
    const GridWaveFunction e = fp.exact(psi, 2.0);
    EXPECT_NEAR(fp.energy(e), fp.energy(psi), 1e-10);
    EXPECT_NEAR(e.norm(), 1.0, 1e-12);
    const GridWaveFunction back = fp.exact(e, -2.0);
    EXPECT_LE(grid_norm(kGrid, back.values - psi.values), 1e-10);
}

TEST(FullPropagator, HarmonicPeriodReturnsToStart) {
    const GridSpec g = bopp::testing::grid(0.1, 128);
    ElectronicModel m = constant_model(RVec::Zero(1), 0.0, g.L);
    m.W = [](double x, int d) { return d == 0 ? 0.5 * x * x : d == 1 ? x : d == 2 ? 1.0 : 0.0; };
    const FullPropagator fp(m, g);
    const GridWaveFunction psi = coherent_state(1.0, 0.0, g);
    const GridWaveFunction e = fp.exact(psi, 2.0 * M_PI);
    EXPECT_NEAR(std::abs(psi.inner(e)), 1.0, 1e-6);
}

TEST(ReducedPropagate, DiagonalOperatorGivesPhases) {
    RVec d = RVec::LinSpaced(8, -1.0, 1.0);
    const CMat A = d.cast<cplx>().asDiagonal();
    const CVec phi = CVec::Ones(8);
    const CVec out = reduced_propagate(A, phi, 0.5, 0.1);
    for (int i = 0; i < 8; ++i) EXPECT_NEAR(std::abs(out(i) - std::exp(-I_c * 0.5 * d(i) / 0.1)), 0.0, 1e-13);
    EXPECT_LE((reduced_propagate(A, phi, 0.0, 0.1) - phi).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(ReducedPropagate, NonHermitianThrows) {
    CMat A = CMat::Zero(4, 4);
    A(0, 1) = 1e-3;
    EXPECT_THROW(reduced_propagate(A, CVec::Ones(4), 1.0, 0.1), ModelError);
}

TEST(ReducedPropagate, AgreesWithFullPropagatorOnAScalarModel) {
    ElectronicModel m = constant_model(RVec::Zero(1), 0.4, kGrid.L);
    const FullPropagator fp(m, kGrid);
    const GridWaveFunction psi = coherent_state(0.5, 0.3, kGrid);
    const CVec red = reduced_propagate(fp.P(), psi.values, 1.5, kGrid.h);
    EXPECT_LE(grid_norm(kGrid, red - fp.exact(psi, 1.5).values), 1e-11);
}

TEST(LocalizedState, PreparedStateIsNormalizedAndInRange) {
    const ElectronicModel m = avoided_crossing_model(1.0, 1.0, 0.3, kGrid.L);
    const SpectralFrame f = gauge_fix(m, kGrid);
    const FullPropagator fp(m, kGrid);
    const ReductionArtifacts a = reduce(ProjectionHierarchy::build(m, 2), f, fp.P());
    const EnergyWindow fw{-1e300, 2.5, 1.0};
    const LocalizedState st = prepare_localized_state(m, f, a.proj.Pi_g, fp.eig(), 0.0, 0.5, fw, 1.5);
    EXPECT_NEAR(st.phi.norm(), 1.0, 1e-12);
    // f(P̂) and Π_g commute only up to the hierarchy remainder.
    EXPECT_LE(st.projection_leak, 1e-3);
    EXPECT_LE(st.window_leak, 1e-3);
    EXPECT_LE(st.outside_mass, 0.1);
}

TEST(LocalizedState, CommutingModelHasNoLeak) {
    RVec lv(2);
    lv << -1.0, 1.0;
    const ElectronicModel m = constant_model(lv, 0.0, kGrid.L);
    const SpectralFrame f = gauge_fix(m, kGrid);
    const FullPropagator fp(m, kGrid);
    const CMat Pi = projection_operator(f);
    const LocalizedState st = prepare_localized_state(m, f, Pi, fp.eig(), 0.0, 0.0, EnergyWindow{-1e300, 2.0, 0.5}, 1.5);
    EXPECT_LE(st.projection_leak, 1e-13);
    // Only the energy tail of the packet above the plateau remains.
    EXPECT_LE(st.window_leak, 1e-6);
}

TEST(LocalizedState, EnergyOutsideThePlateauThrows) {
    const ElectronicModel m = avoided_crossing_model(1.0, 1.0, 0.3, kGrid.L);
    const SpectralFrame f = gauge_fix(m, kGrid);
    const FullPropagator fp(m, kGrid);
    const CMat Pi = projection_operator(f);
    EXPECT_THROW(prepare_localized_state(m, f, Pi, fp.eig(), 0.0, 3.0, EnergyWindow{-1e300, 1.5, 0.5}, 1.5), ModelError);
}

TEST(SupportMass, ComplementsAddUp) {
    const GridWaveFunction psi = coherent_state(0.3, 0.0, kGrid);
    EXPECT_NEAR(support_mass(psi, -100.0, 100.0), 0.0, 1e-15);
    const double a = support_mass(psi, 0.3, 100.0);
    EXPECT_NEAR(a, 0.5, 0.05);
    EXPECT_GT(support_mass(psi, 5.0, 6.0), 1.0 - 1e-10);
}

TEST(Snapshot, BinaryRoundTripAndHeader) {
    const auto dir = std::filesystem::temp_directory_path() / "bopp_snapshot_test";
    std::filesystem::create_directories(dir);
    const ElectronicModel m = avoided_crossing_model(1.0, 1.0, 0.3, kGrid.L);
    const GridWaveFunction psi = packet(m, kGrid);
    const std::string path = (dir / "psi.bin").string();
    write_snapshot(path, psi);
    const GridWaveFunction back = read_snapshot(path, kGrid);
    EXPECT_EQ(back.n_el, 2);
    EXPECT_EQ((back.values - psi.values).cwiseAbs().maxCoeff(), 0.0);
    std::ifstream in(path, std::ios::binary);
    char magic[4];
    in.read(magic, 4);
    EXPECT_EQ(std::string(magic, 4), "BOPP");
    EXPECT_EQ(std::filesystem::file_size(path), 4u + 3 * 4u + 16u * kGrid.N * 2);
    const std::string csv = (dir / "psi.csv").string();
    write_snapshot_csv(csv, psi);
    std::ifstream c(csv);
    int lines = 0;
    for (std::string l; std::getline(c, l);) ++lines;
    EXPECT_GE(lines, kGrid.N);
    std::filesystem::remove_all(dir);
}

TEST(Snapshot, GridMismatchThrows) {
    const auto dir = std::filesystem::temp_directory_path() / "bopp_snapshot_mismatch";
    std::filesystem::create_directories(dir);
    const std::string path = (dir / "psi.bin").string();
    write_snapshot(path, coherent_state(0.0, 0.0, kGrid));
    EXPECT_ANY_THROW(read_snapshot(path, bopp::testing::grid(0.1, 128)));
    std::filesystem::remove_all(dir);
}

TEST(FullPropagator, FreeSpreadingMatchesAnalyticVariance) {
    const GridSpec g = bopp::testing::grid(0.1, 128);
    const FullPropagator fp(constant_model(RVec::Zero(1), 0.0, g.L), g);
    const GridWaveFunction psi = coherent_state(-1.0, 0.5, g);
    for (double t : {0.5, 1.0, 2.0}) {
        const GridWaveFunction e = full_propagate(fp, psi, t, PropagationMethod::SplitStep);
        EXPECT_NEAR(position_variance(e), (1.0 + t * t) * 0.5 * g.h, 1e-6);
    }
}

TEST(FullPropagator, NormConservedPerUnitTimeForBothMethods) {
    const ElectronicModel m = avoided_crossing_model(1.0, 1.0, 0.3, kGrid.L);
    const FullPropagator fp(m, kGrid);
    const GridWaveFunction psi = packet(m, kGrid);
    for (auto method : {PropagationMethod::SplitStep, PropagationMethod::ExactDiag})
        EXPECT_NEAR(full_propagate(fp, psi, 1.0, method).norm(), 1.0, 1e-10);
    const GridWaveFunction s = fp.split(psi, 1.0, 0.01);
    EXPECT_LE(grid_norm(kGrid, fp.split(s, -1.0, 0.01).values - psi.values), 1e-7);
}

TEST(LocalizedState, ResidualsFallFasterThanAnyPower) {
    const ElectronicModel m = avoided_crossing_model(1.0, 1.0, 0.3, 12.8);
    const ProjectionHierarchy H = ProjectionHierarchy::build(m, 2);
    const EnergyWindow fw{-1e300, 2.5, 1.0};
    std::vector<std::array<double, 3>> r;
    for (double h : {0.2, 0.1, 0.05}) {
        const GridSpec g = bopp::testing::grid(h, static_cast<int>(std::lround(12.8 / h)));
        const SpectralFrame f = gauge_fix(m, g);
        const FullPropagator fp(m, g);
        const CMat Pg = build_projection_operator(H, g).Pi_g;
        const LocalizedState st = prepare_localized_state(m, f, Pg, fp.eig(), 0.0, 0.5, fw, 1.5);
        r.push_back({st.outside_mass, st.projection_leak, st.window_leak});
    }
    for (size_t i = 0; i + 1 < r.size(); ++i)
        for (int k = 0; k < 3; ++k) EXPECT_GE(r[i][k] / r[i + 1][k], 8.0) << "residual " << k << " halving " << i;
}
