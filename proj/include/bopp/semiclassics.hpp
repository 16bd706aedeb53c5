#pragma once

#include <vector>

#include "bopp/electronic.hpp"

namespace bopp {

using Mat2 = Eigen::Matrix2d;

struct TrajectorySample {
    double t = 0.0;
    double x = 0.0, xi = 0.0;
    // ∫(ẋξ - a₀)ds + (x₀ξ₀ - x_tξ_t)/2.
    double delta = 0.0;
    Mat2 F = Mat2::Identity();  // [[A, B], [C, D]], ∂(x_t, ξ_t)/∂(x₀, ξ₀)
    cplx Gamma{0.0, 1.0};       // (C + iD)(A + iB)⁻¹
    cplx amp{1.0, 0.0};         // (A + iB)^{-1/2} on the branch continuous from t = 0
    double energy = 0.0;
};

struct Trajectory {
    double dt = 0.0;  // nominal sample spacing (signed)
    int max_halvings = 0;
    std::vector<TrajectorySample> samples;

    // Sample nearest to t.
    const TrajectorySample& at(double t) const;
    double symplectic_defect() const;  // max ‖FᵀJF - J‖
    double energy_drift() const;       // max relative |E_t - E_0|
    double min_im_gamma() const;
};

// a₀ = ω₀ + λ(x) + W(x) for a single tracked level, with exact jets.
SymbolPtr band_symbol(const ElectronicModel& m);

// RK4 flow of H_{a₀} = ∂_ξa₀∂_x - ∂_xa₀∂_ξ with δ_t and Ḟ = J·Hess a₀·F. Each step is split into
// 2^k substeps, k the smallest with per-substep energy drift ≤ 1e-10 (k ≤ 20). T may be negative.
Trajectory hamilton_flow(const PhaseSymbol& a0, double x0, double xi0, double T, double dt);

// First time x_t leaves (lo, hi), linearly interpolated, or the final sample time.
double escape_time(const Trajectory& traj, double lo, double hi);

// (πh)^{-1/4}e^{ixξ₀/h - (x-x₀)²/2h}, normalized on the grid. Throws ModelError when the packet
// carries more than 1e-10 of its mass on the outer 5% of the grid at either end.
GridWaveFunction coherent_state(double x0, double xi0, const GridSpec& g);

double position_expectation(const GridWaveFunction& psi);
double momentum_expectation(const GridWaveFunction& psi);
double position_variance(const GridWaveFunction& psi);

// e^{iδ_t/h}(A+iB)^{-1/2}e^{iξ_t(x - x_t/2)/h + iΓ_t(x - x_t)²/2h}, times e^{iξ₀x₀/2h} so that t = 0
// reproduces coherent_state; L²-renormalized on the grid.
GridWaveFunction propagate_gaussian(const Trajectory& traj, double t, const GridSpec& g);

// ψ(x_j)u(x_j) with the frame's eigenvector (L = 1).
GridWaveFunction molecular_packet(const GridWaveFunction& scalar, const SpectralFrame& f);

}  // namespace bopp
