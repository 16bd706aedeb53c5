#pragma once

#include <optional>
#include <string>

#include "bopp/electronic.hpp"
#include "bopp/window.hpp"

namespace bopp {

enum class PropagationMethod { SplitStep, ExactDiag };

// e^{-itH/h} for a Hermitian matrix H via one eigendecomposition.
class SpectralPropagator {
public:
    SpectralPropagator() = default;
    explicit SpectralPropagator(const CMat& H, double herm_tol = 1e-8);
    explicit SpectralPropagator(HermEig e) : e_(std::move(e)) {}
    CVec apply(const CVec& v, double t, double h) const;
    const HermEig& eig() const { return e_; }

private:
    HermEig e_;
};

// Full evolution ih∂_tψ = P̂ψ on the grid.
class FullPropagator {
public:
    FullPropagator(const ElectronicModel& m, const GridSpec& g);

    const CMat& P() const { return P_; }
    const HermEig& eig() const;  // computed on first use
    GridWaveFunction exact(const GridWaveFunction& psi, double t) const;
    // Strang splitting with |t|/dt rounded up to whole steps. Requires ω independent of x.
    GridWaveFunction split(const GridWaveFunction& psi, double t, double dt) const;
    double energy(const GridWaveFunction& psi) const;

private:
    ElectronicModel m_;
    GridSpec g_;
    CMat P_;
    mutable std::optional<SpectralPropagator> exact_;
    std::vector<HermEig> node_eig_;  // Q(x_j) + W(x_j)
    RVec omega_;                     // ω(ξ_q) per FFT slot
};

struct PropagationInfo {
    double dt = 0.0;
    int halvings = 0;
    double cross_difference = 0.0;  // ‖split - exact‖ at the accepted dt
};

// Split-step starts at dt = h/20 and halves (at most 20 times) until it agrees with exact-diag within tol.
GridWaveFunction full_propagate(const FullPropagator& prop, const GridWaveFunction& psi0, double t,
                                PropagationMethod method, PropagationInfo* info = nullptr, double tol = 1e-7);

// e^{-itÂ/h}φ for a reduced (L·N) state; throws ModelError if Â is non-Hermitian beyond 1e-8.
CVec reduced_propagate(const CMat& A, const CVec& phi, double t, double h);

struct LocalizedState {
    GridWaveFunction phi;
    double outside_mass = 0.0;     // ‖φ₀‖ outside K₀ = [x₀ - r, x₀ + r]
    double projection_leak = 0.0;  // ‖(1 - Π_g)φ₀‖
    double window_leak = 0.0;      // ‖(1 - f(P̂))φ₀‖
};

// φ₀ = normalize(f(P̂)Π_g(coherent ⊗ u)). Throws ModelError unless a₀(x₀, ξ₀) lies inside {f = 1}.
LocalizedState prepare_localized_state(const ElectronicModel& m, const SpectralFrame& f, const CMat& Pi_g,
                                       const HermEig& P_eig, double x0, double xi0, const EnergyWindow& fw,
                                       double k0_radius);

// Probability mass ∫|ψ|² outside [lo, hi].
double support_mass(const GridWaveFunction& psi, double lo, double hi);

// Binary snapshot: "BOPP", u32 version, u32 N_grid, u32 N_el, then little-endian float64 (re, im) pairs.
void write_snapshot(const std::string& path, const GridWaveFunction& psi);
GridWaveFunction read_snapshot(const std::string& path, const GridSpec& g);
// CSV snapshot: x, re_0, im_0, … per node.
void write_snapshot_csv(const std::string& path, const GridWaveFunction& psi);

}  // namespace bopp
