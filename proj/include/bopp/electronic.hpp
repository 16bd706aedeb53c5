#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "bopp/grid.hpp"

namespace bopp {

// m-th derivative of a scalar function of x.
using ScalarFunction = std::function<double(double x, int m)>;

// ω(x,ξ;h) = (1/2b)[(ξ - (c+hd)A(x))² + ih(c+hd)A'(x)], split as ω₀ + hω₁ + h²ω₂.
struct Kinetic {
    double b = 1.0, c = 0.0, d = 0.0;
    ScalarFunction A;  // empty means A ≡ 0

    bool magnetic() const { return static_cast<bool>(A) && (c != 0.0 || d != 0.0); }
    double a(double x, int m) const { return A ? A(x, m) : 0.0; }
    // Scalar symbol series [ω₀, ω₁, ω₂] (trailing zero terms dropped), times I_dim.
    SymbolSeries series(int dim) const;
    double omega0(double x, double xi) const;
    double d_xi_omega0(double x, double xi) const;
};

struct ElectronicModel {
    std::string name;
    int N_el = 2;
    XFunction Q;        // Hermitian N_el×N_el, m-th derivative
    ScalarFunction W;   // external scalar potential
    std::vector<int> cluster{0};  // indices into ascending eigenvalues, contiguous
    double gap_margin = 0.1;
    Kinetic kinetic;

    int L() const { return static_cast<int>(cluster.size()); }
    CMat q(double x) const { return Q(x, 0); }
    double w(double x) const { return W ? W(x, 0) : 0.0; }
    // Gap between the cluster and the rest of σ(Q(x)).
    double gap(double x) const;
    // Checks Hermiticity and the declared gap at every node; throws ModelError.
    void validate(const GridSpec& g) const;
    // Jet of Q in the single variable x.
    Jet q_jet(double x, int order) const;
};

// Model catalog.
ElectronicModel constant_model(const RVec& levels, double w = 0.0, double period = 12.8);
// Q = [[ε, δ], [δ, -ε]], ε = a sin(2πx/P), W = w cos(2πx/P); lower level tracked.
ElectronicModel avoided_crossing_model(double a, double delta, double w, double period);
// Q = E (cos θ σ_z + sin θ σ_x), θ = θ₀ + θ₁ sin(2πx/P) + winding·2πx/P.
ElectronicModel angle_model(double E, double theta0, double theta1, int winding, double period);
// D + Σ_{m=1,2} (A_m cos(2πmx/P) + B_m sin(2πmx/P)), random Hermitian A_m, B_m of size `amp`.
ElectronicModel random_smooth_model(int n_el, const std::vector<int>& cluster, double amp, double period,
                                    std::uint64_t seed);

struct SpectralFrame {
    GridSpec g;
    int L = 1;
    RMat lambda;                 // N × L
    std::vector<CMat> u;         // N_el × L per node
    std::vector<CMat> du;        // x-derivatives
    std::vector<CMat> d2u;
    std::vector<CMat> Pi0;       // projections per node
    cplx holonomy{1.0, 0.0};     // L = 1: transported phase around the torus
    bool twisted = false;        // holonomy absorbed by a smooth phase twist
};

// Cluster projection by eigendecomposition.
CMat spectral_projection(const ElectronicModel& m, double x);
// Same projection by trapezoidal quadrature of (1/2πi)∮(z - Q)⁻¹dz on a circle.
CMat spectral_projection_contour(const ElectronicModel& m, double x, int nodes = 64);
CMat spectral_projection(const CMat& Q, const std::vector<int>& cluster);
CMat spectral_projection_contour(const CMat& Q, const std::vector<int>& cluster, int nodes = 64);

// Eigenvectors transported along the grid with Hermitian positive overlaps between
// neighbours. A holonomy with phase below `twist_threshold` is removed by a smooth twist.
// An extra gauge phase φ(x) can be applied on top (φ must be periodic).
SpectralFrame gauge_fix(const ElectronicModel& m, const GridSpec& g, double twist_threshold = 0.5,
                        const ScalarFunction& extra_phase = {});

// Π₀^⊥(λ - Q)⁻¹Π₀^⊥ for the (single) cluster eigenvalue λ at x.
CMat reduced_resolvent(const ElectronicModel& m, double x);
CMat reduced_resolvent(const CMat& Q, const std::vector<int>& cluster);

// Taylor jet of Π₀ in x (one variable) to the given order, by graded solution of
// Π² = Π and [Q, Π] = 0.
Jet projection_jet(const Jet& qjet, const std::vector<int>& cluster);

// Eigendata of Q(x) with a cluster membership mask.
struct LocalSpectrum {
    RVec lam;
    CMat V;
    std::vector<bool> in;
};
LocalSpectrum local_spectrum(const CMat& Q, const std::vector<int>& cluster);
// Y with Y_ab = R_ab/(λ_a - λ_b) when exactly one of a, b is in the cluster, zero otherwise.
CMat offdiag_solve(const LocalSpectrum& s, const CMat& R);

// Block-diagonal grid operators.
CMat projection_operator(const SpectralFrame& f);
CMat reduced_resolvent_operator(const ElectronicModel& m, const GridSpec& g);
// Z_L: (L·N) × (N_el·N), rows ⟨·, u_k(x_j)⟩.
CMat z_operator(const SpectralFrame& f);

}  // namespace bopp
