#pragma once

#include <memory>
#include <vector>

#include "bopp/electronic.hpp"
#include "bopp/window.hpp"

namespace bopp {

// p = ω + Q + W as a series in h (one to three coefficients).
SymbolSeries full_symbol(const ElectronicModel& m);

struct Rational {
    long long num = 0, den = 1;
    double value() const { return static_cast<double>(num) / static_cast<double>(den); }
    bool operator==(const Rational&) const = default;
};

// ν_0 … ν_kmax, Taylor coefficients of (1 - s)^{-1/2}.
std::vector<Rational> nu_constants(int kmax);

// Pointwise off-diagonal Y with [Q, Y] = i(Π₀SΠ₀^⊥ + Π₀^⊥SΠ₀), as a Taylor jet.
// Equals -(1/2π)∮(z - Q)⁻¹[Π₀^⊥SΠ₀ - Π₀SΠ₀^⊥](z - Q)⁻¹dz.
Jet contour_jet(const Jet& q, const Jet& P, const Jet& S, const LocalSpectrum& s);
// The same double-resolvent integral by trapezoidal quadrature on a circle around the cluster.
CMat contour_term_quadrature(const CMat& Q, const std::vector<int>& cluster, const CMat& S, int nodes = 64);

// Hierarchy Π₀ … Π_M with defects S_M, T_M:
//   (Π⁽ᴹ⁾)♯² - Π⁽ᴹ⁾ = h^{M+1}T_M + …,   [p, Π⁽ᴹ⁾]♯ = -ih^{M+1}S_M + ….
// Coefficient symbols are evaluated lazily per phase-space point and cached.
class ProjectionHierarchy {
public:
    struct PointJets {
        std::vector<Jet> Pi, S, T;
    };

    explicit ProjectionHierarchy(const ElectronicModel& m);
    static ProjectionHierarchy build(const ElectronicModel& m, int M);

    ProjectionHierarchy step() const;

    int M() const { return M_; }
    const ElectronicModel& model() const;
    const SymbolSeries& p() const;
    // Π_0 … Π_M; Π_k is a polynomial of degree k in ξ.
    const SymbolSeries& Pi() const { return Pi_; }
    // S_0 … S_M and T_0 … T_M.
    const SymbolSeries& S() const { return S_; }
    const SymbolSeries& T() const { return T_; }
    std::vector<Rational> nu() const { return nu_constants(std::max(M_, 1)); }

    // Jets of every coefficient at (x, ξ), each of order >= `order`.
    PointJets point(double x, double xi, int order) const;

    struct Engine;

private:
    ProjectionHierarchy(std::shared_ptr<Engine> e, int M);
    std::shared_ptr<Engine> eng_;
    int M_;
    SymbolSeries Pi_, S_, T_;
};

// P̂ = Op(p) on the grid.
CMat hamiltonian_operator(const ElectronicModel& m, const GridSpec& g);
// Π̂ = Op(Σ_{k≤M} h^k Π_k).
CMat quantized_projection(const ProjectionHierarchy& H, const GridSpec& g);

struct ProjectionBuild {
    CMat Pi_hat;               // raw quantization
    CMat Pi_g;                 // spectral projection of (Π̂ + Π̂*)/2 onto eigenvalues > 1/2
    double hermiticity = 0.0;  // ‖Π̂ - Π̂*‖
    int rank = 0;
    double cut_margin = 0.0;   // min |μ - 1/2| over eigenvalues μ of the Hermitized Π̂
};

// Throws ModelError if an eigenvalue of the Hermitized Π̂ lies in (0.25, 0.75).
ProjectionBuild build_projection_operator(const ProjectionHierarchy& H, const GridSpec& g);
ProjectionBuild build_projection_operator(const CMat& Pi_hat);

// V = (Π₀Π_g + (1 - Π₀)(1 - Π_g))(1 - (Π_g - Π₀)²)^{-1/2}.
CMat nagy_intertwiner(const CMat& Pi_g, const CMat& Pi0);
// W = Z_L V.
CMat reduction_map(const CMat& V, const SpectralFrame& f);
// A = W P̂ W*.
CMat reduced_operator(const CMat& W, const CMat& P);

// f(P̂) by eigendecomposition of the Hermitian part of P̂.
CMat window_operator(const HermEig& P_eig, const EnergyWindow& f);
// ‖[f(P̂), Π_g]‖.
double commutator_defect(const HermEig& P_eig, const CMat& Pi_g, const EnergyWindow& f);
double commutator_defect(const CMat& P, const CMat& Pi_g, const EnergyWindow& f);
// ‖G X G‖ for a window operator G; suppresses grid-scale modes outside the energy range.
double windowed_norm(const CMat& X, const CMat& G);

struct ReductionArtifacts {
    ProjectionBuild proj;
    CMat V, W, A;
};
ReductionArtifacts reduce(const ProjectionHierarchy& H, const SpectralFrame& f, const CMat& P);

}  // namespace bopp
