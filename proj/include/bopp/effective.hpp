#pragma once

#include <string>
#include <vector>

#include "bopp/adiabatic.hpp"

namespace bopp {

struct EffectiveSymbol {
    // L×L coefficients a₀, a₁, a₂, each a polynomial of degree ≤ 2 in ξ whose x-coefficients
    // are trigonometric interpolants of node samples.
    SymbolSeries series;
    std::vector<std::string> provenance;
    // nodal[m][p][j]: ξ^p coefficient of a_m at node j.
    std::vector<std::vector<std::vector<CMat>>> nodal;
};

// a₀ = ω₀ + λ + W, a₁ = ω₁ - i∂_ξω₀⟨u', u⟩,
// a₂ = ω₂ - i∂_ξω₁⟨u', u⟩ + (∂_ξω₀)²⟨R'u', u'⟩ - ½∂²_ξω₀⟨u'', u⟩, from the frame's gauge.
// L > 1 requires equal_eigenvalues (λ is then the cluster matrix u*Qu).
EffectiveSymbol effective_symbol_closed_form(const SpectralFrame& f, const ElectronicModel& m,
                                             bool equal_eigenvalues = false);

enum class OperatorRoute {
    Commutator,  // A₂ = h⁻²Z[P̂, Π̂₀]R'[Π̂₀, P̂]Z*, A₃ = h⁻³ Re Z[P̂, Π̂₀]R'[[[P̂, Π̂₀], R'], ω + W]Z*
    Hierarchy,   // A₂ = (i/2)Z[Ŝ₀, Π̂₁]Z*, A₃ = (i/2)Z[Ŝ₀, Π̂₂]Z*
};

struct EffectiveOperators {
    CMat A0, A2, A3;
};

// A₀ = ZP̂Z* plus the h² and h³ corrections. The hierarchy route needs M ≥ 2.
EffectiveOperators effective_operator_forms(const ProjectionHierarchy& H, const SpectralFrame& f, const CMat& P,
                                            OperatorRoute route = OperatorRoute::Commutator);

struct NoH1Report {
    double sandwich = 0.0;  // ‖Z C₁ Z*‖
    double scale = 0.0;     // ‖C₁‖
    double ratio = 0.0;
    bool pass = false;
};

// C₁ = i[Ŝ₀, Π̂₀] with Ŝ₀ = Op(S₀). A non-empty `projection` replaces Π₀(x) in C₁
// (Z keeps the frame's eigenvectors).
NoH1Report no_h1_term_check(const ProjectionHierarchy& H, const SpectralFrame& f,
                            const std::function<CMat(double)>& projection = {}, double tol = 1e-8);

}  // namespace bopp
