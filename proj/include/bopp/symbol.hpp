#pragma once

#include <climits>
#include <cstdint>
#include <functional>
#include <memory>
#include <vector>

#include "bopp/jet.hpp"

namespace bopp {

// Matrix-valued phase-space function a(x, ξ), x, ξ ∈ Rⁿ.
// Jet variables are ordered (x_1..x_n, ξ_1..ξ_n).
class PhaseSymbol {
public:
    static constexpr int kUnlimited = INT_MAX / 4;

    virtual ~PhaseSymbol() = default;
    virtual int dim() const = 0;
    virtual int nuc_dim() const = 0;
    virtual int max_deriv() const = 0;
    // Degree in ξ when the symbol is a polynomial in ξ, otherwise -1.
    virtual int xi_degree() const { return -1; }
    // Taylor jet of total order `order` at (x, ξ); throws when order > max_deriv().
    Jet jet(const RVec& x, const RVec& xi, int order) const;
    // ∂^α a(x, ξ) with α over (x, ξ).
    CMat eval(const RVec& x, const RVec& xi, const MultiIndex& alpha) const;
    CMat eval(const RVec& x, const RVec& xi) const;

protected:
    virtual Jet compute_jet(const RVec& x, const RVec& xi, int order) const = 0;
};

using SymbolPtr = std::shared_ptr<const PhaseSymbol>;

// Formal series Σ_j h^j a_j truncated at order = coeffs.size() - 1.
class SymbolSeries {
public:
    SymbolSeries() = default;
    explicit SymbolSeries(std::vector<SymbolPtr> coeffs);

    int order() const { return static_cast<int>(coeffs_.size()) - 1; }
    int dim() const { return coeffs_.front()->dim(); }
    int nuc_dim() const { return coeffs_.front()->nuc_dim(); }
    const SymbolPtr& operator[](int j) const { return coeffs_[j]; }
    const std::vector<SymbolPtr>& coeffs() const { return coeffs_; }
    int min_max_deriv() const;
    int xi_degree() const;

    // Σ_j h^j a_j(x, ξ).
    CMat eval_sum(const RVec& x, const RVec& xi, double h) const;

private:
    std::vector<SymbolPtr> coeffs_;
};

// Derivative callback for an x-only matrix function of one variable: f^{(m)}(x).
using XFunction = std::function<CMat(double x, int m)>;

SymbolPtr constant_symbol(const CMat& c, int n = 1);
SymbolPtr zero_symbol(int dim, int n = 1);

// Matrix polynomial Σ_e C_e (x,ξ)^e with e over 2n variables.
struct PolyTerm {
    MultiIndex e;
    CMat c;
};
SymbolPtr polynomial_symbol(int n, int dim, std::vector<PolyTerm> terms);

// Σ_p c_p(x) ξ^p for n = 1 with analytic x-derivatives of each c_p.
SymbolPtr xi_poly_symbol(int dim, std::vector<XFunction> coeffs, int max_deriv = PhaseSymbol::kUnlimited);

// Arbitrary symbol from a jet callback.
using JetFunction = std::function<Jet(const RVec& x, const RVec& xi, int order)>;
SymbolPtr lambda_symbol(int dim, int n, int max_deriv, int xi_degree, JetFunction f);

// Σ w_i s_i.
SymbolPtr linear_combination(std::vector<std::pair<cplx, SymbolPtr>> terms);

// Series algebra.
SymbolSeries series_sum(const SymbolSeries& a, const SymbolSeries& b, cplx wb = 1.0);
SymbolSeries series_scale(const SymbolSeries& a, cplx w);
SymbolSeries series_truncate(const SymbolSeries& a, int order);
SymbolSeries series_pad(const SymbolSeries& a, int order);

// Coefficients of a♯b through order M.
SymbolSeries moyal_product(const SymbolSeries& a, const SymbolSeries& b, int M);

// Jet of the j-th Moyal coefficient from input coefficient jets.
// ja[k], jb[l] must have order >= out_order + j.
Jet moyal_coefficient_jet(const std::vector<Jet>& ja, const std::vector<Jet>& jb, int j, int n, int out_order);

// Pointwise conjugate transpose, or with full = true the operator-adjoint symbol
// Σ_α h^|α|/(i^|α| α!) ∂_ξ^α ∂_x^α a*, truncated at M.
SymbolSeries symbol_adjoint(const SymbolSeries& a, int M, bool full = false);

struct DerivativeReport {
    double max_rel_error = 0.0;
    int checked = 0;
    bool pass = false;
};

// Compares first and second derivatives of s against Richardson-extrapolated central
// differences of s at random points in the box [lo, hi]^{2n}.
DerivativeReport verify_derivatives(const PhaseSymbol& s, int samples, double tol, std::uint64_t seed = 7,
                                    double lo = -1.0, double hi = 1.0);

}  // namespace bopp
