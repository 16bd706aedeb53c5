#pragma once

#include <cmath>
#include <random>

#include "bopp/grid.hpp"
#include "bopp/linalg.hpp"
#include "bopp/symbol.hpp"

namespace bopp::testing {

inline GridSpec grid(double h, int N, double L = 12.8) {
    GridSpec g;
    g.h = h;
    g.N = N;
    g.L = L;
    return g;
}

inline double max_abs(const CMat& m) { return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff(); }

inline CMat random_hermitian(int n, std::mt19937_64& rng) {
    std::normal_distribution<double> N(0.0, 1.0);
    CMat a(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) a(i, j) = cplx(N(rng), N(rng));
    return 0.5 * (a + a.adjoint());
}

inline CMat random_unitary(int n, std::mt19937_64& rng) {
    std::normal_distribution<double> N(0.0, 1.0);
    CMat a(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) a(i, j) = cplx(N(rng), N(rng));
    Eigen::HouseholderQR<CMat> qr(a);
    return qr.householderQ() * CMat::Identity(n, n);
}

// Scalar function of one variable given by its derivative callback, lifted to an x-only symbol.
inline SymbolPtr scalar_x_symbol(const std::function<cplx(double, int)>& f, int dim = 1) {
    return xi_poly_symbol(dim, {[f, dim](double x, int m) -> CMat { return f(x, m) * CMat::Identity(dim, dim); }});
}

// e^{ikx} with all derivatives.
inline std::function<cplx(double, int)> plane_wave(double k) {
    return [k](double x, int m) { return std::pow(I_c * k, m) * std::exp(I_c * k * x); };
}

// c·cos(ξ + s) ⊗ I as a ξ-only symbol with exact jets.
inline SymbolPtr cosine_xi_symbol(double c, double s, int dim = 1) {
    return lambda_symbol(dim, 1, PhaseSymbol::kUnlimited, -1, [=](const RVec&, const RVec& xi, int order) {
        Jet j(2, order, dim, dim);
        for (int d = 0; d <= order; ++d) {
            // d-th derivative of cos is cos(θ + dπ/2).
            const double v = c * std::cos(xi(0) + s + 0.5 * M_PI * d) / factorial(d);
            j.coeff(MultiIndex{0, d}) = v * CMat::Identity(dim, dim);
        }
        return j;
    });
}

}  // namespace bopp::testing
