#pragma once

#include <functional>

#include "bopp/symbol.hpp"

namespace bopp {

// Periodic nuclear grid: x_j = -L/2 + jL/N, ξ_k = 2πhk/L, k ∈ {-N/2, …, N/2-1}.
struct GridSpec {
    int n = 1;
    double L = 12.8;
    int N = 256;
    double h = 0.1;

    void validate() const;
    double dx() const { return L / N; }
    double x(int j) const { return -0.5 * L + j * L / N; }
    // Momentum of the FFT slot q (slots above N/2-1 hold negative k).
    double xi(int q) const { return 2.0 * M_PI * h * wavenumber(q) / L; }
    int wavenumber(int q) const { return q < N / 2 ? q : q - N; }
    RVec xs() const;
    RVec xis() const;
};

// Unnormalized forward DFT Σ_j u_j e^{-2πijq/N} and its inverse (with 1/N).
CVec dft(const CVec& u);
CVec idft(const CVec& v);

// Channel-wise transforms of node-major vectors (index j*dim + a).
CVec dft_channels(const CVec& u, int dim);
CVec idft_channels(const CVec& v, int dim);

// Dense (N·dim)² Kohn–Nirenberg quantization of Σ_m h^m a_m.
CMat quantize(const SymbolSeries& a, const GridSpec& g);
CMat quantize(const SymbolPtr& a, const GridSpec& g);
// Matrix-free application by direct summation over (x_i, ξ_k).
CVec quantize_apply(const SymbolSeries& a, const GridSpec& g, const CVec& u);

// f(hD) ⊗ I_dim.
CMat fourier_multiplier(const GridSpec& g, const std::function<cplx(double)>& f, int dim);
// Block-diagonal multiplication by m(x_j).
CMat position_multiplier(const GridSpec& g, const std::function<CMat(double)>& m, int dim);
CMat scalar_position_multiplier(const GridSpec& g, const std::function<double(double)>& m, int dim);

// Discrete L² inner product with weight dx.
double grid_norm(const GridSpec& g, const CVec& u);

// Grid samples of an N_el-channel wavefunction, node-major (index j*n_el + a).
struct GridWaveFunction {
    GridSpec g;
    int n_el = 1;
    CVec values;

    GridWaveFunction() = default;
    GridWaveFunction(const GridSpec& g_, int n_el_) : g(g_), n_el(n_el_), values(CVec::Zero(g_.N * n_el_)) {}
    GridWaveFunction(const GridSpec& g_, int n_el_, CVec v) : g(g_), n_el(n_el_), values(std::move(v)) {}
    double norm() const { return grid_norm(g, values); }
    cplx inner(const GridWaveFunction& o) const { return g.dx() * o.values.dot(values); }  // ⟨this, o⟩ linear in this
    void normalize() { values /= norm(); }
};

// Periodic trigonometric interpolant of matrix samples at the grid nodes; exact derivatives.
// The Nyquist mode is taken as a cosine so real samples give a real interpolant.
class TrigInterpolant {
public:
    TrigInterpolant(const GridSpec& g, const std::vector<CMat>& samples);
    CMat operator()(double x, int m) const;

private:
    GridSpec g_;
    int rows_, cols_;
    std::vector<CMat> coef_;  // per FFT slot
};

}  // namespace bopp
