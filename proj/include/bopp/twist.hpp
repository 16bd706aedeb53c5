#pragma once

#include <functional>
#include <vector>

#include "bopp/electronic.hpp"
#include "bopp/fit.hpp"

namespace bopp {

// C^∞ step: 0 for t <= 0, 1 for t >= 1, built from e^{-1/t}.
double smooth_step(double t);

struct Chart {
    double center = 0.0;
    double radius = 0.0;  // radius >= L/2 means the whole torus
};

// Charts on the torus of length L with χ_j = ψ_j / Σψ_k, where ψ_j = 1 for |x - c_j| <= r_j - margin - width
// and vanishes for |x - c_j| >= r_j - margin. The fattener φ_j is 1 on |x - c_j| <= r_j - margin and vanishes
// for |x - c_j| >= r_j - margin/2.
class Covering {
public:
    Covering(double L, std::vector<Chart> charts, double margin, double width);
    // `count` charts with equally spaced centers starting at -L/2 + spacing/2.
    static Covering uniform(double L, int count, double radius, double margin, double width);

    int size() const { return static_cast<int>(charts_.size()); }
    double L() const { return L_; }
    double margin() const { return margin_; }
    const Chart& chart(int j) const { return charts_[j]; }
    bool global(int j) const { return charts_[j].radius >= 0.5 * L_; }

    double distance(int j, double x) const;  // periodic |x - c_j|
    bool contains(int j, double x) const;    // x ∈ Ω_j (open)
    double chi(int j, double x) const;
    double fattener(int j, double x) const;

    // max |Σχ_j - 1| and min χ_j over nodes.
    double partition_defect(const GridSpec& g) const;
    // min over j and nodes with χ_j > 0 of the distance to ∂Ω_j.
    double support_margin(const GridSpec& g) const;
    // Throws ModelError when the partition fails to sum to 1 within 1e-12 or a margin is not positive.
    void validate(const GridSpec& g) const;

private:
    double raw(int j, double x) const;
    double L_, margin_, width_;
    std::vector<Chart> charts_;
};

// U(x, m) = m-th x-derivative of the chart unitary.
struct ChartUnitary {
    int chart = 0;
    XFunction U;
    CMat operator()(double x) const { return U(x, 0); }
};

ChartUnitary identity_unitary(int chart, int dim);
// exp(iθ(x)G) for Hermitian G, with exact derivatives through Taylor jets.
ChartUnitary rotation_unitary(int chart, const CMat& G, ScalarFunction theta);
// max ‖U U* - I‖ over the nodes inside the chart.
double unitarity_defect(const ChartUnitary& u, const Covering& cov, const GridSpec& g);

using TwistedSymbol = std::vector<SymbolSeries>;

// Σ_j U_j⁻¹ χ_j Op(a_j) U_j φ_j.
CMat twisted_quantize(const TwistedSymbol& a, const Covering& cov, const std::vector<ChartUnitary>& units,
                      const GridSpec& g);

// ‖U_j⁻¹φ Op(a_j) U_j φ - U_k⁻¹φ Op(a_k) U_k φ‖. Throws std::invalid_argument unless φ vanishes at every
// node outside Ω_j ∩ Ω_k.
double compatibility_residual(const TwistedSymbol& a, const std::vector<ChartUnitary>& units, int j, int k,
                              const Covering& cov, const std::function<double(double)>& phi, const GridSpec& g);

// Per-chart family a_k = (U_kU_j⁻¹)♯a_j♯(U_jU_k⁻¹) truncated at M, with a_j given on chart `j`.
TwistedSymbol moyal_conjugate_family(const SymbolSeries& a, int j, const std::vector<ChartUnitary>& units, int M);

// hop(1 - cos ξ)I + V(x). On grids with L/N = h its quantization is the nearest-neighbour stencil.
SymbolPtr lattice_symbol(int dim, XFunction V, double hop = 1.0);

// ‖ad_{χ_1}…ad_{χ_n}(A)‖ using the first n cutoffs.
double iterated_commutator_norm(const CMat& A, const std::vector<std::function<double(double)>>& cutoffs, int n,
                                const GridSpec& g, int dim);

using OperatorBuilder = std::function<CMat(const GridSpec&)>;

struct CommutatorReport {
    std::vector<double> h;
    std::vector<std::vector<double>> norms;  // [n - 1][sweep index]
    std::vector<SlopeFit> fits;              // empty entry when every norm vanished
    std::vector<bool> vanishing;
    bool pass = false;
};

// Sweeps n = 1..3 and requires slope >= n - 0.2 (or identically vanishing commutators).
CommutatorReport commutator_order_check(const OperatorBuilder& A,
                                        const std::vector<std::function<double(double)>>& cutoffs,
                                        const std::vector<GridSpec>& grids, int dim);

struct DecayReport {
    std::vector<double> h, norms, ratios;
    bool pass = false;  // every halving gains >= 8x, or the norm is already below the fit floor
};

// ‖χAψ‖ over the sweep. Throws std::invalid_argument when χ and ψ share a node.
DecayReport disjoint_support_decay(const OperatorBuilder& A, const std::function<double(double)>& chi,
                                   const std::function<double(double)>& psi, const std::vector<GridSpec>& grids,
                                   int dim);

// Cusp model: electron y ∈ (-Y, Y) with Dirichlet ends and n_el interior nodes,
// Q(x) = -½∂_y² + ½ω²y² - γe^{-|x-y|}. Chart maps G_{x₀}(x, y) = y + (x - x₀)f(y - x₀),
// f = 1 for |s| <= flat, 0 for |s| >= reach.
struct CuspParams {
    double gamma = 1.0;
    double Y = 5.0;
    int n_el = 63;
    double omega = 0.5;
    double flat = 0.5;
    double reach = 2.5;
    double L = 4.2;  // nuclear torus
    int charts = 14;
    double chart_radius = 0.25;
    double margin = 0.05;
    double width = 0.1;
};

class CuspModel {
public:
    explicit CuspModel(CuspParams p);

    const CuspParams& params() const { return p_; }
    const ElectronicModel& model() const { return model_; }  // Q has no x-derivatives at the cusp
    const Covering& covering() const { return cov_; }
    const RVec& electron_grid() const { return y_; }
    double dy() const { return dy_; }

    double G(double x0, double x, double y) const;
    double dG(double x0, double x, double y) const;  // ∂_yG
    // (U_{x₀}(x)v)(y) = |∂_yG|^{1/2} v(G(x, y)).
    std::function<double(double)> pullback(double x0, double x, const std::function<double(double)>& v) const;

    CMat raw(double x) const;
    // Discretization of U_{x₀}(x)Q(x)U_{x₀}(x)⁻¹: -½J^{-1/2}∂_yJ⁻¹∂_yJ^{-1/2} + V_ext∘G + V_int(x - G).
    CMat conjugated(double x0, double x) const;

private:
    double f(double s) const;
    double df(double s) const;
    double vint(double s) const { return -p_.gamma * std::exp(-std::abs(s)); }
    double vext(double y) const { return 0.5 * p_.omega * p_.omega * y * y; }

    CuspParams p_;
    RVec y_;
    double dy_;
    ElectronicModel model_;
    Covering cov_;
};

struct CuspUnitarityReport {
    double max_defect = 0.0;  // max |‖Uv‖² - ‖v‖²| / ‖v‖² over test functions and sampled x
    double min_jacobian = 0.0;
    bool pass = false;
};

// Trapezoid quadrature on `fine` points of [-Y, Y]. Throws ModelError when ∂_yG <= 0.2 somewhere.
CuspUnitarityReport cusp_unitarity(const CuspModel& m, int chart, int fine = 20001);

struct CuspCurvatureReport {
    std::vector<double> delta;
    std::vector<double> raw_max, conj_max;  // per δ, over sampled x in the chart
    double raw_center = 0.0, conj_center = 0.0;
    double raw_growth = 0.0;  // raw_max(finest) / raw_center
    double conj_ratio = 0.0;  // max over δ of conj_max / conj_center
    bool pass = false;        // raw_growth > 1e3 and conj_ratio <= 10
};

// Second differences max_ij |M(x+δ) - 2M(x) + M(x-δ)|_ij / δ² at x = x₀ + r·k/10, k = -10..10, and at the
// electron nodes within the chart (where the raw cusp sits), for
// δ = δ₀/2^i, i = 0..levels. The center values use x = x₀ and δ = δ₀.
CuspCurvatureReport cusp_curvature(const CuspModel& m, int chart, double delta0 = 0.05, int levels = 12);

}  // namespace bopp
