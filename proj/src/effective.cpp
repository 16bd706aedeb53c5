#include "bopp/effective.hpp"

#include <algorithm>
#include <memory>

namespace bopp {

namespace {

// Cluster reduced resolvent at the mean cluster eigenvalue.
CMat cluster_resolvent(const CMat& Q, const std::vector<int>& cluster) {
    HermEig e = herm_eig(Q);
    double lam = 0.0;
    for (int c : cluster) lam += e.values(c);
    lam /= static_cast<double>(cluster.size());
    CMat R = CMat::Zero(Q.rows(), Q.cols());
    for (int b = 0; b < Q.rows(); ++b) {
        if (std::find(cluster.begin(), cluster.end(), b) != cluster.end()) continue;
        R += e.vectors.col(b) * e.vectors.col(b).adjoint() / (lam - e.values(b));
    }
    return R;
}

}  // namespace

EffectiveSymbol effective_symbol_closed_form(const SpectralFrame& f, const ElectronicModel& m, bool equal_eigenvalues) {
    const int L = f.L, N = f.g.N;
    if (L != 1 && !equal_eigenvalues)
        throw ModelError("effective_symbol_closed_form: L > 1 requires an equal-eigenvalue cluster");
    const Kinetic& k = m.kinetic;
    const double b = k.b, c = k.c, d = k.d;
    const CMat I = CMat::Identity(L, L);

    EffectiveSymbol es;
    es.nodal.assign(3, std::vector<std::vector<CMat>>(3, std::vector<CMat>(N, CMat::Zero(L, L))));
    for (int j = 0; j < N; ++j) {
        const double x = f.g.x(j);
        const CMat& U = f.u[j];
        const CMat beta = U.adjoint() * f.du[j];
        const CMat kappa = U.adjoint() * f.d2u[j];
        const CMat Qx = m.q(x);
        const CMat lam = U.adjoint() * Qx * U;
        const CMat Rp = L == 1 ? reduced_resolvent(Qx, m.cluster) : cluster_resolvent(Qx, m.cluster);
        const CMat r = f.du[j].adjoint() * Rp * f.du[j];
        const double A = k.a(x, 0), dA = k.a(x, 1);
        auto& a0 = es.nodal[0];
        auto& a1 = es.nodal[1];
        auto& a2 = es.nodal[2];
        a0[0][j] = (c * c * A * A / (2 * b) + m.w(x)) * I + lam;
        a0[1][j] = (-c * A / b) * I;
        a0[2][j] = (1.0 / (2 * b)) * I;
        a1[0][j] = (cplx(2 * c * d * A * A, c * dA) / (2 * b)) * I + (I_c * c * A / b) * beta;
        a1[1][j] = (-d * A / b) * I - (I_c / b) * beta;
        a2[0][j] = (cplx(d * d * A * A, d * dA) / (2 * b)) * I + (I_c * d * A / b) * beta + (c * c * A * A / (b * b)) * r -
                   kappa / (2 * b);
        a2[1][j] = (-2 * c * A / (b * b)) * r;
        a2[2][j] = r / (b * b);
    }
    std::vector<SymbolPtr> coeffs;
    for (int mm = 0; mm < 3; ++mm) {
        std::vector<XFunction> xc;
        for (int p = 0; p < 3; ++p) {
            auto ip = std::make_shared<TrigInterpolant>(f.g, es.nodal[mm][p]);
            xc.push_back([ip](double x, int der) { return (*ip)(x, der); });
        }
        coeffs.push_back(xi_poly_symbol(L, std::move(xc)));
        es.provenance.push_back("closed-form");
    }
    es.series = SymbolSeries(std::move(coeffs));
    return es;
}

EffectiveOperators effective_operator_forms(const ProjectionHierarchy& H, const SpectralFrame& f, const CMat& P,
                                            OperatorRoute route) {
    const GridSpec& g = f.g;
    const ElectronicModel& m = H.model();
    const double h = g.h;
    const CMat Z = z_operator(f);
    const CMat Zs = Z.adjoint();
    EffectiveOperators r;
    r.A0 = Z * P * Zs;
    if (route == OperatorRoute::Hierarchy) {
        if (H.M() < 2) throw std::invalid_argument("effective_operator_forms: hierarchy route needs M >= 2");
        const CMat S0 = quantize(H.S()[0], g);
        const CMat P1 = quantize(H.Pi()[1], g);
        const CMat P2 = quantize(H.Pi()[2], g);
        r.A2 = (0.5 * I_c) * (Z * (S0 * P1 - P1 * S0) * Zs);
        r.A3 = (0.5 * I_c) * (Z * (S0 * P2 - P2 * S0) * Zs);
        return r;
    }
    if (f.L != 1) throw ModelError("effective_operator_forms: commutator route requires L = 1");
    const CMat Pi0 = projection_operator(f);
    const CMat Rp = reduced_resolvent_operator(m, g);
    const CMat X = P * Pi0 - Pi0 * P;
    const CMat ZXR = Z * X * Rp;
    r.A2 = -(ZXR * X * Zs) / (h * h);
    CMat K = quantize(m.kinetic.series(m.N_el), g);
    if (m.W) K += scalar_position_multiplier(g, [&m](double x) { return m.w(x); }, m.N_el);
    const CMat Y = X * Rp - Rp * X;
    const CMat T = ZXR * (Y * K - K * Y) * Zs;
    r.A3 = herm_part(T) / (h * h * h);
    return r;
}

NoH1Report no_h1_term_check(const ProjectionHierarchy& H, const SpectralFrame& f,
                            const std::function<CMat(double)>& projection, double tol) {
    const CMat S0 = quantize(H.S()[0], f.g);
    const CMat Pi = projection ? position_multiplier(f.g, projection, H.model().N_el) : projection_operator(f);
    const CMat C1 = I_c * (S0 * Pi - Pi * S0);
    const CMat Z = z_operator(f);
    NoH1Report rep;
    rep.scale = op_norm(C1);
    rep.sandwich = op_norm(Z * C1 * Z.adjoint());
    rep.ratio = rep.scale > 0.0 ? rep.sandwich / rep.scale : 0.0;
    rep.pass = rep.ratio <= tol;
    return rep;
}

}  // namespace bopp
