#include "bopp/adiabatic.hpp"

#include <cmath>
#include <map>
#include <mutex>
#include <numeric>

namespace bopp {

SymbolSeries full_symbol(const ElectronicModel& m) {
    const int n = m.N_el;
    SymbolSeries kin = m.kinetic.series(n);
    ElectronicModel mm = m;
    SymbolPtr pot = xi_poly_symbol(n, {[mm, n](double x, int k) {
                                       CMat q = mm.Q(x, k);
                                       if (mm.W) q += mm.W(x, k) * CMat::Identity(n, n);
                                       return q;
                                   }});
    std::vector<SymbolPtr> c = kin.coeffs();
    c[0] = linear_combination({{1.0, kin[0]}, {1.0, pot}});
    return SymbolSeries(std::move(c));
}

std::vector<Rational> nu_constants(int kmax) {
    if (kmax < 1) throw std::invalid_argument("nu_constants: kmax must be >= 1");
    std::vector<Rational> nu{{1, 1}};
    for (int k = 1; k <= kmax; ++k) {
        Rational r{nu.back().num * (2 * k - 1), nu.back().den * (2 * k)};
        const long long g = std::gcd(r.num, r.den);
        nu.push_back({r.num / g, r.den / g});
    }
    return nu;
}

namespace {

Jet identity_jet(int nv, int order, int n) {
    Jet j(nv, order, n, n);
    j.coeff(0) = CMat::Identity(n, n);
    return j;
}

// Circle enclosing exactly the cluster eigenvalues.
void cluster_circle(const RVec& ev, const std::vector<int>& cluster, double& c, double& r) {
    const int lo = cluster.front(), hi = cluster.back();
    c = 0.5 * (ev(lo) + ev(hi));
    const double hw = 0.5 * (ev(hi) - ev(lo));
    double dist = INFINITY;
    if (lo > 0) dist = std::min(dist, c - ev(lo - 1));
    if (hi + 1 < ev.size()) dist = std::min(dist, ev(hi + 1) - c);
    if (!(dist > hw)) throw ModelError("contour: cluster not separated");
    r = hw > 0.0 ? std::sqrt(hw * dist) : 0.5 * dist;
}

}  // namespace

Jet contour_jet(const Jet& q_in, const Jet& P_in, const Jet& S, const LocalSpectrum& s) {
    const int order = S.order(), n = S.rows(), nv = S.nv();
    const Jet q = q_in.truncated(order), P = P_in.truncated(order);
    const Jet Pp = identity_jet(nv, order, n) - P;
    const Jet X = I_c * (P * S * Pp + Pp * S * P);
    Jet Y(nv, order, n, n);
    const CMat P0 = P.coeff(0), P0p = CMat::Identity(n, n) - P0;
    const MonomialTable& t = Y.table();
    for (int i = 0; i < Y.size(); ++i) {
        CMat rhs = X.coeff(i), D = CMat::Zero(n, n);
        for (auto [a, b] : t.splits(i)) {
            if (a == 0) continue;
            rhs -= q.coeff(a) * Y.coeff(b) - Y.coeff(b) * q.coeff(a);
            D -= P.coeff(a) * Y.coeff(b) + Y.coeff(b) * P.coeff(a);
        }
        Y.coeff(i) = P0 * D * P0 - P0p * D * P0p + offdiag_solve(s, rhs);
    }
    return Y;
}

CMat contour_term_quadrature(const CMat& Q, const std::vector<int>& cluster, const CMat& S, int nodes) {
    const int n = static_cast<int>(Q.rows());
    const CMat P = spectral_projection(Q, cluster), Pp = CMat::Identity(n, n) - P;
    const CMat X = Pp * S * P - P * S * Pp;
    double c, r;
    cluster_circle(herm_eig(Q).values, cluster, c, r);
    CMat Y = CMat::Zero(n, n);
    const CMat Id = CMat::Identity(n, n);
    for (int k = 0; k < nodes; ++k) {
        const cplx e = std::polar(1.0, 2.0 * M_PI * k / nodes);
        const CMat R = ((c + r * e) * Id - Q).inverse();
        // -(1/2π)·i r e·(2π/nodes).
        Y += (-I_c * r * e / static_cast<double>(nodes)) * (R * X * R);
    }
    return Y;
}

struct ProjectionHierarchy::Engine {
    ElectronicModel m;
    SymbolSeries p;
    int top = 0;

    struct Entry {
        int B;
        PointJets j;
    };
    mutable std::mutex mu;
    mutable std::map<std::pair<double, double>, Entry> cache;
    static constexpr size_t kCacheMax = 8192;

    // Π_k is held at order o_k; S_k, T_k at order s_k.
    int o(int k, int B) const {
        int r = B + top + 1;
        for (int j = top - 1; j >= k; --j) r += j + 1;
        return r;
    }
    int s(int k, int B) const { return k < top ? o(k + 1, B) : B; }

    PointJets compute(double x, double xi, int B) const {
        const int n = m.N_el, o0 = o(0, B);
        Jet q(2, o0, n, n);
        for (int k = 0; k <= o0; ++k) q.coeff({k, 0}) = m.Q(x, k) / factorial(k);
        const LocalSpectrum sp = local_spectrum(q.value(), m.cluster);
        RVec X(1), XI(1);
        X(0) = x;
        XI(0) = xi;
        std::vector<Jet> pj;
        for (int k = 0; k <= p.order(); ++k) pj.push_back(p[k]->jet(X, XI, o0));

        PointJets r;
        r.Pi.push_back(projection_jet(q, m.cluster));
        for (int mm = 0; mm <= top; ++mm) {
            const int ord = s(mm, B), need = ord + mm + 1;
            std::vector<Jet> pa, pis;
            for (int k = 0; k <= std::min(p.order(), mm + 1); ++k) pa.push_back(pj[k].truncated(need));
            for (int l = 0; l <= mm; ++l) pis.push_back(r.Pi[l].truncated(need));
            Jet left = moyal_coefficient_jet(pa, pis, mm + 1, 1, ord);
            Jet right = moyal_coefficient_jet(pis, pa, mm + 1, 1, ord);
            r.S.push_back(I_c * (left - right));
            r.T.push_back(moyal_coefficient_jet(pis, pis, mm + 1, 1, ord));
            if (mm == top) break;
            const Jet P = r.Pi[0].truncated(ord);
            const Jet Pp = identity_jet(2, ord, n) - P;
            const Jet& T = r.T.back();
            r.Pi.push_back(contour_jet(q, P, r.S.back(), sp) + Pp * T * Pp - P * T * P);
        }
        return r;
    }

    PointJets get(double x, double xi, int B) const {
        const auto key = std::make_pair(x, xi);
        {
            std::lock_guard<std::mutex> lock(mu);
            auto it = cache.find(key);
            if (it != cache.end() && it->second.B >= B) return it->second.j;
        }
        PointJets j = compute(x, xi, B);
        std::lock_guard<std::mutex> lock(mu);
        if (cache.size() >= kCacheMax) cache.clear();
        cache[key] = Entry{B, j};
        return j;
    }

    // Smallest base order serving coefficient k at `order`.
    int base_for_pi(int k, int order) const { return std::max(0, order - o(k, 0)); }
    int base_for_defect(int k, int order) const { return std::max(0, order - s(k, 0)); }
};

ProjectionHierarchy::ProjectionHierarchy(const ElectronicModel& m) : ProjectionHierarchy(nullptr, 0) {
    auto e = std::make_shared<Engine>();
    e->m = m;
    e->p = full_symbol(m);
    e->top = 0;
    *this = ProjectionHierarchy(e, 0);
}

ProjectionHierarchy::ProjectionHierarchy(std::shared_ptr<Engine> e, int M) : eng_(std::move(e)), M_(M) {
    if (!eng_) return;
    const int n = eng_->m.N_el;
    std::vector<SymbolPtr> pi, s, t;
    auto eng = eng_;
    for (int k = 0; k <= M; ++k) {
        pi.push_back(lambda_symbol(n, 1, PhaseSymbol::kUnlimited, k, [eng, k](const RVec& x, const RVec& xi, int order) {
            return eng->get(x(0), xi(0), eng->base_for_pi(k, order)).Pi[k].truncated(order);
        }));
        s.push_back(
            lambda_symbol(n, 1, PhaseSymbol::kUnlimited, k + 1, [eng, k](const RVec& x, const RVec& xi, int order) {
                return eng->get(x(0), xi(0), eng->base_for_defect(k, order)).S[k].truncated(order);
            }));
        t.push_back(
            lambda_symbol(n, 1, PhaseSymbol::kUnlimited, k + 1, [eng, k](const RVec& x, const RVec& xi, int order) {
                return eng->get(x(0), xi(0), eng->base_for_defect(k, order)).T[k].truncated(order);
            }));
    }
    Pi_ = SymbolSeries(std::move(pi));
    S_ = SymbolSeries(std::move(s));
    T_ = SymbolSeries(std::move(t));
}

ProjectionHierarchy ProjectionHierarchy::build(const ElectronicModel& m, int M) {
    if (M < 0) throw std::invalid_argument("ProjectionHierarchy: negative order");
    auto e = std::make_shared<Engine>();
    e->m = m;
    e->p = full_symbol(m);
    e->top = M;
    return ProjectionHierarchy(e, M);
}

ProjectionHierarchy ProjectionHierarchy::step() const {
    auto e = std::make_shared<Engine>();
    e->m = eng_->m;
    e->p = eng_->p;
    e->top = M_ + 1;
    return ProjectionHierarchy(e, M_ + 1);
}

const ElectronicModel& ProjectionHierarchy::model() const { return eng_->m; }
const SymbolSeries& ProjectionHierarchy::p() const { return eng_->p; }

ProjectionHierarchy::PointJets ProjectionHierarchy::point(double x, double xi, int order) const {
    int B = 0;
    for (int k = 0; k <= M_; ++k) B = std::max({B, eng_->base_for_pi(k, order), eng_->base_for_defect(k, order)});
    PointJets j = eng_->get(x, xi, B);
    for (auto* v : {&j.Pi, &j.S, &j.T})
        for (Jet& a : *v) a = a.truncated(order);
    return j;
}

CMat hamiltonian_operator(const ElectronicModel& m, const GridSpec& g) { return quantize(full_symbol(m), g); }

CMat quantized_projection(const ProjectionHierarchy& H, const GridSpec& g) { return quantize(H.Pi(), g); }

ProjectionBuild build_projection_operator(const CMat& Pi_hat) {
    ProjectionBuild b;
    b.Pi_hat = Pi_hat;
    b.hermiticity = op_norm(Pi_hat - Pi_hat.adjoint());
    HermEig e = herm_eig(herm_part(Pi_hat));
    b.cut_margin = INFINITY;
    CMat v(Pi_hat.rows(), 0);
    std::vector<int> keep;
    for (int i = 0; i < e.values.size(); ++i) {
        const double mu = e.values(i);
        b.cut_margin = std::min(b.cut_margin, std::abs(mu - 0.5));
        if (mu > 0.25 && mu < 0.75)
            throw ModelError("build_projection_operator: eigenvalue " + std::to_string(mu) +
                             " of the quantized projection lies in (0.25, 0.75); reduce h");
        if (mu > 0.5) keep.push_back(i);
    }
    b.rank = static_cast<int>(keep.size());
    CMat U(Pi_hat.rows(), b.rank);
    for (int k = 0; k < b.rank; ++k) U.col(k) = e.vectors.col(keep[k]);
    b.Pi_g = U * U.adjoint();
    return b;
}

ProjectionBuild build_projection_operator(const ProjectionHierarchy& H, const GridSpec& g) {
    return build_projection_operator(quantized_projection(H, g));
}

CMat nagy_intertwiner(const CMat& Pi_g, const CMat& Pi0) {
    const int n = static_cast<int>(Pi_g.rows());
    const CMat Id = CMat::Identity(n, n);
    const CMat D = Pi_g - Pi0;
    if (herm_norm(herm_part(D)) >= 1.0) throw ModelError("nagy_intertwiner: projections at distance >= 1");
    const CMat K = herm_func(Id - D * D, [](double t) { return 1.0 / std::sqrt(t); });
    return (Pi0 * Pi_g + (Id - Pi0) * (Id - Pi_g)) * K;
}

CMat reduction_map(const CMat& V, const SpectralFrame& f) { return z_operator(f) * V; }

CMat reduced_operator(const CMat& W, const CMat& P) { return W * P * W.adjoint(); }

CMat window_operator(const HermEig& P_eig, const EnergyWindow& f) {
    return herm_func(P_eig, [&f](double e) { return f(e); });
}

double commutator_defect(const HermEig& P_eig, const CMat& Pi_g, const EnergyWindow& f) {
    const CMat F = window_operator(P_eig, f);
    // i[F, Π_g] is Hermitian.
    return herm_norm(I_c * (F * Pi_g - Pi_g * F));
}

double commutator_defect(const CMat& P, const CMat& Pi_g, const EnergyWindow& f) {
    return commutator_defect(herm_eig(P), Pi_g, f);
}

double windowed_norm(const CMat& X, const CMat& G) { return op_norm(G * X * G); }

ReductionArtifacts reduce(const ProjectionHierarchy& H, const SpectralFrame& f, const CMat& P) {
    ReductionArtifacts r;
    r.proj = build_projection_operator(H, f.g);
    r.V = nagy_intertwiner(r.proj.Pi_g, projection_operator(f));
    r.W = reduction_map(r.V, f);
    r.A = reduced_operator(r.W, P);
    return r;
}

}  // namespace bopp
