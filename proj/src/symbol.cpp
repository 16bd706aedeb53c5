#include "bopp/symbol.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>
#include <string>

namespace bopp {

Jet PhaseSymbol::jet(const RVec& x, const RVec& xi, int order) const {
    if (order > max_deriv())
        throw std::invalid_argument("PhaseSymbol: derivative order " + std::to_string(order) + " exceeds max_deriv " +
                                    std::to_string(max_deriv()));
    if (x.size() != nuc_dim() || xi.size() != nuc_dim())
        throw std::invalid_argument("PhaseSymbol: point dimension mismatch");
    return compute_jet(x, xi, order);
}

CMat PhaseSymbol::eval(const RVec& x, const RVec& xi, const MultiIndex& alpha) const {
    if (static_cast<int>(alpha.size()) != 2 * nuc_dim()) throw std::invalid_argument("PhaseSymbol: bad multi-index");
    int d = 0;
    for (int a : alpha) d += a;
    return jet(x, xi, d).derivative(alpha);
}

CMat PhaseSymbol::eval(const RVec& x, const RVec& xi) const { return jet(x, xi, 0).value(); }

SymbolSeries::SymbolSeries(std::vector<SymbolPtr> coeffs) : coeffs_(std::move(coeffs)) {
    if (coeffs_.empty()) throw std::invalid_argument("SymbolSeries: empty coefficient list");
    for (const auto& c : coeffs_) {
        if (!c) throw std::invalid_argument("SymbolSeries: null coefficient");
        if (c->dim() != coeffs_[0]->dim() || c->nuc_dim() != coeffs_[0]->nuc_dim())
            throw std::invalid_argument("SymbolSeries: coefficients disagree in dim or nuclear dim");
    }
}

int SymbolSeries::min_max_deriv() const {
    int m = PhaseSymbol::kUnlimited;
    for (const auto& c : coeffs_) m = std::min(m, c->max_deriv());
    return m;
}

int SymbolSeries::xi_degree() const {
    int d = 0;
    for (const auto& c : coeffs_) {
        if (c->xi_degree() < 0) return -1;
        d = std::max(d, c->xi_degree());
    }
    return d;
}

CMat SymbolSeries::eval_sum(const RVec& x, const RVec& xi, double h) const {
    CMat s = CMat::Zero(dim(), dim());
    double hp = 1.0;
    for (const auto& c : coeffs_) {
        s += hp * c->eval(x, xi);
        hp *= h;
    }
    return s;
}

namespace {

class ConstantSymbol final : public PhaseSymbol {
public:
    ConstantSymbol(CMat c, int n) : c_(std::move(c)), n_(n) {}
    int dim() const override { return static_cast<int>(c_.rows()); }
    int nuc_dim() const override { return n_; }
    int max_deriv() const override { return kUnlimited; }
    int xi_degree() const override { return 0; }

protected:
    Jet compute_jet(const RVec&, const RVec&, int order) const override {
        Jet j(2 * n_, order, dim(), dim());
        j.coeff(0) = c_;
        return j;
    }

private:
    CMat c_;
    int n_;
};

// (1/i)^d without rounding.
cplx neg_i_pow(int d) {
    static const cplx t[4] = {{1, 0}, {0, -1}, {-1, 0}, {0, 1}};
    return t[((d % 4) + 4) % 4];
}

double binom(int n, int k) {
    if (k < 0 || k > n) return 0.0;
    double r = 1.0;
    for (int t = 1; t <= k; ++t) r = r * (n - k + t) / t;
    return r;
}

class PolynomialSymbol final : public PhaseSymbol {
public:
    PolynomialSymbol(int n, int dim, std::vector<PolyTerm> terms) : n_(n), dim_(dim), terms_(std::move(terms)) {
        for (const auto& t : terms_) {
            if (static_cast<int>(t.e.size()) != 2 * n_ || t.c.rows() != dim_ || t.c.cols() != dim_)
                throw std::invalid_argument("polynomial_symbol: term shape mismatch");
            int d = 0;
            for (int v = n_; v < 2 * n_; ++v) d += t.e[v];
            xi_deg_ = std::max(xi_deg_, d);
        }
    }
    int dim() const override { return dim_; }
    int nuc_dim() const override { return n_; }
    int max_deriv() const override { return kUnlimited; }
    int xi_degree() const override { return xi_deg_; }

protected:
    Jet compute_jet(const RVec& x, const RVec& xi, int order) const override {
        Jet j(2 * n_, order, dim_, dim_);
        RVec z(2 * n_);
        z << x, xi;
        for (int i = 0; i < j.size(); ++i) {
            const MultiIndex& k = j.table().exponent(i);
            for (const auto& t : terms_) {
                double w = 1.0;
                for (int v = 0; v < 2 * n_ && w != 0.0; ++v)
                    w *= binom(t.e[v], k[v]) * (t.e[v] >= k[v] ? std::pow(z(v), t.e[v] - k[v]) : 0.0);
                if (w != 0.0) j.coeff(i) += w * t.c;
            }
        }
        return j;
    }

private:
    int n_, dim_;
    std::vector<PolyTerm> terms_;
    int xi_deg_ = 0;
};

class XiPolySymbol final : public PhaseSymbol {
public:
    XiPolySymbol(int dim, std::vector<XFunction> c, int max_deriv) : dim_(dim), c_(std::move(c)), max_deriv_(max_deriv) {
        if (c_.empty()) throw std::invalid_argument("xi_poly_symbol: no coefficients");
    }
    int dim() const override { return dim_; }
    int nuc_dim() const override { return 1; }
    int max_deriv() const override { return max_deriv_; }
    int xi_degree() const override { return static_cast<int>(c_.size()) - 1; }

protected:
    Jet compute_jet(const RVec& x, const RVec& xi, int order) const override {
        Jet j(2, order, dim_, dim_);
        const int P = static_cast<int>(c_.size());
        for (int p = 0; p < P; ++p) {
            if (!c_[p]) continue;
            for (int ix = 0; ix <= order; ++ix) {
                CMat d = c_[p](x(0), ix) / factorial(ix);
                for (int jx = 0; jx <= std::min(p, order - ix); ++jx) {
                    double w = binom(p, jx) * std::pow(xi(0), p - jx);
                    if (w != 0.0) j.coeff({ix, jx}) += w * d;
                }
            }
        }
        return j;
    }

private:
    int dim_;
    std::vector<XFunction> c_;
    int max_deriv_;
};

class LambdaSymbol final : public PhaseSymbol {
public:
    LambdaSymbol(int dim, int n, int max_deriv, int xi_degree, JetFunction f)
        : dim_(dim), n_(n), max_deriv_(max_deriv), xi_degree_(xi_degree), f_(std::move(f)) {}
    int dim() const override { return dim_; }
    int nuc_dim() const override { return n_; }
    int max_deriv() const override { return max_deriv_; }
    int xi_degree() const override { return xi_degree_; }

protected:
    Jet compute_jet(const RVec& x, const RVec& xi, int order) const override { return f_(x, xi, order); }

private:
    int dim_, n_, max_deriv_, xi_degree_;
    JetFunction f_;
};

class LinearCombination final : public PhaseSymbol {
public:
    explicit LinearCombination(std::vector<std::pair<cplx, SymbolPtr>> t) : t_(std::move(t)) {
        if (t_.empty()) throw std::invalid_argument("linear_combination: empty");
        for (const auto& [w, s] : t_)
            if (s->dim() != t_[0].second->dim() || s->nuc_dim() != t_[0].second->nuc_dim())
                throw std::invalid_argument("linear_combination: dimension mismatch");
    }
    int dim() const override { return t_[0].second->dim(); }
    int nuc_dim() const override { return t_[0].second->nuc_dim(); }
    int max_deriv() const override {
        int m = kUnlimited;
        for (const auto& [w, s] : t_) m = std::min(m, s->max_deriv());
        return m;
    }
    int xi_degree() const override {
        int d = 0;
        for (const auto& [w, s] : t_) {
            if (s->xi_degree() < 0) return -1;
            d = std::max(d, s->xi_degree());
        }
        return d;
    }

protected:
    Jet compute_jet(const RVec& x, const RVec& xi, int order) const override {
        Jet r(2 * nuc_dim(), order, dim(), dim());
        for (const auto& [w, s] : t_) r += w * s->jet(x, xi, order);
        return r;
    }

private:
    std::vector<std::pair<cplx, SymbolPtr>> t_;
};

class MoyalCoefficient final : public PhaseSymbol {
public:
    MoyalCoefficient(SymbolSeries a, SymbolSeries b, int j) : a_(std::move(a)), b_(std::move(b)), j_(j) {}
    int dim() const override { return a_.dim(); }
    int nuc_dim() const override { return a_.nuc_dim(); }
    int max_deriv() const override {
        int m = std::min(a_.min_max_deriv(), b_.min_max_deriv());
        return m >= kUnlimited ? kUnlimited : m - j_;
    }
    int xi_degree() const override {
        int da = a_.xi_degree(), db = b_.xi_degree();
        return (da < 0 || db < 0) ? -1 : da + db;
    }

protected:
    Jet compute_jet(const RVec& x, const RVec& xi, int order) const override {
        std::vector<Jet> ja, jb;
        for (int k = 0; k <= std::min(j_, a_.order()); ++k) ja.push_back(a_[k]->jet(x, xi, order + j_ - k));
        for (int l = 0; l <= std::min(j_, b_.order()); ++l) jb.push_back(b_[l]->jet(x, xi, order + j_ - l));
        return moyal_coefficient_jet(ja, jb, j_, nuc_dim(), order);
    }

private:
    SymbolSeries a_, b_;
    int j_;
};

class AdjointCoefficient final : public PhaseSymbol {
public:
    AdjointCoefficient(SymbolSeries a, int j, bool full) : a_(std::move(a)), j_(j), full_(full) {}
    int dim() const override { return a_.dim(); }
    int nuc_dim() const override { return a_.nuc_dim(); }
    int max_deriv() const override {
        int m = a_.min_max_deriv();
        return (m >= kUnlimited || !full_) ? m : m - 2 * j_;
    }
    int xi_degree() const override { return a_.xi_degree(); }

protected:
    Jet compute_jet(const RVec& x, const RVec& xi, int order) const override {
        const int n = nuc_dim();
        if (!full_) return a_[j_]->jet(x, xi, order).adjoint();
        Jet r(2 * n, order, dim(), dim());
        for (int k = 0; k <= std::min(j_, a_.order()); ++k) {
            const int d = j_ - k;
            Jet base = a_[k]->jet(x, xi, order + 2 * d).adjoint();
            auto t = MonomialTable::get(n, d);
            for (int ia = t->begin(d); ia < t->begin(d + 1); ++ia) {
                const MultiIndex& al = t->exponent(ia);
                Jet dj = base;
                for (int v = 0; v < n; ++v) dj = dj.diff(v, al[v]).diff(n + v, al[v]);
                cplx w = neg_i_pow(d) / multi_factorial(al);
                r += w * dj;
            }
        }
        return r;
    }

private:
    SymbolSeries a_;
    int j_;
    bool full_;
};

}  // namespace

SymbolPtr constant_symbol(const CMat& c, int n) { return std::make_shared<ConstantSymbol>(c, n); }
SymbolPtr zero_symbol(int dim, int n) { return constant_symbol(CMat::Zero(dim, dim), n); }

SymbolPtr polynomial_symbol(int n, int dim, std::vector<PolyTerm> terms) {
    return std::make_shared<PolynomialSymbol>(n, dim, std::move(terms));
}

SymbolPtr xi_poly_symbol(int dim, std::vector<XFunction> coeffs, int max_deriv) {
    return std::make_shared<XiPolySymbol>(dim, std::move(coeffs), max_deriv);
}

SymbolPtr lambda_symbol(int dim, int n, int max_deriv, int xi_degree, JetFunction f) {
    return std::make_shared<LambdaSymbol>(dim, n, max_deriv, xi_degree, std::move(f));
}

SymbolPtr linear_combination(std::vector<std::pair<cplx, SymbolPtr>> terms) {
    return std::make_shared<LinearCombination>(std::move(terms));
}

SymbolSeries series_pad(const SymbolSeries& a, int order) {
    std::vector<SymbolPtr> c = a.coeffs();
    while (static_cast<int>(c.size()) <= order) c.push_back(zero_symbol(a.dim(), a.nuc_dim()));
    return SymbolSeries(std::move(c));
}

SymbolSeries series_truncate(const SymbolSeries& a, int order) {
    std::vector<SymbolPtr> c(a.coeffs().begin(), a.coeffs().begin() + std::min(order, a.order()) + 1);
    return SymbolSeries(std::move(c));
}

SymbolSeries series_sum(const SymbolSeries& a, const SymbolSeries& b, cplx wb) {
    const int m = std::max(a.order(), b.order());
    SymbolSeries pa = series_pad(a, m), pb = series_pad(b, m);
    std::vector<SymbolPtr> c;
    for (int j = 0; j <= m; ++j) c.push_back(linear_combination({{1.0, pa[j]}, {wb, pb[j]}}));
    return SymbolSeries(std::move(c));
}

SymbolSeries series_scale(const SymbolSeries& a, cplx w) {
    std::vector<SymbolPtr> c;
    for (const auto& s : a.coeffs()) c.push_back(linear_combination({{w, s}}));
    return SymbolSeries(std::move(c));
}

Jet moyal_coefficient_jet(const std::vector<Jet>& ja, const std::vector<Jet>& jb, int j, int n, int out_order) {
    const int rows = ja.front().rows(), cols = jb.front().cols();
    Jet r(2 * n, out_order, rows, cols);
    for (int k = 0; k < static_cast<int>(ja.size()) && k <= j; ++k) {
        for (int l = 0; l < static_cast<int>(jb.size()) && k + l <= j; ++l) {
            const int d = j - k - l;
            auto t = MonomialTable::get(n, d);
            for (int ia = t->begin(d); ia < t->begin(d + 1); ++ia) {
                const MultiIndex& al = t->exponent(ia);
                Jet da = ja[k], db = jb[l];
                for (int v = 0; v < n; ++v) {
                    da = da.diff(n + v, al[v]);
                    db = db.diff(v, al[v]);
                }
                cplx w = neg_i_pow(d) / multi_factorial(al);
                r += w * (da.truncated(out_order) * db.truncated(out_order));
            }
        }
    }
    return r;
}

SymbolSeries moyal_product(const SymbolSeries& a, const SymbolSeries& b, int M) {
    if (a.dim() != b.dim() || a.nuc_dim() != b.nuc_dim())
        throw std::invalid_argument("moyal_product: dimension mismatch");
    if (M < 0) throw std::invalid_argument("moyal_product: negative order");
    if (a.min_max_deriv() < M || b.min_max_deriv() < M)
        throw std::invalid_argument("moyal_product: coefficient symbols supply fewer than M derivatives");
    std::vector<SymbolPtr> c;
    for (int j = 0; j <= M; ++j) c.push_back(std::make_shared<MoyalCoefficient>(a, b, j));
    return SymbolSeries(std::move(c));
}

SymbolSeries symbol_adjoint(const SymbolSeries& a, int M, bool full) {
    if (full && a.min_max_deriv() < 2 * M)
        throw std::invalid_argument("symbol_adjoint: full adjoint needs 2M derivatives");
    std::vector<SymbolPtr> c;
    const int top = full ? M : std::min(M, a.order());
    for (int j = 0; j <= top; ++j) c.push_back(std::make_shared<AdjointCoefficient>(a, j, full));
    return SymbolSeries(std::move(c));
}

DerivativeReport verify_derivatives(const PhaseSymbol& s, int samples, double tol, std::uint64_t seed, double lo,
                                    double hi) {
    DerivativeReport rep;
    const int n = s.nuc_dim(), nv = 2 * n;
    const int top = std::min(2, s.max_deriv());
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> U(lo, hi);
    const double d = 1e-2;
    auto f = [&](const RVec& z) { return s.eval(z.head(n), z.tail(n)); };
    auto table = MonomialTable::get(nv, top);
    for (int sidx = 0; sidx < std::max(1, samples); ++sidx) {
        RVec z(nv);
        for (int v = 0; v < nv; ++v) z(v) = U(rng);
        Jet jet = s.jet(z.head(n), z.tail(n), top);
        for (int i = 1; i < table->size(); ++i) {
            const MultiIndex& al = table->exponent(i);
            // Central stencils on the (at most two) active variables.
            auto stencil = [&](double step) -> CMat {
                std::vector<int> vars;
                for (int v = 0; v < nv; ++v)
                    for (int r = 0; r < al[v]; ++r) vars.push_back(v);
                RVec e0 = RVec::Zero(nv), e1 = RVec::Zero(nv);
                e0(vars[0]) = step;
                if (vars.size() == 1) return (f(z + e0) - f(z - e0)) / (2 * step);
                e1(vars[1]) = step;
                if (vars[0] == vars[1]) return (f(z + e0) - 2.0 * f(z) + f(z - e0)) / (step * step);
                return (f(z + e0 + e1) - f(z + e0 - e1) - f(z - e0 + e1) + f(z - e0 - e1)) / (4 * step * step);
            };
            CMat fd = (4.0 * stencil(d / 2) - stencil(d)) / 3.0;
            CMat exact = jet.derivative(al);
            double scale = std::max(1.0, exact.cwiseAbs().maxCoeff());
            rep.max_rel_error = std::max(rep.max_rel_error, (fd - exact).cwiseAbs().maxCoeff() / scale);
            ++rep.checked;
        }
    }
    rep.pass = rep.max_rel_error <= tol;
    return rep;
}

}  // namespace bopp
