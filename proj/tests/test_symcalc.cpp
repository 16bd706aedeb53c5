#include <gtest/gtest.h>

#include <map>
#include <random>

#include "bopp/grid.hpp"
#include "bopp/symbol.hpp"
#include "support.hpp"

using namespace bopp;
using bopp::testing::max_abs;

namespace {

// Independent polynomial algebra in (x, ξ) for n = 1, used as the Moyal oracle.
using Poly = std::map<std::pair<int, int>, CMat>;

Poly dx(const Poly& p, int m) {
    Poly r;
    for (const auto& [e, c] : p) {
        if (e.first < m) continue;
        double f = 1.0;
        for (int i = 0; i < m; ++i) f *= e.first - i;
        r[{e.first - m, e.second}] = f * c;
    }
    return r;
}

Poly dxi(const Poly& p, int m) {
    Poly r;
    for (const auto& [e, c] : p) {
        if (e.second < m) continue;
        double f = 1.0;
        for (int i = 0; i < m; ++i) f *= e.second - i;
        r[{e.first, e.second - m}] = f * c;
    }
    return r;
}

CMat eval(const Poly& p, int dim, double x, double xi) {
    CMat s = CMat::Zero(dim, dim);
    for (const auto& [e, c] : p) s += std::pow(x, e.first) * std::pow(xi, e.second) * c;
    return s;
}

// (a♯b)_j(x, ξ) = Σ_{k+l+m=j} (1/(i^m m!)) ∂_ξ^m a_k ∂_x^m b_l, evaluated pointwise.
CMat oracle_moyal(const std::vector<Poly>& a, const std::vector<Poly>& b, int j, int dim, double x, double xi) {
    CMat s = CMat::Zero(dim, dim);
    for (int k = 0; k < (int)a.size(); ++k)
        for (int l = 0; l < (int)b.size(); ++l) {
            const int m = j - k - l;
            if (m < 0) continue;
            const cplx w = 1.0 / (std::pow(I_c, m) * factorial(m));
            s += w * eval(dxi(a[k], m), dim, x, xi) * eval(dx(b[l], m), dim, x, xi);
        }
    return s;
}

Poly random_poly(int dim, int deg, std::mt19937_64& rng) {
    std::normal_distribution<double> N(0.0, 1.0);
    Poly p;
    for (int d = 0; d <= deg; ++d)
        for (int a = 0; a <= d; ++a) {
            CMat c(dim, dim);
            for (int i = 0; i < dim; ++i)
                for (int k = 0; k < dim; ++k) c(i, k) = cplx(N(rng), N(rng));
            p[{d - a, a}] = c;
        }
    return p;
}

SymbolPtr to_symbol(const Poly& p, int dim) {
    std::vector<PolyTerm> t;
    for (const auto& [e, c] : p) t.push_back({MultiIndex{e.first, e.second}, c});
    return polynomial_symbol(1, dim, t);
}

SymbolSeries to_series(const std::vector<Poly>& ps, int dim) {
    std::vector<SymbolPtr> c;
    for (const auto& p : ps) c.push_back(to_symbol(p, dim));
    return SymbolSeries(c);
}

}  // namespace

TEST(Jet, ProductMatchesTaylorOfProduct) {
    // f = e^{x}, g = sin(y): (fg) jet coefficients are e^0 sin^{(b)}(0)/(a! b!).
    Jet f(2, 4, 1, 1), g(2, 4, 1, 1);
    for (int a = 0; a <= 4; ++a) f.coeff(MultiIndex{a, 0})(0, 0) = 1.0 / factorial(a);
    for (int b = 0; b <= 4; ++b) g.coeff(MultiIndex{0, b})(0, 0) = std::sin(0.5 * M_PI * b) / factorial(b);
    const Jet p = f * g;
    for (int i = 0; i < p.size(); ++i) {
        const auto& e = p.table().exponent(i);
        const double want = std::sin(0.5 * M_PI * e[1]) / (factorial(e[0]) * factorial(e[1]));
        EXPECT_NEAR(std::abs(p.coeff(i)(0, 0) - want), 0.0, 1e-15);
    }
}

TEST(Jet, DiffShiftsCoefficients) {
    Jet f(1, 5, 1, 1);
    for (int a = 0; a <= 5; ++a) f.coeff(a)(0, 0) = 1.0 / factorial(a);  // e^x
    const Jet d = f.diff(0, 2);
    EXPECT_EQ(d.order(), 3);
    for (int a = 0; a <= 3; ++a) EXPECT_NEAR(d.derivative({a})(0, 0).real(), 1.0, 1e-14);
}

TEST(MonomialTable, SplitsCoverAllPairs) {
    auto t = MonomialTable::get(2, 4);
    for (int i = 0; i < t->size(); ++i) {
        const auto& e = t->exponent(i);
        EXPECT_EQ((int)t->splits(i).size(), (e[0] + 1) * (e[1] + 1));
        EXPECT_EQ(t->index(e), i);
    }
    EXPECT_EQ(t->index({5, 0}), -1);
}

TEST(Moyal, PolynomialProductsMatchIndependentExpansion) {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> U(-1.5, 1.5);
    for (int trial = 0; trial < 4; ++trial) {
        const int dim = 1 + trial % 2;
        const std::vector<Poly> a = {random_poly(dim, 3, rng), random_poly(dim, 2, rng)};
        const std::vector<Poly> b = {random_poly(dim, 3, rng), random_poly(dim, 1, rng)};
        const SymbolSeries c = moyal_product(to_series(a, dim), to_series(b, dim), 4);
        ASSERT_EQ(c.order(), 4);
        for (int s = 0; s < 5; ++s) {
            const RVec x = RVec::Constant(1, U(rng)), xi = RVec::Constant(1, U(rng));
            for (int j = 0; j <= 4; ++j) {
                const CMat want = oracle_moyal(a, b, j, dim, x(0), xi(0));
                EXPECT_LE(max_abs(c[j]->eval(x, xi) - want), 1e-11 * (1.0 + max_abs(want))) << "order " << j;
            }
        }
    }
}

TEST(Moyal, IdentityIsNeutral) {
    std::mt19937_64 rng(3);
    const int dim = 2;
    const SymbolSeries a = to_series({random_poly(dim, 3, rng), random_poly(dim, 3, rng)}, dim);
    const SymbolSeries one({constant_symbol(CMat::Identity(dim, dim))});
    const SymbolSeries l = moyal_product(one, a, 3), r = moyal_product(a, one, 3);
    const RVec x = RVec::Constant(1, 0.4), xi = RVec::Constant(1, -0.7);
    for (int j = 0; j <= 3; ++j) {
        const CMat want = j <= 1 ? a[j]->eval(x, xi) : CMat::Zero(dim, dim);
        EXPECT_LE(max_abs(l[j]->eval(x, xi) - want), 1e-13);
        EXPECT_LE(max_abs(r[j]->eval(x, xi) - want), 1e-13);
    }
}

TEST(Moyal, AssociativityProperty) {
    std::mt19937_64 rng(5);
    const int dim = 2, M = 4;
    for (int trial = 0; trial < 3; ++trial) {
        const SymbolSeries a = to_series({random_poly(dim, 3, rng)}, dim);
        const SymbolSeries b = to_series({random_poly(dim, 3, rng), random_poly(dim, 2, rng)}, dim);
        const SymbolSeries c = to_series({random_poly(dim, 3, rng)}, dim);
        const SymbolSeries l = moyal_product(moyal_product(a, b, M), c, M);
        const SymbolSeries r = moyal_product(a, moyal_product(b, c, M), M);
        const RVec x = RVec::Constant(1, 0.3 * trial - 0.2), xi = RVec::Constant(1, 0.9 - 0.4 * trial);
        for (int j = 0; j <= M; ++j) EXPECT_LE(max_abs(l[j]->eval(x, xi) - r[j]->eval(x, xi)), 1e-9);
    }
}

TEST(Moyal, FirstOrderCommutatorIsPoissonBracket) {
    // Scalar a = x²ξ, b = xξ²: {a, b} = ∂ξa ∂xb - ∂xa ∂ξb = x²ξ² - 4x²ξ² = -3x²ξ².
    const auto a = polynomial_symbol(1, 1, {{{2, 1}, CMat::Ones(1, 1)}});
    const auto b = polynomial_symbol(1, 1, {{{1, 2}, CMat::Ones(1, 1)}});
    const SymbolSeries ab = moyal_product(SymbolSeries({a}), SymbolSeries({b}), 1);
    const SymbolSeries ba = moyal_product(SymbolSeries({b}), SymbolSeries({a}), 1);
    const RVec x = RVec::Constant(1, 0.6), xi = RVec::Constant(1, -1.1);
    const cplx comm = (ab[1]->eval(x, xi) - ba[1]->eval(x, xi))(0, 0);
    // (a♯b - b♯a)_1 = (1/i){a, b}.
    EXPECT_NEAR(std::abs(comm - (-3.0 * 0.36 * 1.21) / I_c), 0.0, 1e-12);
}

TEST(SymbolAdjoint, FullAdjointOfXXi) {
    const auto a = polynomial_symbol(1, 1, {{{1, 1}, CMat::Ones(1, 1)}});
    const SymbolSeries s = symbol_adjoint(SymbolSeries({a}), 2, true);
    const RVec x = RVec::Constant(1, 0.8), xi = RVec::Constant(1, 0.25);
    EXPECT_NEAR(std::abs(s[0]->eval(x, xi)(0, 0) - 0.2), 0.0, 1e-15);
    EXPECT_NEAR(std::abs(s[1]->eval(x, xi)(0, 0) - 1.0 / I_c), 0.0, 1e-15);
    EXPECT_NEAR(std::abs(s[2]->eval(x, xi)(0, 0)), 0.0, 1e-15);
}

TEST(SymbolAdjoint, PointwiseAdjointIsConjugateTranspose) {
    std::mt19937_64 rng(2);
    const Poly p = random_poly(3, 2, rng);
    const SymbolSeries s = symbol_adjoint(SymbolSeries({to_symbol(p, 3)}), 0, false);
    const RVec x = RVec::Constant(1, -0.3), xi = RVec::Constant(1, 0.45);
    EXPECT_LE(max_abs(s[0]->eval(x, xi) - eval(p, 3, -0.3, 0.45).adjoint()), 1e-14);
}

TEST(VerifyDerivatives, PolynomialPasses) {
    std::mt19937_64 rng(9);
    const auto s = to_symbol(random_poly(2, 4, rng), 2);
    const DerivativeReport r = verify_derivatives(*s, 10, 1e-10);
    EXPECT_TRUE(r.pass) << r.max_rel_error;
    EXPECT_GT(r.checked, 0);
}

TEST(VerifyDerivatives, CorruptedDerivativeFails) {
    // Value sin(x) but the claimed ∂x is 2cos(x).
    const auto bad = lambda_symbol(1, 1, 4, 0, [](const RVec& x, const RVec&, int order) {
        Jet j(2, order, 1, 1);
        j.coeff(0)(0, 0) = std::sin(x(0));
        if (order >= 1) j.coeff(MultiIndex{1, 0})(0, 0) = 2.0 * std::cos(x(0));
        if (order >= 2) j.coeff(MultiIndex{2, 0})(0, 0) = -0.5 * std::sin(x(0));
        return j;
    });
    EXPECT_FALSE(verify_derivatives(*bad, 5, 1e-6).pass);
}

TEST(VerifyDerivatives, TrigCoefficientSymbolPasses) {
    const auto s = xi_poly_symbol(1, {[](double x, int m) { return CMat::Constant(1, 1, std::cos(x + 0.5 * M_PI * m)); },
                                      [](double x, int m) { return CMat::Constant(1, 1, std::sin(x + 0.5 * M_PI * m)); }});
    EXPECT_TRUE(verify_derivatives(*s, 10, 1e-6).pass);
}

TEST(Quantize, IdentitySymbolGivesIdentity) {
    const GridSpec g = bopp::testing::grid(0.2, 64);
    const CMat A = quantize(constant_symbol(CMat::Identity(2, 2)), g);
    EXPECT_LE(max_abs(A - CMat::Identity(128, 128)), 1e-13);
}

TEST(Quantize, MomentumActsOnPlaneWavesByGridMomenta) {
    const GridSpec g = bopp::testing::grid(0.1, 128);
    const auto xi = polynomial_symbol(1, 1, {{{0, 1}, CMat::Ones(1, 1)}});
    const CMat A = quantize(xi, g);
    for (int k : {-5, 0, 3, 17}) {
        CVec u(g.N);
        for (int j = 0; j < g.N; ++j) u(j) = std::exp(I_c * (2.0 * M_PI * k / g.L) * g.x(j));
        EXPECT_LE((A * u - (2.0 * M_PI * g.h * k / g.L) * u).cwiseAbs().maxCoeff(), 1e-11);
    }
}

TEST(Quantize, XOnlyTimesXiOnlyIsExactlyTheProduct) {
    const GridSpec g = bopp::testing::grid(0.2, 64);
    const double k = 2.0 * M_PI * 3 / g.L;
    const auto a = bopp::testing::scalar_x_symbol(bopp::testing::plane_wave(k));
    const auto b = bopp::testing::cosine_xi_symbol(1.0, 0.0);
    const auto ab = lambda_symbol(1, 1, PhaseSymbol::kUnlimited, -1, [&](const RVec& x, const RVec& xi, int order) {
        return a->jet(x, xi, order) * b->jet(x, xi, order);
    });
    EXPECT_LE(max_abs(quantize(a, g) * quantize(b, g) - quantize(ab, g)), 1e-12);
}

TEST(Quantize, LatticeTimesPlaneWaveShiftsMomentum) {
    // Op(cos ξ) Op(e^{ikx}) = Op(e^{ikx} cos(ξ + hk)) when hk is a grid momentum.
    const GridSpec g = bopp::testing::grid(0.2, 64);
    const double k = 2.0 * M_PI * 5 / g.L;
    const auto a = bopp::testing::scalar_x_symbol(bopp::testing::plane_wave(k));
    const auto shifted = bopp::testing::cosine_xi_symbol(1.0, g.h * k);
    const auto rhs = lambda_symbol(1, 1, PhaseSymbol::kUnlimited, -1, [&](const RVec& x, const RVec& xi, int order) {
        return a->jet(x, xi, order) * shifted->jet(x, xi, order);
    });
    const CMat lhs = quantize(bopp::testing::cosine_xi_symbol(1.0, 0.0), g) * quantize(a, g);
    EXPECT_LE(max_abs(lhs - quantize(rhs, g)), 1e-12);
}

TEST(Quantize, MatrixFreeApplyMatchesDense) {
    const GridSpec g = bopp::testing::grid(0.2, 64);
    std::mt19937_64 rng(4);
    const Poly p = random_poly(2, 2, rng);
    const SymbolSeries a({to_symbol(p, 2), to_symbol(random_poly(2, 1, rng), 2)});
    std::normal_distribution<double> N(0.0, 1.0);
    CVec u(g.N * 2);
    for (int i = 0; i < u.size(); ++i) u(i) = cplx(N(rng), N(rng));
    const CVec dense = quantize(a, g) * u;
    const CVec free = quantize_apply(a, g, u);
    EXPECT_LE((dense - free).cwiseAbs().maxCoeff(), 1e-10 * dense.cwiseAbs().maxCoeff());
}

TEST(Grid, DftRoundTripAndParseval) {
    std::mt19937_64 rng(8);
    std::normal_distribution<double> N(0.0, 1.0);
    CVec u(64);
    for (int i = 0; i < 64; ++i) u(i) = cplx(N(rng), N(rng));
    const CVec v = dft(u);
    EXPECT_LE((idft(v) - u).cwiseAbs().maxCoeff(), 1e-13);
    EXPECT_NEAR(v.squaredNorm(), 64.0 * u.squaredNorm(), 1e-9);
}

TEST(Grid, TrigInterpolantReproducesBandLimitedDerivatives) {
    const GridSpec g = bopp::testing::grid(0.2, 64);
    const double k = 2.0 * M_PI * 2 / g.L;
    std::vector<CMat> s;
    for (int j = 0; j < g.N; ++j) s.push_back(CMat::Constant(1, 1, std::sin(k * g.x(j))));
    const TrigInterpolant f(g, s);
    for (double x : {-1.234, 0.0, 3.3})
        for (int m = 0; m <= 3; ++m)
            EXPECT_NEAR(std::abs(f(x, m)(0, 0) - std::pow(k, m) * std::sin(k * x + 0.5 * M_PI * m)), 0.0, 1e-11);
}

TEST(Moyal, ConstantsMultiply) {
    const SymbolSeries a({constant_symbol(CMat(2.0 * CMat::Identity(2, 2)))});
    const SymbolSeries b({constant_symbol(CMat(3.0 * CMat::Identity(2, 2)))});
    const SymbolSeries c = moyal_product(a, b, 3);
    const RVec x = RVec::Constant(1, 0.2), xi = RVec::Constant(1, 0.9);
    EXPECT_LE(max_abs(c[0]->eval(x, xi) - 6.0 * CMat::Identity(2, 2)), 1e-15);
    for (int j = 1; j <= 3; ++j) EXPECT_LE(max_abs(c[j]->eval(x, xi)), 1e-15);
}

TEST(Moyal, CanonicalCommutation) {
    const auto xi = polynomial_symbol(1, 1, {{{0, 1}, CMat::Ones(1, 1)}});
    const auto x = polynomial_symbol(1, 1, {{{1, 0}, CMat::Ones(1, 1)}});
    const SymbolSeries ab = moyal_product(SymbolSeries({xi}), SymbolSeries({x}), 2);
    const SymbolSeries ba = moyal_product(SymbolSeries({x}), SymbolSeries({xi}), 2);
    const RVec p = RVec::Constant(1, 1.5), q = RVec::Constant(1, -0.5);
    EXPECT_NEAR(std::abs(ab[0]->eval(p, q)(0, 0) - 1.5 * -0.5), 0.0, 1e-15);
    EXPECT_NEAR(std::abs(ab[1]->eval(p, q)(0, 0) - 1.0 / I_c), 0.0, 1e-15);
    EXPECT_NEAR(std::abs(ba[1]->eval(p, q)(0, 0)), 0.0, 1e-15);
}

TEST(SymbolAdjoint, ConstantExamples) {
    const RVec x = RVec::Constant(1, 0.1), xi = RVec::Constant(1, 0.2);
    CMat h(2, 2);
    h << 1.0, cplx(0.5, -0.25), cplx(0.5, 0.25), -2.0;
    EXPECT_LE(max_abs(symbol_adjoint(SymbolSeries({constant_symbol(h)}), 2, true)[0]->eval(x, xi) - h), 1e-15);
    const CMat iI = I_c * CMat::Identity(2, 2);
    EXPECT_LE(max_abs(symbol_adjoint(SymbolSeries({constant_symbol(iI)}), 0)[0]->eval(x, xi) + iI), 1e-15);
}

TEST(SymbolAdjoint, AdjointOfProductIsReversedProductProperty) {
    std::mt19937_64 rng(17);
    const int dim = 2, M = 3;
    for (int trial = 0; trial < 3; ++trial) {
        const SymbolSeries a = to_series({random_poly(dim, 3, rng), random_poly(dim, 2, rng)}, dim);
        const SymbolSeries b = to_series({random_poly(dim, 3, rng)}, dim);
        const SymbolSeries lhs = symbol_adjoint(moyal_product(a, b, M), M, true);
        const SymbolSeries rhs = moyal_product(symbol_adjoint(b, M, true), symbol_adjoint(a, M, true), M);
        const RVec x = RVec::Constant(1, 0.5 - 0.3 * trial), xi = RVec::Constant(1, -0.8 + 0.5 * trial);
        for (int j = 0; j <= M; ++j) EXPECT_LE(max_abs(lhs[j]->eval(x, xi) - rhs[j]->eval(x, xi)), 1e-9) << "order " << j;
    }
}

TEST(SymbolAdjoint, FullAdjointMatchesMatrixAdjointOnTheGrid) {
    // a = sin(kx)ξ: Op(a)* = Op(sin(kx)ξ + (h/i)k cos(kx)), exact away from the Nyquist wrap.
    const GridSpec g = bopp::testing::grid(0.2, 64);
    const double k = 2.0 * M_PI * 2 / g.L;
    const auto a = xi_poly_symbol(1, {[](double, int) { return CMat::Zero(1, 1); },
                                      [k](double x, int m) {
                                          return CMat::Constant(1, 1, std::pow(k, m) * std::sin(k * x + 0.5 * M_PI * m));
                                      }});
    const SymbolSeries adj = symbol_adjoint(SymbolSeries({a}), 1, true);
    const CMat lhs = quantize(a, g).adjoint();
    const CMat rhs = quantize(series_sum(SymbolSeries({adj[0]}), SymbolSeries({adj[1]}), g.h), g);
    const CMat G = fourier_multiplier(g, [](double xi) { return cplx(std::abs(xi) < 2.0 ? 1.0 : 0.0); }, 1);
    EXPECT_LE(max_abs(G * (lhs - rhs) * G), 1e-12);
    EXPECT_GT(max_abs(lhs - quantize(a, g)), 1e-3);
}

TEST(Quantize, PotentialIsBlockDiagonal) {
    const GridSpec g = bopp::testing::grid(0.2, 32);
    const XFunction V = [](double x, int m) {
        CMat v(2, 2);
        v << std::cos(x + 0.5 * M_PI * m), (m == 0 ? 0.5 : 0.0), (m == 0 ? 0.5 : 0.0), -std::sin(x + 0.5 * M_PI * m);
        return v;
    };
    const CMat A = quantize(xi_poly_symbol(2, {V}), g);
    for (int i = 0; i < g.N; ++i)
        for (int j = 0; j < g.N; ++j) {
            const CMat blk = A.block(2 * i, 2 * j, 2, 2);
            EXPECT_LE(max_abs(blk - (i == j ? V(g.x(i), 0) : CMat::Zero(2, 2))), 1e-13);
        }
}
