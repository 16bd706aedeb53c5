#include "bopp/grid.hpp"

#include <fftw3.h>

#include <cmath>
#include <map>
#include <mutex>
#include <stdexcept>

namespace bopp {

void GridSpec::validate() const {
    if (n != 1) throw std::invalid_argument("GridSpec: grid quantization requires n = 1");
    if (N < 2 || (N & (N - 1)) != 0) throw std::invalid_argument("GridSpec: N_grid must be a power of two");
    if (!(h > 0.0)) throw std::invalid_argument("GridSpec: h must be positive");
    if (!(L > 0.0)) throw std::invalid_argument("GridSpec: L must be positive");
}

RVec GridSpec::xs() const {
    RVec r(N);
    for (int j = 0; j < N; ++j) r(j) = x(j);
    return r;
}

RVec GridSpec::xis() const {
    RVec r(N);
    for (int q = 0; q < N; ++q) r(q) = xi(q);
    return r;
}

namespace {

struct Plans {
    fftw_plan fwd, bwd;
    fftw_complex* buf;
};

// Plans are created once per size; execution uses the new-array interface so it is reentrant.
const Plans& plans(int n) {
    static std::mutex mu;
    static std::map<int, Plans> cache;
    std::lock_guard<std::mutex> lock(mu);
    auto it = cache.find(n);
    if (it != cache.end()) return it->second;
    Plans p;
    p.buf = fftw_alloc_complex(n);
    p.fwd = fftw_plan_dft_1d(n, p.buf, p.buf, FFTW_FORWARD, FFTW_ESTIMATE);
    p.bwd = fftw_plan_dft_1d(n, p.buf, p.buf, FFTW_BACKWARD, FFTW_ESTIMATE);
    return cache.emplace(n, p).first->second;
}

CVec run(const CVec& u, bool forward) {
    const int n = static_cast<int>(u.size());
    const Plans& p = plans(n);
    fftw_complex* b = fftw_alloc_complex(n);
    for (int i = 0; i < n; ++i) {
        b[i][0] = u(i).real();
        b[i][1] = u(i).imag();
    }
    fftw_execute_dft(forward ? p.fwd : p.bwd, b, b);
    CVec r(n);
    for (int i = 0; i < n; ++i) r(i) = cplx(b[i][0], b[i][1]);
    fftw_free(b);
    return r;
}

}  // namespace

CVec dft(const CVec& u) { return run(u, true); }
CVec idft(const CVec& v) { return run(v, false) / static_cast<double>(v.size()); }

CVec dft_channels(const CVec& u, int dim) {
    const int N = static_cast<int>(u.size()) / dim;
    CVec r(u.size());
    CVec c(N);
    for (int a = 0; a < dim; ++a) {
        for (int j = 0; j < N; ++j) c(j) = u(j * dim + a);
        CVec t = dft(c);
        for (int j = 0; j < N; ++j) r(j * dim + a) = t(j);
    }
    return r;
}

CVec idft_channels(const CVec& v, int dim) {
    const int N = static_cast<int>(v.size()) / dim;
    CVec r(v.size());
    CVec c(N);
    for (int a = 0; a < dim; ++a) {
        for (int j = 0; j < N; ++j) c(j) = v(j * dim + a);
        CVec t = idft(c);
        for (int j = 0; j < N; ++j) r(j * dim + a) = t(j);
    }
    return r;
}

namespace {

// Column m of the circulant F⁻¹ diag(f(ξ)) F: c(m) = (1/N) Σ_k f(ξ_k) e^{2πikm/N}.
CVec circulant_kernel(const GridSpec& g, const std::function<cplx(double)>& f) {
    CVec s(g.N);
    for (int q = 0; q < g.N; ++q) s(q) = f(g.xi(q));
    return idft(s);
}

void check_series(const SymbolSeries& a, const GridSpec& g) {
    g.validate();
    if (a.nuc_dim() != 1) throw std::invalid_argument("quantize: symbol nuclear dimension must be 1");
}

}  // namespace

CMat quantize(const SymbolSeries& a, const GridSpec& g) {
    check_series(a, g);
    const int N = g.N, d = a.dim();
    CMat A = CMat::Zero(N * d, N * d);
    const int deg = a.xi_degree();
    RVec x(1), xi0 = RVec::Zero(1);
    if (deg >= 0) {
        // Polynomial in ξ: Op(a) = Σ_p diag(c_p(x_i)) F⁻¹ diag(ξ^p) F.
        std::vector<CVec> kern;
        for (int p = 0; p <= deg; ++p) kern.push_back(circulant_kernel(g, [p](double s) { return std::pow(s, p); }));
        for (int i = 0; i < N; ++i) {
            x(0) = g.x(i);
            std::vector<CMat> c(deg + 1, CMat::Zero(d, d));
            double hp = 1.0;
            for (int m = 0; m <= a.order(); ++m, hp *= g.h) {
                if (hp == 0.0) break;
                Jet j = a[m]->jet(x, xi0, std::min(deg, a[m]->max_deriv()));
                const int top = std::min(deg, j.order());
                for (int p = 0; p <= top; ++p) c[p] += hp * j.coeff({0, p});
            }
            for (int jj = 0; jj < N; ++jj) {
                const int m = ((i - jj) % N + N) % N;
                CMat blk = CMat::Zero(d, d);
                for (int p = 0; p <= deg; ++p) blk += kern[p](m) * c[p];
                A.block(i * d, jj * d, d, d) = blk;
            }
        }
        return A;
    }
    // General symbol: row-wise inverse DFT of the samples a(x_i, ξ_k).
    RVec xi(1);
    for (int i = 0; i < N; ++i) {
        x(0) = g.x(i);
        std::vector<CMat> samp(N);
        for (int q = 0; q < N; ++q) {
            xi(0) = g.xi(q);
            samp[q] = a.eval_sum(x, xi, g.h);
        }
        for (int r = 0; r < d; ++r) {
            for (int c = 0; c < d; ++c) {
                CVec s(N);
                for (int q = 0; q < N; ++q) s(q) = samp[q](r, c);
                CVec k = idft(s);
                for (int jj = 0; jj < N; ++jj) A(i * d + r, jj * d + c) = k(((i - jj) % N + N) % N);
            }
        }
    }
    return A;
}

CMat quantize(const SymbolPtr& a, const GridSpec& g) { return quantize(SymbolSeries({a}), g); }

CVec quantize_apply(const SymbolSeries& a, const GridSpec& g, const CVec& u) {
    check_series(a, g);
    const int N = g.N, d = a.dim();
    if (u.size() != N * d) throw std::invalid_argument("quantize_apply: vector size mismatch");
    CVec uh = dft_channels(u, d) / static_cast<double>(N);
    CVec out = CVec::Zero(N * d);
    RVec x(1), xi(1);
    for (int i = 0; i < N; ++i) {
        x(0) = g.x(i);
        CVec acc = CVec::Zero(d);
        for (int q = 0; q < N; ++q) {
            xi(0) = g.xi(q);
            const double ph = 2.0 * M_PI * static_cast<double>((static_cast<long>(i) * q) % N) / N;
            acc += a.eval_sum(x, xi, g.h) * uh.segment(q * d, d) * std::polar(1.0, ph);
        }
        out.segment(i * d, d) = acc;
    }
    return out;
}

CMat fourier_multiplier(const GridSpec& g, const std::function<cplx(double)>& f, int dim) {
    g.validate();
    const int N = g.N;
    CVec k = circulant_kernel(g, f);
    CMat A = CMat::Zero(N * dim, N * dim);
    for (int i = 0; i < N; ++i)
        for (int j = 0; j < N; ++j) {
            const cplx v = k(((i - j) % N + N) % N);
            for (int a = 0; a < dim; ++a) A(i * dim + a, j * dim + a) = v;
        }
    return A;
}

CMat position_multiplier(const GridSpec& g, const std::function<CMat(double)>& m, int dim) {
    CMat A = CMat::Zero(g.N * dim, g.N * dim);
    for (int j = 0; j < g.N; ++j) A.block(j * dim, j * dim, dim, dim) = m(g.x(j));
    return A;
}

CMat scalar_position_multiplier(const GridSpec& g, const std::function<double(double)>& m, int dim) {
    CMat A = CMat::Zero(g.N * dim, g.N * dim);
    for (int j = 0; j < g.N; ++j)
        for (int a = 0; a < dim; ++a) A(j * dim + a, j * dim + a) = m(g.x(j));
    return A;
}

double grid_norm(const GridSpec& g, const CVec& u) { return std::sqrt(g.dx()) * u.norm(); }

TrigInterpolant::TrigInterpolant(const GridSpec& g, const std::vector<CMat>& samples) : g_(g) {
    g.validate();
    if (static_cast<int>(samples.size()) != g.N) throw std::invalid_argument("TrigInterpolant: one sample per node");
    rows_ = static_cast<int>(samples[0].rows());
    cols_ = static_cast<int>(samples[0].cols());
    coef_.assign(g.N, CMat::Zero(rows_, cols_));
    CVec s(g.N);
    for (int r = 0; r < rows_; ++r)
        for (int c = 0; c < cols_; ++c) {
            for (int j = 0; j < g.N; ++j) s(j) = samples[j](r, c);
            CVec t = dft(s) / static_cast<double>(g.N);
            for (int q = 0; q < g.N; ++q) coef_[q](r, c) = t(q);
        }
}

CMat TrigInterpolant::operator()(double x, int m) const {
    CMat out = CMat::Zero(rows_, cols_);
    const double y = x - g_.x(0);
    for (int q = 0; q < g_.N; ++q) {
        const double kap = 2.0 * M_PI * g_.wavenumber(q) / g_.L;
        if (q == g_.N / 2) {
            out += (std::pow(kap, static_cast<double>(m)) * std::cos(kap * y + m * M_PI / 2)) * coef_[q];
        } else {
            cplx d = 1.0;
            for (int t = 0; t < m; ++t) d *= I_c * kap;
            out += (d * std::polar(1.0, kap * y)) * coef_[q];
        }
    }
    return out;
}

}  // namespace bopp
