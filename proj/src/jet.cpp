#include "bopp/jet.hpp"

#include <map>
#include <mutex>

namespace bopp {

namespace {

void enumerate(int nv, int deg, int pos, MultiIndex& cur, std::vector<MultiIndex>& out) {
    if (pos == nv - 1) {
        cur[pos] = deg;
        out.push_back(cur);
        return;
    }
    for (int k = deg; k >= 0; --k) {
        cur[pos] = k;
        enumerate(nv, deg - k, pos + 1, cur, out);
    }
}

}  // namespace

MonomialTable::MonomialTable(int nv, int order) : nv_(nv), order_(order) {
    if (nv < 1 || order < 0) throw std::invalid_argument("MonomialTable: bad shape");
    MultiIndex cur(nv, 0);
    for (int d = 0; d <= order; ++d) {
        start_.push_back(static_cast<int>(exps_.size()));
        enumerate(nv, d, 0, cur, exps_);
        deg_.resize(exps_.size(), d);
    }
    start_.push_back(static_cast<int>(exps_.size()));
    splits_.resize(exps_.size());
    for (int j = 0; j < size(); ++j) {
        for (int k = 0; k < size(); ++k) {
            if (deg_[j] + deg_[k] > order) continue;
            MultiIndex s(nv);
            for (int v = 0; v < nv; ++v) s[v] = exps_[j][v] + exps_[k][v];
            splits_[index(s)].emplace_back(j, k);
        }
    }
}

int MonomialTable::index(const MultiIndex& e) const {
    int d = 0;
    for (int v : e) d += v;
    if (d > order_) return -1;
    // Graded reverse-lex rank inside degree d: enumerate() emits the first variable descending.
    int idx = start_[d];
    int rem = d;
    for (int v = 0; v + 1 < nv_; ++v) {
        // Count monomials with larger exponent in position v and same prefix.
        for (int k = rem; k > e[v]; --k) {
            int r = rem - k, m = nv_ - v - 1;
            // Number of compositions of r into m parts: C(r+m-1, m-1).
            long num = 1;
            for (int t = 1; t <= m - 1; ++t) num = num * (r + t) / t;
            idx += static_cast<int>(num);
        }
        rem -= e[v];
    }
    return idx;
}

std::shared_ptr<const MonomialTable> MonomialTable::get(int nv, int order) {
    static std::mutex mu;
    static std::map<std::pair<int, int>, std::shared_ptr<const MonomialTable>> cache;
    std::lock_guard<std::mutex> lock(mu);
    auto key = std::make_pair(nv, order);
    auto it = cache.find(key);
    if (it != cache.end()) return it->second;
    std::shared_ptr<const MonomialTable> t(new MonomialTable(nv, order));
    cache.emplace(key, t);
    return t;
}

double factorial(int n) {
    double r = 1.0;
    for (int k = 2; k <= n; ++k) r *= k;
    return r;
}

double multi_factorial(const MultiIndex& a) {
    double r = 1.0;
    for (int v : a) r *= factorial(v);
    return r;
}

Jet::Jet(int nv, int order, int rows, int cols)
    : table_(MonomialTable::get(nv, order)), rows_(rows), cols_(cols),
      c_(table_->size(), CMat::Zero(rows, cols)) {}

CMat& Jet::coeff(const MultiIndex& e) {
    int i = table_->index(e);
    if (i < 0) throw std::out_of_range("Jet::coeff: degree above jet order");
    return c_[i];
}

const CMat& Jet::coeff(const MultiIndex& e) const {
    int i = table_->index(e);
    if (i < 0) throw std::out_of_range("Jet::coeff: degree above jet order");
    return c_[i];
}

CMat Jet::derivative(const MultiIndex& alpha) const { return multi_factorial(alpha) * coeff(alpha); }

Jet Jet::truncated(int order) const {
    if (order >= this->order()) return *this;
    Jet r(nv(), order, rows_, cols_);
    for (int i = 0; i < r.size(); ++i) r.c_[i] = c_[i];
    return r;
}

Jet Jet::diff(int v, int m) const {
    if (m == 0) return *this;
    if (m > order()) throw std::out_of_range("Jet::diff: derivative above jet order");
    Jet r(nv(), order() - m, rows_, cols_);
    for (int i = 0; i < r.size(); ++i) {
        MultiIndex e = r.table().exponent(i);
        double f = 1.0;
        for (int t = 1; t <= m; ++t) f *= e[v] + t;
        e[v] += m;
        r.c_[i] = f * c_[table_->index(e)];
    }
    return r;
}

Jet Jet::adjoint() const {
    Jet r(nv(), order(), cols_, rows_);
    for (int i = 0; i < size(); ++i) r.c_[i] = c_[i].adjoint();
    return r;
}

Jet& Jet::operator+=(const Jet& o) {
    if (o.order() < order()) *this = truncated(o.order());
    for (int i = 0; i < size(); ++i) c_[i] += o.c_[i];
    return *this;
}

Jet& Jet::operator-=(const Jet& o) {
    if (o.order() < order()) *this = truncated(o.order());
    for (int i = 0; i < size(); ++i) c_[i] -= o.c_[i];
    return *this;
}

Jet& Jet::operator*=(cplx s) {
    for (auto& m : c_) m *= s;
    return *this;
}

Jet Jet::lmul(const CMat& m) const {
    Jet r(nv(), order(), static_cast<int>(m.rows()), cols_);
    for (int i = 0; i < size(); ++i) r.c_[i] = m * c_[i];
    return r;
}

Jet Jet::rmul(const CMat& m) const {
    Jet r(nv(), order(), rows_, static_cast<int>(m.cols()));
    for (int i = 0; i < size(); ++i) r.c_[i] = c_[i] * m;
    return r;
}

Jet operator*(const Jet& a, const Jet& b) {
    int order = std::min(a.order(), b.order());
    Jet r(a.nv(), order, a.rows(), b.cols());
    const MonomialTable& t = r.table();
    // Tables of different order share the graded prefix, so indices carry over.
    for (int i = 0; i < r.size(); ++i)
        for (auto [j, k] : t.splits(i)) r.c_[i].noalias() += a.c_[j] * b.c_[k];
    return r;
}

double Jet::max_abs() const {
    double m = 0.0;
    for (const auto& c : c_)
        if (c.size()) m = std::max(m, c.cwiseAbs().maxCoeff());
    return m;
}

}  // namespace bopp
