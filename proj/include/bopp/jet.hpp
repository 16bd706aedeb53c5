#pragma once

#include <memory>
#include <vector>

#include "bopp/linalg.hpp"

namespace bopp {

using MultiIndex = std::vector<int>;

// Monomials of total degree <= order in nv variables, graded order.
// Index 0 is the constant monomial; degree d occupies [begin(d), begin(d+1)).
class MonomialTable {
public:
    static std::shared_ptr<const MonomialTable> get(int nv, int order);

    int nv() const { return nv_; }
    int order() const { return order_; }
    int size() const { return static_cast<int>(exps_.size()); }
    const MultiIndex& exponent(int i) const { return exps_[i]; }
    int degree(int i) const { return deg_[i]; }
    int begin(int d) const { return start_[d]; }
    // -1 when the degree exceeds the table order.
    int index(const MultiIndex& e) const;
    // Pairs (j, k) with exponent(j) + exponent(k) = exponent(i).
    const std::vector<std::pair<int, int>>& splits(int i) const { return splits_[i]; }

private:
    MonomialTable(int nv, int order);
    int nv_, order_;
    std::vector<MultiIndex> exps_;
    std::vector<int> deg_;
    std::vector<int> start_;
    std::vector<std::vector<std::pair<int, int>>> splits_;
};

// Truncated Taylor jet of a matrix-valued function of nv variables at a point.
// Stored coefficients are ∂^α f / α!.
class Jet {
public:
    Jet() = default;
    Jet(int nv, int order, int rows, int cols);

    int nv() const { return table_->nv(); }
    int order() const { return table_->order(); }
    int rows() const { return rows_; }
    int cols() const { return cols_; }
    int size() const { return table_->size(); }
    const MonomialTable& table() const { return *table_; }

    CMat& coeff(int i) { return c_[i]; }
    const CMat& coeff(int i) const { return c_[i]; }
    CMat& coeff(const MultiIndex& e);
    const CMat& coeff(const MultiIndex& e) const;

    // ∂^α f at the expansion point.
    CMat derivative(const MultiIndex& alpha) const;
    const CMat& value() const { return c_[0]; }

    Jet truncated(int order) const;
    // ∂_v^m; order drops by m.
    Jet diff(int v, int m = 1) const;
    Jet adjoint() const;

    Jet& operator+=(const Jet& o);
    Jet& operator-=(const Jet& o);
    Jet& operator*=(cplx s);
    // Left/right multiplication by a constant matrix.
    Jet lmul(const CMat& m) const;
    Jet rmul(const CMat& m) const;

    friend Jet operator+(Jet a, const Jet& b) { return a += b; }
    friend Jet operator-(Jet a, const Jet& b) { return a -= b; }
    friend Jet operator*(cplx s, Jet a) { return a *= s; }
    friend Jet operator*(const Jet& a, const Jet& b);

    double max_abs() const;

private:
    std::shared_ptr<const MonomialTable> table_;
    int rows_ = 0, cols_ = 0;
    std::vector<CMat> c_;
};

inline Jet commutator(const Jet& a, const Jet& b) { return a * b - b * a; }

double factorial(int n);
double multi_factorial(const MultiIndex& a);

}  // namespace bopp
