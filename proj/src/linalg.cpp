#include "bopp/linalg.hpp"

#include <lapacke.h>

#include <algorithm>
#include <cmath>

namespace bopp {

HermEig herm_eig(const CMat& a) {
    const lapack_int n = static_cast<lapack_int>(a.rows());
    if (a.cols() != a.rows()) throw ModelError("herm_eig: matrix not square");
    HermEig out;
    out.vectors = 0.5 * (a + a.adjoint());
    out.values.resize(n);
    if (n == 0) return out;
    auto* data = reinterpret_cast<lapack_complex_double*>(out.vectors.data());
    lapack_int info = LAPACKE_zheevd(LAPACK_COL_MAJOR, 'V', 'U', n, data, n, out.values.data());
    if (info != 0) throw ModelError("herm_eig: zheevd failed with info " + std::to_string(info));
    return out;
}

CMat herm_func(const HermEig& e, const std::function<double(double)>& f) {
    RVec fv(e.values.size());
    for (Eigen::Index i = 0; i < fv.size(); ++i) fv(i) = f(e.values(i));
    return e.vectors * fv.asDiagonal() * e.vectors.adjoint();
}

CMat herm_func(const CMat& a, const std::function<double(double)>& f) { return herm_func(herm_eig(a), f); }

double op_norm(const CMat& a) {
    if (a.size() == 0) return 0.0;
    // ‖A‖² is the top eigenvalue of the smaller Gram matrix.
    CMat g = a.rows() <= a.cols() ? CMat(a * a.adjoint()) : CMat(a.adjoint() * a);
    RVec ev = herm_eig(g).values;
    return std::sqrt(std::max(0.0, ev(ev.size() - 1)));
}

double herm_norm(const CMat& a) {
    if (a.size() == 0) return 0.0;
    RVec ev = herm_eig(a).values;
    return std::max(std::abs(ev(0)), std::abs(ev(ev.size() - 1)));
}

CMat herm_part(const CMat& a) { return 0.5 * (a + a.adjoint()); }

}  // namespace bopp
