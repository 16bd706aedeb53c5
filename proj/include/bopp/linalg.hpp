#pragma once

#include <complex>
#include <functional>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace bopp {

using cplx = std::complex<double>;
using CMat = Eigen::MatrixXcd;
using CVec = Eigen::VectorXcd;
using RMat = Eigen::MatrixXd;
using RVec = Eigen::VectorXd;

inline constexpr cplx I_c{0.0, 1.0};

// Raised for violated preconditions of the numerical model (gap, spectrum, sizes).
class ModelError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct HermEig {
    RVec values;   // ascending
    CMat vectors;  // columns
};

// Hermitian eigendecomposition (LAPACK zheevd); the input is symmetrized first.
HermEig herm_eig(const CMat& a);

// f(A) = V f(Λ) V* for Hermitian A.
CMat herm_func(const HermEig& e, const std::function<double(double)>& f);
CMat herm_func(const CMat& a, const std::function<double(double)>& f);

// Spectral norm.
double op_norm(const CMat& a);

// Largest |λ| of a Hermitian matrix; cheaper than op_norm.
double herm_norm(const CMat& a);

CMat herm_part(const CMat& a);

inline double hermiticity_defect(const CMat& a) { return (a - a.adjoint()).cwiseAbs().maxCoeff(); }

}  // namespace bopp
