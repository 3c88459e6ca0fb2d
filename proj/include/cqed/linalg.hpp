#pragma once

#include <complex>

#include <Eigen/Dense>

namespace cqed {

using cplx = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;

inline constexpr cplx I{0.0, 1.0};

/// Largest entrywise |M - M^dagger|.
inline double hermitian_defect(const Matrix& m) {
    if (m.size() == 0) return 0.0;
    return (m - m.adjoint()).cwiseAbs().maxCoeff();
}

inline Matrix hermitize(const Matrix& m) { return 0.5 * (m + m.adjoint()); }

/// Ascending eigenvalues of the Hermitian part of `m`.
inline Eigen::VectorXd hermitian_eigenvalues(const Matrix& m) {
    Eigen::SelfAdjointEigenSolver<Matrix> solver(hermitize(m), Eigen::EigenvaluesOnly);
    return solver.eigenvalues();
}

inline double trace_norm_hermitian(const Matrix& m) {
    return hermitian_eigenvalues(m).cwiseAbs().sum();
}

/// (1/2) sum |eig(a - b)| for Hermitian a, b.
inline double trace_distance(const Matrix& a, const Matrix& b) {
    return 0.5 * trace_norm_hermitian(a - b);
}

} // namespace cqed
