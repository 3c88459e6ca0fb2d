#pragma once

// Lindblad master-equation oracle.
//
//   L[rho] = -i[H, rho] + sum_m (C_m rho C_m^dag - 1/2 {C_m^dag C_m, rho})
//
// Density matrices are vectorized by column stacking, vec(rho)[i + j d] = rho(i, j),
// so vec(A rho B) = (B^T (x) A) vec(rho).

#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/SparseCore>
#include <Eigen/SparseLU>

#include "cqed/model.hpp"
#include "cqed/states.hpp"

namespace cqed {

using SparseColMatrix = Eigen::SparseMatrix<cplx, Eigen::ColMajor>;

class Superoperator {
public:
    Superoperator(SpaceDims dims, SparseColMatrix entries, double rate_scale)
        : dims_(dims), entries_(std::move(entries)), rate_scale_(rate_scale) {
        const Eigen::Index d2 = static_cast<Eigen::Index>(dims.total_dim()) * dims.total_dim();
        if (entries_.rows() != d2 || entries_.cols() != d2)
            throw Error(ErrorCode::invalid_dimension, "superoperator dimension mismatch");
    }

    const SpaceDims& dims() const noexcept { return dims_; }
    const SparseColMatrix& matrix() const noexcept { return entries_; }
    /// Largest rate of the generating model; sets the default RK4 step.
    double rate_scale() const noexcept { return rate_scale_; }

    Vector apply(const Vector& vec_rho) const { return entries_ * vec_rho; }

    Matrix apply(const Matrix& rho) const { return unvec(entries_ * vec(rho), dims_.total_dim()); }

    static Vector vec(const Matrix& m) { return Eigen::Map<const Vector>(m.data(), m.size()); }
    static Matrix unvec(const Vector& v, int d) { return Eigen::Map<const Matrix>(v.data(), d, d); }

private:
    SpaceDims dims_;
    SparseColMatrix entries_;
    double rate_scale_;
};

inline constexpr int oracle_max_n_max = 30;

namespace detail {

inline void add_kron(std::vector<Eigen::Triplet<cplx>>& out, const Matrix& a, const Matrix& b,
                     cplx scale) {
    const Eigen::Index rb = b.rows(), cb = b.cols();
    for (Eigen::Index i = 0; i < a.rows(); ++i)
        for (Eigen::Index j = 0; j < a.cols(); ++j) {
            const cplx aij = a(i, j);
            if (aij == 0.0) continue;
            for (Eigen::Index k = 0; k < rb; ++k)
                for (Eigen::Index l = 0; l < cb; ++l) {
                    const cplx bkl = b(k, l);
                    if (bkl == 0.0) continue;
                    out.emplace_back(i * rb + k, j * cb + l, scale * aij * bkl);
                }
        }
}

} // namespace detail

/// Generator of the master equation for a parameter set.  The dense oracle is
/// limited to n_max <= max_n_max.
inline Superoperator liouvillian(const SystemParams& p, int max_n_max = oracle_max_n_max) {
    p.validate();
    if (p.n_max > max_n_max)
        throw Error(ErrorCode::invalid_configuration,
                    "oracle limited to n_max <= " + std::to_string(max_n_max) + ", got " +
                        std::to_string(p.n_max));
    const SpaceDims dims = p.dims();
    const int d = dims.total_dim();
    const Matrix id = Matrix::Identity(d, d);
    const Matrix h = hermitian_hamiltonian(p).matrix();

    std::vector<Eigen::Triplet<cplx>> t;
    detail::add_kron(t, id, h, -I);
    detail::add_kron(t, h.transpose(), id, I);
    for (const auto& c : collapse_operators(p)) {
        const Matrix& cm = c.matrix();
        const Matrix cdc = cm.adjoint() * cm;
        detail::add_kron(t, cm.conjugate(), cm, 1.0);
        detail::add_kron(t, id, cdc, -0.5);
        detail::add_kron(t, cdc.transpose(), id, -0.5);
    }
    SparseColMatrix l(static_cast<Eigen::Index>(d) * d, static_cast<Eigen::Index>(d) * d);
    l.setFromTriplets(t.begin(), t.end());
    l.prune(cplx(0.0), 0.0);
    return Superoperator(dims, std::move(l), spectral_scale(p));
}

namespace detail {

// Solves L x = 0 with the equation in `row` replaced by trace(x) = 1.
inline Vector constrained_null_vector(const Superoperator& l, Eigen::Index row) {
    const int d = l.dims().total_dim();
    const Eigen::Index d2 = static_cast<Eigen::Index>(d) * d;
    std::vector<Eigen::Triplet<cplx>> t;
    t.reserve(static_cast<std::size_t>(l.matrix().nonZeros()) + d);
    for (Eigen::Index col = 0; col < l.matrix().outerSize(); ++col)
        for (SparseColMatrix::InnerIterator it(l.matrix(), col); it; ++it)
            if (it.row() != row) t.emplace_back(it.row(), it.col(), it.value());
    for (int i = 0; i < d; ++i) t.emplace_back(row, static_cast<Eigen::Index>(i) * d + i, 1.0);
    SparseColMatrix m(d2, d2);
    m.setFromTriplets(t.begin(), t.end());

    Eigen::SparseLU<SparseColMatrix> lu;
    lu.analyzePattern(m);
    lu.factorize(m);
    if (lu.info() != Eigen::Success)
        throw Error(ErrorCode::non_unique_steady_state,
                    "constrained Liouvillian is singular; steady state is not unique");
    Vector b = Vector::Zero(d2);
    b(row) = 1.0;
    Vector x = lu.solve(b);
    const Vector r = b - m * x;
    x += lu.solve(r);
    if (!x.allFinite())
        throw Error(ErrorCode::non_unique_steady_state, "steady-state solve produced non-finite values");
    return x;
}

} // namespace detail

inline constexpr double steady_state_residual_tolerance = 1e-10;

/// Unique null vector of L as a density matrix.
inline DensityMatrix steady_state(const Superoperator& l) {
    const int d = l.dims().total_dim();
    const Eigen::Index d2 = static_cast<Eigen::Index>(d) * d;
    const Matrix first = Superoperator::unvec(detail::constrained_null_vector(l, 0), d);
    const Matrix second = Superoperator::unvec(detail::constrained_null_vector(l, d2 - 1), d);
    if ((first - second).cwiseAbs().maxCoeff() > 1e-8)
        throw Error(ErrorCode::non_unique_steady_state,
                    "steady state depends on the constraint row; null space is degenerate");
    Matrix rho = hermitize(first);
    rho /= rho.trace().real();
    const double residual = l.apply(Superoperator::vec(rho)).norm();
    if (!(residual < steady_state_residual_tolerance))
        throw Error(ErrorCode::numerical_failure,
                    "steady-state residual " + std::to_string(residual) + " above tolerance");
    return DensityMatrix(l.dims(), rho);
}

/// RK4 integration of d vec(rho)/dt = L vec(rho), sampled at increasing times.
inline std::vector<DensityMatrix> evolve_master(const Superoperator& l, const DensityMatrix& rho0,
                                                const std::vector<double>& sample_times,
                                                std::optional<double> dt = std::nullopt) {
    if (!(rho0.dims() == l.dims()))
        throw Error(ErrorCode::invalid_dimension, "evolve_master: dimension mismatch");
    double step = 0.01 / l.rate_scale();
    if (dt) {
        if (!(*dt > 0.0)) throw Error(ErrorCode::invalid_argument, "dt must be > 0");
        step = std::min(step, *dt);
    }
    const int d = l.dims().total_dim();
    Vector x = Superoperator::vec(rho0.matrix());
    Vector k1, k2, k3, k4;
    const SparseColMatrix& m = l.matrix();
    std::vector<DensityMatrix> out;
    out.reserve(sample_times.size());
    double t = 0.0;
    for (std::size_t k = 0; k < sample_times.size(); ++k) {
        const double target = sample_times[k];
        if (target < t - 1e-12 || (k > 0 && target < sample_times[k - 1]))
            throw Error(ErrorCode::invalid_argument, "sample times must be increasing and >= 0");
        while (t < target - 1e-12 * std::max(1.0, target)) {
            const double h = std::min(step, target - t);
            k1 = m * x;
            k2 = m * (x + 0.5 * h * k1);
            k3 = m * (x + 0.5 * h * k2);
            k4 = m * (x + h * k3);
            x += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
            t += h;
        }
        t = std::max(t, target);
        if (!x.allFinite())
            throw Error(ErrorCode::numerical_failure,
                        "master-equation step failed before t = " + std::to_string(target));
        Matrix rho = hermitize(Superoperator::unvec(x, d));
        const double drift = std::abs(rho.trace().real() - 1.0);
        if (drift >= 1e-8)
            throw Error(ErrorCode::numerical_failure,
                        "trace drift " + std::to_string(drift) + " at t = " + std::to_string(target));
        rho /= rho.trace().real();
        out.emplace_back(l.dims(), std::move(rho));
    }
    return out;
}

} // namespace cqed
