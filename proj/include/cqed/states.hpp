#pragma once

#include <cmath>
#include <string>

#include "cqed/hilbert.hpp"

namespace cqed {

/// Conditioned trajectory wavefunction: amplitudes C_{s,n} in the fixed basis.
/// Not necessarily normalized; the squared norm is cached.
class PureState {
public:
    PureState(SpaceDims dims, Vector amplitudes) : dims_(dims), amps_(std::move(amplitudes)) {
        if (amps_.size() != dims_.total_dim())
            throw Error(ErrorCode::invalid_dimension, "state length does not match space");
        squared_norm_ = amps_.squaredNorm();
    }

    static PureState basis(SpaceDims dims, Atom s, int n) {
        Vector v = Vector::Zero(dims.total_dim());
        v(dims.index(s, n)) = 1.0;
        return PureState(dims, std::move(v));
    }

    const SpaceDims& dims() const noexcept { return dims_; }
    const Vector& amplitudes() const noexcept { return amps_; }
    double squared_norm() const noexcept { return squared_norm_; }
    cplx amplitude(Atom s, int n) const { return amps_(dims_.index(s, n)); }

    PureState normalized() const {
        if (!(squared_norm_ > 0.0) || !std::isfinite(squared_norm_))
            throw Error(ErrorCode::zero_norm, "cannot normalize a zero-norm state");
        return PureState(dims_, amps_ / std::sqrt(squared_norm_));
    }

    /// Occupation of the two highest Fock levels, relative to the norm.
    double top_fock_weight() const {
        const int f = dims_.fock_dim();
        double w = 0.0;
        for (int s = 0; s < 2; ++s)
            for (int n = f - 2; n < f; ++n) w += std::norm(amps_(dims_.index(s, n)));
        return w / squared_norm_;
    }

private:
    SpaceDims dims_;
    Vector amps_;
    double squared_norm_;
};

/// Hermitian, unit-trace, numerically positive semidefinite state.
class DensityMatrix {
public:
    static constexpr double hermitian_tolerance = 1e-10;
    static constexpr double trace_tolerance = 1e-10;
    static constexpr double psd_tolerance = 1e-8;

    DensityMatrix(SpaceDims dims, Matrix entries) : dims_(dims), rho_(std::move(entries)) {
        if (rho_.rows() != dims_.total_dim() || rho_.cols() != dims_.total_dim())
            throw Error(ErrorCode::invalid_dimension, "density matrix dimension mismatch");
        if (hermitian_defect(rho_) >= hermitian_tolerance)
            throw Error(ErrorCode::non_hermitian, "density matrix is not Hermitian");
        const cplx tr = rho_.trace();
        if (std::abs(tr - 1.0) >= trace_tolerance)
            throw Error(ErrorCode::invalid_argument,
                        "density matrix trace " + std::to_string(tr.real()) + " != 1");
        const double min_eig = hermitian_eigenvalues(rho_)(0);
        if (min_eig < -psd_tolerance)
            throw Error(ErrorCode::invalid_argument,
                        "density matrix has eigenvalue " + std::to_string(min_eig));
    }

    static DensityMatrix from_pure(const PureState& psi) {
        const PureState u = psi.normalized();
        return DensityMatrix(u.dims(), u.amplitudes() * u.amplitudes().adjoint());
    }

    /// Hermitize and trace-normalize an accumulated matrix before validation.
    static DensityMatrix from_unnormalized(SpaceDims dims, const Matrix& m) {
        Matrix h = hermitize(m);
        const double tr = h.trace().real();
        if (!(tr > 0.0))
            throw Error(ErrorCode::zero_norm, "accumulated density matrix has zero trace");
        return DensityMatrix(dims, h / tr);
    }

    const SpaceDims& dims() const noexcept { return dims_; }
    const Matrix& matrix() const noexcept { return rho_; }

private:
    SpaceDims dims_;
    Matrix rho_;
};

inline DensityMatrix product_state(const Matrix& rho_atom, const Matrix& rho_field) {
    const SpaceDims dims(static_cast<int>(rho_field.rows()));
    return DensityMatrix::from_unnormalized(dims, kron(rho_atom, rho_field));
}

inline Matrix partial_transpose_field(const DensityMatrix& rho) {
    return partial_transpose_field(rho.matrix(), rho.dims());
}

inline Matrix partial_trace(const DensityMatrix& rho, Subsystem keep) {
    return partial_trace(rho.matrix(), rho.dims(), keep);
}

/// <psi|O|psi> / <psi|psi>.
inline cplx expectation(const OperatorMatrix& op, const PureState& psi) {
    if (op.dim() != psi.dims().total_dim())
        throw Error(ErrorCode::invalid_dimension, "expectation: dimension mismatch");
    if (!(psi.squared_norm() > 0.0))
        throw Error(ErrorCode::zero_norm, "expectation in a zero-norm state");
    return psi.amplitudes().dot(op.matrix() * psi.amplitudes()) / psi.squared_norm();
}

inline cplx expectation(const OperatorMatrix& op, const DensityMatrix& rho) {
    if (op.dim() != rho.dims().total_dim())
        throw Error(ErrorCode::invalid_dimension, "expectation: dimension mismatch");
    return (rho.matrix() * op.matrix()).trace();
}

/// Real-valued expectation of a Hermitian observable.
template <class State>
double observable(const OperatorMatrix& op, const State& state) {
    const cplx v = expectation(op, state);
    if (std::abs(v.imag()) >= 1e-10)
        throw Error(ErrorCode::non_hermitian,
                    "observable has imaginary expectation " + std::to_string(v.imag()));
    return v.real();
}

} // namespace cqed
