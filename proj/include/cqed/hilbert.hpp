#pragma once

// Composite space (two-level atom) x (Fock space truncated at n_max).
//
// Basis order is a project-wide contract: index k = s * fock_dim + n with
// s = 0 for the ground state, s = 1 for the excited state, n = photon number.
// The atom index is slow and the photon index is fast, so Kronecker products
// are written atom (x) field.

#include <optional>
#include <string>

#include "cqed/error.hpp"
#include "cqed/linalg.hpp"

namespace cqed {

enum class Atom : int { ground = 0, excited = 1 };

class SpaceDims {
public:
    static constexpr int atom_dim = 2;

    explicit SpaceDims(int fock_dim) : fock_dim_(fock_dim) {
        if (fock_dim < 2)
            throw Error(ErrorCode::invalid_dimension,
                        "fock_dim must be >= 2, got " + std::to_string(fock_dim));
    }

    static SpaceDims from_n_max(int n_max) { return SpaceDims(n_max + 1); }

    int fock_dim() const noexcept { return fock_dim_; }
    int n_max() const noexcept { return fock_dim_ - 1; }
    int total_dim() const noexcept { return atom_dim * fock_dim_; }

    int index(Atom s, int n) const noexcept { return static_cast<int>(s) * fock_dim_ + n; }
    int index(int s, int n) const noexcept { return s * fock_dim_ + n; }

    friend bool operator==(const SpaceDims&, const SpaceDims&) = default;

private:
    int fock_dim_;
};

/// Dense square operator, optionally tagged with the composite space it acts on.
class OperatorMatrix {
public:
    static constexpr double hermitian_tolerance = 1e-12;

    explicit OperatorMatrix(Matrix entries, std::optional<SpaceDims> dims = std::nullopt,
                            bool hermitian = false)
        : entries_(std::move(entries)), dims_(dims), hermitian_(hermitian) {
        if (entries_.rows() != entries_.cols())
            throw Error(ErrorCode::invalid_dimension, "operator matrix must be square");
        if (dims_ && dims_->total_dim() != entries_.rows())
            throw Error(ErrorCode::invalid_dimension,
                        "operator dimension " + std::to_string(entries_.rows()) +
                            " does not match space dimension " +
                            std::to_string(dims_->total_dim()));
        if (hermitian_ && hermitian_defect(entries_) >= hermitian_tolerance)
            throw Error(ErrorCode::non_hermitian, "operator flagged hermitian is not");
    }

    const Matrix& matrix() const noexcept { return entries_; }
    int dim() const noexcept { return static_cast<int>(entries_.rows()); }
    const std::optional<SpaceDims>& dims() const noexcept { return dims_; }
    bool hermitian() const noexcept { return hermitian_; }

    OperatorMatrix adjoint() const { return OperatorMatrix(entries_.adjoint(), dims_, hermitian_); }

    friend OperatorMatrix operator*(const OperatorMatrix& a, const OperatorMatrix& b) {
        check_same(a, b);
        return OperatorMatrix(a.entries_ * b.entries_, a.dims_);
    }
    friend OperatorMatrix operator+(const OperatorMatrix& a, const OperatorMatrix& b) {
        check_same(a, b);
        return OperatorMatrix(a.entries_ + b.entries_, a.dims_);
    }
    friend OperatorMatrix operator-(const OperatorMatrix& a, const OperatorMatrix& b) {
        check_same(a, b);
        return OperatorMatrix(a.entries_ - b.entries_, a.dims_);
    }
    friend OperatorMatrix operator*(cplx z, const OperatorMatrix& a) {
        return OperatorMatrix(z * a.entries_, a.dims_);
    }

private:
    static void check_same(const OperatorMatrix& a, const OperatorMatrix& b) {
        if (a.dim() != b.dim())
            throw Error(ErrorCode::invalid_dimension, "operator dimensions differ");
    }

    Matrix entries_;
    std::optional<SpaceDims> dims_;
    bool hermitian_;
};

inline OperatorMatrix identity(int dim) {
    return OperatorMatrix(Matrix::Identity(dim, dim), std::nullopt, true);
}

inline OperatorMatrix annihilation(int fock_dim) {
    if (fock_dim < 2)
        throw Error(ErrorCode::invalid_dimension,
                    "fock_dim must be >= 2, got " + std::to_string(fock_dim));
    Matrix a = Matrix::Zero(fock_dim, fock_dim);
    for (int n = 1; n < fock_dim; ++n) a(n - 1, n) = std::sqrt(static_cast<double>(n));
    return OperatorMatrix(std::move(a));
}

inline OperatorMatrix creation(int fock_dim) { return annihilation(fock_dim).adjoint(); }

inline OperatorMatrix number_operator(int fock_dim) {
    Matrix n = Matrix::Zero(fock_dim, fock_dim);
    for (int k = 0; k < fock_dim; ++k) n(k, k) = static_cast<double>(k);
    return OperatorMatrix(std::move(n), std::nullopt, true);
}

/// sigma_- |e> = |g>.
inline OperatorMatrix sigma_minus() {
    Matrix m = Matrix::Zero(2, 2);
    m(0, 1) = 1.0;
    return OperatorMatrix(std::move(m));
}

inline OperatorMatrix sigma_plus() { return sigma_minus().adjoint(); }

inline OperatorMatrix sigma_z() {
    Matrix m = Matrix::Zero(2, 2);
    m(0, 0) = -1.0;
    m(1, 1) = 1.0;
    return OperatorMatrix(std::move(m), std::nullopt, true);
}

inline Matrix kron(const Matrix& a, const Matrix& b) {
    Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
    for (Eigen::Index i = 0; i < a.rows(); ++i)
        for (Eigen::Index j = 0; j < a.cols(); ++j)
            out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    return out;
}

/// atom_op (x) field_op in the fixed basis order.
inline OperatorMatrix tensor(const OperatorMatrix& atom_op, const OperatorMatrix& field_op) {
    if (atom_op.dim() != SpaceDims::atom_dim)
        throw Error(ErrorCode::invalid_dimension, "atom operator must be 2x2");
    const SpaceDims dims(field_op.dim());
    return OperatorMatrix(kron(atom_op.matrix(), field_op.matrix()), dims,
                          atom_op.hermitian() && field_op.hermitian());
}

inline OperatorMatrix atom_operator(const OperatorMatrix& atom_op, SpaceDims dims) {
    return tensor(atom_op, identity(dims.fock_dim()));
}

inline OperatorMatrix field_operator(const OperatorMatrix& field_op) {
    return tensor(identity(2), field_op);
}

/// rho^{T_F}[(s,n),(s',n')] = rho[(s,n'),(s',n)].
inline Matrix partial_transpose_field(const Matrix& rho, SpaceDims dims) {
    const int f = dims.fock_dim();
    if (rho.rows() != dims.total_dim() || rho.cols() != dims.total_dim())
        throw Error(ErrorCode::invalid_dimension, "partial transpose: dimension mismatch");
    Matrix out(rho.rows(), rho.cols());
    for (int s = 0; s < 2; ++s)
        for (int sp = 0; sp < 2; ++sp)
            out.block(s * f, sp * f, f, f) = rho.block(s * f, sp * f, f, f).transpose();
    return out;
}

enum class Subsystem { atom, field };

/// Reduced operator on the kept subsystem.
inline Matrix partial_trace(const Matrix& rho, SpaceDims dims, Subsystem keep) {
    const int f = dims.fock_dim();
    if (rho.rows() != dims.total_dim() || rho.cols() != dims.total_dim())
        throw Error(ErrorCode::invalid_dimension, "partial trace: dimension mismatch");
    if (keep == Subsystem::atom) {
        Matrix out(2, 2);
        for (int s = 0; s < 2; ++s)
            for (int sp = 0; sp < 2; ++sp) out(s, sp) = rho.block(s * f, sp * f, f, f).trace();
        return out;
    }
    return rho.block(0, 0, f, f) + rho.block(f, f, f, f);
}

} // namespace cqed
