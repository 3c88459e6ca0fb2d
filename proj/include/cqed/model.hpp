#pragma once

// Driven, damped Jaynes-Cummings model in the frame rotating at the drive.
//
//   H     = (D_a/2) sz + D_c a^dag a + g (a^dag s- + a s+) + i eps (a^dag - a)
//   H_eff = H - i kappa a^dag a - i (gamma/2) s+ s-
//
// kappa is the field amplitude decay rate and gamma the atomic population decay
// rate, so the collapse operators are sqrt(2 kappa) a and sqrt(gamma) s-.

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "cqed/hilbert.hpp"

namespace cqed {

enum class DriveScaling { raw, saturation };

inline const char* to_string(DriveScaling s) { return s == DriveScaling::raw ? "raw" : "saturation"; }

inline DriveScaling drive_scaling_from_string(const std::string& s) {
    if (s == "raw") return DriveScaling::raw;
    if (s == "saturation") return DriveScaling::saturation;
    throw Error(ErrorCode::invalid_configuration, "unknown drive scaling '" + s + "'");
}

struct SystemParams {
    double g = 1.0;
    double kappa = 1.0;
    double gamma = 1.0;
    double epsilon = 0.0;
    double delta = 0.0;  ///< 2 (w_atom - w_cav) / gamma
    double theta = 0.0;  ///< (w_drive - w_cav) / kappa
    int n_max = 10;
    DriveScaling drive_scaling = DriveScaling::raw;

    SpaceDims dims() const { return SpaceDims::from_n_max(n_max); }

    void validate() const {
        auto fail = [](const std::string& m) { throw Error(ErrorCode::invalid_configuration, m); };
        if (!(g >= 0.0) || !(gamma >= 0.0) || !(epsilon >= 0.0)) fail("rates and drive must be >= 0");
        if (!(kappa > 0.0)) fail("kappa must be > 0");
        if (!std::isfinite(delta) || !std::isfinite(theta)) fail("detunings must be finite");
        if (n_max < 1) fail("n_max must be >= 1");
        if (drive_scaling == DriveScaling::saturation && g == 0.0)
            fail("saturation drive scaling needs g > 0");
    }
};

struct DetuningTerms {
    double atom;    ///< coefficient D_a of sz/2
    double cavity;  ///< coefficient D_c of a^dag a
};

inline DetuningTerms detuning_terms(const SystemParams& p) {
    return {p.delta * p.gamma / 2.0, p.theta * p.kappa};
}

/// Physical drive amplitude entering H.  In saturation mode eps = 1 puts the
/// empty-cavity photon number at n_sat = gamma^2 / (8 g^2).
inline double saturation_scaled_drive(const SystemParams& p) {
    if (p.drive_scaling == DriveScaling::raw) return p.epsilon;
    if (p.g == 0.0)
        throw Error(ErrorCode::invalid_configuration, "saturation drive scaling needs g > 0");
    const double n_sat = p.gamma * p.gamma / (8.0 * p.g * p.g);
    return p.epsilon * p.kappa * std::sqrt(n_sat);
}

/// Largest rate in the problem; sets the integrator step.
inline double spectral_scale(const SystemParams& p) {
    const auto d = detuning_terms(p);
    return std::max({p.kappa, p.gamma / 2.0, p.g, saturation_scaled_drive(p), std::abs(d.atom),
                     std::abs(d.cavity)});
}

namespace detail {

struct ModelOperators {
    Matrix a, sm, sz, n, see;
};

inline ModelOperators model_operators(SpaceDims dims) {
    const int f = dims.fock_dim();
    return {field_operator(annihilation(f)).matrix(), atom_operator(sigma_minus(), dims).matrix(),
            atom_operator(sigma_z(), dims).matrix(), field_operator(number_operator(f)).matrix(),
            atom_operator(sigma_plus() * sigma_minus(), dims).matrix()};
}

} // namespace detail

inline OperatorMatrix hermitian_hamiltonian(const SystemParams& p) {
    p.validate();
    const SpaceDims dims = p.dims();
    const auto ops = detail::model_operators(dims);
    const auto det = detuning_terms(p);
    const double eps = saturation_scaled_drive(p);
    const Matrix ad = ops.a.adjoint();
    Matrix h = (det.atom / 2.0) * ops.sz + det.cavity * ops.n +
               p.g * (ad * ops.sm + ops.a * ops.sm.adjoint()) + (I * eps) * (ad - ops.a);
    return OperatorMatrix(hermitize(h), dims, true);
}

/// [cavity, atom] = [sqrt(2 kappa) a, sqrt(gamma) s-].
inline std::vector<OperatorMatrix> collapse_operators(const SystemParams& p) {
    p.validate();
    const SpaceDims dims = p.dims();
    const auto ops = detail::model_operators(dims);
    return {OperatorMatrix(std::sqrt(2.0 * p.kappa) * ops.a, dims),
            OperatorMatrix(std::sqrt(p.gamma) * ops.sm, dims)};
}

inline constexpr int cavity_channel = 0;
inline constexpr int atom_channel = 1;

inline OperatorMatrix effective_hamiltonian(const SystemParams& p) {
    const SpaceDims dims = p.dims();
    const auto ops = detail::model_operators(dims);
    Matrix h = hermitian_hamiltonian(p).matrix();
    h -= (I * p.kappa) * ops.n + (I * (p.gamma / 2.0)) * ops.see;
    return OperatorMatrix(std::move(h), dims);
}

/// s+ s- + a^dag a.
inline OperatorMatrix excitation_number(SpaceDims dims) {
    const auto ops = detail::model_operators(dims);
    return OperatorMatrix(ops.see + ops.n, dims, true);
}

struct ComplexRates {
    cplx kappa_tilde;
    cplx gamma_tilde;
};

inline ComplexRates complex_rates(const SystemParams& p) {
    return {p.kappa * cplx(1.0, p.theta), p.gamma * cplx(1.0, p.delta)};
}

/// sqrt((kappa~ - gamma~/2)^2 / 4 - g^2), principal branch.
inline cplx vacuum_rabi(const SystemParams& p) {
    const auto r = complex_rates(p);
    const cplx d = r.kappa_tilde - r.gamma_tilde / 2.0;
    return std::sqrt(0.25 * d * d - p.g * p.g);
}

} // namespace cqed
