#pragma once

// Weak-driving-field closed forms and the two-excitation steady-state
// wavefunction |0g> + A1g|1g> + A0e|0e> + A2g|2g> + A1e|1e>.

#include <cmath>
#include <string>

#include "cqed/model.hpp"
#include "cqed/states.hpp"

namespace cqed {

struct Cooperativity {
    double c1;        ///< g^2 / (kappa gamma)
    double c1_prime;  ///< 2 C1 kappa / (2 kappa + gamma)
};

inline Cooperativity cooperativity(double g, double kappa, double gamma) {
    if (!(kappa > 0.0) || !(gamma > 0.0))
        throw Error(ErrorCode::invalid_argument, "cooperativity needs kappa, gamma > 0");
    const double c1 = g * g / (kappa * gamma);
    return {c1, 2.0 * c1 * kappa / (2.0 * kappa + gamma)};
}

/// q = (1 + 2 C1) / (1 + 2 C1 - 2 C1').
inline double q_factor(double g, double kappa, double gamma) {
    const auto c = cooperativity(g, kappa, gamma);
    const double den = 1.0 + 2.0 * c.c1 - 2.0 * c.c1_prime;
    if (std::abs(den) < 1e-12)
        throw Error(ErrorCode::divergent_q, "1 + 2 C1 - 2 C1' vanishes");
    return (1.0 + 2.0 * c.c1) / den;
}

/// xi = 2 g (q - 1) / (gamma (1 + 2 C1)^2).
inline double xi(double g, double kappa, double gamma) {
    const auto c = cooperativity(g, kappa, gamma);
    const double s = 1.0 + 2.0 * c.c1;
    return 2.0 * g / (gamma * s * s) * (q_factor(g, kappa, gamma) - 1.0);
}

struct WeakFieldValidity {
    bool ok;
    double drive_term;  ///< (eps/kappa)^2
    double xi_abs;      ///< |xi|
};

/// (eps/kappa)^2 << |xi| < 1, with "<<" taken as a factor of 10.
inline WeakFieldValidity weak_field_validity(double epsilon, double kappa, double xi_value) {
    const double x = epsilon / kappa;
    const double d = x * x;
    const double a = std::abs(xi_value);
    return {d < a / 10.0 && a < 1.0, d, a};
}

/// -(eps/kappa)^4 log2[(eps/kappa)^4] xi^2.
inline double weak_concurrence(double epsilon, double kappa, double xi_value) {
    const auto v = weak_field_validity(epsilon, kappa, xi_value);
    if (!v.ok)
        throw Error(ErrorCode::out_of_regime,
                    "weak-field formula invalid: (eps/kappa)^2 = " + std::to_string(v.drive_term) +
                        ", |xi| = " + std::to_string(v.xi_abs));
    if (epsilon == 0.0) return 0.0;
    const double x4 = std::pow(epsilon / kappa, 4);
    return -x4 * std::log2(x4) * xi_value * xi_value;
}

inline double weak_log_negativity(double epsilon, double kappa, double xi_value) {
    return std::log2(1.0 + weak_concurrence(epsilon, kappa, xi_value));
}

struct WeakFieldAmplitudes {
    cplx a_1g, a_0e;  ///< first order in eps
    cplx a_2g, a_1e;  ///< second order in eps
    double epsilon_over_kappa = 0.0;
};

/// Solves the steady state of the non-Hermitian evolution order by order in
/// eps: with the |0g> coefficient fixed to 1, the one-excitation block obeys
/// B1 A1 = -V10 and the two-excitation block B2 A2 = -V21 A1, where B_n is H_eff
/// restricted to manifold n and V the drive coupling between manifolds.
inline WeakFieldAmplitudes weak_field_state(const SystemParams& p) {
    p.validate();
    if (p.delta != 0.0 || p.theta != 0.0)
        throw Error(ErrorCode::invalid_configuration, "weak-field state is resonant only");
    SystemParams q = p;
    q.n_max = std::max(p.n_max, 2);
    const SpaceDims dims = q.dims();
    const Matrix h = effective_hamiltonian(q).matrix();

    const int g0 = dims.index(Atom::ground, 0);
    const int one[2] = {dims.index(Atom::ground, 1), dims.index(Atom::excited, 0)};
    const int two[2] = {dims.index(Atom::ground, 2), dims.index(Atom::excited, 1)};

    auto block = [&h](const int (&rows)[2], const int (&cols)[2]) {
        Eigen::Matrix2cd b;
        for (int i = 0; i < 2; ++i)
            for (int j = 0; j < 2; ++j) b(i, j) = h(rows[i], cols[j]);
        return b;
    };

    const Eigen::Matrix2cd b1 = block(one, one);
    const Eigen::Matrix2cd b2 = block(two, two);
    const Eigen::Matrix2cd v21 = block(two, one);
    const Eigen::Vector2cd v10(h(one[0], g0), h(one[1], g0));

    auto solve = [](const Eigen::Matrix2cd& b, const Eigen::Vector2cd& rhs) {
        const cplx det = b.determinant();
        if (std::abs(det) < 1e-300)
            throw Error(ErrorCode::singular_system, "weak-field manifold system is singular");
        return Eigen::Vector2cd(b.inverse() * rhs);
    };

    const Eigen::Vector2cd a1 = solve(b1, -v10);
    const Eigen::Vector2cd a2 = solve(b2, -(v21 * a1));
    const double eps_phys = saturation_scaled_drive(p);
    return {a1(0), a1(1), a2(0), a2(1), eps_phys / p.kappa};
}

/// The weak-field wavefunction assembled on `dims`, normalized.
inline PureState weak_field_pure_state(const WeakFieldAmplitudes& a, SpaceDims dims) {
    if (dims.n_max() < 2)
        throw Error(ErrorCode::invalid_dimension, "weak-field state needs n_max >= 2");
    Vector v = Vector::Zero(dims.total_dim());
    v(dims.index(Atom::ground, 0)) = 1.0;
    v(dims.index(Atom::ground, 1)) = a.a_1g;
    v(dims.index(Atom::excited, 0)) = a.a_0e;
    v(dims.index(Atom::ground, 2)) = a.a_2g;
    v(dims.index(Atom::excited, 1)) = a.a_1e;
    return PureState(dims, std::move(v)).normalized();
}

} // namespace cqed
