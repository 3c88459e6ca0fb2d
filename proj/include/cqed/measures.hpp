#pragma once

// Entanglement and state-comparison functionals on the atom (x) field space.

#include <cmath>
#include <numbers>
#include <algorithm>
#include <utility>
#include <vector>

#include "cqed/states.hpp"

namespace cqed {

inline constexpr double log_negativity_clamp = 1e-12;

/// ||rho^{T_F}||_1 via Hermitian eigen-decomposition.
inline double partial_transpose_trace_norm(const DensityMatrix& rho) {
    return trace_norm_hermitian(partial_transpose_field(rho));
}

/// log2 ||rho^{T_F}||_1, with values below 1e-12 reported as 0.
inline double log_negativity(const DensityMatrix& rho) {
    const double en = std::log2(partial_transpose_trace_norm(rho));
    return en < log_negativity_clamp ? 0.0 : en;
}

inline double negativity(const DensityMatrix& rho) {
    return std::max(0.0, 0.5 * (partial_transpose_trace_norm(rho) - 1.0));
}

/// Log negativity of |psi><psi| from its two Schmidt coefficients:
/// ||rho^{T_F}||_1 = (sqrt(l1) + sqrt(l2))^2 = 1 + 2 sqrt(det rho_atom).
inline double pure_log_negativity(const PureState& psi) {
    const int f = psi.dims().fock_dim();
    const Vector& v = psi.amplitudes();
    const double norm2 = psi.squared_norm();
    const double pg = v.head(f).squaredNorm() / norm2;
    const double pe = v.tail(f).squaredNorm() / norm2;
    const double coh = std::norm(v.head(f).dot(v.tail(f))) / (norm2 * norm2);
    const double det = std::max(0.0, pg * pe - coh);
    const double en = std::log2(1.0 + 2.0 * std::sqrt(det));
    return en < log_negativity_clamp ? 0.0 : en;
}

struct TwoQubitProjection {
    cplx value;     ///< C00 C11 - C01 C10 of the renormalized projection
    double weight;  ///< probability carried by the {g,e} x {0,1} subspace
};

/// Projects onto span{|g,0>, |g,1>, |e,0>, |e,1>} and evaluates
/// C00 C11 - C01 C10 (atom index first, photon index second).
inline TwoQubitProjection two_qubit_E(const PureState& psi) {
    const cplx c00 = psi.amplitude(Atom::ground, 0);
    const cplx c01 = psi.amplitude(Atom::ground, 1);
    const cplx c10 = psi.amplitude(Atom::excited, 0);
    const cplx c11 = psi.amplitude(Atom::excited, 1);
    const double sub = std::norm(c00) + std::norm(c01) + std::norm(c10) + std::norm(c11);
    const double weight = sub / psi.squared_norm();
    if (!(weight >= 1e-10))
        throw Error(ErrorCode::zero_norm, "two-qubit projection weight below 1e-10");
    return {(c00 * c11 - c01 * c10) / sub, weight};
}

struct Concurrence {
    double standard;  ///< 2 |E|
    double paper;     ///< sqrt(2 |E|)
};

inline Concurrence concurrence_pure(const PureState& psi) {
    const double e = std::abs(two_qubit_E(psi).value);
    return {2.0 * e, std::sqrt(2.0 * e)};
}

inline double log_negativity_from_concurrence(double c) {
    if (!(c >= 0.0 && c <= 1.0 + 1e-12))
        throw Error(ErrorCode::invalid_argument, "concurrence must lie in [0, 1]");
    return std::log2(1.0 + c);
}

/// 1 - Tr(rho^2).
inline double impurity(const DensityMatrix& rho) {
    return 1.0 - rho.matrix().squaredNorm();
}

/// |<psi_wf|psi_c>|^2 for normalized inputs.
inline double weak_field_overlap(const PureState& psi_c, const PureState& psi_wf) {
    if (!(psi_c.squared_norm() > 0.0) || !(psi_wf.squared_norm() > 0.0))
        throw Error(ErrorCode::zero_norm, "overlap with a zero-norm state");
    return std::norm(psi_wf.amplitudes().dot(psi_c.amplitudes())) /
           (psi_c.squared_norm() * psi_wf.squared_norm());
}

/// <a^dag a s+ s-> / (<a^dag a> <s+ s->).
inline double cross_correlation_g2tf(const DensityMatrix& rho) {
    const int f = rho.dims().fock_dim();
    const Matrix& m = rho.matrix();
    double n_total = 0.0, n_excited = 0.0, p_excited = 0.0;
    for (int n = 0; n < f; ++n) {
        const double pg = m(n, n).real();
        const double pe = m(f + n, f + n).real();
        n_total += n * (pg + pe);
        n_excited += n * pe;
        p_excited += pe;
    }
    constexpr double floor = 1e-14;
    if (!(n_total > floor) || !(p_excited > floor))
        throw Error(ErrorCode::undefined_correlation,
                    "cross-correlation needs <a^dag a> > 0 and <s+ s-> > 0");
    return n_excited / (n_total * p_excited);
}

enum class SeriesKind { ensemble_rho, per_trajectory_mean };

struct EntanglementSeries {
    std::vector<double> sample_times;
    std::vector<double> values;
    std::vector<double> stderrs;  ///< empty for ensemble_rho
    SeriesKind kind = SeriesKind::ensemble_rho;
};

struct TimeWindow {
    double start;
    double stop;

    bool contains(double t) const noexcept {
        const double eps = 1e-12 * std::max(1.0, std::abs(stop));
        return t >= start - eps && t <= stop + eps;
    }
};

struct MaxAndSteady {
    double max;
    double steady;
};

/// Maximum over the whole series and mean over the window.
inline MaxAndSteady series_max_and_steady(const EntanglementSeries& series, TimeWindow window) {
    if (series.values.empty()) throw Error(ErrorCode::empty_series, "series has no samples");
    double mx = series.values.front(), sum = 0.0;
    int count = 0;
    for (std::size_t k = 0; k < series.values.size(); ++k) {
        mx = std::max(mx, series.values[k]);
        if (window.contains(series.sample_times[k])) {
            sum += series.values[k];
            ++count;
        }
    }
    if (count == 0) throw Error(ErrorCode::empty_window, "no samples inside the steady window");
    return {mx, sum / count};
}

/// Truncated coherent state |alpha> on fock_dim levels (not renormalized).
inline Vector coherent_amplitudes(int fock_dim, cplx alpha) {
    Vector v(fock_dim);
    v(0) = std::exp(-0.5 * std::norm(alpha));
    for (int n = 1; n < fock_dim; ++n) v(n) = v(n - 1) * alpha / std::sqrt(static_cast<double>(n));
    return v;
}

namespace detail {

struct AnsatzBranches {
    Vector plus, minus;
};

// |psi_+^0(r, -phi)> and |psi_-^0(r, phi)>, each (1/sqrt2)[e^{-i t0}|e> +- |g>]|r e^{-i t0}>.
inline AnsatzBranches ansatz_branches(SpaceDims dims, double r, double phi) {
    const int f = dims.fock_dim();
    const double s = 1.0 / std::sqrt(2.0);
    const cplx up = std::polar(1.0, phi);
    const Vector coh_plus = coherent_amplitudes(f, r * up);
    const Vector coh_minus = coherent_amplitudes(f, r * std::conj(up));
    AnsatzBranches b{Vector(dims.total_dim()), Vector(dims.total_dim())};
    b.plus.head(f) = s * coh_plus;
    b.plus.tail(f) = (s * up) * coh_plus;
    b.minus.head(f) = -s * coh_minus;
    b.minus.tail(f) = (s * std::conj(up)) * coh_minus;
    return b;
}

} // namespace detail

/// (1/sqrt2)[|psi_+^0(r,-phi)> + e^{-i rel}|psi_-^0(r,phi)>], renormalized on the truncated space.
inline PureState bimodal_ansatz(SpaceDims dims, double r, double phi, double relative_phase) {
    const auto b = detail::ansatz_branches(dims, r, phi);
    Vector v = (b.plus + std::polar(1.0, -relative_phase) * b.minus) / std::sqrt(2.0);
    return PureState(dims, std::move(v)).normalized();
}

struct AnsatzFit {
    double overlap;
    double alpha;           ///< |alpha|
    double phi;             ///< Phi
    double relative_phase;  ///< phase between the two branches
};

namespace detail {

// max over q of |op + e^{iq} om|^2 / (2 <A|A>) for A = (b+ + e^{-iq} b-)/sqrt2.
inline std::pair<double, double> best_relative_phase(cplx op, cplx om, cplx cross, double norms) {
    constexpr double two_pi = 2.0 * std::numbers::pi;
    auto value = [&](double q) {
        const double norm2 = 0.5 * (norms + 2.0 * (std::polar(1.0, -q) * cross).real());
        if (!(norm2 > 1e-300)) return -1.0;
        return 0.5 * std::norm(op + std::polar(1.0, q) * om) / norm2;
    };
    constexpr int nq = 48;
    double best_q = 0.0, best_v = -1.0;
    for (int k = 0; k < nq; ++k) {
        const double q = two_pi * k / nq;
        const double v = value(q);
        if (v > best_v) best_v = v, best_q = q;
    }
    // Golden-section search within one grid cell of the discrete optimum.
    const double ratio = 0.5 * (std::sqrt(5.0) - 1.0);
    double lo = best_q - two_pi / nq, hi = best_q + two_pi / nq;
    double x1 = hi - ratio * (hi - lo), x2 = lo + ratio * (hi - lo);
    double f1 = value(x1), f2 = value(x2);
    for (int it = 0; it < 40; ++it) {
        if (f1 < f2) {
            lo = x1, x1 = x2, f1 = f2;
            x2 = lo + ratio * (hi - lo), f2 = value(x2);
        } else {
            hi = x2, x2 = x1, f2 = f1;
            x1 = hi - ratio * (hi - lo), f1 = value(x1);
        }
    }
    const double q = 0.5 * (lo + hi), v = value(q);
    return v > best_v ? std::pair{v, q} : std::pair{best_v, best_q};
}

} // namespace detail

/// Best |<ansatz|psi>|^2 over a grid in (|alpha|, Phi), refined once; the
/// relative phase is optimized at every grid point.  A positive min_alpha
/// excludes the near-vacuum members, which are product states.
inline AnsatzFit bimodal_ansatz_overlap(const PureState& psi_c, double min_alpha = 0.0) {
    const PureState psi = psi_c.normalized();
    const SpaceDims dims = psi.dims();
    const double alpha_max = std::sqrt(static_cast<double>(dims.n_max()));
    constexpr double two_pi = 2.0 * std::numbers::pi;

    AnsatzFit best{-1.0, 0.0, 0.0, 0.0};
    auto scan = [&](double r0, double r1, int nr, double p0, double p1, int np, bool endpoint) {
        for (int i = 0; i < nr; ++i) {
            const double r = r0 + (r1 - r0) * i / (nr - 1);
            if (r < min_alpha || r > alpha_max) continue;
            for (int j = 0; j < np; ++j) {
                const double phi = p0 + (p1 - p0) * j / (endpoint ? np - 1 : np);
                const auto b = detail::ansatz_branches(dims, r, phi);
                const auto [ov, q] = detail::best_relative_phase(
                    b.plus.dot(psi.amplitudes()), b.minus.dot(psi.amplitudes()), b.plus.dot(b.minus),
                    b.plus.squaredNorm() + b.minus.squaredNorm());
                if (ov > best.overlap) best = {ov, r, phi, q};
            }
        }
    };

    constexpr int nr = 32, nphi = 48, refine = 41;
    if (!(min_alpha >= 0.0 && min_alpha < alpha_max))
        throw Error(ErrorCode::invalid_argument, "min_alpha outside [0, sqrt(n_max))");
    scan(min_alpha, alpha_max, nr, 0.0, two_pi, nphi, false);
    const AnsatzFit coarse = best;
    const double dr = alpha_max / (nr - 1), dphi = two_pi / nphi;
    scan(coarse.alpha - dr, coarse.alpha + dr, refine, coarse.phi - dphi, coarse.phi + dphi, refine, true);
    best.phi = std::fmod(best.phi + two_pi, two_pi);
    best.relative_phase = std::fmod(best.relative_phase + two_pi, two_pi);
    return best;
}

} // namespace cqed
