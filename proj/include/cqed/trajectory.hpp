#pragma once

// Monte-Carlo wavefunction unraveling with direct photodetection.
//
// Between jumps the unnormalized state follows d|psi>/dt = -i H_eff |psi>
// (classical RK4, fixed step).  A uniform threshold u is drawn; the jump
// happens when ||psi||^2 first drops to u, located by bisection to dt/100.
// The jump channel is chosen with probability ||C_m psi||^2 / sum_k ||C_k psi||^2
// using a fresh variate, then a new threshold is drawn.

#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/SparseCore>

#include "cqed/model.hpp"
#include "cqed/rng.hpp"
#include "cqed/states.hpp"

namespace cqed {

using SparseMatrix = Eigen::SparseMatrix<cplx, Eigen::RowMajor>;

/// Per-step integrator scratch space.
class Rk4Workspace {
public:
    /// psi <- RK4 step of dpsi/dt = generator * psi.
    template <class Generator>
    void step(const Generator& generator, Vector& psi, double dt) {
        k1_.noalias() = generator * psi;
        tmp_ = psi + (0.5 * dt) * k1_;
        k2_.noalias() = generator * tmp_;
        tmp_ = psi + (0.5 * dt) * k2_;
        k3_.noalias() = generator * tmp_;
        tmp_ = psi + dt * k3_;
        k4_.noalias() = generator * tmp_;
        psi += (dt / 6.0) * (k1_ + 2.0 * k2_ + 2.0 * k3_ + k4_);
    }

private:
    Vector k1_, k2_, k3_, k4_, tmp_;
};

/// One RK4 step of the non-Hermitian Schroedinger equation.
inline PureState evolve_step(const PureState& state, const OperatorMatrix& h_eff, double dt) {
    if (!(dt > 0.0)) throw Error(ErrorCode::invalid_argument, "evolve_step: dt must be > 0");
    if (h_eff.dim() != state.dims().total_dim())
        throw Error(ErrorCode::invalid_dimension, "evolve_step: dimension mismatch");
    const Matrix generator = -I * h_eff.matrix();
    Vector psi = state.amplitudes();
    Rk4Workspace ws;
    ws.step(generator, psi, dt);
    if (!psi.allFinite())
        throw Error(ErrorCode::numerical_failure, "evolve_step: non-finite amplitudes after step");
    return PureState(state.dims(), std::move(psi));
}

/// Index of the collapse channel selected by uniform variate u in [0, 1).
inline int sample_jump_channel(const PureState& state, const std::vector<OperatorMatrix>& collapses,
                               double u) {
    if (!(u >= 0.0 && u < 1.0)) throw Error(ErrorCode::invalid_argument, "u must lie in [0, 1)");
    std::vector<double> rates;
    rates.reserve(collapses.size());
    double total = 0.0;
    for (const auto& c : collapses) {
        rates.push_back((c.matrix() * state.amplitudes()).squaredNorm());
        total += rates.back();
    }
    if (!(total > 0.0)) throw Error(ErrorCode::no_jump_possible, "all jump rates vanish");
    double cumulative = 0.0;
    for (std::size_t m = 0; m < rates.size(); ++m) {
        cumulative += rates[m] / total;
        if (u < cumulative) return static_cast<int>(m);
    }
    for (std::size_t m = rates.size(); m-- > 0;)
        if (rates[m] > 0.0) return static_cast<int>(m);
    return static_cast<int>(rates.size()) - 1;
}

/// C|psi>, renormalized.
inline PureState apply_jump(const PureState& state, const OperatorMatrix& collapse) {
    Vector out = collapse.matrix() * state.amplitudes();
    const double norm2 = out.squaredNorm();
    if (!(norm2 > 0.0)) throw Error(ErrorCode::zero_norm, "jump produced a zero-norm state");
    return PureState(state.dims(), out / std::sqrt(norm2));
}

enum class JumpChannel : int { cavity = cavity_channel, atom = atom_channel };

inline const char* to_string(JumpChannel c) { return c == JumpChannel::cavity ? "cavity" : "atom"; }

struct JumpEvent {
    double time;
    JumpChannel channel;

    friend bool operator==(const JumpEvent&, const JumpEvent&) = default;
};

struct TrajectoryRecord {
    std::uint64_t seed = 0;
    std::vector<double> sample_times;
    std::vector<PureState> states;  ///< normalized snapshots
    std::vector<JumpEvent> jumps;
    std::vector<double> photon_number;
    std::vector<double> sigma_z;
};

/// Integrator step: min(0.01 / largest rate, requested).
inline double effective_dt(const SystemParams& p, std::optional<double> requested = std::nullopt) {
    double dt = 0.01 / spectral_scale(p);
    if (requested) {
        if (!(*requested > 0.0)) throw Error(ErrorCode::invalid_argument, "dt must be > 0");
        dt = std::min(dt, *requested);
    }
    return dt;
}

inline double photon_number_of(const PureState& psi) {
    const int f = psi.dims().fock_dim();
    double acc = 0.0;
    for (int s = 0; s < 2; ++s)
        for (int n = 1; n < f; ++n) acc += n * std::norm(psi.amplitudes()(s * f + n));
    return acc / psi.squared_norm();
}

inline double sigma_z_of(const PureState& psi) {
    const int f = psi.dims().fock_dim();
    const Vector& v = psi.amplitudes();
    return (v.tail(f).squaredNorm() - v.head(f).squaredNorm()) / psi.squared_norm();
}

/// Precomputed sparse operators for one parameter set.
class TrajectoryEngine {
public:
    static constexpr double truncation_threshold = 1e-6;
    static constexpr double norm_growth_tolerance = 1e-12;

    TrajectoryEngine(const SystemParams& p, std::optional<double> requested_dt = std::nullopt)
        : params_(p), dims_(p.dims()), dt_(effective_dt(p, requested_dt)) {
        p.validate();
        generator_ = Matrix(-I * effective_hamiltonian(p).matrix()).sparseView(0.0, 1.0);
        for (const auto& c : collapse_operators(p)) {
            collapses_.push_back(c);
            sparse_collapses_.push_back(c.matrix().sparseView(0.0, 1.0));
        }
    }

    const SystemParams& params() const noexcept { return params_; }
    const SpaceDims& dims() const noexcept { return dims_; }
    double dt() const noexcept { return dt_; }
    const std::vector<OperatorMatrix>& collapses() const noexcept { return collapses_; }

    /// Runs one trajectory and calls on_sample(k, normalized_state) at each
    /// sample time.  Returns the jump record.
    template <class OnSample>
    std::vector<JumpEvent> simulate(double t_max, std::uint64_t seed,
                                    const std::vector<double>& sample_times, OnSample&& on_sample,
                                    const std::optional<PureState>& initial = std::nullopt,
                                    bool check_truncation = true) const {
        if (!(t_max > 0.0)) throw Error(ErrorCode::invalid_argument, "t_max must be > 0");
        check_sample_times(sample_times, t_max);

        TrajectoryRng rng(seed);
        auto draw_threshold = [&rng] {
            double u = rng.uniform();
            while (u == 0.0) u = rng.uniform();
            return u;
        };

        Vector psi;
        if (initial) {
            if (!(initial->dims() == dims_))
                throw Error(ErrorCode::invalid_dimension, "initial state dimension mismatch");
            psi = initial->normalized().amplitudes();
        } else {
            psi = PureState::basis(dims_, Atom::ground, 0).amplitudes();
        }

        std::vector<JumpEvent> jumps;
        Rk4Workspace ws;
        Vector trial;
        double threshold = draw_threshold();
        double t = 0.0;
        std::size_t next_sample = 0;
        std::uint64_t step_index = 0;
        const double time_eps = 1e-12 * std::max(1.0, t_max);

        auto emit_samples = [&] {
            while (next_sample < sample_times.size() && sample_times[next_sample] <= t + time_eps) {
                PureState snap = PureState(dims_, psi).normalized();
                if (check_truncation) guard_truncation(snap, t);
                on_sample(next_sample, snap);
                ++next_sample;
            }
        };

        emit_samples();
        while (t < t_max - time_eps) {
            const double target =
                next_sample < sample_times.size() ? std::min(sample_times[next_sample], t_max) : t_max;
            const double h = std::min(dt_, target - t);
            const double norm_before = psi.squaredNorm();
            trial = psi;
            ws.step(generator_, trial, h);
            ++step_index;
            const double norm_after = trial.squaredNorm();
            if (!std::isfinite(norm_after))
                throw Error(ErrorCode::numerical_failure,
                            "non-finite amplitudes at step " + std::to_string(step_index) +
                                " (t = " + std::to_string(t) + ")");
            if (norm_after > norm_before * (1.0 + norm_growth_tolerance))
                throw Error(ErrorCode::numerical_failure,
                            "norm increased at step " + std::to_string(step_index) +
                                " (t = " + std::to_string(t) + ")");

            if (norm_after > threshold) {
                psi.swap(trial);
                t = (target - (t + h) <= time_eps) ? target : t + h;
                emit_samples();
                continue;
            }

            // Jump inside (t, t + h]: bisect on the sub-step length.
            double lo = 0.0, hi = h;
            const double resolution = dt_ / 100.0;
            while (hi - lo > resolution) {
                const double mid = 0.5 * (lo + hi);
                trial = psi;
                ws.step(generator_, trial, mid);
                if (trial.squaredNorm() > threshold) lo = mid;
                else hi = mid;
            }
            ws.step(generator_, psi, hi);
            t = (target - (t + hi) <= time_eps) ? target : t + hi;

            double total = 0.0;
            double rates[2];
            Vector jumped[2];
            for (int m = 0; m < 2; ++m) {
                jumped[m] = sparse_collapses_[m] * psi;
                rates[m] = jumped[m].squaredNorm();
                total += rates[m];
            }
            if (!(total > 0.0))
                throw Error(ErrorCode::no_jump_possible,
                            "norm decayed with vanishing jump rates at t = " + std::to_string(t));
            const double u = rng.uniform();
            const int channel = u < rates[0] / total ? 0 : 1;
            psi = jumped[channel] / std::sqrt(rates[channel]);
            jumps.push_back({t, static_cast<JumpChannel>(channel)});
            threshold = draw_threshold();
            emit_samples();
        }
        return jumps;
    }

private:
    static void check_sample_times(const std::vector<double>& ts, double t_max) {
        for (std::size_t k = 0; k < ts.size(); ++k) {
            if (ts[k] < 0.0 || ts[k] > t_max * (1.0 + 1e-12))
                throw Error(ErrorCode::invalid_argument, "sample time outside [0, t_max]");
            if (k > 0 && ts[k] < ts[k - 1])
                throw Error(ErrorCode::invalid_argument, "sample times must be non-decreasing");
        }
    }

    void guard_truncation(const PureState& snap, double t) const {
        const double w = snap.top_fock_weight();
        if (w > truncation_threshold)
            throw Error(ErrorCode::truncation,
                        "top two Fock levels hold " + std::to_string(w) + " at t = " +
                            std::to_string(t) + " with n_max = " + std::to_string(dims_.n_max()) +
                            "; increase n_max");
    }

    SystemParams params_;
    SpaceDims dims_;
    double dt_;
    SparseMatrix generator_;
    std::vector<OperatorMatrix> collapses_;
    std::vector<SparseMatrix> sparse_collapses_;
};

inline TrajectoryRecord run_trajectory(const SystemParams& p, double t_max, std::optional<double> dt,
                                       std::uint64_t seed, const std::vector<double>& sample_times,
                                       const std::optional<PureState>& initial = std::nullopt) {
    const TrajectoryEngine engine(p, dt);
    TrajectoryRecord rec;
    rec.seed = seed;
    rec.sample_times = sample_times;
    rec.jumps = engine.simulate(
        t_max, seed, sample_times,
        [&rec](std::size_t, const PureState& s) {
            rec.photon_number.push_back(photon_number_of(s));
            rec.sigma_z.push_back(sigma_z_of(s));
            rec.states.push_back(s);
        },
        initial);
    return rec;
}

} // namespace cqed
