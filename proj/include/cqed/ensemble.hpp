#pragma once

// Trajectory ensembles and their reduction to time-sampled density matrices.
//
// Trajectory i is seeded with derive_seed(master_seed, i).  Trajectories are
// grouped into fixed-size chunks in index order; each chunk is reduced
// sequentially and chunks are merged in index order, so the result is bitwise
// identical for any thread count.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "cqed/measures.hpp"
#include "cqed/trajectory.hpp"

namespace cqed {

/// Thread count from CAVITY_TRAJ_THREADS, else the hardware default.
inline int default_thread_count() {
    if (const char* env = std::getenv("CAVITY_TRAJ_THREADS")) {
        const int n = std::atoi(env);
        if (n > 0) return n;
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<int>(hw);
}

/// A real functional evaluated on every normalized snapshot and averaged.
struct SampleFunctional {
    std::string name;
    std::function<double(const PureState&)> evaluate;
    bool window_only = false;  ///< evaluate only inside the steady window; NaN elsewhere
};

struct EnsembleOptions {
    /// Window over which per-trajectory time averages and block estimates are kept.
    std::optional<TimeWindow> steady_window;
    std::vector<SampleFunctional> functionals;
    std::optional<PureState> initial_state;
    int jackknife_blocks = 10;
    int threads = 0;  ///< 0: default_thread_count()
};

struct SeriesStats {
    std::vector<double> mean;
    std::vector<double> stderrs;
};

struct ScalarStat {
    double mean = 0.0;
    double error = 0.0;
};

struct SteadyEstimates {
    TimeWindow window{0.0, 0.0};
    DensityMatrix rho;  ///< ensemble and window average
    ScalarStat photon_number, sigma_z, en_traj;
    ScalarStat en_rho;  ///< log negativity of rho, jackknife error over trajectory blocks
    std::map<std::string, ScalarStat> functionals;
};

struct EnsembleResult {
    std::vector<double> sample_times;
    std::vector<DensityMatrix> rho;
    SeriesStats photon_number, sigma_z;
    EntanglementSeries en_rho, en_traj;
    std::map<std::string, SeriesStats> functionals;
    ScalarStat jumps_per_trajectory;
    std::optional<SteadyEstimates> steady;
    int n_trajectories = 0;
    double dt = 0.0;
};

namespace detail {

struct Moments {
    std::vector<double> sum, sum_sq;

    explicit Moments(std::size_t n = 0) : sum(n, 0.0), sum_sq(n, 0.0) {}

    void add(std::size_t k, double v) {
        sum[k] += v;
        sum_sq[k] += v * v;
    }

    void merge(const Moments& o) {
        for (std::size_t k = 0; k < sum.size(); ++k) {
            sum[k] += o.sum[k];
            sum_sq[k] += o.sum_sq[k];
        }
    }

    ScalarStat stat(std::size_t k, double m) const {
        const double mean = sum[k] / m;
        if (m < 2.0) return {mean, 0.0};
        const double var = std::max(0.0, (sum_sq[k] - m * mean * mean) / (m - 1.0));
        return {mean, std::sqrt(var / m)};
    }

    SeriesStats series(double m) const {
        SeriesStats s;
        for (std::size_t k = 0; k < sum.size(); ++k) {
            const auto st = stat(k, m);
            s.mean.push_back(st.mean);
            s.stderrs.push_back(st.error);
        }
        return s;
    }
};

struct Accumulator {
    std::vector<Matrix> rho;
    Moments n, sz, en;
    std::vector<Moments> funcs;
    Moments jumps{1};
    // Window averages: slot 0 n, 1 sz, 2 en_traj, 3.. functionals.
    Moments window;
    std::vector<Matrix> block_rho;
    std::vector<double> block_count;

    Accumulator(std::size_t samples, int dim, std::size_t n_funcs, int blocks)
        : rho(samples, Matrix::Zero(dim, dim)), n(samples), sz(samples), en(samples),
          funcs(n_funcs, Moments(samples)), window(3 + n_funcs),
          block_rho(blocks), block_count(blocks, 0.0) {}

    void merge(const Accumulator& o) {
        for (std::size_t k = 0; k < rho.size(); ++k) rho[k] += o.rho[k];
        n.merge(o.n);
        sz.merge(o.sz);
        en.merge(o.en);
        for (std::size_t f = 0; f < funcs.size(); ++f) funcs[f].merge(o.funcs[f]);
        jumps.merge(o.jumps);
        window.merge(o.window);
        for (std::size_t b = 0; b < block_rho.size(); ++b) {
            if (o.block_rho[b].size() == 0) continue;
            if (block_rho[b].size() == 0) block_rho[b] = o.block_rho[b];
            else block_rho[b] += o.block_rho[b];
            block_count[b] += o.block_count[b];
        }
    }
};

} // namespace detail

inline EnsembleResult run_ensemble(const SystemParams& p, int n_traj, double t_max,
                                   std::optional<double> dt, std::uint64_t master_seed,
                                   const std::vector<double>& sample_times,
                                   const EnsembleOptions& options = {}) {
    if (n_traj < 1) throw Error(ErrorCode::invalid_argument, "n_traj must be >= 1");
    if (sample_times.empty()) throw Error(ErrorCode::invalid_argument, "no sample times");
    const TrajectoryEngine engine(p, dt);
    const SpaceDims dims = engine.dims();
    const int d = dims.total_dim();
    const std::size_t n_samples = sample_times.size();
    const std::size_t n_funcs = options.functionals.size();
    const int blocks = std::max(1, std::min(options.jackknife_blocks, n_traj));

    std::vector<char> in_window(n_samples, 0);
    std::size_t window_count = 0;
    if (options.steady_window) {
        for (std::size_t k = 0; k < n_samples; ++k)
            if (options.steady_window->contains(sample_times[k])) {
                in_window[k] = 1;
                ++window_count;
            }
        if (window_count == 0)
            throw Error(ErrorCode::empty_window, "no sample times inside the steady window");
    }

    auto run_one = [&](int index, detail::Accumulator& acc) {
        const std::uint64_t seed = derive_seed(master_seed, static_cast<std::uint64_t>(index));
        std::vector<double> wsum(3 + n_funcs, 0.0);
        Matrix wrho;
        if (window_count > 0) wrho = Matrix::Zero(d, d);
        const auto jumps = engine.simulate(
            t_max, seed, sample_times,
            [&](std::size_t k, const PureState& s) {
                acc.rho[k].noalias() += s.amplitudes() * s.amplitudes().adjoint();
                const double nv = photon_number_of(s), zv = sigma_z_of(s), ev = pure_log_negativity(s);
                acc.n.add(k, nv);
                acc.sz.add(k, zv);
                acc.en.add(k, ev);
                const bool w = in_window[k] != 0;
                if (w) {
                    wsum[0] += nv;
                    wsum[1] += zv;
                    wsum[2] += ev;
                    wrho.noalias() += s.amplitudes() * s.amplitudes().adjoint();
                }
                for (std::size_t f = 0; f < n_funcs; ++f) {
                    if (options.functionals[f].window_only && !w) continue;
                    const double fv = options.functionals[f].evaluate(s);
                    acc.funcs[f].add(k, fv);
                    if (w) wsum[3 + f] += fv;
                }
            },
            options.initial_state);
        acc.jumps.add(0, static_cast<double>(jumps.size()));
        if (window_count > 0) {
            const double inv = 1.0 / static_cast<double>(window_count);
            for (std::size_t j = 0; j < wsum.size(); ++j) acc.window.add(j, wsum[j] * inv);
            const int b = static_cast<int>(static_cast<long long>(index) * blocks / n_traj);
            if (acc.block_rho[b].size() == 0) acc.block_rho[b] = Matrix::Zero(d, d);
            acc.block_rho[b] += wrho * inv;
            acc.block_count[b] += 1.0;
        }
    };

    constexpr int chunk_size = 16;
    const int n_chunks = (n_traj + chunk_size - 1) / chunk_size;
    const int threads = std::max(1, std::min(options.threads > 0 ? options.threads
                                                                  : default_thread_count(),
                                             n_chunks));
    auto make_acc = [&] { return detail::Accumulator(n_samples, d, n_funcs, blocks); };
    detail::Accumulator total = make_acc();

    auto run_chunk = [&](int c, detail::Accumulator& acc) {
        const int begin = c * chunk_size, end = std::min(n_traj, begin + chunk_size);
        for (int i = begin; i < end; ++i) run_one(i, acc);
    };

    if (threads == 1) {
        for (int c = 0; c < n_chunks; ++c) {
            detail::Accumulator acc = make_acc();
            run_chunk(c, acc);
            total.merge(acc);
        }
    } else {
        for (int wave = 0; wave < n_chunks; wave += threads) {
            const int count = std::min(threads, n_chunks - wave);
            std::vector<detail::Accumulator> accs;
            accs.reserve(count);
            for (int j = 0; j < count; ++j) accs.push_back(make_acc());
            std::vector<std::exception_ptr> errors(count);
            {
                std::vector<std::jthread> workers;
                for (int j = 0; j < count; ++j)
                    workers.emplace_back([&, j] {
                        try {
                            run_chunk(wave + j, accs[j]);
                        } catch (...) {
                            errors[j] = std::current_exception();
                        }
                    });
            }
            for (auto& e : errors)
                if (e) std::rethrow_exception(e);
            for (auto& a : accs) total.merge(a);
        }
    }

    const double m = static_cast<double>(n_traj);
    EnsembleResult r;
    r.sample_times = sample_times;
    r.n_trajectories = n_traj;
    r.dt = engine.dt();
    r.photon_number = total.n.series(m);
    r.sigma_z = total.sz.series(m);
    const SeriesStats en_traj = total.en.series(m);
    r.en_traj = {sample_times, en_traj.mean, en_traj.stderrs, SeriesKind::per_trajectory_mean};
    r.en_rho = {sample_times, {}, {}, SeriesKind::ensemble_rho};
    for (std::size_t k = 0; k < n_samples; ++k) {
        r.rho.push_back(DensityMatrix::from_unnormalized(dims, total.rho[k]));
        r.en_rho.values.push_back(log_negativity(r.rho.back()));
    }
    for (std::size_t f = 0; f < n_funcs; ++f) {
        SeriesStats s = total.funcs[f].series(m);
        if (options.functionals[f].window_only)
            for (std::size_t k = 0; k < n_samples; ++k)
                if (!in_window[k]) s.mean[k] = s.stderrs[k] = std::nan("");
        r.functionals[options.functionals[f].name] = std::move(s);
    }
    r.jumps_per_trajectory = total.jumps.stat(0, m);

    if (window_count > 0) {
        Matrix sum = Matrix::Zero(d, d);
        double count = 0.0;
        for (int b = 0; b < blocks; ++b) {
            if (total.block_rho[b].size() == 0) continue;
            sum += total.block_rho[b];
            count += total.block_count[b];
        }
        SteadyEstimates st{*options.steady_window, DensityMatrix::from_unnormalized(dims, sum),
                           total.window.stat(0, m), total.window.stat(1, m),
                           total.window.stat(2, m), {}, {}};
        st.en_rho.mean = log_negativity(st.rho);
        std::vector<double> loo;
        for (int b = 0; b < blocks; ++b) {
            if (total.block_rho[b].size() == 0 || count - total.block_count[b] <= 0.0) continue;
            loo.push_back(log_negativity(
                DensityMatrix::from_unnormalized(dims, sum - total.block_rho[b])));
        }
        if (loo.size() >= 2) {
            const double nb = static_cast<double>(loo.size());
            double mean = 0.0;
            for (double v : loo) mean += v / nb;
            double ss = 0.0;
            for (double v : loo) ss += (v - mean) * (v - mean);
            st.en_rho.error = std::sqrt((nb - 1.0) / nb * ss);
        }
        for (std::size_t f = 0; f < n_funcs; ++f)
            st.functionals[options.functionals[f].name] = total.window.stat(3 + f, m);
        r.steady = std::move(st);
    }
    return r;
}

/// Time average of the ensemble density matrices inside the window.
inline DensityMatrix steady_window_average(const EnsembleResult& result, TimeWindow window) {
    if (result.rho.empty()) throw Error(ErrorCode::empty_window, "ensemble has no samples");
    const SpaceDims dims = result.rho.front().dims();
    Matrix sum = Matrix::Zero(dims.total_dim(), dims.total_dim());
    int count = 0;
    for (std::size_t k = 0; k < result.sample_times.size(); ++k)
        if (window.contains(result.sample_times[k])) {
            sum += result.rho[k].matrix();
            ++count;
        }
    if (count == 0) throw Error(ErrorCode::empty_window, "no samples inside the steady window");
    return DensityMatrix::from_unnormalized(dims, sum / count);
}

/// n + 1 equally spaced times on [0, t_max].
inline std::vector<double> uniform_times(double t_max, int intervals) {
    std::vector<double> ts;
    for (int k = 0; k <= intervals; ++k) ts.push_back(t_max * k / intervals);
    return ts;
}

} // namespace cqed
