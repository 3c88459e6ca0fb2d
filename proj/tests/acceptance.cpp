// Acceptance checks.  Usage: acceptance [N ...]; no arguments runs every check.
// One PASS/FAIL line per check; exit status 1 if any check fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "cqed/cqed.hpp"
#include "test_support.hpp"

using namespace cqed;

namespace {

struct Outcome {
    bool pass;
    std::string detail;
};

struct Check {
    int id;
    const char* name;
    double budget_s;
    std::function<Outcome()> run;
};

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

SystemParams unit_params(double eps, int n_max) {
    SystemParams p;
    p.epsilon = eps;
    p.n_max = n_max;
    return p;
}

EnsembleResult steady_ensemble(const SystemParams& p, int n_traj, double t_max, TimeWindow w,
                               std::uint64_t seed, int intervals = 60,
                               std::vector<SampleFunctional> funcs = {}) {
    EnsembleOptions opt;
    opt.steady_window = w;
    opt.functionals = std::move(funcs);
    return run_ensemble(p, n_traj, t_max, std::nullopt, seed, uniform_times(t_max, intervals), opt);
}

double combined(double a, double b) { return std::sqrt(a * a + b * b); }

Outcome c1() {
    const SystemParams p = unit_params(0.01, 5);
    const double g2 = cross_correlation_g2tf(steady_state(liouvillian(p)));
    const double q = q_factor(p.g, p.kappa, p.gamma);
    const double rel = std::abs(g2 - q) / q;
    return {rel <= 1e-3, fmt("g2_TF(0) = %.6f, q = %.6f, relative error %.3g (tol 1e-3); q^2 = %.6f",
                             g2, q, rel, q * q)};
}

Outcome c2() {
    const double x2 = std::pow(xi(1.0, 1.0, 1.0), 2);
    std::vector<double> ratios;
    std::string detail;
    for (double eps : {0.01, 0.02, 0.05}) {
        const SystemParams p = unit_params(eps, 4);
        const auto r = steady_ensemble(
            p, 20, 20.0, {10.0, 20.0}, 7, 40,
            {{"concurrence", [](const PureState& s) { return concurrence_pure(s).standard; }}});
        const double c = r.steady->functionals.at("concurrence").mean;
        const double x4 = std::pow(eps / p.kappa, 4);
        ratios.push_back(c / (-x4 * std::log2(x4)));
        detail += fmt("eps=%.2f C=%.4g ratio=%.4g; ", eps, c, ratios.back());
    }
    const auto [lo, hi] = std::minmax_element(ratios.begin(), ratios.end());
    const double spread = *hi / *lo - 1.0;
    double mean = 0.0;
    for (double r : ratios) mean += r / ratios.size();
    const double dev = std::abs(mean / x2 - 1.0);
    detail += fmt("spread %.3g (tol 0.05), mean/xi^2 - 1 = %.3g (tol 0.10), xi^2 = %.6f", spread, dev, x2);
    return {spread <= 0.05 && dev <= 0.10, detail};
}

Outcome c3() {
    const SystemParams p = unit_params(0.5, 20);
    const DensityMatrix oracle = steady_state(liouvillian(p));
    auto distance = [&](int m) {
        const auto r = steady_ensemble(p, m, 20.0, {10.0, 20.0}, 20240901, 40);
        return trace_distance(r.steady->rho.matrix(), oracle.matrix());
    };
    const double d500 = distance(500), d2000 = distance(2000), d8000 = distance(8000);
    return {d2000 < 0.05 && d8000 < d500,
            fmt("trace distance M=500 %.4f, M=2000 %.4f (tol 0.05), M=8000 %.4f", d500, d2000, d8000)};
}

Outcome c4() {
    const SpaceDims d(3);
    const double bell = log_negativity(DensityMatrix::from_pure(cqed::testing::bell_state(d)));
    std::mt19937_64 rng(4);
    double worst_product = 0.0, worst_consistency = 0.0;
    for (int i = 0; i < 100; ++i) {
        const auto rho = DensityMatrix::from_pure(cqed::testing::random_product(rng, d));
        worst_product = std::max(worst_product, std::abs(log_negativity(rho)));
        const DensityMatrix mixed(d, cqed::testing::random_density(rng, d.total_dim(), 3));
        worst_consistency = std::max(worst_consistency,
                                     std::abs(std::log2(1.0 + 2.0 * negativity(mixed)) - log_negativity(mixed)));
    }
    const double bell_err = std::abs(bell - 1.0);
    return {bell_err <= 1e-12 && worst_product <= 1e-10 && worst_consistency <= 1e-12,
            fmt("|E_N(Bell) - 1| = %.2g (tol 1e-12), max product E_N %.2g (tol 1e-10), "
                "max |log2(1+2N) - E_N| %.2g (tol 1e-12)",
                bell_err, worst_product, worst_consistency)};
}

Outcome c5() {
    const std::vector<double> eps = {0.25, 0.5, 1.0, 1.5, 2.0, 3.0, 4.0, 5.0};
    std::vector<ScalarStat> sz, n;
    std::string detail;
    for (double e : eps) {
        SystemParams p = unit_params(e, 0);
        p.n_max = auto_n_max(p);
        const auto r = steady_ensemble(p, 200, 15.0, {5.0, 15.0}, 5, 30);
        sz.push_back(r.steady->sigma_z);
        n.push_back(r.steady->photon_number);
        detail += fmt("eps=%g sz=%.4f(%.4f) n=%.3f; ", e, sz.back().mean, sz.back().error, n.back().mean);
    }
    bool sz_monotone = true, n_increasing = true;
    for (std::size_t k = 1; k < eps.size(); ++k) {
        if (sz[k].mean < sz[k - 1].mean - 3.0 * combined(sz[k].error, sz[k - 1].error)) sz_monotone = false;
        if (!(n[k].mean > n[k - 1].mean)) n_increasing = false;
    }
    const double s34 = (n[6].mean - n[5].mean) / (16.0 - 9.0);
    const double s45 = (n[7].mean - n[6].mean) / (25.0 - 16.0);
    const double slope_dev = std::abs(s45 / s34 - 1.0);
    const double sz_last = std::abs(sz.back().mean);
    detail += fmt("dn/d(eps^2) %.4f then %.4f (tol 10%%)", s34, s45);
    return {sz_monotone && n_increasing && sz_last < 0.1 && slope_dev <= 0.10,
            fmt("sz monotone %s, |sz(5)| = %.4f (tol 0.1), n increasing %s; ", sz_monotone ? "yes" : "no",
                sz_last, n_increasing ? "yes" : "no") +
                detail};
}

Outcome c6() {
    const std::vector<double> eps = {0.25, 0.5, 0.75, 1.0, 1.25, 1.5, 2.0, 3.0, 4.0, 5.0, 6.0};
    std::vector<double> steady;
    bool max_ge_steady = true;
    std::string detail;
    for (double e : eps) {
        SystemParams p = unit_params(e, 0);
        p.n_max = auto_n_max(p);
        const TimeWindow w{20.0, 30.0};
        const auto r = steady_ensemble(p, 200, 30.0, w, 6, 60);
        const auto ms = series_max_and_steady(r.en_rho, w);
        steady.push_back(r.steady->en_rho.mean);
        if (!(ms.max >= ms.steady)) max_ge_steady = false;
        detail += fmt("eps=%g EN=%.4f(%.4f) max=%.4f; ", e, steady.back(), r.steady->en_rho.error, ms.max);
    }
    const std::size_t k = std::max_element(steady.begin(), steady.end()) - steady.begin();
    const bool interior = k > 0 && k + 1 < eps.size() && eps[k] >= 0.5 && eps[k] <= 1.5;
    const double tail = steady.back() / steady[k];
    return {interior && tail < 0.1 && max_ge_steady,
            fmt("argmax eps = %g (want interior in [0.5, 1.5]), EN(6)/max = %.3f (tol 0.1), "
                "max >= steady everywhere %s; ",
                eps[k], tail, max_ge_steady ? "yes" : "no") +
                detail};
}

Outcome c7() {
    const std::vector<double> eps = {0.5, 1.0, 1.5, 2.0, 3.0, 4.0};
    std::vector<ScalarStat> minus, plus;
    std::string detail;
    for (double e : eps) {
        for (double th : {-1.0, 1.0}) {
            SystemParams p = unit_params(e, 0);
            p.delta = 1.0;
            p.theta = th;
            p.n_max = auto_n_max(p);
            const auto r = steady_ensemble(p, 400, 30.0, {20.0, 30.0}, 7, 60);
            (th < 0 ? minus : plus).push_back(r.steady->en_rho);
        }
        detail += fmt("eps=%g EN(-)=%.4f(%.4f) EN(+)=%.4f(%.4f); ", e, minus.back().mean, minus.back().error,
                      plus.back().mean, plus.back().error);
    }
    double best = 0.0;
    for (std::size_t k = 0; k < eps.size(); ++k)
        best = std::max(best, std::abs(minus[k].mean - plus[k].mean) / combined(minus[k].error, plus[k].error));
    const std::size_t last = eps.size() - 1;
    const bool ordered = minus[last].mean > plus[last].mean && minus[last - 1].mean > plus[last - 1].mean;
    return {best > 3.0 && ordered,
            fmt("max gap %.2f combined SE (tol 3), theta=-Delta higher at two largest drives %s; ", best,
                ordered ? "yes" : "no") +
                detail};
}

// Steps in n(eps) are counted from the log-log slope: each slope valley deeper
// than half of its lower flanking peak separates two steps.
int count_steps(const std::vector<double>& eps, const std::vector<double>& n) {
    std::vector<double> s;
    for (std::size_t k = 1; k < eps.size(); ++k)
        s.push_back(std::log(n[k] / n[k - 1]) / std::log(eps[k] / eps[k - 1]));
    int plateaus = 0;
    std::size_t k = 0;
    double left_peak = s.empty() ? 0.0 : s[0];
    while (k + 1 < s.size()) {
        while (k + 1 < s.size() && s[k + 1] >= s[k]) left_peak = std::max(left_peak, s[++k]);
        std::size_t valley = k;
        while (valley + 1 < s.size() && s[valley + 1] <= s[valley]) ++valley;
        if (valley + 1 >= s.size()) break;
        std::size_t j = valley;
        double right_peak = s[j];
        while (j + 1 < s.size() && s[j + 1] >= s[j]) right_peak = std::max(right_peak, s[++j]);
        if (s[valley] < 0.5 * std::min(left_peak, right_peak)) {
            ++plateaus;
            left_peak = right_peak;
        } else {
            left_peak = std::max(left_peak, right_peak);
        }
        k = j;
    }
    return 1 + plateaus;
}

Outcome c8() {
    const double g = 1000.0;
    const auto eps = geometric_values(2.0, 300.0, 24);
    std::vector<double> peak;
    int steps = 0;
    std::string detail;
    for (int m : {1, 2, 3}) {
        const double d = -g / std::sqrt(static_cast<double>(m));
        std::vector<double> n;
        double best = 0.0;
        for (double e : eps) {
            SystemParams p;
            p.g = g;
            p.kappa = 1.0;
            p.gamma = 2.0;
            p.n_max = 14;
            p.epsilon = e;
            p.theta = d;
            p.delta = d;
            const auto rho = steady_state(liouvillian(p));
            n.push_back(cqed::detail::rho_photon_number(rho));
            best = std::max(best, log_negativity(rho));
        }
        peak.push_back(best);
        if (m == 2) steps = count_steps(eps, n);
        detail += fmt("theta=Delta=-g/sqrt(%d): peak EN %.4f, n(eps=300) %.3f; ", m, best, n.back());
    }
    const bool ordered = peak[0] > peak[1] && peak[1] > peak[2];
    return {steps >= 2 && ordered,
            fmt("%d steps at -g/sqrt(2) (want >= 2), peak EN decreasing with photon number %s; ", steps,
                ordered ? "yes" : "no") +
                detail};
}

Outcome c9() {
    std::vector<ScalarStat> en;
    for (double ratio : {0.8, 1.2}) {
        SystemParams p;
        p.g = 10.0;
        p.kappa = 1.0;
        p.gamma = 0.1;
        p.epsilon = ratio * p.g / 2.0;
        p.n_max = 80;
        en.push_back(steady_ensemble(p, 100, 60.0, {40.0, 60.0}, 9, 60).steady->en_rho);
    }
    const double factor = en[1].mean / en[0].mean;
    const double factor_err = factor * std::sqrt(std::pow(en[0].error / en[0].mean, 2) +
                                                 std::pow(en[1].error / en[1].mean, 2));
    return {factor >= 3.0, fmt("EN(2eps/g=0.8) = %.4f +- %.4f, EN(2eps/g=1.2) = %.4f +- %.4f, "
                               "factor %.2f +- %.2f (want >= 3)",
                               en[0].mean, en[0].error, en[1].mean, en[1].error, factor, factor_err)};
}

Outcome c10() {
    const std::vector<double> eps = {0.1, 0.2, 0.35, 0.5, 0.7, 1.0};
    std::vector<double> imp, ov;
    std::string detail;
    for (double e : eps) {
        const SystemParams p = unit_params(e, 14);
        const PureState wf = weak_field_pure_state(weak_field_state(p), p.dims());
        const auto r = steady_ensemble(
            p, 500, 30.0, {20.0, 30.0}, 10, 30,
            {{"overlap_wf", [wf](const PureState& s) { return weak_field_overlap(s, wf); }}});
        imp.push_back(impurity(r.steady->rho));
        ov.push_back(r.steady->functionals.at("overlap_wf").mean);
        detail += fmt("eps=%g impurity=%.3g overlap=%.5f; ", e, imp.back(), ov.back());
    }
    bool monotone = true;
    for (std::size_t k = 1; k < eps.size(); ++k)
        if (!(imp[k] > imp[k - 1]) || !(ov[k] < ov[k - 1])) monotone = false;
    return {imp[0] < 0.01 && ov[0] > 0.99 && monotone,
            fmt("impurity(0.1) = %.3g (tol 0.01), overlap(0.1) = %.5f (tol 0.99), monotone %s; ", imp[0],
                ov[0], monotone ? "yes" : "no") +
                detail};
}

Outcome c11() {
    SystemParams p;
    p.g = 0.0;
    p.gamma = 1.0;
    p.n_max = 1;
    const TrajectoryEngine engine(p);
    const auto initial = PureState::basis(p.dims(), Atom::excited, 0);
    const int m = 10000;
    std::vector<double> waits;
    for (int i = 0; i < m; ++i) {
        const auto jumps =
            engine.simulate(25.0, derive_seed(11, i), {}, [](std::size_t, const PureState&) {}, initial);
        waits.push_back(jumps.empty() ? INFINITY : jumps[0].time);
    }
    std::sort(waits.begin(), waits.end());
    double ks = 0.0;
    for (int i = 0; i < m; ++i) {
        const double cdf = 1.0 - std::exp(-p.gamma * waits[i]);
        ks = std::max({ks, std::abs(cdf - double(i) / m), std::abs(cdf - double(i + 1) / m)});
    }
    return {ks < 0.02, fmt("KS statistic %.4f over %d first-jump times (tol 0.02)", ks, m)};
}

const std::vector<Check>& checks() {
    static const std::vector<Check> all = {
        {1, "weak-field cross-correlation equals q", 10, c1},
        {2, "weak-field concurrence law", 120, c2},
        {3, "trajectory ensemble matches master-equation steady state", 300, c3},
        {4, "exact log-negativity values", 1, c4},
        {5, "photon number and inversion versus drive", 300, c5},
        {6, "log negativity: interior maximum, saturation, transient maximum", 600, c6},
        {7, "detuning asymmetry of the log negativity", 600, c7},
        {8, "multiphoton resonance steps", 600, c8},
        {9, "entanglement jump across 2 eps / g = 1", 600, c9},
        {10, "purity and weak-field overlap regime", 300, c10},
        {11, "exponential waiting times of atomic decay", 60, c11},
    };
    return all;
}

} // namespace

int main(int argc, char** argv) {
    std::vector<int> wanted;
    for (int i = 1; i < argc; ++i) wanted.push_back(std::atoi(argv[i]));
    bool all_pass = true;
    for (const auto& c : checks()) {
        if (!wanted.empty() && std::find(wanted.begin(), wanted.end(), c.id) == wanted.end()) continue;
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = c.run();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        const bool in_budget = secs < c.budget_s;
        const bool pass = o.pass && in_budget;
        all_pass = all_pass && pass;
        std::printf("%s criterion %d (%s): %s [%.1f s of %.0f s budget%s]\n", pass ? "PASS" : "FAIL", c.id,
                    c.name, o.detail.c_str(), secs, c.budget_s, in_budget ? "" : ", over budget");
        std::fflush(stdout);
    }
    return all_pass ? 0 : 1;
}
