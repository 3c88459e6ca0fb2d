#pragma once

// Scenario configs, grid execution, and the CSV / JSON sidecar formats.
//
// CSV header (fixed):
//   scenario, <swept parameter columns in declaration order>, time, observable,
//   value, stderr, master_seed, dt, n_max, n_traj, drive_scaling, method
//
// `time` is empty for steady-state rows; `stderr` is empty where no error
// estimate exists.  The JSON sidecar echoes the config (schema_version 1) and
// can be fed back with `run --config`.

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <numbers>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "cqed/ensemble.hpp"
#include "cqed/measures.hpp"
#include "cqed/steadystate.hpp"
#include "cqed/weakfield.hpp"

namespace cqed {

inline constexpr int scenario_schema_version = 1;

enum class Method { trajectory, oracle };

inline const char* to_string(Method m) { return m == Method::trajectory ? "trajectory" : "oracle"; }

struct SweepAxis {
    std::vector<std::string> names;  ///< linked parameters sharing each value
    std::vector<double> values;
};

struct SampleSpec {
    int intervals = 60;                        ///< uniform samples on [0, t_max]
    std::optional<std::vector<double>> times;  ///< explicit sample times
};

struct ScenarioConfig {
    std::string name = "custom";
    SystemParams base;
    bool auto_n_max = true;
    std::vector<SweepAxis> sweep;
    int n_traj = 2000;
    std::optional<double> t_max;
    std::optional<double> dt;
    std::uint64_t master_seed = 20240901;
    SampleSpec samples;
    std::optional<TimeWindow> steady_window;  ///< default: last third of [0, t_max]
    std::vector<std::string> outputs{"n", "sigma_z", "EN_rho"};
    bool time_series = false;
    Method method = Method::trajectory;
};

inline const std::set<std::string>& known_outputs() {
    static const std::set<std::string> names{
        "n",        "sigma_z",     "EN_rho",     "EN_traj",        "negativity",
        "impurity", "overlap_wf",  "concurrence", "concurrence_paper", "g2tf",
        "ansatz_overlap", "ansatz_overlap_entangled", "jumps", "oracle_trace_distance"};
    return names;
}

inline const std::set<std::string>& trajectory_only_outputs() {
    static const std::set<std::string> names{"EN_traj",        "overlap_wf", "concurrence",
                                             "concurrence_paper", "ansatz_overlap", "ansatz_overlap_entangled", "jumps",
                                             "oracle_trace_distance"};
    return names;
}

inline const std::set<std::string>& sweepable_parameters() {
    static const std::set<std::string> names{"g",     "kappa", "gamma", "epsilon",
                                             "delta", "theta", "n_max", "drive_over_g"};
    return names;
}

// ---------------------------------------------------------------------------
// Grid resolution

struct GridPoint {
    std::vector<double> swept;  ///< one value per swept column
    SystemParams params;
    double t_max;
    TimeWindow window{0.0, 0.0};
    std::vector<double> sample_times;
};

inline std::vector<std::string> swept_columns(const ScenarioConfig& c) {
    std::vector<std::string> cols;
    for (const auto& ax : c.sweep)
        for (const auto& n : ax.names) cols.push_back(n);
    return cols;
}

/// Fock truncation that keeps the empty-cavity photon distribution well inside the space.
inline int auto_n_max(const SystemParams& p) {
    const double x = saturation_scaled_drive(p) / p.kappa;
    const double n = x * x;
    return std::max(8, static_cast<int>(std::ceil(n + 5.0 * std::sqrt(n) + 8.0)));
}

inline double default_t_max(const SystemParams& p) {
    const double atom = p.gamma > 0.0 ? 2.0 / p.gamma : 0.0;
    return 15.0 * std::max(1.0 / p.kappa, atom);
}

inline std::vector<GridPoint> resolve_grid(const ScenarioConfig& c) {
    std::vector<GridPoint> grid;
    std::vector<std::size_t> idx(c.sweep.size(), 0);
    for (const auto& ax : c.sweep)
        if (ax.values.empty())
            throw Error(ErrorCode::invalid_configuration, "sweep axis with no values");
    bool swept_n_max = false;
    for (const auto& ax : c.sweep)
        for (const auto& n : ax.names) swept_n_max = swept_n_max || n == "n_max";

    while (true) {
        GridPoint gp;
        gp.params = c.base;
        std::optional<double> drive_over_g;
        for (std::size_t a = 0; a < c.sweep.size(); ++a) {
            const double v = c.sweep[a].values[idx[a]];
            for (const auto& name : c.sweep[a].names) {
                gp.swept.push_back(v);
                if (name == "g") gp.params.g = v;
                else if (name == "kappa") gp.params.kappa = v;
                else if (name == "gamma") gp.params.gamma = v;
                else if (name == "epsilon") gp.params.epsilon = v;
                else if (name == "delta") gp.params.delta = v;
                else if (name == "theta") gp.params.theta = v;
                else if (name == "n_max") gp.params.n_max = static_cast<int>(std::lround(v));
                else if (name == "drive_over_g") drive_over_g = v;
                else
                    throw Error(ErrorCode::invalid_configuration, "unknown sweep parameter '" + name + "'");
            }
        }
        if (drive_over_g) gp.params.epsilon = *drive_over_g * gp.params.g / 2.0;
        if (c.auto_n_max && !swept_n_max) gp.params.n_max = auto_n_max(gp.params);
        gp.params.validate();
        gp.t_max = c.t_max.value_or(default_t_max(gp.params));
        if (!(gp.t_max > 0.0)) throw Error(ErrorCode::invalid_configuration, "t_max must be > 0");
        if (c.samples.times) {
            gp.sample_times = *c.samples.times;
            for (double t : gp.sample_times)
                if (t < 0.0 || t > gp.t_max)
                    throw Error(ErrorCode::invalid_configuration, "sample time outside [0, t_max]");
        } else {
            if (c.samples.intervals < 1)
                throw Error(ErrorCode::invalid_configuration, "sample intervals must be >= 1");
            gp.sample_times = uniform_times(gp.t_max, c.samples.intervals);
        }
        gp.window = c.steady_window.value_or(TimeWindow{2.0 * gp.t_max / 3.0, gp.t_max});
        grid.push_back(std::move(gp));

        std::size_t a = c.sweep.size();
        while (a > 0) {
            --a;
            if (++idx[a] < c.sweep[a].values.size()) break;
            idx[a] = 0;
            if (a == 0) return grid;
        }
        if (c.sweep.empty()) return grid;
    }
}

// ---------------------------------------------------------------------------
// JSON

using nlohmann::json;

inline json to_json(const ScenarioConfig& c) {
    json j;
    j["schema_version"] = scenario_schema_version;
    j["name"] = c.name;
    json p;
    p["g"] = c.base.g;
    p["kappa"] = c.base.kappa;
    p["gamma"] = c.base.gamma;
    p["epsilon"] = c.base.epsilon;
    p["delta"] = c.base.delta;
    p["theta"] = c.base.theta;
    if (c.auto_n_max) p["n_max"] = "auto";
    else p["n_max"] = c.base.n_max;
    p["drive_scaling"] = to_string(c.base.drive_scaling);
    j["params"] = p;
    j["sweep"] = json::array();
    for (const auto& ax : c.sweep) j["sweep"].push_back({{"names", ax.names}, {"values", ax.values}});
    j["n_traj"] = c.n_traj;
    j["t_max"] = c.t_max ? json(*c.t_max) : json(nullptr);
    j["dt"] = c.dt ? json(*c.dt) : json(nullptr);
    j["master_seed"] = c.master_seed;
    if (c.samples.times) j["sample_times"] = {{"times", *c.samples.times}};
    else j["sample_times"] = {{"intervals", c.samples.intervals}};
    j["steady_window"] = c.steady_window
                             ? json::array({c.steady_window->start, c.steady_window->stop})
                             : json(nullptr);
    j["outputs"] = c.outputs;
    j["time_series"] = c.time_series;
    j["method"] = to_string(c.method);
    return j;
}

inline ScenarioConfig config_from_json(const json& j) {
    auto fail = [](const std::string& m) -> void { throw Error(ErrorCode::invalid_configuration, m); };
    static const std::set<std::string> allowed{"schema_version", "name",          "params", "sweep",
                                               "n_traj",         "t_max",         "dt",     "master_seed",
                                               "sample_times",   "steady_window", "outputs", "time_series",
                                               "method",         "provenance"};
    if (!j.is_object()) fail("config must be a JSON object");
    for (auto it = j.begin(); it != j.end(); ++it)
        if (!allowed.count(it.key())) fail("unknown config key '" + it.key() + "'");
    if (!j.contains("schema_version") || j["schema_version"] != scenario_schema_version)
        fail("schema_version must be " + std::to_string(scenario_schema_version));

    ScenarioConfig c;
    try {
        c.name = j.value("name", c.name);
        if (j.contains("params")) {
            const json& p = j["params"];
            c.base.g = p.value("g", c.base.g);
            c.base.kappa = p.value("kappa", c.base.kappa);
            c.base.gamma = p.value("gamma", c.base.gamma);
            c.base.epsilon = p.value("epsilon", c.base.epsilon);
            c.base.delta = p.value("delta", c.base.delta);
            c.base.theta = p.value("theta", c.base.theta);
            if (p.contains("n_max")) {
                if (p["n_max"].is_string()) {
                    if (p["n_max"] != "auto") fail("n_max must be an integer or \"auto\"");
                    c.auto_n_max = true;
                } else {
                    c.base.n_max = p["n_max"].get<int>();
                    c.auto_n_max = false;
                }
            }
            if (p.contains("drive_scaling"))
                c.base.drive_scaling = drive_scaling_from_string(p["drive_scaling"].get<std::string>());
        }
        if (j.contains("sweep"))
            for (const auto& ax : j["sweep"]) {
                SweepAxis a;
                if (ax.contains("names")) a.names = ax["names"].get<std::vector<std::string>>();
                else if (ax.contains("name")) a.names = {ax["name"].get<std::string>()};
                a.values = ax.at("values").get<std::vector<double>>();
                for (const auto& n : a.names)
                    if (!sweepable_parameters().count(n)) fail("unknown sweep parameter '" + n + "'");
                if (a.names.empty() || a.values.empty()) fail("sweep axis needs names and values");
                c.sweep.push_back(std::move(a));
            }
        c.n_traj = j.value("n_traj", c.n_traj);
        if (j.contains("t_max") && !j["t_max"].is_null()) c.t_max = j["t_max"].get<double>();
        if (j.contains("dt") && !j["dt"].is_null()) c.dt = j["dt"].get<double>();
        c.master_seed = j.value("master_seed", c.master_seed);
        if (j.contains("sample_times")) {
            const json& s = j["sample_times"];
            if (s.contains("times")) c.samples.times = s["times"].get<std::vector<double>>();
            else c.samples.intervals = s.value("intervals", c.samples.intervals);
        }
        if (j.contains("steady_window") && !j["steady_window"].is_null()) {
            const auto w = j["steady_window"].get<std::vector<double>>();
            if (w.size() != 2 || w[1] < w[0]) fail("steady_window must be [start, stop]");
            c.steady_window = TimeWindow{w[0], w[1]};
        }
        if (j.contains("outputs")) c.outputs = j["outputs"].get<std::vector<std::string>>();
        c.time_series = j.value("time_series", c.time_series);
        if (j.contains("method")) {
            const auto m = j["method"].get<std::string>();
            if (m == "trajectory") c.method = Method::trajectory;
            else if (m == "oracle") c.method = Method::oracle;
            else fail("unknown method '" + m + "'");
        }
    } catch (const json::exception& e) {
        throw Error(ErrorCode::invalid_configuration, std::string("malformed config: ") + e.what());
    }
    if (c.n_traj < 1) fail("n_traj must be >= 1");
    if (c.outputs.empty()) fail("no outputs requested");
    for (const auto& o : c.outputs) {
        if (!known_outputs().count(o)) fail("unknown output '" + o + "'");
        if (c.method == Method::oracle && trajectory_only_outputs().count(o))
            fail("output '" + o + "' needs the trajectory method");
    }
    return c;
}

inline ScenarioConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::invalid_configuration, "cannot open config " + path.string());
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw Error(ErrorCode::invalid_configuration, std::string("malformed JSON: ") + e.what());
    }
    return config_from_json(j);
}

// ---------------------------------------------------------------------------
// Built-in figure scenarios

inline std::vector<double> geometric_values(double lo, double hi, int count) {
    std::vector<double> v;
    for (int k = 0; k < count; ++k) v.push_back(lo * std::pow(hi / lo, static_cast<double>(k) / (count - 1)));
    return v;
}

inline std::vector<ScenarioConfig> builtin_scenarios() {
    std::vector<ScenarioConfig> out;
    auto resonant = [](std::string name) {
        ScenarioConfig c;
        c.name = std::move(name);
        c.base = SystemParams{1.0, 1.0, 1.0, 0.0, 0.0, 0.0, 10, DriveScaling::raw};
        return c;
    };

    {
        auto c = resonant("fig2");
        c.sweep = {{{"epsilon"}, {0.05, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0}}};
        c.outputs = {"impurity", "overlap_wf", "n", "sigma_z"};
        out.push_back(c);
    }
    {
        auto c = resonant("fig3");
        c.sweep = {{{"epsilon"}, {0.1, 0.25, 0.5, 0.75, 1.0, 1.5, 2.0, 2.5, 3.0, 4.0, 5.0}}};
        c.outputs = {"n", "sigma_z"};
        out.push_back(c);
    }
    {
        auto c = resonant("fig4a");
        c.sweep = {{{"epsilon"}, {0.25, 0.5, 1.0, 2.0, 4.0}}};
        c.outputs = {"EN_rho", "EN_traj"};
        c.time_series = true;
        out.push_back(c);
    }
    {
        auto c = resonant("fig4b");
        c.sweep = {{{"epsilon"}, {0.1, 0.25, 0.5, 0.75, 1.0, 1.5, 2.0, 3.0, 4.0, 5.0}}};
        c.t_max = 5.0;  // gamma t = 1, 2, 5 with gamma = 1
        c.samples.times = std::vector<double>{1.0, 2.0, 5.0};
        c.steady_window = TimeWindow{5.0, 5.0};
        c.outputs = {"EN_rho", "EN_traj"};
        c.time_series = true;
        out.push_back(c);
    }
    {
        auto c = resonant("fig5");
        c.sweep = {{{"epsilon"}, {0.1, 0.25, 0.5, 0.75, 1.0, 1.25, 1.5, 2.0, 3.0, 4.0, 5.0, 6.0}}};
        c.outputs = {"EN_rho", "EN_traj", "n", "sigma_z"};
        out.push_back(c);
    }
    for (const auto& [name, theta] : {std::pair{"fig6a", 0.0}, std::pair{"fig6b", 0.5}}) {
        auto c = resonant(name);
        c.base.theta = theta;
        c.base.n_max = 100;
        c.auto_n_max = false;
        c.sweep = {{{"epsilon"}, {0.25, 0.5, 1.0, 1.5, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0}}};
        c.outputs = {"EN_rho", "EN_traj", "n"};
        out.push_back(c);
    }
    for (const auto& [name, theta] : {std::pair{"fig7a", -1.0}, std::pair{"fig7b", 1.0}}) {
        auto c = resonant(name);
        c.base.delta = 1.0;
        c.base.theta = theta;
        c.sweep = {{{"epsilon"}, {0.25, 0.5, 1.0, 1.5, 2.0, 2.5, 3.0, 4.0}}};
        c.outputs = {"EN_rho", "EN_traj", "n"};
        out.push_back(c);
    }
    {
        // theta = delta on the n-photon resonances -g/sqrt(n), n = 1, 2, 3.
        ScenarioConfig c;
        c.name = "fig8";
        c.base = SystemParams{1000.0, 1.0, 2.0, 0.0, 0.0, 0.0, 14, DriveScaling::raw};
        c.auto_n_max = false;
        const double g = c.base.g;
        c.sweep = {{{"theta", "delta"}, {-g, -g / std::sqrt(2.0), -g / std::sqrt(3.0)}},
                   {{"epsilon"}, geometric_values(2.0, 300.0, 24)}};
        c.method = Method::oracle;
        c.outputs = {"n", "EN_rho"};
        out.push_back(c);
    }
    {
        ScenarioConfig c;
        c.name = "fig9";
        c.base = SystemParams{10.0, 1.0, 0.1, 0.0, 0.0, 0.0, 10, DriveScaling::raw};
        c.sweep = {{{"g"}, {5.0, 10.0}},
                   {{"drive_over_g"}, {0.4, 0.6, 0.8, 0.9, 1.0, 1.1, 1.2, 1.4}}};
        c.n_traj = 200;
        c.t_max = 60.0;
        c.outputs = {"EN_rho", "EN_traj", "n", "ansatz_overlap", "ansatz_overlap_entangled"};
        out.push_back(c);
    }
    return out;
}

inline ScenarioConfig builtin_scenario(const std::string& name) {
    for (auto& c : builtin_scenarios())
        if (c.name == name) return c;
    throw Error(ErrorCode::invalid_configuration, "unknown scenario '" + name + "'");
}

// ---------------------------------------------------------------------------
// Validation

struct Diagnostic {
    enum class Level { info, warning } level;
    std::string message;
};

inline std::vector<Diagnostic> validate(const ScenarioConfig& c) {
    std::vector<Diagnostic> out;
    auto warn = [&out](std::string m) { out.push_back({Diagnostic::Level::warning, std::move(m)}); };
    auto info = [&out](std::string m) { out.push_back({Diagnostic::Level::info, std::move(m)}); };
    std::vector<GridPoint> grid;
    try {
        grid = resolve_grid(c);
    } catch (const Error& e) {
        warn(std::string("invalid grid: ") + e.what());
        return out;
    }
    const auto has = [&c](const std::string& o) {
        return std::find(c.outputs.begin(), c.outputs.end(), o) != c.outputs.end();
    };
    bool weak_ok = true, truncation_ok = true;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const auto& p = grid[i].params;
        // Empty-cavity photon number |eps / (kappa (1 + i theta))|^2.
        const double x = saturation_scaled_drive(p) / p.kappa;
        const double n_est = x * x / (1.0 + p.theta * p.theta);
        // Multiphoton margin: leave room for three standard deviations plus two levels.
        const double needed = n_est + 3.0 * std::sqrt(n_est) + 2.0;
        if (p.n_max < needed) {
            truncation_ok = false;
            std::ostringstream m;
            m << "truncation: grid point " << i << " expects n ~ " << n_est << " but n_max = " << p.n_max;
            warn(m.str());
        }
        const bool oracle = c.method == Method::oracle || has("oracle_trace_distance");
        if (oracle && p.n_max > oracle_max_n_max) {
            std::ostringstream m;
            m << "oracle-disabled: grid point " << i << " has n_max = " << p.n_max << " > "
              << oracle_max_n_max;
            warn(m.str());
        }
        if (has("overlap_wf")) {
            if (p.delta != 0.0 || p.theta != 0.0) {
                weak_ok = false;
                warn("weak-field: grid point " + std::to_string(i) + " is detuned; overlap undefined");
            } else if (p.g > 0.0 && p.gamma > 0.0) {
                const auto v = weak_field_validity(saturation_scaled_drive(p), p.kappa,
                                                   xi(p.g, p.kappa, p.gamma));
                if (!v.ok) {
                    weak_ok = false;
                    std::ostringstream m;
                    m << "weak-field: grid point " << i << " outside validity ((eps/kappa)^2 = "
                      << v.drive_term << ", |xi| = " << v.xi_abs << ")";
                    warn(m.str());
                }
            }
        }
    }
    if (truncation_ok) info("truncation OK");
    if (has("overlap_wf") && weak_ok) info("weak-field validity OK");
    return out;
}

// ---------------------------------------------------------------------------
// Execution

struct RunSummary {
    std::filesystem::path csv, sidecar;
    std::size_t rows = 0;
};

inline std::string csv_number(double v) {
    if (std::isnan(v)) return "nan";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return buf;
}

inline std::vector<std::string> csv_header(const ScenarioConfig& c) {
    std::vector<std::string> h{"scenario"};
    for (const auto& s : swept_columns(c)) h.push_back(s);
    for (const char* s : {"time", "observable", "value", "stderr", "master_seed", "dt", "n_max",
                          "n_traj", "drive_scaling", "method"})
        h.emplace_back(s);
    return h;
}

inline constexpr int csv_metadata_columns = 6;

namespace detail {

struct RowSink {
    std::ostream& out;
    std::vector<std::string> prefix;  // scenario + swept values
    std::vector<std::string> metadata;
    std::size_t rows = 0;

    void write(const std::string& time, const std::string& observable, double value,
               std::optional<double> err) {
        std::string line;
        for (const auto& p : prefix) line += p + ",";
        line += time + "," + observable + "," + csv_number(value) + "," +
                (err ? csv_number(*err) : std::string());
        for (const auto& m : metadata) line += "," + m;
        out << line << "\n";
        ++rows;
    }
};

inline double rho_photon_number(const DensityMatrix& rho) {
    const int f = rho.dims().fock_dim();
    double acc = 0.0;
    for (int n = 1; n < f; ++n) acc += n * (rho.matrix()(n, n).real() + rho.matrix()(f + n, f + n).real());
    return acc;
}

inline double rho_sigma_z(const DensityMatrix& rho) {
    const int f = rho.dims().fock_dim();
    double acc = 0.0;
    for (int n = 0; n < f; ++n) acc += rho.matrix()(f + n, f + n).real() - rho.matrix()(n, n).real();
    return acc;
}

inline double g2tf_or_nan(const DensityMatrix& rho) {
    try {
        return cross_correlation_g2tf(rho);
    } catch (const Error& e) {
        if (e.code() == ErrorCode::undefined_correlation) return std::nan("");
        throw;
    }
}

/// Observables computable from a density matrix alone.
inline std::optional<double> rho_observable(const std::string& name, const DensityMatrix& rho) {
    if (name == "n") return rho_photon_number(rho);
    if (name == "sigma_z") return rho_sigma_z(rho);
    if (name == "EN_rho") return log_negativity(rho);
    if (name == "negativity") return negativity(rho);
    if (name == "impurity") return impurity(rho);
    if (name == "g2tf") return g2tf_or_nan(rho);
    return std::nullopt;
}

inline std::string time_label(double t) { return csv_number(t); }

inline void run_oracle_point(const ScenarioConfig& c, const GridPoint& gp, RowSink& sink) {
    const auto l = liouvillian(gp.params);
    const DensityMatrix rho = steady_state(l);
    const int f = rho.dims().fock_dim();
    double top = 0.0;
    for (int n = f - 2; n < f; ++n) top += rho.matrix()(n, n).real() + rho.matrix()(f + n, f + n).real();
    if (top > 1e-6)
        throw Error(ErrorCode::truncation, "steady state holds " + csv_number(top) +
                                               " in the top two Fock levels; raise n_max");
    for (const auto& o : c.outputs) sink.write("", o, *rho_observable(o, rho), 0.0);
    if (!c.time_series) return;
    const auto series = evolve_master(l, DensityMatrix::from_pure(PureState::basis(gp.params.dims(), Atom::ground, 0)),
                                      gp.sample_times, c.dt);
    for (std::size_t k = 0; k < series.size(); ++k)
        for (const auto& o : c.outputs) sink.write(time_label(gp.sample_times[k]), o, *rho_observable(o, series[k]), std::nullopt);
}

inline void run_trajectory_point(const ScenarioConfig& c, const GridPoint& gp, RowSink& sink) {
    const auto has = [&c](const std::string& o) {
        return std::find(c.outputs.begin(), c.outputs.end(), o) != c.outputs.end();
    };
    EnsembleOptions opt;
    opt.steady_window = gp.window;
    const SpaceDims dims = gp.params.dims();
    if (has("overlap_wf")) {
        const PureState wf = weak_field_pure_state(weak_field_state(gp.params), dims);
        opt.functionals.push_back({"overlap_wf", [wf](const PureState& s) { return weak_field_overlap(s, wf); }});
    }
    if (has("concurrence"))
        opt.functionals.push_back({"concurrence", [](const PureState& s) { return concurrence_pure(s).standard; }});
    if (has("concurrence_paper"))
        opt.functionals.push_back({"concurrence_paper", [](const PureState& s) { return concurrence_pure(s).paper; }});
    if (has("ansatz_overlap")) {
        opt.functionals.push_back({"ansatz_overlap",
                                   [](const PureState& s) { return bimodal_ansatz_overlap(s).overlap; },
                                   true});
    }
    if (has("ansatz_overlap_entangled")) {
        opt.functionals.push_back({"ansatz_overlap_entangled",
                                   [](const PureState& s) { return bimodal_ansatz_overlap(s, 1.0).overlap; },
                                   true});
    }

    const auto r = run_ensemble(gp.params, c.n_traj, gp.t_max, c.dt, c.master_seed, gp.sample_times, opt);
    const auto& st = *r.steady;

    std::optional<DensityMatrix> oracle_rho;
    if (has("oracle_trace_distance") && gp.params.n_max <= oracle_max_n_max)
        oracle_rho = steady_state(liouvillian(gp.params));

    for (const auto& o : c.outputs) {
        if (o == "n") sink.write("", o, st.photon_number.mean, st.photon_number.error);
        else if (o == "sigma_z") sink.write("", o, st.sigma_z.mean, st.sigma_z.error);
        else if (o == "EN_rho") {
            sink.write("", o, st.en_rho.mean, st.en_rho.error);
            sink.write("", "EN_rho_max", *std::max_element(r.en_rho.values.begin(), r.en_rho.values.end()), std::nullopt);
        } else if (o == "EN_traj") {
            sink.write("", o, st.en_traj.mean, st.en_traj.error);
            sink.write("", "EN_traj_max", *std::max_element(r.en_traj.values.begin(), r.en_traj.values.end()), std::nullopt);
        } else if (o == "jumps") sink.write("", o, r.jumps_per_trajectory.mean, r.jumps_per_trajectory.error);
        else if (o == "oracle_trace_distance") {
            sink.write("", o, oracle_rho ? trace_distance(st.rho.matrix(), oracle_rho->matrix()) : std::nan(""), std::nullopt);
        } else if (auto v = rho_observable(o, st.rho)) sink.write("", o, *v, std::nullopt);
        else {
            const auto& f = st.functionals.at(o);
            sink.write("", o, f.mean, f.error);
        }
    }
    if (!c.time_series) return;
    for (std::size_t k = 0; k < r.sample_times.size(); ++k) {
        const std::string t = time_label(r.sample_times[k]);
        for (const auto& o : c.outputs) {
            if (o == "n") sink.write(t, o, r.photon_number.mean[k], r.photon_number.stderrs[k]);
            else if (o == "sigma_z") sink.write(t, o, r.sigma_z.mean[k], r.sigma_z.stderrs[k]);
            else if (o == "EN_traj") sink.write(t, o, r.en_traj.values[k], r.en_traj.stderrs[k]);
            else if (o == "jumps" || o == "oracle_trace_distance") continue;
            else if (auto v = rho_observable(o, r.rho[k])) sink.write(t, o, *v, std::nullopt);
            else {
                const auto& f = r.functionals.at(o);
                if (std::isnan(f.mean[k])) continue;
                sink.write(t, o, f.mean[k], f.stderrs[k]);
            }
        }
    }
}

} // namespace detail

/// Runs every grid point and writes the CSV rows to `out`.
inline std::size_t write_scenario_csv(const ScenarioConfig& c, std::ostream& out) {
    const auto grid = resolve_grid(c);
    const auto header = csv_header(c);
    for (std::size_t i = 0; i < header.size(); ++i) out << (i ? "," : "") << header[i];
    out << "\n";
    std::size_t rows = 0;
    for (const auto& gp : grid) {
        detail::RowSink sink{out, {c.name}, {}, 0};
        for (double v : gp.swept) sink.prefix.push_back(csv_number(v));
        const double dt_used = c.method == Method::trajectory ? effective_dt(gp.params, c.dt)
                                                              : (c.dt ? std::min(*c.dt, 0.01 / spectral_scale(gp.params))
                                                                      : 0.01 / spectral_scale(gp.params));
        sink.metadata = {std::to_string(c.master_seed), csv_number(dt_used), std::to_string(gp.params.n_max),
                         std::to_string(c.n_traj), to_string(gp.params.drive_scaling), to_string(c.method)};
        if (c.method == Method::oracle) detail::run_oracle_point(c, gp, sink);
        else detail::run_trajectory_point(c, gp, sink);
        rows += sink.rows;
    }
    return rows;
}

inline RunSummary run_scenario(const ScenarioConfig& c, const std::filesystem::path& out_dir) {
    std::filesystem::create_directories(out_dir);
    RunSummary s;
    s.csv = out_dir / (c.name + ".csv");
    s.sidecar = out_dir / (c.name + ".json");
    const auto tmp = out_dir / (c.name + ".csv.partial");
    {
        std::ofstream out(tmp, std::ios::binary);
        if (!out) throw Error(ErrorCode::invalid_configuration, "cannot write " + tmp.string());
        s.rows = write_scenario_csv(c, out);
    }
    std::filesystem::rename(tmp, s.csv);
    json side = to_json(c);
    side["provenance"] = {{"generator", "cavity-traj"},
                          {"rows", s.rows},
                          {"csv", s.csv.filename().string()},
                          {"rng", "mt19937_64 seeded by splitmix64(master_seed, trajectory_index)"},
                          {"integrator", "RK4, dt = min(0.01 / max rate, dt)"}};
    std::ofstream(s.sidecar, std::ios::binary) << side.dump(2) << "\n";
    return s;
}

// ---------------------------------------------------------------------------
// Self-check of emitted CSV files

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> f;
    std::string cur;
    for (char ch : line) {
        if (ch == ',') {
            f.push_back(cur);
            cur.clear();
        } else cur += ch;
    }
    f.push_back(cur);
    return f;
}

/// Problems found in a result file; empty when every row is complete.
inline std::vector<std::string> check_csv(std::istream& in) {
    std::vector<std::string> problems;
    std::string line;
    if (!std::getline(in, line)) return {"empty file"};
    const auto header = split_csv_line(line);
    const std::vector<std::string> tail{"time",        "observable", "value",  "stderr", "master_seed",
                                        "dt",          "n_max",      "n_traj", "drive_scaling", "method"};
    if (header.size() < tail.size() + 1 || header.front() != "scenario" ||
        !std::equal(tail.begin(), tail.end(), header.end() - static_cast<long>(tail.size())))
        return {"header does not match the fixed column layout"};
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        const auto f = split_csv_line(line);
        if (f.size() != header.size()) {
            problems.push_back("line " + std::to_string(lineno) + ": expected " +
                               std::to_string(header.size()) + " fields, got " + std::to_string(f.size()));
            continue;
        }
        for (std::size_t i = f.size() - csv_metadata_columns; i < f.size(); ++i)
            if (f[i].empty())
                problems.push_back("line " + std::to_string(lineno) + ": missing " + header[i]);
        const std::size_t value_col = header.size() - tail.size() + 2;
        if (f[value_col].empty()) problems.push_back("line " + std::to_string(lineno) + ": missing value");
        if (f[value_col - 1].empty())
            problems.push_back("line " + std::to_string(lineno) + ": missing observable");
    }
    return problems;
}

} // namespace cqed
