#include <cstdlib>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "cqed/cqed.hpp"

namespace {

void print_diagnostics(const std::vector<cqed::Diagnostic>& diags) {
    for (const auto& d : diags)
        std::cerr << (d.level == cqed::Diagnostic::Level::warning ? "warning: " : "info: ") << d.message
                  << "\n";
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Quantum-trajectory simulator for a driven, damped atom-cavity system"};
    app.require_subcommand(1);

    auto* run = app.add_subcommand("run", "Run a built-in scenario or a JSON config");
    std::string scenario, config_path, out_dir = "results", drive_scaling;
    std::optional<int> traj, fock;
    std::optional<std::uint64_t> seed;
    std::optional<double> dt;
    auto* scen_opt = run->add_option("--scenario", scenario, "Built-in scenario name");
    run->add_option("--config", config_path, "Scenario config (JSON)")->excludes(scen_opt)->check(CLI::ExistingFile);
    run->add_option("--out", out_dir, "Output directory")->capture_default_str();
    run->add_option("--traj", traj, "Override the number of trajectories");
    run->add_option("--seed", seed, "Override the master seed");
    run->add_option("--dt", dt, "Override the maximum time step");
    run->add_option("--fock", fock, "Override n_max (disables the automatic rule)");
    run->add_option("--drive-scaling", drive_scaling, "raw | saturation")
        ->check(CLI::IsMember({"raw", "saturation"}));

    auto* val = app.add_subcommand("validate", "Check a config and report truncation / regime diagnostics");
    std::string val_config, val_scenario;
    auto* val_scen = val->add_option("--scenario", val_scenario, "Built-in scenario name");
    val->add_option("--config", val_config, "Scenario config (JSON)")->excludes(val_scen)->check(CLI::ExistingFile);

    auto* list = app.add_subcommand("list-scenarios", "List built-in scenarios");

    auto* check = app.add_subcommand("check", "Verify that every row of a result CSV is complete");
    std::string check_file;
    check->add_option("file", check_file, "Result CSV")->required()->check(CLI::ExistingFile);

    auto* cols = app.add_subcommand("columns", "Print column numbers of a result CSV for plotting");
    std::string cols_file;
    cols->add_option("file", cols_file, "Result CSV")->required()->check(CLI::ExistingFile);

    CLI11_PARSE(app, argc, argv);

    try {
        if (*list) {
            for (const auto& c : cqed::builtin_scenarios()) {
                std::cout << c.name << "  (" << cqed::to_string(c.method) << "; sweep:";
                for (const auto& ax : c.sweep) {
                    std::cout << " ";
                    for (std::size_t i = 0; i < ax.names.size(); ++i) std::cout << (i ? "=" : "") << ax.names[i];
                    std::cout << "[" << ax.values.size() << "]";
                }
                std::cout << "; outputs:";
                for (const auto& o : c.outputs) std::cout << " " << o;
                std::cout << ")\n";
            }
            return 0;
        }
        if (*val) {
            if (val_config.empty() && val_scenario.empty()) {
                std::cerr << "validate: give --config or --scenario\n";
                return 2;
            }
            const auto c = val_config.empty() ? cqed::builtin_scenario(val_scenario) : cqed::load_config(val_config);
            const auto diags = cqed::validate(c);
            print_diagnostics(diags);
            std::cout << cqed::resolve_grid(c).size() << " grid points\n";
            for (const auto& d : diags)
                if (d.level == cqed::Diagnostic::Level::warning) return 1;
            return 0;
        }
        if (*check) {
            std::ifstream in(check_file);
            const auto problems = cqed::check_csv(in);
            for (const auto& p : problems) std::cerr << p << "\n";
            if (problems.empty()) std::cout << check_file << ": OK\n";
            return problems.empty() ? 0 : 1;
        }
        if (*cols) {
            std::ifstream in(cols_file);
            std::string header;
            std::getline(in, header);
            const auto names = cqed::split_csv_line(header);
            int obs = 0, val_col = 0, err = 0, time = 0;
            for (std::size_t i = 0; i < names.size(); ++i) {
                std::cout << i + 1 << "\t" << names[i] << "\n";
                if (names[i] == "observable") obs = static_cast<int>(i + 1);
                if (names[i] == "value") val_col = static_cast<int>(i + 1);
                if (names[i] == "stderr") err = static_cast<int>(i + 1);
                if (names[i] == "time") time = static_cast<int>(i + 1);
            }
            std::cout << "# gnuplot: set datafile separator ','\n"
                      << "# steady rows vs first swept column, one observable:\n"
                      << "#   plot \"< grep ',,EN_rho,' FILE\" using 2:" << val_col << ":" << err
                      << " with yerrorbars\n"
                      << "# time series: using " << time << ":" << val_col << " (observable in column "
                      << obs << ")\n";
            return 0;
        }

        cqed::ScenarioConfig c;
        if (!config_path.empty()) c = cqed::load_config(config_path);
        else if (!scenario.empty()) c = cqed::builtin_scenario(scenario);
        else {
            std::cerr << "run: give --scenario or --config\n";
            return 2;
        }
        if (traj) c.n_traj = *traj;
        if (seed) c.master_seed = *seed;
        if (dt) c.dt = *dt;
        if (fock) {
            c.base.n_max = *fock;
            c.auto_n_max = false;
        }
        if (!drive_scaling.empty()) c.base.drive_scaling = cqed::drive_scaling_from_string(drive_scaling);
        print_diagnostics(cqed::validate(c));
        const auto summary = cqed::run_scenario(c, out_dir);
        std::cout << "wrote " << summary.rows << " rows to " << summary.csv.string() << " (config "
                  << summary.sidecar.string() << ")\n";
        return 0;
    } catch (const cqed::Error& e) {
        std::cerr << "error [" << cqed::to_string(e.code()) << "]: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
}
