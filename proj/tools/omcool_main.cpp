// omcool: predicts backaction-cooled mirror dynamics in a detuned cavity,
// generates analytic/simulated/synthetic displacement spectra, and fits them.
// Subcommands: sweep, spectrum, fit, check. Exit codes: 0 success, 2 input
// error, 3 dynamical instability, 4 fit failure.

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "omcool/config.hpp"
#include "omcool/csv.hpp"
#include "omcool/errors.hpp"
#include "omcool/fit.hpp"
#include "omcool/langevin.hpp"
#include "omcool/pdh.hpp"
#include "omcool/spectra.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInput = 2;
constexpr int kExitInstability = 3;
constexpr int kExitFit = 4;

// --config accepts a path, or a bare name resolved inside $OMCOOL_CONFIG_DIR.
std::string resolve_config_path(const std::string& name) {
    namespace fs = std::filesystem;
    if (fs::exists(name)) return name;
    if (const char* dir = std::getenv("OMCOOL_CONFIG_DIR")) {
        const fs::path candidate = fs::path(dir) / name;
        if (fs::exists(candidate)) return candidate.string();
        const fs::path with_ext = fs::path(dir) / (name + ".json");
        if (fs::exists(with_ext)) return with_ext.string();
    }
    return name;  // let the loader report the open failure
}

std::ofstream open_output(const std::string& path) {
    std::ofstream out(path);
    if (!out) throw omcool::ConfigError("cannot open output file '" + path + "'");
    return out;
}

void write_text(const std::string& path, const std::string& text) {
    if (path.empty() || path == "-") {
        std::cout << text;
        return;
    }
    auto out = open_output(path);
    out << text;
}

int run_sweep(const std::string& config_path, const std::string& out_path,
              const std::string& format) {
    const omcool::ScenarioConfig cfg = omcool::load_scenario_file(config_path);
    const auto rows = omcool::cooling_sweep(cfg.cavity, cfg.mechanics, cfg.powers_W,
                                            cfg.detunings_rad_s, cfg.bath_temperature_K);
    bool any_stable = false;
    for (const auto& r : rows) any_stable = any_stable || r.stable;

    std::ostringstream os;
    if (format == "csv") {
        omcool::write_sweep_csv(os, rows);
    } else {
        nlohmann::ordered_json arr = nlohmann::ordered_json::array();
        for (const auto& r : rows) {
            arr.push_back({{"power_W", r.power},
                           {"detuning_rad_s", r.detuning},
                           {"omega_eff_rad_s", r.omega_eff},
                           {"gamma_eff_rad_s", r.gamma_eff},
                           {"T_eff_K", r.T_eff},
                           {"n_mean", r.n_mean},
                           {"stable", r.stable}});
        }
        os << arr.dump(2) << "\n";
    }
    write_text(out_path, os.str());
    if (!any_stable) {
        std::cerr << "omcool sweep: every operating point is anti-damped\n";
        return kExitInstability;
    }
    return kExitOk;
}

int run_spectrum(const std::string& config_path, double detuning, double power,
                 const std::string& kind, std::optional<std::uint64_t> seed,
                 const std::string& out_path) {
    const omcool::ScenarioConfig cfg = omcool::load_scenario_file(config_path);
    const omcool::OperatingPoint op = cfg.operating_point(power, detuning);

    omcool::SpectrumSeries series;
    if (kind == "lorentzian" || kind == "eq1") {
        const auto eff = omcool::effective_dynamics(cfg.cavity, cfg.mechanics, op);
        if (!eff.stable) throw omcool::InstabilityError("operating point is anti-damped");
        const auto grid = omcool::make_spectrum_grid(eff.omega_eff, eff.gamma_eff);
        series = omcool::thermal_displacement_psd(cfg.mechanics, eff.omega_eff, eff.gamma_eff,
                                                  cfg.bath_temperature_K, grid);
    } else if (kind == "full") {
        const auto eff = omcool::effective_dynamics(cfg.cavity, cfg.mechanics, op);
        if (!eff.stable) throw omcool::InstabilityError("operating point is anti-damped");
        const auto grid = omcool::make_spectrum_grid(eff.omega_eff, eff.gamma_eff);
        series = omcool::spectrum_full(cfg.cavity, cfg.mechanics, op, grid);
    } else if (kind == "langevin") {
        omcool::SimConfig sim = cfg.sim;
        if (seed) sim.seed = *seed;
        const auto traj = omcool::simulate(cfg.cavity, cfg.mechanics, op, std::nullopt, sim);
        for (const auto& w : traj.warnings) std::cerr << "omcool spectrum: " << w << "\n";
        series = omcool::welch_psd(traj, traj.x.size() / 8);
    } else {
        throw omcool::ConfigError("--kind must be lorentzian, full or langevin");
    }

    std::ostringstream os;
    omcool::write_spectrum_csv(os, series);
    write_text(out_path, os.str());
    return kExitOk;
}

int run_fit(const std::string& spectrum_path, const std::string& dataset_path,
            const std::string& mode, const std::string& config_path,
            const std::string& out_path) {
    omcool::FitResult result;
    if (mode == "spectrum") {
        if (spectrum_path.empty()) throw omcool::ConfigError("fit: --spectrum file required");
        std::ifstream in(spectrum_path);
        if (!in) throw omcool::ConfigError("fit: cannot open '" + spectrum_path + "'");
        const auto series = omcool::read_spectrum_csv(in);
        result = omcool::fit_spectrum(series);
    } else if (mode == "detuning") {
        if (dataset_path.empty()) throw omcool::ConfigError("fit: --dataset file required");
        if (config_path.empty())
            throw omcool::ConfigError("fit: --config with template parameters required");
        std::ifstream in(dataset_path);
        if (!in) throw omcool::ConfigError("fit: cannot open '" + dataset_path + "'");
        const auto dataset = omcool::read_detuning_dataset_csv(in);
        const omcool::ScenarioConfig cfg = omcool::load_scenario_file(config_path);
        result = omcool::fit_detuning_curves(dataset, cfg.cavity, cfg.mechanics);
    } else {
        throw omcool::ConfigError("fit: --mode must be spectrum or detuning");
    }
    write_text(out_path, omcool::fit_result_to_json(result));
    if (!result.converged) {
        std::cerr << "omcool fit: did not converge: " << result.message << "\n";
        return kExitFit;
    }
    return kExitOk;
}

int run_check(const std::string& config_path, const std::string& table_path) {
    const omcool::ScenarioConfig cfg = omcool::load_scenario_file(config_path);
    const auto check = omcool::sideband_threshold_check(cfg.cavity, cfg.mechanics);
    const double threshold = 1.0 / std::sqrt(32.0);
    std::cout << "resolved-sideband threshold: omega_m/kappa = "
              << omcool::format_double(check.ratio) << (check.passes ? " > " : " <= ")
              << omcool::format_double(threshold) << ": " << (check.passes ? "PASS" : "FAIL")
              << "\n";

    if (!table_path.empty()) {
        std::ifstream in(table_path);
        if (!in) throw omcool::ConfigError("check: cannot open '" + table_path + "'");
        const auto rows = omcool::read_sweep_csv(in);
        const auto diag = omcool::collapse_diagnostic(rows);
        std::cout << "cooling-law collapse: slope = " << omcool::format_double(diag.slope)
                  << ", max relative residual = " << omcool::format_double(diag.max_residual)
                  << "\n";
        if (std::abs(diag.slope + 1.0) < 0.05 && diag.max_residual < 0.05)
            std::cout << "no heating detected\n";
        else
            std::cout << "heating suspected: residuals stratify away from the single line\n";
    }
    return kExitOk;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"cavity backaction cooling simulator and analysis toolkit"};
    app.require_subcommand(1);

    std::string config_path, out_path, format = "csv", kind = "lorentzian";
    std::string spectrum_path, dataset_path, fit_mode = "spectrum", table_path;
    double detuning = 0.0, power = 0.0;
    std::optional<std::uint64_t> seed;

    auto* sweep = app.add_subcommand("sweep", "cooling table over power x detuning grids");
    sweep->add_option("--config", config_path, "scenario JSON")->required();
    sweep->add_option("--out", out_path, "output file ('-' for stdout)");
    sweep->add_option("--format", format, "csv|json")
        ->check(CLI::IsMember({"csv", "json"}));

    auto* spectrum = app.add_subcommand("spectrum", "displacement spectrum at one condition");
    spectrum->add_option("--config", config_path, "scenario JSON")->required();
    spectrum->add_option("--detuning", detuning, "rad/s")->required();
    spectrum->add_option("--power", power, "W")->required();
    spectrum->add_option("--kind", kind, "lorentzian|full|langevin");
    spectrum->add_option("--seed", seed, "simulation seed override");
    spectrum->add_option("--out", out_path, "output CSV ('-' for stdout)");

    auto* fit = app.add_subcommand("fit", "least-squares fits");
    fit->add_option("--spectrum", spectrum_path, "spectrum CSV");
    fit->add_option("--dataset", dataset_path, "detuning dataset CSV");
    fit->add_option("--mode", fit_mode, "spectrum|detuning");
    fit->add_option("--config", config_path, "template scenario JSON (detuning mode)");
    fit->add_option("--out", out_path, "output JSON ('-' for stdout)");

    auto* check = app.add_subcommand("check", "threshold and heating diagnostics");
    check->add_option("--config", config_path, "scenario JSON")->required();
    check->add_option("--table", table_path, "sweep CSV for the collapse diagnostic");

    CLI11_PARSE(app, argc, argv);

    try {
        if (!config_path.empty()) config_path = resolve_config_path(config_path);
        if (sweep->parsed()) return run_sweep(config_path, out_path, format);
        if (spectrum->parsed()) return run_spectrum(config_path, detuning, power, kind, seed, out_path);
        if (fit->parsed()) return run_fit(spectrum_path, dataset_path, fit_mode, config_path, out_path);
        if (check->parsed()) return run_check(config_path, table_path);
    } catch (const omcool::ConfigError& e) {
        std::cerr << "omcool: input error: " << e.what() << "\n";
        return kExitInput;
    } catch (const omcool::InstabilityError& e) {
        std::cerr << "omcool: instability: " << e.what() << "\n";
        return kExitInstability;
    } catch (const omcool::FitError& e) {
        std::cerr << "omcool: fit failure: " << e.what() << "\n";
        return kExitFit;
    } catch (const std::invalid_argument& e) {
        std::cerr << "omcool: input error: " << e.what() << "\n";
        return kExitInput;
    } catch (const std::exception& e) {
        std::cerr << "omcool: error: " << e.what() << "\n";
        return 1;
    }
    return kExitOk;
}
