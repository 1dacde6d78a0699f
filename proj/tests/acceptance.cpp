// Acceptance suite: one line per criterion, [PASS]/[FAIL] with the measured
// numbers. Exit code is the number of failed criteria.

#include <cmath>
#include <cstdio>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "helpers.hpp"
#include "omcool/config.hpp"
#include "omcool/fit.hpp"
#include "omcool/langevin.hpp"
#include "omcool/pdh.hpp"
#include "omcool/spectra.hpp"

using namespace omcool;
using omtest::Gauss;
using omtest::rel_diff;

namespace {

const double kTwoPi = 2.0 * std::numbers::pi;

const OpticalCavity kCryoCavity{{0.02499651, 0.025, 1.064e-6}, 2200.0, 0.245};
const OpticalCavity kRoomCavity{{0.02499651, 0.025, 1.064e-6}, 2300.0, 0.245};
const MechanicalMode kCryoMode{kTwoPi * 557e3, kTwoPi * 269.0, 40e-12};
const MechanicalMode kRoomMode{kTwoPi * 557e3, kTwoPi * 269.0, 125e-12};

int g_failures = 0;

void report(int number, bool pass, const std::string& label, const std::string& detail) {
    std::printf("[%s] criterion %d %s: %s\n", pass ? "PASS" : "FAIL", number, label.c_str(),
                detail.c_str());
    if (!pass) ++g_failures;
}

std::string fmt(const char* f, double a) {
    char buf[128];
    std::snprintf(buf, sizeof buf, f, a);
    return buf;
}

std::string fmt2(const char* f, double a, double b) {
    char buf[160];
    std::snprintf(buf, sizeof buf, f, a, b);
    return buf;
}

// fine-grained minimum of the sweep temperature over detuning at fixed power
struct Optimum {
    double detuning;
    double T_eff;
};

Optimum coldest_detuning(const OpticalCavity& cav, const MechanicalMode& mode, double power,
                         double T0) {
    double best_T = 1e300, best_d = 0.0;
    for (int i = 1; i <= 6000; ++i) {
        const double d = mode.omega_m * (0.05 + 2.95 * static_cast<double>(i) / 6000.0);
        const auto eff = effective_dynamics(cav, mode, {d, power, T0});
        if (!eff.stable) continue;
        const double t = cooling_law_temperature(T0, mode.gamma0, eff.gamma_eff);
        if (t < best_T) {
            best_T = t;
            best_d = d;
        }
    }
    return {best_d, best_T};
}

void criterion_1_threshold() {
    const MechanicalMode mode{3.5e6, kTwoPi * 269.0, 40e-12};
    const auto check = sideband_threshold_check(kCryoCavity, mode);
    const bool in_window = check.ratio > 0.195 && check.ratio < 0.21;
    report(1, in_window && check.passes, "resolved-sideband threshold",
           fmt2("omega_m/kappa = %.4f (window [0.195, 0.21], limit %.5f)", check.ratio,
                1.0 / std::sqrt(32.0)));
}

void criterion_2_occupancy() {
    const double n = occupancy(kTwoPi * 557e3, 0.29);
    const bool pass = rel_diff(n, 1.08e4) < 0.01 && rel_diff(n, 1.0e4) < 0.10;
    report(2, pass, "occupancy at the cold endpoint",
           fmt2("n = %.1f (expect 1.08e4 exact, 1e4 within 10%%; got %.3f vs 1e4)", n, n / 1e4));
}

void criterion_3_cooling_law_closure() {
    bool pass = true;
    std::string detail;

    // zero detuning: the area returns the bath temperature
    const auto grid0 = make_spectrum_grid(kRoomMode.omega_m, kRoomMode.gamma0, 6001);
    const auto s0 = thermal_displacement_psd(kRoomMode, kRoomMode.omega_m, kRoomMode.gamma0,
                                             295.0, grid0);
    const double t0 =
        effective_temperature(kRoomMode, kRoomMode.omega_m, mean_square_displacement(s0).value);
    pass = pass && rel_diff(t0, 295.0) < 1e-3;
    detail += fmt("T(Delta=0) = %.4f K vs 295 (tol 0.1%%); ", t0);

    // cooled spectra against T0 gamma0/gamma_eff for gamma_eff/omega_eff < 1e-2
    for (double ratio : {5.0, 20.7}) {
        const double geff = ratio * kRoomMode.gamma0;
        const auto grid = make_spectrum_grid(kRoomMode.omega_m, geff, 6001);
        const auto s = thermal_displacement_psd(kRoomMode, kRoomMode.omega_m, geff, 295.0, grid);
        const double t_area =
            effective_temperature(kRoomMode, kRoomMode.omega_m, mean_square_displacement(s).value);
        const double t_law = cooling_law_temperature(295.0, kRoomMode.gamma0, geff);
        pass = pass && rel_diff(t_area, t_law) < 5e-3;
        if (ratio == 20.7) detail += fmt2("area vs law at %.1fx gamma0: %.3f%%", ratio,
                                          100.0 * rel_diff(t_area, t_law));
    }
    report(3, pass, "cooling-law closure", detail);
}

void criterion_4_oracle_equivalence() {
    const double T0 = 35.0;
    bool pass = true;
    std::string detail;

    // equipartition at zero power
    {
        SimConfig cfg{2.5e-9, 0.5, 90210, 0.006, 250};
        const auto traj = simulate(kCryoCavity, kCryoMode, {0.0, 0.0, T0}, std::nullopt, cfg);
        double mean = 0.0;
        for (double x : traj.x) mean += x;
        mean /= static_cast<double>(traj.x.size());
        double var = 0.0;
        for (double x : traj.x) var += (x - mean) * (x - mean);
        var /= static_cast<double>(traj.x.size());
        const double expected =
            phys.k_B * T0 / (kCryoMode.mass * kCryoMode.omega_m * kCryoMode.omega_m);
        pass = pass && rel_diff(var, expected) < 0.05;
        detail += fmt("equipartition dev %.2f%%; ", 100.0 * rel_diff(var, expected));
    }

    struct Point {
        double frac;
        double duration;
        std::size_t seg;
        std::uint64_t seed;
    };
    for (const Point pt : {Point{0.0, 0.4, 131072, 101}, Point{0.5, 0.2, 32768, 102},
                           Point{1.0, 0.2, 32768, 103}}) {
        const OperatingPoint op{pt.frac * kCryoMode.omega_m, 1e-3, T0};
        const auto eff = effective_dynamics(kCryoCavity, kCryoMode, op);
        SimConfig cfg{2.5e-9, pt.duration, pt.seed, 0.006, 125};
        const auto traj = simulate(kCryoCavity, kCryoMode, op, std::nullopt, cfg);
        const auto od = oracle_effective_dynamics(traj, pt.seg);
        const double gdev = rel_diff(od.gamma_eff, eff.gamma_eff);
        const double wdev = rel_diff(od.omega_eff, eff.omega_eff);
        pass = pass && gdev < 0.10 && wdev < 0.10;
        detail += fmt2("Delta=%.1f wm: gamma dev %.1f%%", pt.frac, 100.0 * gdev);
        detail += fmt(" omega dev %.2f%%; ", 100.0 * wdev);
    }
    report(4, pass, "stochastic oracle equivalence", detail);
}

void criterion_5_fit_round_trips() {
    bool pass = true;
    std::string detail;
    struct Regime {
        const OpticalCavity& cav;
        const MechanicalMode& mode;
        std::uint64_t seed;
        const char* name;
    };
    for (const Regime reg : {Regime{kRoomCavity, kRoomMode, 1001, "room"},
                             Regime{kCryoCavity, kCryoMode, 1002, "cryo"}}) {
        Gauss g(reg.seed);
        DetuningDataset data;
        for (int i = 0; i < 25; ++i) {
            const double det = reg.mode.omega_m * (0.2 + 2.8 * static_cast<double>(i) / 24.0);
            const auto eff = effective_dynamics(reg.cav, reg.mode, {det, 1e-3, 295.0});
            data.points.push_back({det, 1e-3, eff.omega_eff * (1.0 + 0.01 * g()),
                                   eff.gamma_eff * (1.0 + 0.01 * g()), 1.0});
        }
        OpticalCavity guess = reg.cav;
        guess.finesse *= 1.3;
        MechanicalMode mguess = reg.mode;
        mguess.mass *= 0.7;
        const FitResult res = fit_detuning_curves(data, guess, mguess);
        const double fdev = rel_diff(res.param("finesse"), reg.cav.finesse);
        const double mdev = rel_diff(res.param("mass"), reg.mode.mass);
        pass = pass && res.converged && fdev < 0.05 && mdev < 0.10;
        detail += std::string(reg.name) + fmt2(": F dev %.2f%%, m dev %.2f%%; ", 100.0 * fdev,
                                               100.0 * mdev);
    }
    report(5, pass, "finesse/mass fit round trips", detail);
}

void criterion_6_endpoints() {
    const Optimum cryo = coldest_detuning(kCryoCavity, kCryoMode, 0.014, 35.0);
    const Optimum room = coldest_detuning(kRoomCavity, kRoomMode, 0.0037, 295.0);
    const bool pass_cryo = cryo.T_eff < 3.0 * 0.29 && cryo.T_eff > 0.29 / 3.0;
    const bool pass_room = room.T_eff < 3.0 * 17.0 && room.T_eff > 17.0 / 3.0;
    report(6, pass_cryo && pass_room, "cooling endpoints",
           fmt2("min T_eff: cryo %.3f K (target 0.29 within x3), room %.1f K (target 17 within x3)",
                cryo.T_eff, room.T_eff));
}

void criterion_7_optimal_detuning() {
    bool pass = true;
    std::string detail;
    struct Regime {
        const OpticalCavity& cav;
        const MechanicalMode& mode;
        double T0;
        std::vector<double> powers;
        const char* name;
    };
    for (const Regime& reg :
         {Regime{kCryoCavity, kCryoMode, 35.0, {1e-3, 3.7e-3, 0.014}, "cryo"},
          Regime{kRoomCavity, kRoomMode, 295.0, {1e-3, 2e-3, 3.7e-3}, "room"}}) {
        double worst = 0.0;
        for (double P : reg.powers) {
            const Optimum opt = coldest_detuning(reg.cav, reg.mode, P, reg.T0);
            const double dev = std::abs(opt.detuning - reg.mode.omega_m) / reg.mode.omega_m;
            worst = std::max(worst, dev);
        }
        pass = pass && worst <= 0.20;
        detail += std::string(reg.name) + fmt(": argmin dev %.1f%% of omega_m; ", 100.0 * worst);
    }
    report(7, pass, "optimal detuning near omega_m (20%)", detail);
}

void criterion_8_force_discrimination() {
    bool pass = true;
    std::string detail;

    // photothermal vs radiation pressure with identical magnitudes
    const PhotothermalParams pt{10.0 / kCryoMode.omega_m, 1.0};
    double max_gap = 0.0;
    for (int i = 2; i <= 40; ++i) {
        const double det = kCryoMode.omega_m * 0.05 * i;
        const OperatingPoint op{det, 0.014, 35.0};
        const auto rp = effective_dynamics(kCryoCavity, kCryoMode, op);
        const auto ptdyn =
            effective_dynamics(kCryoCavity, kCryoMode, op, BackactionKind::Photothermal, pt);
        if (!rp.stable) continue;
        max_gap = std::max(max_gap, std::abs(ptdyn.gamma_eff - rp.gamma_eff) / rp.gamma_eff);
    }
    pass = pass && max_gap > 0.20;
    detail += fmt("max |gamma_pt-gamma_rp|/gamma_rp = %.0f%%; ", 100.0 * max_gap);

    // collapse diagnostic separates injected heating from the ideal law
    const double T0 = 35.0;
    const std::vector<double> powers{1e-3, 3.7e-3, 0.014};
    std::vector<double> dets;
    for (int i = 2; i <= 40; ++i) dets.push_back(kCryoMode.omega_m * 0.05 * i);

    const auto ideal = cooling_sweep(kCryoCavity, kCryoMode, powers, dets, T0);
    const auto ideal_diag = collapse_diagnostic(ideal);
    pass = pass && ideal_diag.max_residual < 0.01 && std::abs(ideal_diag.slope + 1.0) < 0.01;

    const double beta = 0.1 * T0 / 0.014;
    std::vector<SweepRow> heated;
    for (double P : powers) {
        const auto part =
            cooling_sweep(kCryoCavity, kCryoMode, std::vector<double>{P}, dets, T0 + beta * P);
        heated.insert(heated.end(), part.begin(), part.end());
    }
    const auto heat_diag = collapse_diagnostic(heated);
    pass = pass && heat_diag.max_residual > 0.05;
    detail += fmt2("collapse residual: ideal %.2e, heated %.3f (need <0.01, >0.05)",
                   ideal_diag.max_residual, heat_diag.max_residual);
    report(8, pass, "force discrimination", detail);
}

void criterion_9_calibration_chain() {
    bool pass = true;
    std::string detail;
    const PdhConfig cfg{kTwoPi * 20e6, 0.3, kTwoPi * 600e3, 1e4};
    const double kappa = cavity_linewidth(kCryoCavity);

    const auto make_truth = [](const MechanicalMode& mode, double T, double ref) {
        const double lo = mode.omega_m - 30.0 * mode.gamma0;
        const double hi = ref + 30.0 * mode.gamma0;
        std::vector<double> grid(6001);
        for (std::size_t i = 0; i < grid.size(); ++i)
            grid[i] = lo + (hi - lo) * static_cast<double>(i) / 6000.0;
        return thermal_displacement_psd(mode, mode.omega_m, mode.gamma0, T, grid);
    };

    // zero-noise round trip
    {
        const auto truth = make_truth(kRoomMode, 295.0, cfg.ref_freq);
        const auto raw = synthesize_raw_spectrum(kCryoCavity, cfg, 0.15 * kappa, truth, 0.0);
        const auto cal = calibrate_spectrum(raw, cfg, kCryoCavity);
        double worst = 0.0;
        for (std::size_t i = 0; i < cal.omega.size(); ++i) {
            if (std::abs(cal.omega[i] - cfg.ref_freq) < 200.0) continue;
            worst = std::max(worst, rel_diff(cal.psd[i], truth.psd[i]));
        }
        pass = pass && worst < 1e-9;
        detail += fmt("round trip worst dev %.1e; ", worst);
    }

    // detuning independence
    {
        const auto truth = make_truth(kRoomMode, 295.0, cfg.ref_freq);
        const auto cal1 = calibrate_spectrum(
            synthesize_raw_spectrum(kCryoCavity, cfg, 0.05 * kappa, truth, 0.0), cfg, kCryoCavity);
        const auto cal2 = calibrate_spectrum(
            synthesize_raw_spectrum(kCryoCavity, cfg, 0.30 * kappa, truth, 0.0), cfg, kCryoCavity);
        double worst = 0.0;
        for (std::size_t i = 0; i < cal1.omega.size(); ++i)
            worst = std::max(worst, rel_diff(cal1.psd[i], cal2.psd[i]));
        pass = pass && worst < 0.02;
        detail += fmt("two-detuning dev %.1e; ", worst);
    }

    // effective-mass recovery
    {
        struct Case {
            const MechanicalMode& mode;
            double T;
            const char* name;
        };
        for (const Case c : {Case{kRoomMode, 295.0, "125 ng"}, Case{kCryoMode, 35.0, "40 ng"}}) {
            const auto truth = make_truth(c.mode, c.T, cfg.ref_freq);
            const auto raw = synthesize_raw_spectrum(kCryoCavity, cfg, 0.0, truth, 0.0);
            const auto cal = calibrate_spectrum(raw, cfg, kCryoCavity);
            const double m = calibrate_effective_mass(cal, c.T, cfg);
            const double dev = rel_diff(m, c.mode.mass);
            pass = pass && dev < 0.05;
            detail += std::string(c.name) + fmt(" dev %.2f%%; ", 100.0 * dev);
        }
    }
    report(9, pass, "calibration chain", detail);
}

} // namespace

int main() {
    criterion_1_threshold();
    criterion_2_occupancy();
    criterion_3_cooling_law_closure();
    criterion_4_oracle_equivalence();
    criterion_5_fit_round_trips();
    criterion_6_endpoints();
    criterion_7_optimal_detuning();
    criterion_8_force_discrimination();
    criterion_9_calibration_chain();
    std::printf("%d of 9 criteria passed\n", 9 - g_failures);
    return g_failures;
}
