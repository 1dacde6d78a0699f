#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>
#include <vector>

#include "helpers.hpp"
#include "omcool/errors.hpp"
#include "omcool/fit.hpp"
#include "omcool/spectra.hpp"

using namespace omcool;
using omtest::Gauss;
using omtest::rel_diff;

namespace {

const double kTwoPi = 2.0 * std::numbers::pi;

OpticalCavity make_cavity(double finesse) {
    return {{0.025, 0.030, 1.064e-6}, finesse, 0.245};
}

SpectrumSeries noisy_copy(SpectrumSeries s, double noise, std::uint64_t seed) {
    Gauss g(seed);
    for (double& v : s.psd) v *= std::max(1.0 + noise * g(), 1e-6);
    return s;
}

DetuningDataset synthesize_dataset(const OpticalCavity& cav, const MechanicalMode& mode,
                                   double power, double noise, std::uint64_t seed) {
    Gauss g(seed);
    DetuningDataset d;
    for (int i = 0; i < 25; ++i) {
        const double det = mode.omega_m * (0.2 + 2.8 * static_cast<double>(i) / 24.0);
        const OperatingPoint op{det, power, 295.0};
        const auto eff = effective_dynamics(cav, mode, op);
        d.points.push_back({det, power, eff.omega_eff * (1.0 + noise * g()),
                            eff.gamma_eff * (1.0 + noise * g()), 1.0});
    }
    return d;
}

} // namespace

TEST_CASE("linear model recovers exactly in a couple of steps") {
    std::vector<double> xs, ys;
    for (int i = 0; i < 20; ++i) {
        xs.push_back(static_cast<double>(i));
        ys.push_back(2.0 * xs.back() - 1.0);
    }
    const ResidualFn fn = [&](const std::vector<double>& p) {
        std::vector<double> r(xs.size());
        for (std::size_t i = 0; i < xs.size(); ++i) r[i] = p[0] * xs[i] + p[1] - ys[i];
        return r;
    };
    const FitResult res = nls_minimize(fn, {0.0, 0.0}, {.max_iterations = 50,
                                                        .step_tol = 1e-13,
                                                        .grad_tol = 1e-15});
    CHECK(res.converged);
    CHECK(res.iterations <= 6);
    CHECK(std::abs(res.params[0] - 2.0) < 1e-9);
    CHECK(std::abs(res.params[1] + 1.0) < 1e-9);
}

TEST_CASE("bent-valley minimization from the classic start") {
    const ResidualFn fn = [](const std::vector<double>& p) {
        return std::vector<double>{10.0 * (p[1] - p[0] * p[0]), 1.0 - p[0]};
    };
    const FitResult res = nls_minimize(fn, {-1.2, 1.0}, {.max_iterations = 500});
    CHECK(res.converged);
    CHECK(std::abs(res.params[0] - 1.0) < 1e-6);
    CHECK(std::abs(res.params[1] - 1.0) < 1e-6);
}

TEST_CASE("gaussian peak on exact data") {
    const double a = 3.0, b = 5.0, c = 1.5;
    std::vector<double> xs, ys;
    for (int i = 0; i < 60; ++i) {
        xs.push_back(static_cast<double>(i) / 6.0);
        ys.push_back(a * std::exp(-(xs.back() - b) * (xs.back() - b) / (2.0 * c * c)));
    }
    const ResidualFn fn = [&](const std::vector<double>& p) {
        std::vector<double> r(xs.size());
        for (std::size_t i = 0; i < xs.size(); ++i)
            r[i] = p[0] * std::exp(-(xs[i] - p[1]) * (xs[i] - p[1]) / (2.0 * p[2] * p[2])) - ys[i];
        return r;
    };
    const FitResult res = nls_minimize(fn, {1.0, 4.0, 1.0});
    CHECK(res.converged);
    CHECK(rel_diff(res.params[0], a) < 1e-8);
    CHECK(rel_diff(res.params[1], b) < 1e-8);
    CHECK(rel_diff(res.params[2], c) < 1e-8);
}

TEST_CASE("non-finite start is rejected") {
    const ResidualFn fn = [](const std::vector<double>& p) {
        return std::vector<double>{std::log(p[0])};
    };
    CHECK_THROWS_AS(nls_minimize(fn, {-1.0}), FitError);
}

TEST_CASE("spectrum fit on noiseless data is self-inverse") {
    const MechanicalMode mode{kTwoPi * 557e3, kTwoPi * 269.0, 125e-12};
    const double weff = 1.001 * mode.omega_m, geff = 40.0 * mode.gamma0;
    const auto grid = make_spectrum_grid(weff, geff, 1001);
    const auto s = thermal_displacement_psd(mode, weff, geff, 295.0, grid);

    const FitResult res = fit_spectrum(s);
    CHECK(res.converged);
    CHECK(rel_diff(res.param("omega_eff"), weff) < 1e-6);
    CHECK(rel_diff(res.param("gamma_eff"), geff) < 1e-6);
    CHECK(std::abs(res.param("floor")) < 1e-6 * *std::max_element(s.psd.begin(), s.psd.end()));
}

TEST_CASE("spectrum fit is invariant under uniform rescaling") {
    const MechanicalMode mode{kTwoPi * 557e3, kTwoPi * 269.0, 125e-12};
    const auto grid = make_spectrum_grid(mode.omega_m, 20.0 * mode.gamma0, 600);
    auto s = thermal_displacement_psd(mode, mode.omega_m, 20.0 * mode.gamma0, 295.0, grid);
    s = noisy_copy(s, 0.02, 99);

    const FitResult base = fit_spectrum(s);
    SpectrumSeries scaled = s;
    for (double& v : scaled.psd) v *= 1e6;
    const FitResult big = fit_spectrum(scaled);
    CHECK(rel_diff(base.param("omega_eff"), big.param("omega_eff")) < 1e-10);
    CHECK(rel_diff(base.param("gamma_eff"), big.param("gamma_eff")) < 1e-10);
    CHECK(rel_diff(base.param("A") * 1e6, big.param("A")) < 1e-8);
}

TEST_CASE("spectrum fit under multiplicative noise with calibrated errors") {
    const MechanicalMode mode{kTwoPi * 557e3, kTwoPi * 269.0, 125e-12};
    const double weff = mode.omega_m, geff = 30.0 * mode.gamma0;
    const auto grid = make_spectrum_grid(weff, geff, 200);
    const auto clean = thermal_displacement_psd(mode, weff, geff, 295.0, grid);

    // single replicate at 5% noise: parameters within 2% and within 3 sigma
    const FitResult one = fit_spectrum(noisy_copy(clean, 0.05, 12345));
    CHECK(rel_diff(one.param("omega_eff"), weff) < 0.02);
    CHECK(rel_diff(one.param("gamma_eff"), geff) < 0.02);
    CHECK(std::abs(one.param("gamma_eff") - geff) < 3.0 * one.std_error("gamma_eff"));
    CHECK(std::abs(one.param("omega_eff") - weff) < 3.0 * one.std_error("omega_eff"));

    // error calibration over 100 replicates: empirical spread of gamma_eff
    // within 50% of the mean reported error
    std::vector<double> gammas, errs;
    for (std::uint64_t seed = 1; seed <= 100; ++seed) {
        const FitResult r = fit_spectrum(noisy_copy(clean, 0.05, seed * 7919));
        gammas.push_back(r.param("gamma_eff"));
        errs.push_back(r.std_error("gamma_eff"));
    }
    double mean = 0.0, meanerr = 0.0;
    for (std::size_t i = 0; i < gammas.size(); ++i) {
        mean += gammas[i];
        meanerr += errs[i];
    }
    mean /= static_cast<double>(gammas.size());
    meanerr /= static_cast<double>(errs.size());
    double var = 0.0;
    for (double g : gammas) var += (g - mean) * (g - mean);
    const double spread = std::sqrt(var / static_cast<double>(gammas.size() - 1));
    CHECK(spread > 0.5 * meanerr);
    CHECK(spread < 1.5 * meanerr);
}

TEST_CASE("spectrum fit requires a visible peak") {
    SpectrumSeries flat;
    for (int i = 0; i < 100; ++i) {
        flat.omega.push_back(1e6 + 1e3 * i);
        flat.psd.push_back(1e-20 * (1.0 + 0.01 * ((i * 2654435761u) % 97) / 97.0));
    }
    CHECK_THROWS_AS(fit_spectrum(flat), FitError);
}

TEST_CASE("detuning dataset validation") {
    DetuningDataset d;
    d.points = {{1e6, 1e-3, 3.5e6, 2000.0, 1.0}, {1e6, 1e-3, 3.5e6, 2100.0, 1.0}};
    CHECK_THROWS_AS(validate(d), std::invalid_argument);
    d.points.push_back({1e6, 1e-3, 3.5e6, 2200.0, 1.0});
    d.points.push_back({2e6, 1e-3, 3.5e6, 2300.0, 1.0});
    CHECK_THROWS_AS(validate(d), std::invalid_argument);  // only 2 distinct detunings
    d.points.push_back({3e6, 1e-3, 3.5e6, 2400.0, 1.0});
    CHECK_NOTHROW(validate(d));
}

TEST_CASE("detuning-curve fit: noiseless round trip is exact") {
    const OpticalCavity truth = make_cavity(2300.0);
    const MechanicalMode mode{kTwoPi * 557e3, kTwoPi * 269.0, 125e-12};
    const auto data = synthesize_dataset(truth, mode, 1e-3, 0.0, 1);

    OpticalCavity guess = truth;
    guess.finesse = 1800.0;
    MechanicalMode mguess = mode;
    mguess.mass = 200e-12;
    const FitResult res = fit_detuning_curves(data, guess, mguess);
    CHECK(res.converged);
    CHECK(rel_diff(res.param("finesse"), 2300.0) < 1e-6);
    CHECK(rel_diff(res.param("mass"), 125e-12) < 1e-6);
}

TEST_CASE("detuning-curve fit recovers both regimes under 1% noise") {
    const MechanicalMode room{kTwoPi * 557e3, kTwoPi * 269.0, 125e-12};
    const MechanicalMode cold{kTwoPi * 557e3, kTwoPi * 269.0, 40e-12};
    struct Regime {
        double finesse;
        MechanicalMode mode;
        std::uint64_t seed;
    };
    for (const Regime& reg : {Regime{2300.0, room, 42}, Regime{2200.0, cold, 43}}) {
        const OpticalCavity truth = make_cavity(reg.finesse);
        const auto data = synthesize_dataset(truth, reg.mode, 1e-3, 0.01, reg.seed);

        OpticalCavity guess = truth;
        guess.finesse = 1.3 * reg.finesse;
        MechanicalMode mguess = reg.mode;
        mguess.mass = 0.6 * reg.mode.mass;
        const FitResult res = fit_detuning_curves(data, guess, mguess);
        CHECK(res.converged);
        CHECK(rel_diff(res.param("finesse"), reg.finesse) < 0.05);
        CHECK(rel_diff(res.param("mass"), reg.mode.mass) < 0.10);
    }
}

TEST_CASE("detuning-fit residuals carry no detuning structure") {
    // frequency errors at the peak-position-uncertainty scale (sub-kHz),
    // damping errors 1% multiplicative: the realistic measurement precision
    for (const double finesse : {2300.0, 2200.0}) {
        const OpticalCavity truth = make_cavity(finesse);
        const MechanicalMode mode{kTwoPi * 557e3, kTwoPi * 269.0,
                                  finesse > 2250.0 ? 125e-12 : 40e-12};
        Gauss g(finesse > 2250.0 ? 301 : 302);
        DetuningDataset data;
        for (int i = 0; i < 25; ++i) {
            const double det = mode.omega_m * (0.2 + 2.8 * static_cast<double>(i) / 24.0);
            const auto eff = effective_dynamics(truth, mode, {det, 1e-3, 295.0});
            data.points.push_back({det, 1e-3, eff.omega_eff + 300.0 * g(),
                                   eff.gamma_eff * (1.0 + 0.01 * g()), 1.0});
        }
        const FitResult res = fit_detuning_curves(data, truth, mode);
        CHECK(rel_diff(res.param("finesse"), finesse) < 0.01);

        OpticalCavity fitted = truth;
        fitted.finesse = res.param("finesse");
        MechanicalMode mfit = mode;
        mfit.mass = res.param("mass");
        std::vector<double> resid;
        for (const auto& p : data.points) {
            const auto eff = effective_dynamics(fitted, mfit, {p.detuning, p.power, 295.0});
            resid.push_back(eff.gamma_eff - p.gamma_eff);
        }
        double num = 0.0, den = 0.0;
        for (std::size_t i = 1; i < resid.size(); ++i) num += resid[i] * resid[i - 1];
        for (double r : resid) den += r * r;
        CHECK(std::abs(num / den) < 0.5);
    }
}

TEST_CASE("detuning-curve fit flags an unidentifiable dataset") {
    // detunings far inside the linewidth: both observables are flat there, so
    // finesse and mass cannot be separated
    const OpticalCavity cav = make_cavity(2300.0);
    const MechanicalMode mode{kTwoPi * 557e3, kTwoPi * 269.0, 125e-12};
    DetuningDataset d;
    for (int i = 0; i < 6; ++i)
        d.points.push_back({1.0 + static_cast<double>(i), 1e-3, mode.omega_m, mode.gamma0, 1.0});
    CHECK_THROWS_AS(fit_detuning_curves(d, cav, mode), FitError);
}

TEST_CASE("dataset CSV round trip and diagnostics") {
    const OpticalCavity cav = make_cavity(2300.0);
    const MechanicalMode mode{kTwoPi * 557e3, kTwoPi * 269.0, 125e-12};
    const auto data = synthesize_dataset(cav, mode, 1e-3, 0.01, 7);

    std::stringstream ss;
    write_detuning_dataset_csv(ss, data);
    const auto back = read_detuning_dataset_csv(ss);
    REQUIRE(back.points.size() == data.points.size());
    for (std::size_t i = 0; i < data.points.size(); ++i) {
        CHECK(back.points[i].detuning == data.points[i].detuning);
        CHECK(back.points[i].gamma_eff == data.points[i].gamma_eff);
    }

    std::stringstream bad("detuning_rad_s,power_W,omega_eff_rad_s,gamma_eff_rad_s,weight\n"
                          "1e6,1e-3,3.5e6,2000\n");
    try {
        read_detuning_dataset_csv(bad);
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        CHECK(std::string(e.what()).find("row 2") != std::string::npos);
    }

    std::stringstream bad2("detuning_rad_s,power_W,omega_eff_rad_s,gamma_eff_rad_s,weight\n"
                           "1e6,1e-3,oops,2000,1\n");
    try {
        read_detuning_dataset_csv(bad2);
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        CHECK(std::string(e.what()).find("col 3") != std::string::npos);
    }
}

TEST_CASE("fit result JSON export") {
    FitResult r;
    r.names = {"finesse", "mass"};
    r.params = {2300.0, 125e-12};
    r.std_errors = {10.0, 1e-12};
    r.covariance = {100.0, 0.0, 0.0, 1e-24};
    r.converged = true;
    r.iterations = 7;
    r.message = "step below tolerance";
    const std::string js = fit_result_to_json(r);
    CHECK(js.find("\"finesse\": 2300") != std::string::npos);
    CHECK(js.find("\"converged\": true") != std::string::npos);
    CHECK(js.find("\"covariance\"") != std::string::npos);
}
