#ifndef OMCOOL_SPECTRA_HPP
#define OMCOOL_SPECTRA_HPP

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "omcool/self_energy.hpp"

namespace omcool {

enum class Provenance {
    AnalyticLorentzian,  // closed-form thermal oscillator spectrum
    AnalyticFull,        // frequency-dependent self-energy folded in
    Langevin,            // estimated from a simulated trajectory
    SyntheticPdh,        // synthesized detector-units spectrum
    External,            // imported or calibrated from raw data
};

std::string to_string(Provenance p);
Provenance provenance_from_string(const std::string& s);

// Shape metadata S(w) ~ amplitude/((omega_eff^2-w^2)^2 + 4 gamma_eff^2 w^2),
// used for analytic tail corrections beyond the grid ends.
struct LorentzianShape {
    double amplitude;
    double omega_eff;
    double gamma_eff;
};

// Sampled single-sided power spectral density on a strictly increasing
// angular-frequency grid.
struct SpectrumSeries {
    std::vector<double> omega;  // rad/s
    std::vector<double> psd;    // units^2/(rad/s)
    Provenance provenance = Provenance::External;
    std::string units = "m^2/(rad/s)";
    std::optional<LorentzianShape> shape;
};

void validate(const SpectrumSeries& s);

// Uniform grid of n points covering omega_eff +/- halfwidths*gamma_eff,
// clipped to positive frequencies.
std::vector<double> make_spectrum_grid(double omega_eff, double gamma_eff,
                                       std::size_t n = 4001, double halfwidths = 20.0);

// Thermal displacement spectrum of a harmonic oscillator whose resonance and
// damping have been modified to (omega_eff, gamma_eff) while it stays coupled
// to a bath of temperature T through its intrinsic damping gamma0:
//   S_x(w) = (4 k_B T gamma0 / (pi m)) / ((omega_eff^2 - w^2)^2 + 4 gamma_eff^2 w^2)
// interpreted as a single-sided PSD on w >= 0.
SpectrumSeries thermal_displacement_psd(const MechanicalMode& mode, double omega_eff,
                                        double gamma_eff, double temperature,
                                        std::span<const double> grid);

// Same spectrum with the full frequency-dependent self-energy in the
// susceptibility instead of fixed effective parameters. Throws
// InstabilityError if the operating point is anti-damped.
SpectrumSeries spectrum_full(const OpticalCavity& cav, const MechanicalMode& mode,
                             const OperatingPoint& op, std::span<const double> grid,
                             BackactionKind kind = BackactionKind::RadiationPressure,
                             const std::optional<PhotothermalParams>& pt = {});

// Trapezoidal integral over the grid plus analytic tail corrections from the
// shape metadata (zero tails when no shape is attached). tail_fraction above
// 0.01 means more than 1% of the area lives outside the grid.
struct MeanSquareResult {
    double value;          // m^2
    double tail_fraction;  // tail contribution / total
};

MeanSquareResult mean_square_displacement(const SpectrumSeries& s);

// Equipartition temperature of a mode with mean-square displacement x2:
// T = m * omega_eff^2 * x2 / k_B.
double effective_temperature(const MechanicalMode& mode, double omega_eff, double x2_mean);

// Bose occupancy 1/(exp(hbar w/k_B T) - 1); ~ k_B T/(hbar w) - 1/2 at high T.
double occupancy(double omega_eff, double T_eff);

// Semi-classical cooling law T_eff = T0 * gamma0 / gamma_eff (valid for
// gamma_eff << omega_eff).
double cooling_law_temperature(double T0, double gamma0, double gamma_eff);

// One operating condition of a cooling sweep. Unstable rows keep their
// (omega_eff, gamma_eff) but carry NaN temperature and occupancy.
struct SweepRow {
    double power;       // W
    double detuning;    // rad/s
    double omega_eff;   // rad/s
    double gamma_eff;   // rad/s
    double T_eff;       // K
    double n_mean;      // phonons
    bool stable;
};

// Row order: powers outer, detunings inner, both in input order.
std::vector<SweepRow> cooling_sweep(const OpticalCavity& cav, const MechanicalMode& mode,
                                    std::span<const double> powers_W,
                                    std::span<const double> detunings,
                                    double bath_temperature);

// Least-squares line through (log gamma_eff, log T_eff) over the stable rows.
// The ideal cooling law gives slope -1 with zero residual; power-dependent
// heating stratifies the residuals. max_residual is max |T/T_line - 1|.
struct CollapseDiagnostic {
    double slope;
    double max_residual;
};

CollapseDiagnostic collapse_diagnostic(std::span<const SweepRow> rows);

// Resolved-sideband threshold for ground-state cooling:
// passes iff omega_m/kappa > 1/sqrt(32).
struct ThresholdCheck {
    double ratio;
    bool passes;
};

ThresholdCheck sideband_threshold_check(const OpticalCavity& cav, const MechanicalMode& mode);

// CSV interchange, fixed column order:
// power_W,detuning_rad_s,omega_eff_rad_s,gamma_eff_rad_s,T_eff_K,n_mean,stable
void write_sweep_csv(std::ostream& os, std::span<const SweepRow> rows);
std::vector<SweepRow> read_sweep_csv(std::istream& is);

void write_spectrum_csv(std::ostream& os, const SpectrumSeries& s);
SpectrumSeries read_spectrum_csv(std::istream& is);

} // namespace omcool

#endif
