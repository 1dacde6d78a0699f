#ifndef OMCOOL_LANGEVIN_HPP
#define OMCOOL_LANGEVIN_HPP

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "omcool/fit.hpp"
#include "omcool/self_energy.hpp"
#include "omcool/spectra.hpp"

namespace omcool {

struct SimConfig {
    double dt;                    // s
    double duration;              // s, recorded span (after the discard)
    std::uint64_t seed = 1;
    double transient_discard = 0; // s thrown away before recording
    std::size_t record_stride = 1;
};

// Largest stable/accurate step for the explicit integrator:
// min(2*pi/omega_m, 1/kappa)/20.
double max_time_step(const OpticalCavity& cav, const MechanicalMode& mode);

struct Trajectory {
    double dt_sample;             // s between recorded samples
    std::vector<double> times;    // s
    std::vector<double> x;        // m
    std::vector<double> v;        // m/s
    std::vector<double> field_re; // sqrt(photon) units
    std::vector<double> field_im;
    std::vector<std::string> warnings;
    std::string meta;             // JSON snapshot of the generating parameters
};

// Integrate the coupled mirror/field dynamics about the locked equilibrium:
//   x' = v
//   v' = -omega_m^2 x - 2 gamma0 v + (F_ba + F_th)/m
//   a' = -(kappa/2 + i(Delta - G x)) a + sqrt(eta_c kappa) sqrt(P/(hbar omega_l))
// F_ba = hbar G (|a|^2 - n_cav) for radiation pressure, or that force passed
// through a first-order lag of time constant tau_pt (times strength_ratio)
// for the photothermal kind. F_th is Gaussian white noise of spectral density
// 4 m gamma0 k_B T0. The mean radiation force is absorbed into the locked
// equilibrium, so x measures displacement about it and Delta is the locked
// detuning. Mechanics use a semi-implicit Euler-Maruyama step, the field an
// exponential step with coefficients frozen over dt. Deterministic for a
// given (seed, dt, duration). Throws InstabilityError if |x| diverges.
Trajectory simulate(const OpticalCavity& cav, const MechanicalMode& mode,
                    const OperatingPoint& op, const std::optional<PhotothermalParams>& pt,
                    const SimConfig& cfg);

// Welch periodogram with Hann windows: single-sided PSD in x^2/(rad/s),
// normalized so the integral over omega >= 0 estimates the signal variance.
// segment_length is rounded down to a power of two; at least 4 segments are
// required.
SpectrumSeries welch_psd(const Trajectory& traj, std::size_t segment_length,
                         double overlap_fraction = 0.5);

struct OracleDynamics {
    double omega_eff;
    double gamma_eff;
    double omega_err;
    double gamma_err;
    FitResult fit;
};

// Estimate (omega_eff, gamma_eff) from a trajectory: Welch PSD, then the
// oscillator-spectrum fit restricted to the band around the peak.
// segment_length == 0 picks roughly an eighth of the record.
OracleDynamics oracle_effective_dynamics(const Trajectory& traj,
                                         std::size_t segment_length = 0,
                                         double overlap_fraction = 0.5);

// Binary record: magic "OMTRJ001", u32 little-endian JSON header length, the
// header, then the five columns (times, x, v, field_re, field_im) as
// contiguous little-endian float64 arrays.
void write_trajectory(std::ostream& os, const Trajectory& traj);
Trajectory read_trajectory(std::istream& is);

// Decimated CSV export, columns: time_s,x_m,v_m_s,field_re,field_im
void write_trajectory_csv(std::ostream& os, const Trajectory& traj, std::size_t stride = 1);

} // namespace omcool

#endif
