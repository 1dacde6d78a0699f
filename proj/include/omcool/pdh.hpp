#ifndef OMCOOL_PDH_HPP
#define OMCOOL_PDH_HPP

#include <complex>
#include <iosfwd>
#include <string>
#include <vector>

#include "omcool/cavity.hpp"
#include "omcool/spectra.hpp"

namespace omcool {

// Pound-Drever-Hall measurement chain settings. The reference tone is a known
// laser frequency modulation converted to equivalent displacement through
// dx/L = dnu/nu; it normalizes away the detuning-dependent transduction gain.
struct PdhConfig {
    double mod_freq;          // rad/s, phase-modulation frequency
    double mod_depth;         // rad, in (0, 1)
    double ref_freq;          // rad/s, position of the calibration tone
    double ref_freq_dev_rms;  // Hz, rms frequency deviation of the tone
};

void validate(const PdhConfig& p);

// Amplitude reflection coefficient of the pumped cavity:
// r(Delta) = 1 - eta_c*kappa/(kappa/2 + i*Delta).
std::complex<double> reflection_coefficient(const OpticalCavity& cav, double detuning);

// Demodulated error signal and displacement transduction. The error signal is
// Im[r(D) r*(D+Omega) - r*(D) r(D-Omega)], normalized to unit peak-to-peak
// over a scan of +/-(Omega + 10 kappa) and signed so the slope at resonance
// is positive.
class PdhModel {
public:
    PdhModel(const OpticalCavity& cav, const PdhConfig& cfg);

    double error_signal(double detuning) const;
    double error_slope(double detuning) const;  // d eps / d Delta, 1/(rad/s)

    // |d eps/d Delta| * G * |H(omega)| with the single-pole cavity filter
    // H(omega) = 1/(1 - 2 i omega/kappa). Detector units per meter.
    double transduction_gain(double detuning, double omega) const;

    const OpticalCavity& cavity() const { return cav_; }
    const PdhConfig& config() const { return cfg_; }

private:
    double raw_signal(double detuning) const;
    double raw_slope(double detuning) const;

    OpticalCavity cav_;
    PdhConfig cfg_;
    double scale_;  // sign-carrying peak-to-peak normalization
};

double pdh_error_signal(const OpticalCavity& cav, const PdhConfig& cfg, double detuning);
double transduction_gain(const OpticalCavity& cav, const PdhConfig& cfg, double detuning,
                         double omega);

// Detector-units spectrum as acquired at a fixed locked detuning.
struct RawSpectrum {
    std::vector<double> omega;  // rad/s
    std::vector<double> psd;    // detector units^2/(rad/s)
    double detuning;            // rad/s at acquisition
};

// psd_raw(w) = gain^2(Delta, w) S_x(w) + noise_floor, plus the reference tone
// deposited into the grid bin nearest ref_freq with known equivalent
// displacement area (L * dnu_rms / nu_laser)^2. The truth grid must cover
// ref_freq and keep it at least 5 mechanical linewidths from the peak.
RawSpectrum synthesize_raw_spectrum(const OpticalCavity& cav, const PdhConfig& cfg,
                                    double detuning, const SpectrumSeries& truth,
                                    double noise_floor);

// Rescale a raw spectrum to displacement units using the measured reference
// peak area: the unknown detuning-dependent gain cancels, only the known
// cavity filter shape |H(w)| is divided out. Throws FitError when the
// reference peak is missing or weaker than 10x its local background.
SpectrumSeries calibrate_spectrum(const RawSpectrum& raw, const PdhConfig& cfg,
                                  const OpticalCavity& cav);

// Effective mass from a calibrated thermal spectrum acquired at zero detuning
// and known bath temperature: m = k_B T/(omega_eff^2 <x^2>), with <x^2> from
// the fitted peak area. The reference-tone bins are excised before fitting.
double calibrate_effective_mass(const SpectrumSeries& calibrated, double T_known,
                                const PdhConfig& cfg);

// CSV (omega_rad_s,psd,units) plus a JSON sidecar with acquisition metadata.
void write_raw_spectrum_csv(std::ostream& os, const RawSpectrum& raw);
RawSpectrum read_raw_spectrum_csv(std::istream& is, double detuning_from_sidecar);
std::string raw_spectrum_sidecar_json(const RawSpectrum& raw, const PdhConfig& cfg);

struct RawSpectrumSidecar {
    double detuning;
    PdhConfig pdh;
};

RawSpectrumSidecar parse_raw_spectrum_sidecar(const std::string& json_text);

} // namespace omcool

#endif
