#include "omcool/pdh.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <numbers>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "omcool/csv.hpp"
#include "omcool/errors.hpp"
#include "omcool/fit.hpp"

namespace omcool {

void validate(const PdhConfig& p) {
    if (!(p.mod_freq > 0.0)) throw std::invalid_argument("pdh mod_freq: must be > 0");
    if (!(p.mod_depth > 0.0 && p.mod_depth < 1.0))
        throw std::invalid_argument("pdh mod_depth: must be in (0, 1) rad");
    if (!(p.ref_freq > 0.0)) throw std::invalid_argument("pdh ref_freq: must be > 0");
    if (!(p.ref_freq_dev_rms > 0.0))
        throw std::invalid_argument("pdh ref_freq_dev_rms: must be > 0");
}

std::complex<double> reflection_coefficient(const OpticalCavity& cav, double detuning) {
    const double kappa = cavity_linewidth(cav);
    return 1.0 - cav.eta_c * kappa / std::complex<double>(0.5 * kappa, detuning);
}

namespace {

std::complex<double> reflection_derivative(const OpticalCavity& cav, double detuning) {
    const double kappa = cavity_linewidth(cav);
    const std::complex<double> den(0.5 * kappa, detuning);
    return std::complex<double>(0.0, 1.0) * cav.eta_c * kappa / (den * den);
}

} // namespace

double PdhModel::raw_signal(double detuning) const {
    const std::complex<double> r0 = reflection_coefficient(cav_, detuning);
    const std::complex<double> rp = reflection_coefficient(cav_, detuning + cfg_.mod_freq);
    const std::complex<double> rm = reflection_coefficient(cav_, detuning - cfg_.mod_freq);
    return (r0 * std::conj(rp) - std::conj(r0) * rm).imag();
}

double PdhModel::raw_slope(double detuning) const {
    const std::complex<double> r0 = reflection_coefficient(cav_, detuning);
    const std::complex<double> rp = reflection_coefficient(cav_, detuning + cfg_.mod_freq);
    const std::complex<double> rm = reflection_coefficient(cav_, detuning - cfg_.mod_freq);
    const std::complex<double> d0 = reflection_derivative(cav_, detuning);
    const std::complex<double> dp = reflection_derivative(cav_, detuning + cfg_.mod_freq);
    const std::complex<double> dm = reflection_derivative(cav_, detuning - cfg_.mod_freq);
    return (d0 * std::conj(rp) + r0 * std::conj(dp) - std::conj(d0) * rm - std::conj(r0) * dm)
        .imag();
}

PdhModel::PdhModel(const OpticalCavity& cav, const PdhConfig& cfg) : cav_(cav), cfg_(cfg) {
    validate(cav_);
    validate(cfg_);
    // peak-to-peak over a scan wide enough to contain the carrier and both
    // sideband features
    const double kappa = cavity_linewidth(cav_);
    const double span = cfg_.mod_freq + 10.0 * kappa;
    const std::size_t npts = 20001;
    double lo = 0.0, hi = 0.0;
    for (std::size_t i = 0; i < npts; ++i) {
        const double d = -span + 2.0 * span * static_cast<double>(i) / static_cast<double>(npts - 1);
        const double v = raw_signal(d);
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    const double pp = hi - lo;
    if (!(pp > 0.0)) throw std::invalid_argument("pdh: error signal is identically zero");
    scale_ = 1.0 / pp;
    if (raw_slope(0.0) * scale_ < 0.0) scale_ = -scale_;
}

double PdhModel::error_signal(double detuning) const { return scale_ * raw_signal(detuning); }

double PdhModel::error_slope(double detuning) const { return scale_ * raw_slope(detuning); }

double PdhModel::transduction_gain(double detuning, double omega) const {
    const double kappa = cavity_linewidth(cav_);
    const double habs = 1.0 / std::sqrt(1.0 + 4.0 * omega * omega / (kappa * kappa));
    return std::abs(error_slope(detuning)) * frequency_pull(cav_) * habs;
}

double pdh_error_signal(const OpticalCavity& cav, const PdhConfig& cfg, double detuning) {
    return PdhModel(cav, cfg).error_signal(detuning);
}

double transduction_gain(const OpticalCavity& cav, const PdhConfig& cfg, double detuning,
                         double omega) {
    return PdhModel(cav, cfg).transduction_gain(detuning, omega);
}

namespace {

std::size_t nearest_bin(const std::vector<double>& grid, double value) {
    const auto it = std::lower_bound(grid.begin(), grid.end(), value);
    if (it == grid.begin()) return 0;
    if (it == grid.end()) return grid.size() - 1;
    const std::size_t hi = static_cast<std::size_t>(it - grid.begin());
    return (value - grid[hi - 1] < grid[hi] - value) ? hi - 1 : hi;
}

double bin_width(const std::vector<double>& grid, std::size_t k) {
    if (grid.size() < 2) throw std::invalid_argument("grid too short");
    if (k == 0) return grid[1] - grid[0];
    if (k + 1 == grid.size()) return grid[k] - grid[k - 1];
    return 0.5 * (grid[k + 1] - grid[k - 1]);
}

} // namespace

RawSpectrum synthesize_raw_spectrum(const OpticalCavity& cav, const PdhConfig& cfg,
                                    double detuning, const SpectrumSeries& truth,
                                    double noise_floor) {
    validate(truth);
    const double kappa = cavity_linewidth(cav);
    if (!(std::abs(detuning) < kappa))
        throw std::invalid_argument("synthesize_raw_spectrum: |detuning| must stay below kappa "
                                    "(locked region)");
    if (cfg.ref_freq < truth.omega.front() || cfg.ref_freq > truth.omega.back())
        throw std::invalid_argument("synthesize_raw_spectrum: truth grid does not cover ref_freq");
    if (truth.shape) {
        const double sep = std::abs(cfg.ref_freq - truth.shape->omega_eff);
        if (sep < 5.0 * truth.shape->gamma_eff)
            throw std::invalid_argument(
                "synthesize_raw_spectrum: ref_freq within 5 linewidths of the mechanical peak");
    }

    const PdhModel model(cav, cfg);
    RawSpectrum raw;
    raw.detuning = detuning;
    raw.omega = truth.omega;
    raw.psd.resize(truth.psd.size());
    for (std::size_t i = 0; i < truth.omega.size(); ++i) {
        const double gain = model.transduction_gain(detuning, truth.omega[i]);
        raw.psd[i] = gain * gain * truth.psd[i] + noise_floor;
    }

    // reference tone: known equivalent displacement area (L dnu / nu)^2
    // deposited into the single bin nearest ref_freq
    const double nu_laser = phys.c / cav.geometry.wavelength;
    const double x_ref = cav.geometry.length * cfg.ref_freq_dev_rms / nu_laser;
    const std::size_t kref = nearest_bin(raw.omega, cfg.ref_freq);
    const double gain_ref = model.transduction_gain(detuning, raw.omega[kref]);
    raw.psd[kref] += gain_ref * gain_ref * x_ref * x_ref / bin_width(raw.omega, kref);
    return raw;
}

SpectrumSeries calibrate_spectrum(const RawSpectrum& raw, const PdhConfig& cfg,
                                  const OpticalCavity& cav) {
    if (raw.omega.size() < 16) throw std::invalid_argument("calibrate: raw grid too short");
    const std::size_t kref = nearest_bin(raw.omega, cfg.ref_freq);
    if (kref == 0 || kref + 1 == raw.omega.size())
        throw FitError("calibrate: reference tone at the grid edge");

    // background under the tone from the neighbors; the tone occupies one bin
    const double background = 0.5 * (raw.psd[kref - 1] + raw.psd[kref + 1]);
    const double excess = raw.psd[kref] - background;
    if (!(excess > 10.0 * std::max(background, 1e-300)))
        throw FitError("calibrate: reference peak missing or below 10x its local background");
    const double area_raw = excess * bin_width(raw.omega, kref);

    const double nu_laser = phys.c / cav.geometry.wavelength;
    const double x_ref = cav.geometry.length * cfg.ref_freq_dev_rms / nu_laser;
    const double scale_at_ref = x_ref * x_ref / area_raw;  // 1/gain^2 at ref_freq

    // divide out the known cavity filter shape; the unknown slope cancels
    const double kappa = cavity_linewidth(cav);
    const double href2 = 1.0 / (1.0 + 4.0 * raw.omega[kref] * raw.omega[kref] / (kappa * kappa));

    SpectrumSeries out;
    out.omega = raw.omega;
    out.psd.resize(raw.psd.size());
    for (std::size_t i = 0; i < raw.omega.size(); ++i) {
        const double h2 = 1.0 / (1.0 + 4.0 * raw.omega[i] * raw.omega[i] / (kappa * kappa));
        out.psd[i] = raw.psd[i] * scale_at_ref * href2 / h2;
    }
    out.provenance = Provenance::External;
    out.units = "m^2/(rad/s)";
    return out;
}

double calibrate_effective_mass(const SpectrumSeries& calibrated, double T_known,
                                const PdhConfig& cfg) {
    validate(calibrated);
    if (!(T_known > 0.0)) throw std::invalid_argument("calibrate_effective_mass: T_known must be > 0");

    // excise the reference tone before fitting the thermal peak
    const std::size_t kref = nearest_bin(calibrated.omega, cfg.ref_freq);
    SpectrumSeries clean;
    clean.provenance = calibrated.provenance;
    for (std::size_t i = 0; i < calibrated.omega.size(); ++i) {
        if (i + 2 >= kref && i <= kref + 2) continue;
        clean.omega.push_back(calibrated.omega[i]);
        clean.psd.push_back(calibrated.psd[i]);
    }

    const FitResult fr = fit_spectrum(clean);
    const double A = fr.param("A");
    const double w0 = fr.param("omega_eff");
    const double g = fr.param("gamma_eff");
    // exact area of the fitted shape over omega >= 0
    const double x2 = A * std::numbers::pi / (4.0 * g * w0 * w0);
    return phys.k_B * T_known / (w0 * w0 * x2);
}

void write_raw_spectrum_csv(std::ostream& os, const RawSpectrum& raw) {
    os << "omega_rad_s,psd,units\n";
    for (std::size_t i = 0; i < raw.omega.size(); ++i)
        os << format_double(raw.omega[i]) << ',' << format_double(raw.psd[i])
           << ",detector_units^2/(rad/s)\n";
}

RawSpectrum read_raw_spectrum_csv(std::istream& is, double detuning_from_sidecar) {
    std::string line;
    if (!std::getline(is, line)) throw ConfigError("raw spectrum csv: empty file");
    if (line.ends_with("\r")) line.pop_back();
    if (line != "omega_rad_s,psd,units")
        throw ConfigError("raw spectrum csv row 1: expected header 'omega_rad_s,psd,units'");
    RawSpectrum raw;
    raw.detuning = detuning_from_sidecar;
    std::size_t lineno = 1;
    while (std::getline(is, line)) {
        ++lineno;
        if (line.empty() || line == "\r") continue;
        const auto f = split_csv_line(line);
        const std::string ctx = "raw spectrum csv row " + std::to_string(lineno);
        if (f.size() != 3)
            throw ConfigError(ctx + ": expected 3 columns, got " + std::to_string(f.size()));
        raw.omega.push_back(parse_double(f[0], ctx + " col 1 (omega_rad_s)"));
        raw.psd.push_back(parse_double(f[1], ctx + " col 2 (psd)"));
    }
    return raw;
}

std::string raw_spectrum_sidecar_json(const RawSpectrum& raw, const PdhConfig& cfg) {
    std::ostringstream os;
    os << "{\n  \"detuning_rad_s\": " << format_double(raw.detuning) << ",\n  \"pdh\": {"
       << "\"mod_freq_rad_s\": " << format_double(cfg.mod_freq)
       << ", \"mod_depth_rad\": " << format_double(cfg.mod_depth)
       << ", \"ref_freq_rad_s\": " << format_double(cfg.ref_freq)
       << ", \"ref_freq_dev_rms_Hz\": " << format_double(cfg.ref_freq_dev_rms) << "}\n}\n";
    return os.str();
}

RawSpectrumSidecar parse_raw_spectrum_sidecar(const std::string& json_text) {
    const auto number_after = [&json_text](const std::string& key) {
        const auto pos = json_text.find('"' + key + '"');
        if (pos == std::string::npos)
            throw ConfigError("raw spectrum sidecar: missing field " + key);
        const auto colon = json_text.find(':', pos);
        const auto end = json_text.find_first_of(",}", colon);
        return parse_double(json_text.substr(colon + 1, end - colon - 1),
                            "raw spectrum sidecar " + key);
    };
    RawSpectrumSidecar s;
    s.detuning = number_after("detuning_rad_s");
    s.pdh.mod_freq = number_after("mod_freq_rad_s");
    s.pdh.mod_depth = number_after("mod_depth_rad");
    s.pdh.ref_freq = number_after("ref_freq_rad_s");
    s.pdh.ref_freq_dev_rms = number_after("ref_freq_dev_rms_Hz");
    return s;
}

} // namespace omcool
