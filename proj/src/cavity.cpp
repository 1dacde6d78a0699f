#include "omcool/cavity.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace omcool {

namespace {
void require(bool ok, const std::string& msg) {
    if (!ok) throw std::invalid_argument(msg);
}
} // namespace

void validate(const CavityGeometry& g) {
    require(g.length > 0.0, "cavity length: must be > 0");
    require(g.roc > 0.0, "cavity roc: must be > 0");
    require(g.length < g.roc, "cavity length: must be < roc (plano-concave stability)");
    require(g.wavelength > 0.0, "cavity wavelength: must be > 0");
}

void validate(const OpticalCavity& c) {
    validate(c.geometry);
    require(c.finesse >= 1.0, "cavity finesse: must be >= 1");
    require(c.eta_c > 0.0 && c.eta_c <= 1.0, "cavity eta_c: must be in (0, 1]");
}

void validate(const MechanicalMode& m) {
    require(m.omega_m > 0.0, "mechanics omega_m: must be > 0");
    require(m.gamma0 > 0.0, "mechanics gamma0: must be > 0");
    require(m.mass > 0.0, "mechanics mass: must be > 0");
    require(m.quality() > 1.0, "mechanics: quality factor omega_m/(2 gamma0) must exceed 1");
}

void validate(const OperatingPoint& p) {
    require(p.power >= 0.0, "operating power: must be >= 0");
    require(p.bath_temperature > 0.0, "operating bath_temperature: must be > 0");
    require(p.mode_matching > 0.0 && p.mode_matching <= 1.0,
            "operating mode_matching: must be in (0, 1]");
}

double free_spectral_range(const OpticalCavity& cav) {
    return std::numbers::pi * phys.c / cav.geometry.length;
}

double cavity_linewidth(const OpticalCavity& cav) {
    return free_spectral_range(cav) / cav.finesse;
}

double cavity_waist(const CavityGeometry& geom) {
    if (geom.length >= geom.roc)
        throw std::domain_error("cavity_waist: length >= roc, geometry is unstable");
    const double rayleigh = std::sqrt(geom.length * (geom.roc - geom.length));
    return std::sqrt(geom.wavelength / std::numbers::pi * rayleigh);
}

double laser_angular_frequency(const CavityGeometry& geom) {
    return 2.0 * std::numbers::pi * phys.c / geom.wavelength;
}

double frequency_pull(const OpticalCavity& cav) {
    return laser_angular_frequency(cav.geometry) / cav.geometry.length;
}

double intracavity_photon_number(const OpticalCavity& cav, const OperatingPoint& op) {
    const double kappa = cavity_linewidth(cav);
    const double photon_flux = op.effective_power() / (phys.hbar * laser_angular_frequency(cav.geometry));
    const double half = 0.5 * kappa;
    return cav.eta_c * kappa * photon_flux / (op.detuning * op.detuning + half * half);
}

} // namespace omcool
