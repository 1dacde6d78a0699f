#ifndef OMCOOL_CAVITY_HPP
#define OMCOOL_CAVITY_HPP

#include "omcool/constants.hpp"

namespace omcool {

// Plano-concave Fabry-Perot geometry: flat micromirror plus a concave input
// coupler of radius of curvature `roc`. Stability requires 0 < length < roc
// (the semi-concentric point length == roc is excluded).
struct CavityGeometry {
    double length;      // m
    double roc;         // m, input coupler radius of curvature
    double wavelength;  // m, pump wavelength
};

struct OpticalCavity {
    CavityGeometry geometry;
    double finesse;     // dimensionless, >= 1
    double eta_c;       // input coupling fraction kappa_in/kappa, in (0, 1]
};

// One vibrational eigenmode of the micromirror. gamma0 is the amplitude
// damping rate (half-width); the energy decay rate is 2*gamma0 and
// Q = omega_m / (2*gamma0).
struct MechanicalMode {
    double omega_m;     // rad/s
    double gamma0;      // rad/s, amplitude half-width at zero detuning
    double mass;        // kg, effective mass at the probing point

    double quality() const { return omega_m / (2.0 * gamma0); }
};

// One experimental condition. detuning = omega_cavity - omega_laser, so
// positive detuning is the cooling side. mode_matching multiplies the input
// power to account for imperfect spatial overlap with the cavity mode.
struct OperatingPoint {
    double detuning;           // rad/s
    double power;              // W at the cavity input
    double bath_temperature;   // K
    double mode_matching = 1.0;

    double effective_power() const { return power * mode_matching; }
};

// Throw std::invalid_argument naming the offending field.
void validate(const CavityGeometry& g);
void validate(const OpticalCavity& c);
void validate(const MechanicalMode& m);
void validate(const OperatingPoint& p);

// Angular free spectral range pi*c/L of a linear cavity.
double free_spectral_range(const OpticalCavity& cav);

// Intensity decay rate kappa (full width at half maximum of the resonance,
// angular units): kappa = angular FSR / finesse.
double cavity_linewidth(const OpticalCavity& cav);

// Beam waist on the flat mirror: w0 = sqrt((lambda/pi) * sqrt(L*(R-L))).
// Throws std::domain_error for L >= R (unstable geometry).
double cavity_waist(const CavityGeometry& geom);

// Cavity frequency shift per unit mirror displacement, G = omega_c / L.
double frequency_pull(const OpticalCavity& cav);

// Laser angular frequency 2*pi*c/lambda.
double laser_angular_frequency(const CavityGeometry& geom);

// Steady-state intracavity photon number for a pump of power P detuned by
// Delta: n = eta_c*kappa*(P/(hbar*omega_l)) / (Delta^2 + (kappa/2)^2).
double intracavity_photon_number(const OpticalCavity& cav, const OperatingPoint& op);

} // namespace omcool

#endif
