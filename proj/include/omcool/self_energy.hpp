#ifndef OMCOOL_SELF_ENERGY_HPP
#define OMCOOL_SELF_ENERGY_HPP

#include <complex>
#include <functional>
#include <optional>

#include "omcool/cavity.hpp"

namespace omcool {

// Exponentially retarded (bolometric) force model: the force follows the
// intracavity intensity through a single-pole lag of time constant tau_pt,
// scaled by strength_ratio relative to radiation pressure.
struct PhotothermalParams {
    double tau_pt;          // s, > 0
    double strength_ratio;  // dimensionless, >= 0
};

void validate(const PhotothermalParams& p);

enum class BackactionKind { RadiationPressure, Photothermal };

// Complex force-per-displacement response Sigma(omega) of the intracavity
// field to mirror motion, for the linearized detuned-cavity dynamics.
// Sign convention: the displacement spectrum denominator is
//   (omega_m^2 - omega^2 + Re Sigma/m)^2 + (2*omega*gamma0 + Im Sigma/m)^2
// so Re Sigma(omega_m)/(2 m omega_m) is the optical spring shift and
// Im Sigma(omega_m)/(2 m omega_m) equals Gamma_opt/2. Sigma vanishes
// identically at zero detuning.
std::complex<double> rp_self_energy(const OpticalCavity& cav, const OperatingPoint& op,
                                    double omega);

// Photothermal variant: strength_ratio * Sigma_rp(omega) / (1 - i*omega*tau_pt).
std::complex<double> pt_self_energy(const OpticalCavity& cav, const OperatingPoint& op,
                                    const PhotothermalParams& pt, double omega);

// Function-handle form with the value at omega_m cached.
struct SelfEnergy {
    std::function<std::complex<double>(double)> sigma;
    std::complex<double> at_omega_m;
};

SelfEnergy make_self_energy(const OpticalCavity& cav, const MechanicalMode& mode,
                            const OperatingPoint& op, BackactionKind kind,
                            const std::optional<PhotothermalParams>& pt = {});

// Optomechanically added energy damping rate (full width):
//   Gamma_opt = (hbar G^2 n/(2 m omega_m)) *
//               [kappa/((kappa/2)^2+(Delta-omega_m)^2) - kappa/((kappa/2)^2+(Delta+omega_m)^2)]
// Positive on the cooling side Delta > 0.
double gamma_opt(const OpticalCavity& cav, const MechanicalMode& mode, const OperatingPoint& op);

// Optical spring shift delta_omega; omega_eff = omega_m + delta_omega.
double optical_spring_shift(const OpticalCavity& cav, const MechanicalMode& mode,
                            const OperatingPoint& op);

// Backaction-modified mechanical parameters. gamma_eff = gamma0 + Gamma_opt/2
// in the half-width convention. stable == false flags anti-damping in excess
// of the intrinsic damping (gamma_eff <= 0).
struct EffectiveDynamics {
    double omega_eff;   // rad/s
    double gamma_eff;   // rad/s, amplitude half-width
    bool stable;
};

EffectiveDynamics effective_dynamics(const OpticalCavity& cav, const MechanicalMode& mode,
                                     const OperatingPoint& op,
                                     BackactionKind kind = BackactionKind::RadiationPressure,
                                     const std::optional<PhotothermalParams>& pt = {});

} // namespace omcool

#endif
