#include "omcool/self_energy.hpp"

#include <cmath>
#include <stdexcept>

namespace omcool {

void validate(const PhotothermalParams& p) {
    if (!(p.tau_pt > 0.0)) throw std::invalid_argument("photothermal tau_pt: must be > 0");
    if (!(p.strength_ratio >= 0.0))
        throw std::invalid_argument("photothermal strength_ratio: must be >= 0");
}

std::complex<double> rp_self_energy(const OpticalCavity& cav, const OperatingPoint& op,
                                    double omega) {
    const double kappa = cavity_linewidth(cav);
    const double pull = frequency_pull(cav);
    const double ncav = intracavity_photon_number(cav, op);
    const double half = 0.5 * kappa;
    const double dm = half * half + (op.detuning - omega) * (op.detuning - omega);
    const double dp = half * half + (op.detuning + omega) * (op.detuning + omega);
    const double strength = phys.hbar * pull * pull * ncav;
    // Real part softens (Delta > 0) or stiffens the spring; imaginary part is
    // the sideband asymmetry that adds or removes damping.
    return {-strength * ((op.detuning - omega) / dm + (op.detuning + omega) / dp),
            strength * half * (1.0 / dm - 1.0 / dp)};
}

std::complex<double> pt_self_energy(const OpticalCavity& cav, const OperatingPoint& op,
                                    const PhotothermalParams& pt, double omega) {
    // single-pole retardation of the cavity-filtered intensity response; in
    // this Sigma convention (conjugate of the physical response, see
    // rp_self_energy) the causal lag carries +i omega tau
    const std::complex<double> lag(1.0, omega * pt.tau_pt);
    return pt.strength_ratio * rp_self_energy(cav, op, omega) / lag;
}

SelfEnergy make_self_energy(const OpticalCavity& cav, const MechanicalMode& mode,
                            const OperatingPoint& op, BackactionKind kind,
                            const std::optional<PhotothermalParams>& pt) {
    SelfEnergy se;
    if (kind == BackactionKind::Photothermal) {
        if (!pt) throw std::invalid_argument("photothermal self-energy requires parameters");
        const PhotothermalParams params = *pt;
        se.sigma = [cav, op, params](double w) { return pt_self_energy(cav, op, params, w); };
    } else {
        se.sigma = [cav, op](double w) { return rp_self_energy(cav, op, w); };
    }
    se.at_omega_m = se.sigma(mode.omega_m);
    return se;
}

double gamma_opt(const OpticalCavity& cav, const MechanicalMode& mode, const OperatingPoint& op) {
    const double kappa = cavity_linewidth(cav);
    const double pull = frequency_pull(cav);
    const double ncav = intracavity_photon_number(cav, op);
    const double half = 0.5 * kappa;
    const double dm = half * half + (op.detuning - mode.omega_m) * (op.detuning - mode.omega_m);
    const double dp = half * half + (op.detuning + mode.omega_m) * (op.detuning + mode.omega_m);
    const double pref = phys.hbar * pull * pull * ncav / (2.0 * mode.mass * mode.omega_m);
    return pref * (kappa / dm - kappa / dp);
}

double optical_spring_shift(const OpticalCavity& cav, const MechanicalMode& mode,
                            const OperatingPoint& op) {
    const double kappa = cavity_linewidth(cav);
    const double pull = frequency_pull(cav);
    const double ncav = intracavity_photon_number(cav, op);
    const double half = 0.5 * kappa;
    const double dm = half * half + (op.detuning - mode.omega_m) * (op.detuning - mode.omega_m);
    const double dp = half * half + (op.detuning + mode.omega_m) * (op.detuning + mode.omega_m);
    const double pref = phys.hbar * pull * pull * ncav / (2.0 * mode.mass * mode.omega_m);
    return -pref * ((op.detuning + mode.omega_m) / dp + (op.detuning - mode.omega_m) / dm);
}

EffectiveDynamics effective_dynamics(const OpticalCavity& cav, const MechanicalMode& mode,
                                     const OperatingPoint& op, BackactionKind kind,
                                     const std::optional<PhotothermalParams>& pt) {
    double domega = 0.0;
    double dgamma = 0.0;
    if (kind == BackactionKind::RadiationPressure) {
        domega = optical_spring_shift(cav, mode, op);
        dgamma = 0.5 * gamma_opt(cav, mode, op);
    } else {
        if (!pt) throw std::invalid_argument("photothermal dynamics require parameters");
        const std::complex<double> sigma = pt_self_energy(cav, op, *pt, mode.omega_m);
        const double denom = 2.0 * mode.mass * mode.omega_m;
        domega = sigma.real() / denom;
        dgamma = sigma.imag() / denom;
    }
    const double gamma_eff = mode.gamma0 + dgamma;
    return {mode.omega_m + domega, gamma_eff, gamma_eff > 0.0};
}

} // namespace omcool
