#ifndef OMCOOL_CONSTANTS_HPP
#define OMCOOL_CONSTANTS_HPP

namespace omcool {

// CODATA 2018 values (exact in the 2019 SI where applicable).
struct PhysicalConstants {
    double c    = 299792458.0;      // speed of light, m/s
    double hbar = 1.054571817e-34;  // reduced Planck constant, J s
    double k_B  = 1.380649e-23;     // Boltzmann constant, J/K
};

inline constexpr PhysicalConstants phys{};

} // namespace omcool

#endif
