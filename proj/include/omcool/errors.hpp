#ifndef OMCOOL_ERRORS_HPP
#define OMCOOL_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace omcool {

// Bad or inconsistent user input (config files, CSV tables, parameter ranges).
struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

// Dynamical instability: anti-damping exceeds the intrinsic damping, or a
// simulated trajectory diverges.
struct InstabilityError : std::runtime_error {
    explicit InstabilityError(const std::string& msg) : std::runtime_error(msg) {}
};

// Fit could not be performed or did not converge.
struct FitError : std::runtime_error {
    explicit FitError(const std::string& msg) : std::runtime_error(msg) {}
};

} // namespace omcool

#endif
