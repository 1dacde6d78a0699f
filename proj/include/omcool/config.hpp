#ifndef OMCOOL_CONFIG_HPP
#define OMCOOL_CONFIG_HPP

#include <string>
#include <vector>

#include "omcool/cavity.hpp"
#include "omcool/langevin.hpp"
#include "omcool/pdh.hpp"
#include "omcool/self_energy.hpp"

namespace omcool {

// Scenario description loaded from JSON. Physical invariants are enforced on
// load; violations raise ConfigError naming the offending field path.
struct ScenarioConfig {
    OpticalCavity cavity;
    MechanicalMode mechanics;
    std::vector<double> powers_W;
    std::vector<double> detunings_rad_s;
    double bath_temperature_K;
    double mode_matching = 1.0;
    PdhConfig pdh;
    double pdh_noise_floor = 0.0;
    SimConfig sim;
    PhotothermalParams photothermal;

    OperatingPoint operating_point(double power, double detuning) const {
        return {detuning, power, bath_temperature_K, mode_matching};
    }
};

ScenarioConfig load_scenario(const std::string& json_text);
ScenarioConfig load_scenario_file(const std::string& path);

std::string scenario_to_json(const ScenarioConfig& cfg);

} // namespace omcool

#endif
