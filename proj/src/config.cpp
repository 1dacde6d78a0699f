#include "omcool/config.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "omcool/errors.hpp"

namespace omcool {

namespace {

using json = nlohmann::ordered_json;

double number_at(const json& j, const std::string& section, const std::string& key) {
    if (!j.contains(key)) throw ConfigError(section + "." + key + ": missing required field");
    const json& v = j.at(key);
    if (!v.is_number()) throw ConfigError(section + "." + key + ": must be a number");
    return v.get<double>();
}

double number_or(const json& j, const std::string& section, const std::string& key,
                 double fallback) {
    if (!j.contains(key)) return fallback;
    const json& v = j.at(key);
    if (!v.is_number()) throw ConfigError(section + "." + key + ": must be a number");
    return v.get<double>();
}

std::vector<double> array_at(const json& j, const std::string& section, const std::string& key) {
    if (!j.contains(key)) throw ConfigError(section + "." + key + ": missing required field");
    const json& v = j.at(key);
    if (!v.is_array() || v.empty())
        throw ConfigError(section + "." + key + ": must be a nonempty array of numbers");
    std::vector<double> out;
    out.reserve(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (!v[i].is_number())
            throw ConfigError(section + "." + key + "[" + std::to_string(i) +
                              "]: must be a number");
        out.push_back(v[i].get<double>());
    }
    return out;
}

const json& section_at(const json& j, const std::string& key) {
    if (!j.contains(key)) throw ConfigError(key + ": missing required section");
    if (!j.at(key).is_object()) throw ConfigError(key + ": must be an object");
    return j.at(key);
}

} // namespace

ScenarioConfig load_scenario(const std::string& json_text) {
    json root;
    try {
        root = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("config: JSON parse error: ") + e.what());
    }

    ScenarioConfig cfg;

    const json& jc = section_at(root, "cavity");
    cfg.cavity.geometry.length = number_at(jc, "cavity", "length_m");
    cfg.cavity.geometry.roc = number_at(jc, "cavity", "roc_m");
    cfg.cavity.geometry.wavelength = number_at(jc, "cavity", "wavelength_m");
    cfg.cavity.finesse = number_at(jc, "cavity", "finesse");
    cfg.cavity.eta_c = number_at(jc, "cavity", "eta_c");

    const json& jm = section_at(root, "mechanics");
    cfg.mechanics.omega_m = number_at(jm, "mechanics", "omega_m_rad_s");
    cfg.mechanics.gamma0 = number_at(jm, "mechanics", "gamma0_rad_s");
    cfg.mechanics.mass = number_at(jm, "mechanics", "mass_kg");

    const json& jo = section_at(root, "operating");
    cfg.powers_W = array_at(jo, "operating", "powers_W");
    cfg.detunings_rad_s = array_at(jo, "operating", "detunings_rad_s");
    cfg.bath_temperature_K = number_at(jo, "operating", "bath_temperature_K");
    cfg.mode_matching = number_or(jo, "operating", "mode_matching", 1.0);

    const json& jp = section_at(root, "pdh");
    cfg.pdh.mod_freq = number_at(jp, "pdh", "mod_freq_rad_s");
    cfg.pdh.mod_depth = number_at(jp, "pdh", "mod_depth_rad");
    cfg.pdh.ref_freq = number_at(jp, "pdh", "ref_freq_rad_s");
    cfg.pdh.ref_freq_dev_rms = number_at(jp, "pdh", "ref_freq_dev_rms_Hz");
    cfg.pdh_noise_floor = number_or(jp, "pdh", "noise_floor", 0.0);

    const json& js = section_at(root, "sim");
    cfg.sim.dt = number_at(js, "sim", "dt_s");
    cfg.sim.duration = number_at(js, "sim", "duration_s");
    cfg.sim.seed = static_cast<std::uint64_t>(number_at(js, "sim", "seed"));
    cfg.sim.transient_discard = number_or(js, "sim", "transient_discard_s", 0.0);
    cfg.sim.record_stride =
        static_cast<std::size_t>(number_or(js, "sim", "record_stride", 1.0));

    const json& jt = section_at(root, "photothermal");
    cfg.photothermal.tau_pt = number_at(jt, "photothermal", "tau_pt_s");
    cfg.photothermal.strength_ratio = number_at(jt, "photothermal", "strength_ratio");

    // physical invariants, reported with their field paths
    try {
        validate(cfg.cavity);
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("cavity: ") + e.what());
    }
    try {
        validate(cfg.mechanics);
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("mechanics: ") + e.what());
    }
    try {
        validate(cfg.pdh);
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("pdh: ") + e.what());
    }
    try {
        validate(cfg.photothermal);
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("photothermal: ") + e.what());
    }
    for (double p : cfg.powers_W)
        if (!(p >= 0.0)) throw ConfigError("operating.powers_W: entries must be >= 0");
    if (!(cfg.bath_temperature_K > 0.0))
        throw ConfigError("operating.bath_temperature_K: must be > 0");
    if (!(cfg.mode_matching > 0.0 && cfg.mode_matching <= 1.0))
        throw ConfigError("operating.mode_matching: must be in (0, 1]");
    if (!(cfg.sim.dt > 0.0)) throw ConfigError("sim.dt_s: must be > 0");
    if (!(cfg.sim.duration > cfg.sim.dt)) throw ConfigError("sim.duration_s: must exceed dt_s");
    if (cfg.sim.record_stride < 1) throw ConfigError("sim.record_stride: must be >= 1");

    return cfg;
}

ScenarioConfig load_scenario_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("config: cannot open '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    try {
        return load_scenario(buf.str());
    } catch (const ConfigError& e) {
        throw ConfigError(path + ": " + e.what());
    }
}

std::string scenario_to_json(const ScenarioConfig& cfg) {
    json root;
    root["cavity"] = {{"length_m", cfg.cavity.geometry.length},
                      {"roc_m", cfg.cavity.geometry.roc},
                      {"wavelength_m", cfg.cavity.geometry.wavelength},
                      {"finesse", cfg.cavity.finesse},
                      {"eta_c", cfg.cavity.eta_c}};
    root["mechanics"] = {{"omega_m_rad_s", cfg.mechanics.omega_m},
                         {"gamma0_rad_s", cfg.mechanics.gamma0},
                         {"mass_kg", cfg.mechanics.mass}};
    root["operating"] = {{"powers_W", cfg.powers_W},
                         {"detunings_rad_s", cfg.detunings_rad_s},
                         {"bath_temperature_K", cfg.bath_temperature_K},
                         {"mode_matching", cfg.mode_matching}};
    root["pdh"] = {{"mod_freq_rad_s", cfg.pdh.mod_freq},
                   {"mod_depth_rad", cfg.pdh.mod_depth},
                   {"ref_freq_rad_s", cfg.pdh.ref_freq},
                   {"ref_freq_dev_rms_Hz", cfg.pdh.ref_freq_dev_rms},
                   {"noise_floor", cfg.pdh_noise_floor}};
    root["sim"] = {{"dt_s", cfg.sim.dt},
                   {"duration_s", cfg.sim.duration},
                   {"seed", cfg.sim.seed},
                   {"transient_discard_s", cfg.sim.transient_discard},
                   {"record_stride", cfg.sim.record_stride}};
    root["photothermal"] = {{"tau_pt_s", cfg.photothermal.tau_pt},
                            {"strength_ratio", cfg.photothermal.strength_ratio}};
    return root.dump(2) + "\n";
}

} // namespace omcool
