#include "omcool/spectra.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <numbers>
#include <numeric>
#include <ostream>
#include <stdexcept>

#include "omcool/csv.hpp"
#include "omcool/errors.hpp"

namespace omcool {

std::string to_string(Provenance p) {
    switch (p) {
        case Provenance::AnalyticLorentzian: return "analytic-lorentzian";
        case Provenance::AnalyticFull: return "analytic-full";
        case Provenance::Langevin: return "langevin";
        case Provenance::SyntheticPdh: return "synthetic-pdh";
        case Provenance::External: return "external";
    }
    return "external";
}

Provenance provenance_from_string(const std::string& s) {
    if (s == "analytic-lorentzian") return Provenance::AnalyticLorentzian;
    if (s == "analytic-full") return Provenance::AnalyticFull;
    if (s == "langevin") return Provenance::Langevin;
    if (s == "synthetic-pdh") return Provenance::SyntheticPdh;
    if (s == "external") return Provenance::External;
    throw ConfigError("unknown spectrum provenance '" + s + "'");
}

void validate(const SpectrumSeries& s) {
    if (s.omega.size() != s.psd.size())
        throw std::invalid_argument("spectrum: omega and psd lengths differ");
    if (s.omega.size() < 16) throw std::invalid_argument("spectrum: grid length must be >= 16");
    for (std::size_t i = 1; i < s.omega.size(); ++i)
        if (!(s.omega[i] > s.omega[i - 1]))
            throw std::invalid_argument("spectrum: grid must be strictly increasing");
    for (double v : s.psd)
        if (!(v >= 0.0)) throw std::invalid_argument("spectrum: psd values must be >= 0");
}

std::vector<double> make_spectrum_grid(double omega_eff, double gamma_eff, std::size_t n,
                                       double halfwidths) {
    if (n < 16) throw std::invalid_argument("spectrum grid: need at least 16 points");
    const double lo = std::max(omega_eff - halfwidths * gamma_eff, 0.0);
    const double hi = omega_eff + halfwidths * gamma_eff;
    std::vector<double> grid(n);
    for (std::size_t i = 0; i < n; ++i)
        grid[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1);
    return grid;
}

SpectrumSeries thermal_displacement_psd(const MechanicalMode& mode, double omega_eff,
                                        double gamma_eff, double temperature,
                                        std::span<const double> grid) {
    if (!(gamma_eff > 0.0)) throw InstabilityError("thermal spectrum: gamma_eff must be > 0");
    const double amp = 4.0 * phys.k_B * temperature * mode.gamma0 /
                       (std::numbers::pi * mode.mass);
    SpectrumSeries s;
    s.omega.assign(grid.begin(), grid.end());
    s.psd.resize(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const double w = grid[i];
        const double det = omega_eff * omega_eff - w * w;
        s.psd[i] = amp / (det * det + 4.0 * gamma_eff * gamma_eff * w * w);
    }
    s.provenance = Provenance::AnalyticLorentzian;
    s.shape = LorentzianShape{amp, omega_eff, gamma_eff};
    return s;
}

SpectrumSeries spectrum_full(const OpticalCavity& cav, const MechanicalMode& mode,
                             const OperatingPoint& op, std::span<const double> grid,
                             BackactionKind kind, const std::optional<PhotothermalParams>& pt) {
    const EffectiveDynamics eff = effective_dynamics(cav, mode, op, kind, pt);
    if (!eff.stable)
        throw InstabilityError("spectrum_full: operating point is anti-damped (gamma_eff <= 0)");

    const SelfEnergy se = make_self_energy(cav, mode, op, kind, pt);
    const double amp = 4.0 * phys.k_B * op.bath_temperature * mode.gamma0 /
                       (std::numbers::pi * mode.mass);
    SpectrumSeries s;
    s.omega.assign(grid.begin(), grid.end());
    s.psd.resize(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const double w = grid[i];
        const std::complex<double> sigma = se.sigma(w);
        const double restoring = mode.omega_m * mode.omega_m - w * w + sigma.real() / mode.mass;
        // written as (2 w gamma0 + Im Sigma/m) to stay finite at w = 0
        const double damping = 2.0 * w * mode.gamma0 + sigma.imag() / mode.mass;
        s.psd[i] = amp / (restoring * restoring + damping * damping);
    }
    s.provenance = Provenance::AnalyticFull;
    s.shape = LorentzianShape{amp, eff.omega_eff, eff.gamma_eff};
    return s;
}

namespace {

// Antiderivative of 1/((p^2-w^2)^2 + 4 g^2 w^2) dw for the underdamped case.
// The quartic factors into two Lorentzians centered at +/- sqrt(p^2-g^2).
double lorentzian_quartic_antiderivative(double p, double g, double w) {
    const double w1 = std::sqrt(p * p - g * g);
    const double a = -1.0 / (4.0 * w1 * p * p);
    const double lm = (w - w1) * (w - w1) + g * g;
    const double lp = (w + w1) * (w + w1) + g * g;
    return 0.5 * a * std::log(lm / lp) +
           (std::atan((w - w1) / g) + std::atan((w + w1) / g)) / (4.0 * p * p * g);
}

double lorentzian_quartic_limit(double p, double g) {
    return std::numbers::pi / (4.0 * p * p * g);  // value of the antiderivative at +inf
}

} // namespace

MeanSquareResult mean_square_displacement(const SpectrumSeries& s) {
    validate(s);
    double area = 0.0;
    for (std::size_t i = 1; i < s.omega.size(); ++i)
        area += 0.5 * (s.psd[i] + s.psd[i - 1]) * (s.omega[i] - s.omega[i - 1]);

    double tails = 0.0;
    if (s.shape && s.shape->gamma_eff < 0.99 * s.shape->omega_eff) {
        const double p = s.shape->omega_eff;
        const double g = s.shape->gamma_eff;
        const double A = s.shape->amplitude;
        const double left = lorentzian_quartic_antiderivative(p, g, s.omega.front()) -
                            lorentzian_quartic_antiderivative(p, g, 0.0);
        const double right = lorentzian_quartic_limit(p, g) -
                             lorentzian_quartic_antiderivative(p, g, s.omega.back());
        tails = A * (left + right);
    }
    const double total = area + tails;
    return {total, total > 0.0 ? tails / total : 0.0};
}

double effective_temperature(const MechanicalMode& mode, double omega_eff, double x2_mean) {
    return mode.mass * omega_eff * omega_eff * x2_mean / phys.k_B;
}

double occupancy(double omega_eff, double T_eff) {
    if (!(T_eff > 0.0)) return 0.0;
    const double x = phys.hbar * omega_eff / (phys.k_B * T_eff);
    return 1.0 / std::expm1(x);
}

double cooling_law_temperature(double T0, double gamma0, double gamma_eff) {
    return T0 * gamma0 / gamma_eff;
}

std::vector<SweepRow> cooling_sweep(const OpticalCavity& cav, const MechanicalMode& mode,
                                    std::span<const double> powers_W,
                                    std::span<const double> detunings,
                                    double bath_temperature) {
    if (powers_W.empty() || detunings.empty())
        throw std::invalid_argument("cooling_sweep: power and detuning grids must be nonempty");
    std::vector<SweepRow> rows;
    rows.reserve(powers_W.size() * detunings.size());
    const double nan = std::numeric_limits<double>::quiet_NaN();
    for (double P : powers_W) {
        for (double D : detunings) {
            const OperatingPoint op{D, P, bath_temperature};
            const EffectiveDynamics eff = effective_dynamics(cav, mode, op);
            SweepRow row{P, D, eff.omega_eff, eff.gamma_eff, nan, nan, eff.stable};
            if (eff.stable) {
                row.T_eff = cooling_law_temperature(bath_temperature, mode.gamma0, eff.gamma_eff);
                row.n_mean = occupancy(eff.omega_eff, row.T_eff);
            }
            rows.push_back(row);
        }
    }
    return rows;
}

CollapseDiagnostic collapse_diagnostic(std::span<const SweepRow> rows) {
    std::vector<double> lg, lt;
    for (const SweepRow& r : rows) {
        if (!r.stable || !(r.T_eff > 0.0) || !(r.gamma_eff > 0.0)) continue;
        lg.push_back(std::log(r.gamma_eff));
        lt.push_back(std::log(r.T_eff));
    }
    if (lg.size() < 2)
        throw std::invalid_argument("collapse_diagnostic: need at least 2 stable rows");
    const double mx = std::accumulate(lg.begin(), lg.end(), 0.0) / static_cast<double>(lg.size());
    const double my = std::accumulate(lt.begin(), lt.end(), 0.0) / static_cast<double>(lt.size());
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < lg.size(); ++i) {
        sxx += (lg[i] - mx) * (lg[i] - mx);
        sxy += (lg[i] - mx) * (lt[i] - my);
    }
    if (!(sxx > 0.0))
        throw std::invalid_argument("collapse_diagnostic: all gamma_eff identical (degenerate)");
    const double slope = sxy / sxx;
    const double intercept = my - slope * mx;
    double max_resid = 0.0;
    for (std::size_t i = 0; i < lg.size(); ++i) {
        const double resid = std::abs(std::expm1(lt[i] - (slope * lg[i] + intercept)));
        max_resid = std::max(max_resid, resid);
    }
    return {slope, max_resid};
}

ThresholdCheck sideband_threshold_check(const OpticalCavity& cav, const MechanicalMode& mode) {
    const double ratio = mode.omega_m / cavity_linewidth(cav);
    const double threshold = 1.0 / std::sqrt(32.0);
    return {ratio, ratio > threshold};
}

void write_sweep_csv(std::ostream& os, std::span<const SweepRow> rows) {
    os << "power_W,detuning_rad_s,omega_eff_rad_s,gamma_eff_rad_s,T_eff_K,n_mean,stable\n";
    for (const SweepRow& r : rows) {
        os << format_double(r.power) << ',' << format_double(r.detuning) << ','
           << format_double(r.omega_eff) << ',' << format_double(r.gamma_eff) << ','
           << format_double(r.T_eff) << ',' << format_double(r.n_mean) << ','
           << (r.stable ? "true" : "false") << '\n';
    }
}

std::vector<SweepRow> read_sweep_csv(std::istream& is) {
    std::string line;
    if (!std::getline(is, line)) throw ConfigError("sweep csv: empty file");
    const std::string expected =
        "power_W,detuning_rad_s,omega_eff_rad_s,gamma_eff_rad_s,T_eff_K,n_mean,stable";
    if (line.ends_with("\r")) line.pop_back();
    if (line != expected)
        throw ConfigError("sweep csv row 1: expected header '" + expected + "'");
    std::vector<SweepRow> rows;
    std::size_t lineno = 1;
    while (std::getline(is, line)) {
        ++lineno;
        if (line.empty() || line == "\r") continue;
        const auto f = split_csv_line(line);
        const std::string ctx = "sweep csv row " + std::to_string(lineno);
        if (f.size() != 7) throw ConfigError(ctx + ": expected 7 columns, got " +
                                             std::to_string(f.size()));
        SweepRow r;
        r.power = parse_double(f[0], ctx + " col 1 (power_W)");
        r.detuning = parse_double(f[1], ctx + " col 2 (detuning_rad_s)");
        r.omega_eff = parse_double(f[2], ctx + " col 3 (omega_eff_rad_s)");
        r.gamma_eff = parse_double(f[3], ctx + " col 4 (gamma_eff_rad_s)");
        r.T_eff = parse_double(f[4], ctx + " col 5 (T_eff_K)");
        r.n_mean = parse_double(f[5], ctx + " col 6 (n_mean)");
        if (f[6] == "true") r.stable = true;
        else if (f[6] == "false") r.stable = false;
        else throw ConfigError(ctx + " col 7 (stable): expected true/false, got '" + f[6] + "'");
        rows.push_back(r);
    }
    return rows;
}

void write_spectrum_csv(std::ostream& os, const SpectrumSeries& s) {
    os << "omega_rad_s,psd,units\n";
    for (std::size_t i = 0; i < s.omega.size(); ++i)
        os << format_double(s.omega[i]) << ',' << format_double(s.psd[i]) << ',' << s.units
           << '\n';
}

SpectrumSeries read_spectrum_csv(std::istream& is) {
    std::string line;
    if (!std::getline(is, line)) throw ConfigError("spectrum csv: empty file");
    if (line.ends_with("\r")) line.pop_back();
    if (line != "omega_rad_s,psd,units")
        throw ConfigError("spectrum csv row 1: expected header 'omega_rad_s,psd,units'");
    SpectrumSeries s;
    s.provenance = Provenance::External;
    std::size_t lineno = 1;
    while (std::getline(is, line)) {
        ++lineno;
        if (line.empty() || line == "\r") continue;
        const auto f = split_csv_line(line);
        const std::string ctx = "spectrum csv row " + std::to_string(lineno);
        if (f.size() != 3)
            throw ConfigError(ctx + ": expected 3 columns, got " + std::to_string(f.size()));
        s.omega.push_back(parse_double(f[0], ctx + " col 1 (omega_rad_s)"));
        s.psd.push_back(parse_double(f[1], ctx + " col 2 (psd)"));
        s.units = f[2];
    }
    validate(s);
    return s;
}

} // namespace omcool
