#include "omcool/langevin.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <complex>
#include <cstring>
#include <istream>
#include <numbers>
#include <ostream>
#include <random>
#include <sstream>

#include "omcool/csv.hpp"
#include "omcool/errors.hpp"

static_assert(std::endian::native == std::endian::little,
              "trajectory records are little-endian; byte swapping not implemented");

namespace omcool {

namespace {

// Deterministic Gaussian stream: mt19937_64 + Box-Muller. Avoids the
// implementation-defined std::normal_distribution so trajectories are
// bit-identical for a given seed across standard libraries.
class GaussianStream {
public:
    explicit GaussianStream(std::uint64_t seed) : rng_(seed) {}

    double operator()() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        const double u1 = uniform_open();
        const double u2 = uniform_open();
        const double radius = std::sqrt(-2.0 * std::log(u1));
        const double angle = 2.0 * std::numbers::pi * u2;
        spare_ = radius * std::sin(angle);
        have_spare_ = true;
        return radius * std::cos(angle);
    }

private:
    double uniform_open() {
        // in (0, 1]: never zero, so log() stays finite
        return (static_cast<double>(rng_() >> 11) + 1.0) * 0x1.0p-53;
    }

    std::mt19937_64 rng_;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

} // namespace

double max_time_step(const OpticalCavity& cav, const MechanicalMode& mode) {
    const double kappa = cavity_linewidth(cav);
    return std::min(2.0 * std::numbers::pi / mode.omega_m, 1.0 / kappa) / 20.0;
}

Trajectory simulate(const OpticalCavity& cav, const MechanicalMode& mode,
                    const OperatingPoint& op, const std::optional<PhotothermalParams>& pt,
                    const SimConfig& cfg) {
    if (!(cfg.dt > 0.0)) throw std::invalid_argument("sim dt: must be > 0");
    if (!(cfg.duration > cfg.dt)) throw std::invalid_argument("sim duration: must exceed dt");
    if (cfg.record_stride < 1) throw std::invalid_argument("sim record_stride: must be >= 1");
    const double dt_cap = max_time_step(cav, mode);
    if (cfg.dt > dt_cap)
        throw std::invalid_argument("sim dt: exceeds resolution guard min(2pi/omega_m, 1/kappa)/20 = " +
                                    format_double(dt_cap));
    if (pt) validate(*pt);

    Trajectory traj;
    if (cfg.transient_discard < 10.0 / mode.gamma0)
        traj.warnings.push_back("transient_discard below 10/gamma0; record may not be stationary");

    const double kappa = cavity_linewidth(cav);
    const double pull = frequency_pull(cav);
    const double omega_l = laser_angular_frequency(cav.geometry);
    const double drive = std::sqrt(cav.eta_c * kappa) *
                         std::sqrt(op.effective_power() / (phys.hbar * omega_l));
    const std::complex<double> pole0(0.5 * kappa, op.detuning);
    std::complex<double> a = drive / pole0;     // locked steady state
    const double ncav_mean = std::norm(a);

    const double wm2 = mode.omega_m * mode.omega_m;
    const double sigma_force = std::sqrt(4.0 * mode.mass * mode.gamma0 * phys.k_B *
                                         op.bath_temperature / cfg.dt);
    GaussianStream gauss(cfg.seed);

    // thermal kick so the record starts near stationarity
    double x = std::sqrt(phys.k_B * op.bath_temperature / (mode.mass * wm2)) * gauss();
    double v = std::sqrt(phys.k_B * op.bath_temperature / mode.mass) * gauss();
    double force_pt = 0.0;

    const std::size_t n_transient = static_cast<std::size_t>(cfg.transient_discard / cfg.dt);
    const std::size_t n_record = static_cast<std::size_t>(cfg.duration / cfg.dt);
    const std::size_t n_total = n_transient + n_record;
    const std::size_t n_samples = n_record / cfg.record_stride;

    traj.dt_sample = cfg.dt * static_cast<double>(cfg.record_stride);
    traj.times.reserve(n_samples);
    traj.x.reserve(n_samples);
    traj.v.reserve(n_samples);
    traj.field_re.reserve(n_samples);
    traj.field_im.reserve(n_samples);

    // divergence watchdog: 100x the bath-thermal rms is far outside any
    // stationary excursion of a stable run
    const double x_cap = 100.0 * std::sqrt(phys.k_B * op.bath_temperature / (mode.mass * wm2));
    const bool field_active = drive != 0.0;

    for (std::size_t step = 0; step < n_total; ++step) {
        const double force_rp = phys.hbar * pull * (std::norm(a) - ncav_mean);
        double force_ba;
        if (pt) {
            force_ba = force_pt;
            force_pt += cfg.dt / pt->tau_pt * (pt->strength_ratio * force_rp - force_pt);
        } else {
            force_ba = force_rp;
        }
        const double force_th = sigma_force * gauss();

        // semi-implicit step: kick v, then drift x with the new v
        v += cfg.dt * (-wm2 * x - 2.0 * mode.gamma0 * v + (force_ba + force_th) / mode.mass);
        x += cfg.dt * v;

        if (field_active) {
            // field: exponential update with the detuning frozen over the step
            const std::complex<double> q(0.5 * kappa, op.detuning - pull * x);
            const std::complex<double> decay = std::exp(-q * cfg.dt);
            a = decay * a + drive * (1.0 - decay) / q;
        }

        if (!(x > -x_cap && x < x_cap))
            throw InstabilityError("simulate: displacement left the thermal envelope at t = " +
                                   format_double(static_cast<double>(step) * cfg.dt));

        if (step >= n_transient) {
            const std::size_t rec = step - n_transient;
            if (rec % cfg.record_stride == 0 && traj.x.size() < n_samples) {
                traj.times.push_back(static_cast<double>(step) * cfg.dt);
                traj.x.push_back(x);
                traj.v.push_back(v);
                traj.field_re.push_back(a.real());
                traj.field_im.push_back(a.imag());
            }
        }
    }

    std::ostringstream meta;
    meta << "{\"dt_s\": " << format_double(cfg.dt)
         << ", \"dt_sample_s\": " << format_double(traj.dt_sample)
         << ", \"seed\": " << cfg.seed
         << ", \"detuning_rad_s\": " << format_double(op.detuning)
         << ", \"power_W\": " << format_double(op.power)
         << ", \"bath_temperature_K\": " << format_double(op.bath_temperature)
         << ", \"omega_m_rad_s\": " << format_double(mode.omega_m)
         << ", \"gamma0_rad_s\": " << format_double(mode.gamma0)
         << ", \"mass_kg\": " << format_double(mode.mass)
         << ", \"finesse\": " << format_double(cav.finesse)
         << ", \"kind\": \"" << (pt ? "photothermal" : "radiation-pressure") << "\"}";
    traj.meta = meta.str();
    return traj;
}

namespace {

// Iterative radix-2 Cooley-Tukey, in place. Sizes are powers of two.
void fft_inplace(std::vector<std::complex<double>>& a) {
    const std::size_t n = a.size();
    for (std::size_t i = 1, j = 0; i < n; ++i) {
        std::size_t bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(a[i], a[j]);
    }
    for (std::size_t len = 2; len <= n; len <<= 1) {
        const double ang = -2.0 * std::numbers::pi / static_cast<double>(len);
        const std::complex<double> wstep(std::cos(ang), std::sin(ang));
        for (std::size_t i = 0; i < n; i += len) {
            std::complex<double> w(1.0, 0.0);
            for (std::size_t k = 0; k < len / 2; ++k) {
                const std::complex<double> u = a[i + k];
                const std::complex<double> t = a[i + k + len / 2] * w;
                a[i + k] = u + t;
                a[i + k + len / 2] = u - t;
                w *= wstep;
            }
        }
    }
}

std::size_t floor_pow2(std::size_t n) {
    std::size_t p = 1;
    while (p * 2 <= n) p *= 2;
    return p;
}

} // namespace

SpectrumSeries welch_psd(const Trajectory& traj, std::size_t segment_length,
                         double overlap_fraction) {
    const std::size_t n = traj.x.size();
    if (segment_length < 16) throw std::invalid_argument("welch: segment_length must be >= 16");
    if (!(overlap_fraction >= 0.0 && overlap_fraction < 1.0))
        throw std::invalid_argument("welch: overlap_fraction must be in [0, 1)");
    const std::size_t seg = floor_pow2(segment_length);
    if (seg > n) throw std::invalid_argument("welch: trajectory shorter than one segment");
    const std::size_t hop =
        std::max<std::size_t>(1, static_cast<std::size_t>(static_cast<double>(seg) *
                                                          (1.0 - overlap_fraction)));
    const std::size_t nseg = 1 + (n - seg) / hop;
    if (nseg < 4) throw std::invalid_argument("welch: fewer than 4 segments; record too short");

    // periodic Hann window and its mean-square power
    std::vector<double> window(seg);
    double wpow = 0.0;
    for (std::size_t i = 0; i < seg; ++i) {
        window[i] = 0.5 * (1.0 - std::cos(2.0 * std::numbers::pi * static_cast<double>(i) /
                                          static_cast<double>(seg)));
        wpow += window[i] * window[i];
    }
    wpow /= static_cast<double>(seg);

    const std::size_t nbins = seg / 2 + 1;
    std::vector<double> accum(nbins, 0.0);
    std::vector<std::complex<double>> buf(seg);
    for (std::size_t sidx = 0; sidx < nseg; ++sidx) {
        const std::size_t off = sidx * hop;
        double mean = 0.0;
        for (std::size_t i = 0; i < seg; ++i) mean += traj.x[off + i];
        mean /= static_cast<double>(seg);
        for (std::size_t i = 0; i < seg; ++i)
            buf[i] = {(traj.x[off + i] - mean) * window[i], 0.0};
        fft_inplace(buf);
        for (std::size_t k = 0; k < nbins; ++k) accum[k] += std::norm(buf[k]);
    }

    const double dt = traj.dt_sample;
    const double norm = dt / (static_cast<double>(seg) * wpow * static_cast<double>(nseg));
    SpectrumSeries s;
    s.omega.resize(nbins);
    s.psd.resize(nbins);
    for (std::size_t k = 0; k < nbins; ++k) {
        const double onesided = (k == 0 || k == seg / 2) ? 1.0 : 2.0;
        s.omega[k] = 2.0 * std::numbers::pi * static_cast<double>(k) /
                     (static_cast<double>(seg) * dt);
        // per-Hz PSD converted to per-(rad/s)
        s.psd[k] = accum[k] * norm * onesided / (2.0 * std::numbers::pi);
    }
    s.provenance = Provenance::Langevin;
    return s;
}

namespace {

SpectrumSeries slice_band(const SpectrumSeries& psd, double lo, double hi) {
    SpectrumSeries band;
    band.provenance = psd.provenance;
    for (std::size_t i = 0; i < psd.omega.size(); ++i) {
        if (psd.omega[i] >= lo && psd.omega[i] <= hi) {
            band.omega.push_back(psd.omega[i]);
            band.psd.push_back(psd.psd[i]);
        }
    }
    return band;
}

} // namespace

OracleDynamics oracle_effective_dynamics(const Trajectory& traj, std::size_t segment_length,
                                         double overlap_fraction) {
    if (segment_length == 0) segment_length = floor_pow2(std::max<std::size_t>(traj.x.size() / 8, 16));
    SpectrumSeries psd = welch_psd(traj, segment_length, overlap_fraction);

    // locate the resonance away from the aliased Nyquist corner and the
    // low-frequency plateau, then refit on a window where a constant
    // effective damping describes the shape
    const std::size_t kpeak = static_cast<std::size_t>(
        std::max_element(psd.psd.begin() + 1, psd.psd.end()) - psd.psd.begin());
    const double wpk = psd.omega[kpeak];
    const double wnyq = psd.omega.back();
    FitResult coarse = fit_spectrum(slice_band(psd, wpk / 3.0, std::min(2.5 * wpk, 0.7 * wnyq)));

    const double w0 = coarse.param("omega_eff");
    const double g0 = coarse.param("gamma_eff");
    SpectrumSeries window = slice_band(psd, w0 - 15.0 * g0, std::min(w0 + 15.0 * g0, 0.9 * wnyq));
    FitResult fr = window.omega.size() >= 32 ? fit_spectrum(window) : std::move(coarse);

    OracleDynamics od;
    od.omega_eff = fr.param("omega_eff");
    od.gamma_eff = fr.param("gamma_eff");
    od.omega_err = fr.std_error("omega_eff");
    od.gamma_err = fr.std_error("gamma_eff");
    od.fit = std::move(fr);
    return od;
}

namespace {

constexpr char kMagic[8] = {'O', 'M', 'T', 'R', 'J', '0', '0', '1'};

void write_column(std::ostream& os, const std::vector<double>& col) {
    os.write(reinterpret_cast<const char*>(col.data()),
             static_cast<std::streamsize>(col.size() * sizeof(double)));
}

void read_column(std::istream& is, std::vector<double>& col, std::size_t n) {
    col.resize(n);
    is.read(reinterpret_cast<char*>(col.data()), static_cast<std::streamsize>(n * sizeof(double)));
    if (!is) throw ConfigError("trajectory record: truncated column data");
}

} // namespace

void write_trajectory(std::ostream& os, const Trajectory& traj) {
    std::ostringstream header;
    header << "{\"n_samples\": " << traj.x.size()
           << ", \"dt_sample_s\": " << format_double(traj.dt_sample)
           << ", \"columns\": [\"time_s\", \"x_m\", \"v_m_s\", \"field_re\", \"field_im\"]"
           << ", \"params\": " << (traj.meta.empty() ? "{}" : traj.meta) << "}";
    const std::string h = header.str();
    os.write(kMagic, sizeof kMagic);
    const std::uint32_t len = static_cast<std::uint32_t>(h.size());
    os.write(reinterpret_cast<const char*>(&len), sizeof len);
    os.write(h.data(), static_cast<std::streamsize>(h.size()));
    write_column(os, traj.times);
    write_column(os, traj.x);
    write_column(os, traj.v);
    write_column(os, traj.field_re);
    write_column(os, traj.field_im);
}

Trajectory read_trajectory(std::istream& is) {
    char magic[8];
    is.read(magic, sizeof magic);
    if (!is || std::memcmp(magic, kMagic, sizeof magic) != 0)
        throw ConfigError("trajectory record: bad magic");
    std::uint32_t len = 0;
    is.read(reinterpret_cast<char*>(&len), sizeof len);
    std::string header(len, '\0');
    is.read(header.data(), len);
    if (!is) throw ConfigError("trajectory record: truncated header");

    // pull the two scalars we need out of the header
    const auto find_number = [&header](const std::string& key) {
        const auto pos = header.find('"' + key + '"');
        if (pos == std::string::npos) throw ConfigError("trajectory record: header missing " + key);
        auto colon = header.find(':', pos);
        auto end = header.find_first_of(",}", colon);
        return parse_double(header.substr(colon + 1, end - colon - 1), "trajectory header " + key);
    };
    const std::size_t n = static_cast<std::size_t>(find_number("n_samples"));
    Trajectory traj;
    traj.dt_sample = find_number("dt_sample_s");
    traj.meta = header;
    read_column(is, traj.times, n);
    read_column(is, traj.x, n);
    read_column(is, traj.v, n);
    read_column(is, traj.field_re, n);
    read_column(is, traj.field_im, n);
    return traj;
}

void write_trajectory_csv(std::ostream& os, const Trajectory& traj, std::size_t stride) {
    if (stride < 1) stride = 1;
    os << "time_s,x_m,v_m_s,field_re,field_im\n";
    for (std::size_t i = 0; i < traj.x.size(); i += stride)
        os << format_double(traj.times[i]) << ',' << format_double(traj.x[i]) << ','
           << format_double(traj.v[i]) << ',' << format_double(traj.field_re[i]) << ','
           << format_double(traj.field_im[i]) << '\n';
}

} // namespace omcool
