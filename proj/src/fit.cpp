#include "omcool/fit.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <numbers>
#include <ostream>
#include <set>
#include <sstream>

#include "omcool/csv.hpp"
#include "omcool/errors.hpp"

namespace omcool {

double FitResult::param(std::string_view name) const {
    for (std::size_t i = 0; i < names.size(); ++i)
        if (names[i] == name) return params[i];
    throw std::out_of_range("fit result has no parameter '" + std::string(name) + "'");
}

double FitResult::std_error(std::string_view name) const {
    for (std::size_t i = 0; i < names.size(); ++i)
        if (names[i] == name) return std_errors[i];
    throw std::out_of_range("fit result has no parameter '" + std::string(name) + "'");
}

namespace {

// Dense symmetric-positive-definite solve via Cholesky; returns false if the
// factorization breaks down.
bool cholesky_solve(std::vector<double> a, std::vector<double> b, std::size_t n,
                    std::vector<double>& x) {
    for (std::size_t j = 0; j < n; ++j) {
        double d = a[j * n + j];
        for (std::size_t k = 0; k < j; ++k) d -= a[j * n + k] * a[j * n + k];
        if (!(d > 0.0)) return false;
        const double root = std::sqrt(d);
        a[j * n + j] = root;
        for (std::size_t i = j + 1; i < n; ++i) {
            double s = a[i * n + j];
            for (std::size_t k = 0; k < j; ++k) s -= a[i * n + k] * a[j * n + k];
            a[i * n + j] = s / root;
        }
    }
    // forward then backward substitution
    for (std::size_t i = 0; i < n; ++i) {
        double s = b[i];
        for (std::size_t k = 0; k < i; ++k) s -= a[i * n + k] * b[k];
        b[i] = s / a[i * n + i];
    }
    for (std::size_t ii = n; ii-- > 0;) {
        double s = b[ii];
        for (std::size_t k = ii + 1; k < n; ++k) s -= a[k * n + ii] * b[k];
        b[ii] = s / a[ii * n + ii];
    }
    x = std::move(b);
    return true;
}

bool invert_spd(const std::vector<double>& a, std::size_t n, std::vector<double>& inv) {
    inv.assign(n * n, 0.0);
    for (std::size_t col = 0; col < n; ++col) {
        std::vector<double> e(n, 0.0);
        e[col] = 1.0;
        std::vector<double> x;
        if (!cholesky_solve(a, std::move(e), n, x)) return false;
        for (std::size_t row = 0; row < n; ++row) inv[row * n + col] = x[row];
    }
    return true;
}

std::vector<double> numeric_jacobian(const ResidualFn& f, const std::vector<double>& p,
                                     const std::vector<double>& r0) {
    const std::size_t m = r0.size();
    const std::size_t n = p.size();
    std::vector<double> jac(m * n);
    std::vector<double> q = p;
    for (std::size_t j = 0; j < n; ++j) {
        const double h = 1e-7 * std::max(1.0, std::abs(p[j]));
        q[j] = p[j] + h;
        const std::vector<double> rp = f(q);
        q[j] = p[j] - h;
        const std::vector<double> rm = f(q);
        q[j] = p[j];
        for (std::size_t i = 0; i < m; ++i) jac[i * n + j] = (rp[i] - rm[i]) / (2.0 * h);
    }
    return jac;
}

double sum_sq(const std::vector<double>& r) {
    double s = 0.0;
    for (double v : r) s += v * v;
    return s;
}

} // namespace

FitResult nls_minimize(const ResidualFn& residuals, std::vector<double> p,
                       const FitOptions& options) {
    FitResult out;
    std::vector<double> r = residuals(p);
    const std::size_t m = r.size();
    const std::size_t n = p.size();
    if (m < n) throw FitError("nls_minimize: fewer residuals than parameters");
    for (double v : r)
        if (!std::isfinite(v)) throw FitError("nls_minimize: non-finite residual at start");

    double cost = sum_sq(r);
    double lambda = 1e-6;
    double nu = 2.0;
    int iter = 0;
    bool converged = false;
    std::string message = "max iterations reached";
    std::vector<double> jac = numeric_jacobian(residuals, p, r);

    while (iter < options.max_iterations) {
        ++iter;
        // normal equations
        std::vector<double> jtj(n * n, 0.0), jtr(n, 0.0);
        for (std::size_t i = 0; i < m; ++i) {
            for (std::size_t a = 0; a < n; ++a) {
                jtr[a] += jac[i * n + a] * r[i];
                for (std::size_t b = a; b < n; ++b)
                    jtj[a * n + b] += jac[i * n + a] * jac[i * n + b];
            }
        }
        for (std::size_t a = 0; a < n; ++a)
            for (std::size_t b = 0; b < a; ++b) jtj[a * n + b] = jtj[b * n + a];

        double gnorm = 0.0;
        for (double v : jtr) gnorm = std::max(gnorm, std::abs(v));
        if (gnorm < options.grad_tol) {
            converged = true;
            message = "gradient below tolerance";
            break;
        }

        // damped step: (J^T J + lambda diag(J^T J)) delta = -J^T r
        std::vector<double> damped = jtj;
        bool solved = false;
        std::vector<double> delta;
        for (int attempt = 0; attempt < 32 && !solved; ++attempt) {
            damped = jtj;
            for (std::size_t a = 0; a < n; ++a) {
                const double d = jtj[a * n + a];
                damped[a * n + a] = d + lambda * (d > 0.0 ? d : 1.0);
            }
            std::vector<double> rhs(n);
            for (std::size_t a = 0; a < n; ++a) rhs[a] = -jtr[a];
            solved = cholesky_solve(damped, std::move(rhs), n, delta);
            if (!solved) lambda *= 10.0;
        }
        if (!solved) throw FitError("nls_minimize: singular normal matrix");

        double pnorm = 0.0, dnorm = 0.0;
        for (std::size_t a = 0; a < n; ++a) {
            pnorm += p[a] * p[a];
            dnorm += delta[a] * delta[a];
        }
        if (std::sqrt(dnorm) < options.step_tol * (std::sqrt(pnorm) + options.step_tol)) {
            converged = true;
            message = "step below tolerance";
            break;
        }

        std::vector<double> ptry(n);
        for (std::size_t a = 0; a < n; ++a) ptry[a] = p[a] + delta[a];
        std::vector<double> rtry = residuals(ptry);
        const double cost_try = sum_sq(rtry);

        // predicted reduction for the gain ratio
        double predicted = 0.0;
        for (std::size_t a = 0; a < n; ++a) {
            predicted += delta[a] * (lambda * jtj[a * n + a] * delta[a] - jtr[a]);
        }
        const double rho = predicted > 0.0 ? (cost - cost_try) / predicted : (cost - cost_try);

        if (std::isfinite(cost_try) && cost_try < cost) {
            p = std::move(ptry);
            r = std::move(rtry);
            cost = cost_try;
            jac = numeric_jacobian(residuals, p, r);
            const double shrink = 1.0 - std::pow(2.0 * rho - 1.0, 3);
            lambda *= std::max(1.0 / 3.0, std::min(shrink, 1.0));
            lambda = std::max(lambda, 1e-14);
            nu = 2.0;
        } else {
            lambda *= nu;
            nu *= 2.0;
            if (lambda > 1e14) {
                message = "no representable step improves the cost";
                break;
            }
        }
    }

    out.params = p;
    out.residual_norm = std::sqrt(cost);
    out.converged = converged;
    out.iterations = iter;
    out.message = message;

    // covariance from the Jacobian at the optimum, scaled by residual variance
    std::vector<double> jtj(n * n, 0.0);
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t a = 0; a < n; ++a)
            for (std::size_t b = 0; b < n; ++b) jtj[a * n + b] += jac[i * n + a] * jac[i * n + b];
    std::vector<double> inv;
    out.std_errors.assign(n, std::numeric_limits<double>::quiet_NaN());
    if (invert_spd(jtj, n, inv)) {
        const double dof = static_cast<double>(m > n ? m - n : 1);
        const double sigma2 = cost / dof;
        out.covariance.resize(n * n);
        for (std::size_t k = 0; k < n * n; ++k) out.covariance[k] = inv[k] * sigma2;
        for (std::size_t a = 0; a < n; ++a)
            out.std_errors[a] = std::sqrt(std::max(out.covariance[a * n + a], 0.0));
    } else {
        out.message += "; covariance unavailable (singular Jacobian)";
    }
    return out;
}

namespace {

struct SpectrumModelScale {
    double A0, w0, g0, s0;
};

// Internal parameters: {log(A/A0), w/w0, log(g/g0), floor/s0}.
std::vector<double> spectrum_residuals(const SpectrumSeries& s, const SpectrumModelScale& sc,
                                       const std::vector<double>& q) {
    const double A = sc.A0 * std::exp(q[0]);
    const double w0 = sc.w0 * q[1];
    const double g = sc.g0 * std::exp(q[2]);
    const double floor = sc.s0 * q[3];
    std::vector<double> r(s.omega.size());
    const double tiny = sc.s0 * 1e-12;
    for (std::size_t i = 0; i < s.omega.size(); ++i) {
        const double w = s.omega[i];
        const double det = w0 * w0 - w * w;
        const double model = A / (det * det + 4.0 * g * g * w * w) + floor;
        r[i] = (model - s.psd[i]) / std::max(std::abs(s.psd[i]), tiny);
    }
    return r;
}

double median_of(std::vector<double> v) {
    if (v.empty()) return 0.0;
    std::nth_element(v.begin(), v.begin() + v.size() / 2, v.end());
    return v[v.size() / 2];
}

} // namespace

FitResult fit_spectrum(const SpectrumSeries& s, const FitOptions& options) {
    validate(s);
    const std::size_t n = s.omega.size();

    const double peak = *std::max_element(s.psd.begin(), s.psd.end());
    const double med = median_of(s.psd);
    if (!(med > 0.0) || peak / med <= 5.0)
        throw FitError("fit_spectrum: no visible peak (max/median <= 5)");

    const std::size_t kpeak = static_cast<std::size_t>(
        std::max_element(s.psd.begin(), s.psd.end()) - s.psd.begin());

    // floor from the grid edges
    std::vector<double> edges;
    const std::size_t edge = std::max<std::size_t>(3, n / 20);
    for (std::size_t i = 0; i < edge; ++i) {
        edges.push_back(s.psd[i]);
        edges.push_back(s.psd[n - 1 - i]);
    }
    const double floor0 = median_of(edges);

    // half-power width around the peak
    const double half_level = floor0 + 0.5 * (peak - floor0);
    std::size_t lo = kpeak, hi = kpeak;
    while (lo > 0 && s.psd[lo] > half_level) --lo;
    while (hi + 1 < n && s.psd[hi] > half_level) ++hi;
    double width = s.omega[hi] - s.omega[lo];
    if (!(width > 0.0)) width = s.omega[std::min(kpeak + 1, n - 1)] - s.omega[kpeak > 0 ? kpeak - 1 : 0];

    SpectrumModelScale sc;
    sc.w0 = s.omega[kpeak];
    sc.g0 = std::max(0.5 * width, 1e-12 * sc.w0);
    sc.A0 = std::max(peak - floor0, 1e-3 * peak) * 4.0 * sc.g0 * sc.g0 * sc.w0 * sc.w0;
    sc.s0 = peak;

    const ResidualFn fn = [&s, &sc](const std::vector<double>& q) {
        return spectrum_residuals(s, sc, q);
    };
    FitResult inner = nls_minimize(fn, {0.0, 1.0, 0.0, floor0 / sc.s0}, options);
    if (!inner.converged) throw FitError("fit_spectrum: minimizer did not converge");

    // map to natural units with delta-method errors
    const double A = sc.A0 * std::exp(inner.params[0]);
    const double w0 = sc.w0 * inner.params[1];
    const double g = sc.g0 * std::exp(inner.params[2]);
    const double floor = sc.s0 * inner.params[3];
    const double jd[4] = {A, sc.w0, g, sc.s0};

    FitResult out;
    out.names = {"A", "omega_eff", "gamma_eff", "floor"};
    out.params = {A, w0, g, floor};
    out.residual_norm = inner.residual_norm;
    out.converged = inner.converged;
    out.iterations = inner.iterations;
    out.message = inner.message;
    out.std_errors.assign(4, std::numeric_limits<double>::quiet_NaN());
    if (inner.covariance.size() == 16) {
        out.covariance.resize(16);
        for (std::size_t a = 0; a < 4; ++a)
            for (std::size_t b = 0; b < 4; ++b)
                out.covariance[a * 4 + b] = inner.covariance[a * 4 + b] * jd[a] * jd[b];
        for (std::size_t a = 0; a < 4; ++a)
            out.std_errors[a] = std::sqrt(std::max(out.covariance[a * 4 + a], 0.0));
    }
    return out;
}

void validate(const DetuningDataset& d) {
    if (d.points.size() < 4)
        throw std::invalid_argument("detuning dataset: need at least 4 rows");
    std::set<double> distinct;
    for (const auto& p : d.points) distinct.insert(p.detuning);
    if (distinct.size() < 3)
        throw std::invalid_argument("detuning dataset: need at least 3 distinct detunings");
}

FitResult fit_detuning_curves(const DetuningDataset& data, const OpticalCavity& cav_template,
                              const MechanicalMode& mode_template, const FitOptions& options) {
    validate(data);
    const std::size_t npts = data.points.size();

    double mean_w = 0.0, mean_g = 0.0;
    for (const auto& p : data.points) {
        mean_w += p.omega_eff;
        mean_g += p.gamma_eff;
    }
    mean_w /= static_cast<double>(npts);
    mean_g /= static_cast<double>(npts);
    double sw = 0.0, sg = 0.0;
    for (const auto& p : data.points) {
        sw += (p.omega_eff - mean_w) * (p.omega_eff - mean_w);
        sg += (p.gamma_eff - mean_g) * (p.gamma_eff - mean_g);
    }
    sw = std::sqrt(sw / static_cast<double>(npts));
    sg = std::sqrt(sg / static_cast<double>(npts));
    if (!(sw > 0.0)) sw = std::abs(mean_w) > 0 ? 1e-6 * std::abs(mean_w) : 1.0;
    if (!(sg > 0.0)) sg = std::abs(mean_g) > 0 ? 1e-6 * std::abs(mean_g) : 1.0;

    const double F0 = cav_template.finesse;
    const double m0 = mode_template.mass;
    const ResidualFn fn = [&](const std::vector<double>& q) {
        OpticalCavity cav = cav_template;
        cav.finesse = F0 * std::exp(q[0]);
        MechanicalMode mode = mode_template;
        mode.mass = m0 * std::exp(q[1]);
        std::vector<double> r;
        r.reserve(2 * npts);
        for (const auto& p : data.points) {
            const OperatingPoint op{p.detuning, p.power, 300.0};
            const EffectiveDynamics eff = effective_dynamics(cav, mode, op);
            r.push_back(p.weight * (eff.omega_eff - p.omega_eff) / sw);
            r.push_back(p.weight * (eff.gamma_eff - p.gamma_eff) / sg);
        }
        return r;
    };

    FitResult inner = nls_minimize(fn, {0.0, 0.0}, options);
    if (!inner.converged) throw FitError("fit_detuning_curves: minimizer did not converge");

    const double F = F0 * std::exp(inner.params[0]);
    const double mass = m0 * std::exp(inner.params[1]);

    FitResult out;
    out.names = {"finesse", "mass"};
    out.params = {F, mass};
    out.residual_norm = inner.residual_norm;
    out.converged = inner.converged;
    out.iterations = inner.iterations;
    out.message = inner.message;
    out.std_errors.assign(2, std::numeric_limits<double>::quiet_NaN());
    if (inner.covariance.size() != 4)
        throw FitError("fit_detuning_curves: parameters unidentifiable (singular Jacobian)");

    const double jd[2] = {F, mass};
    out.covariance.resize(4);
    for (std::size_t a = 0; a < 2; ++a)
        for (std::size_t b = 0; b < 2; ++b)
            out.covariance[a * 2 + b] = inner.covariance[a * 2 + b] * jd[a] * jd[b];
    for (std::size_t a = 0; a < 2; ++a)
        out.std_errors[a] = std::sqrt(std::max(out.covariance[a * 2 + a], 0.0));

    // identifiability: condition number of the 2x2 covariance
    const double tr = inner.covariance[0] + inner.covariance[3];
    const double det = inner.covariance[0] * inner.covariance[3] -
                       inner.covariance[1] * inner.covariance[2];
    const double disc = std::sqrt(std::max(tr * tr / 4.0 - det, 0.0));
    const double emax = tr / 2.0 + disc;
    const double emin = tr / 2.0 - disc;
    if (!(emin > 0.0) || emax / emin > 1e10)
        throw FitError("fit_detuning_curves: parameters unidentifiable "
                       "(covariance condition number > 1e10)");
    return out;
}

std::string fit_result_to_json(const FitResult& r) {
    std::ostringstream os;
    os << "{\n  \"params\": {";
    for (std::size_t i = 0; i < r.names.size(); ++i)
        os << (i ? ", " : "") << '"' << r.names[i] << "\": " << format_double(r.params[i]);
    os << "},\n  \"std_errors\": {";
    for (std::size_t i = 0; i < r.names.size(); ++i)
        os << (i ? ", " : "") << '"' << r.names[i] << "\": " << format_double(r.std_errors[i]);
    os << "},\n  \"covariance\": [";
    const std::size_t n = r.names.size();
    for (std::size_t a = 0; a < n; ++a) {
        os << (a ? ", " : "") << '[';
        for (std::size_t b = 0; b < n; ++b)
            os << (b ? ", " : "")
               << format_double(r.covariance.size() == n * n ? r.covariance[a * n + b]
                                                             : std::numeric_limits<double>::quiet_NaN());
        os << ']';
    }
    os << "],\n  \"residual_norm\": " << format_double(r.residual_norm)
       << ",\n  \"converged\": " << (r.converged ? "true" : "false")
       << ",\n  \"iterations\": " << r.iterations << ",\n  \"message\": \"" << r.message
       << "\"\n}\n";
    return os.str();
}

void write_detuning_dataset_csv(std::ostream& os, const DetuningDataset& d) {
    os << "detuning_rad_s,power_W,omega_eff_rad_s,gamma_eff_rad_s,weight\n";
    for (const auto& p : d.points)
        os << format_double(p.detuning) << ',' << format_double(p.power) << ','
           << format_double(p.omega_eff) << ',' << format_double(p.gamma_eff) << ','
           << format_double(p.weight) << '\n';
}

DetuningDataset read_detuning_dataset_csv(std::istream& is) {
    std::string line;
    if (!std::getline(is, line)) throw ConfigError("dataset csv: empty file");
    if (line.ends_with("\r")) line.pop_back();
    const std::string expected = "detuning_rad_s,power_W,omega_eff_rad_s,gamma_eff_rad_s,weight";
    if (line != expected)
        throw ConfigError("dataset csv row 1: expected header '" + expected + "'");
    DetuningDataset d;
    std::size_t lineno = 1;
    while (std::getline(is, line)) {
        ++lineno;
        if (line.empty() || line == "\r") continue;
        const auto f = split_csv_line(line);
        const std::string ctx = "dataset csv row " + std::to_string(lineno);
        if (f.size() != 5)
            throw ConfigError(ctx + ": expected 5 columns, got " + std::to_string(f.size()));
        DetuningPoint p;
        p.detuning = parse_double(f[0], ctx + " col 1 (detuning_rad_s)");
        p.power = parse_double(f[1], ctx + " col 2 (power_W)");
        p.omega_eff = parse_double(f[2], ctx + " col 3 (omega_eff_rad_s)");
        p.gamma_eff = parse_double(f[3], ctx + " col 4 (gamma_eff_rad_s)");
        p.weight = parse_double(f[4], ctx + " col 5 (weight)");
        d.points.push_back(p);
    }
    validate(d);
    return d;
}

} // namespace omcool
