#ifndef OMCOOL_FIT_HPP
#define OMCOOL_FIT_HPP

#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include "omcool/cavity.hpp"
#include "omcool/spectra.hpp"

namespace omcool {

struct FitOptions {
    int max_iterations = 200;
    double step_tol = 1e-8;    // relative step size
    double grad_tol = 1e-10;   // infinity norm of the gradient
};

struct FitResult {
    std::vector<std::string> names;
    std::vector<double> params;
    std::vector<double> std_errors;
    std::vector<double> covariance;  // row-major p x p
    double residual_norm = 0.0;      // sqrt(sum of squared residuals)
    bool converged = false;
    int iterations = 0;
    std::string message;

    double param(std::string_view name) const;
    double std_error(std::string_view name) const;
};

using ResidualFn = std::function<std::vector<double>(const std::vector<double>&)>;

// Damped least squares (Levenberg-Marquardt) with a numerically differenced
// Jacobian. Converges on relative step < step_tol or gradient norm < grad_tol;
// the covariance is (J^T J)^{-1} scaled by the residual variance at the
// optimum. Throws FitError on non-finite residuals at the start or a
// persistently singular normal matrix.
FitResult nls_minimize(const ResidualFn& residuals, std::vector<double> init,
                       const FitOptions& options = {});

// Fit S(w) = A/((omega_eff^2-w^2)^2 + 4 gamma_eff^2 w^2) + floor to a sampled
// spectrum. Initial values come from the peak bin, the half-power width and
// the grid-edge floor. Residuals are relative, so the fit is invariant under
// uniform rescaling of the PSD. Throws FitError when no visible peak
// (max/median <= 5) or on non-convergence.
// Result names: A, omega_eff, gamma_eff, floor.
FitResult fit_spectrum(const SpectrumSeries& s, const FitOptions& options = {});

// Measured effective dynamics at one detuning/power condition.
struct DetuningPoint {
    double detuning;    // rad/s
    double power;       // W
    double omega_eff;   // rad/s
    double gamma_eff;   // rad/s
    double weight = 1.0;
};

struct DetuningDataset {
    std::vector<DetuningPoint> points;
};

void validate(const DetuningDataset& d);  // >= 4 rows, >= 3 distinct detunings

// Joint fit of the predicted omega_eff(Delta; F, m) and gamma_eff(Delta; F, m)
// curves to a dataset, with finesse and effective mass free and every other
// parameter frozen from the templates. Frequency and damping residuals are
// each normalized by the sample spread of the respective observable.
// Result names: finesse, mass. Throws FitError on non-convergence or an
// unidentifiable (condition number > 1e10) parameter pair.
FitResult fit_detuning_curves(const DetuningDataset& data, const OpticalCavity& cav_template,
                              const MechanicalMode& mode_template,
                              const FitOptions& options = {});

std::string fit_result_to_json(const FitResult& r);

// Dataset CSV interchange, columns:
// detuning_rad_s,power_W,omega_eff_rad_s,gamma_eff_rad_s,weight
void write_detuning_dataset_csv(std::ostream& os, const DetuningDataset& d);
DetuningDataset read_detuning_dataset_csv(std::istream& is);

} // namespace omcool

#endif
