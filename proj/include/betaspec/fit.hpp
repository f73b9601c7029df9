#pragma once

//---------------------------------------------------------------------------//
// Pearson chi-square fits of (A, W0, m2, b) to binned integral-spectrum data.
//
// The fit model is mu_i = A S_i(W0, m2) + b, with S the smeared integral
// spectrum at unit amplitude; A therefore absorbs the generator exposure.
//---------------------------------------------------------------------------//

#include <array>
#include <optional>
#include <string>

#include <Eigen/Dense>

#include "betaspec/fss.hpp"
#include "betaspec/kernel.hpp"
#include "betaspec/response.hpp"

namespace betaspec {

enum FitIndex : int
{
    fit_amplitude = 0,
    fit_endpoint = 1,
    fit_m2 = 2,
    fit_background = 3,
    fit_parameter_count = 4
};

std::string_view fit_parameter_name(int index);

struct FitConfig
{
    double window_lo_ev = 18375;
    double window_hi_ev = 18595;
    std::array<bool, 4> free{true, true, true, true};
    SpectrumParams initial;          //!< guesses; endpoint_drift selects the fitter model
    ResponseModel response;
    int max_iterations = 200;
    double chi2_tolerance = 1e-12;   //!< relative chi-square change
    double step_tolerance = 1e-10;   //!< scaled step norm
    double gradient_tolerance = 1e-10; //!< scaled gradient norm
    int jobs = 1;

    //! Throws ConfigError: lo < hi <= W0_guess + 50 and at least one free parameter.
    void validate() const;
    int free_count() const;
};

struct FitResult
{
    SpectrumParams params;
    std::optional<Eigen::Matrix4d> covariance;  //!< rows/columns of fixed parameters are zero
    double chi2 = 0;
    int dof = 0;
    int bins = 0;
    int iterations = 0;
    bool converged = false;
    std::string status;
    double window_lo_ev = 0;
    double window_hi_ev = 0;

    double error(int index) const;
};

//! Pearson chi-square with unit floor over the window bins.
double chi_square(const SpectrumParams& p, const PseudoDataset& data, const FitConfig& config,
                  const FinalStateSpectrum& fss);

//! Levenberg-Marquardt with central-difference sensitivities. Non-convergence
//! is reported in the result; the covariance is absent for a singular Hessian.
FitResult minimize(const PseudoDataset& data, const FitConfig& config, const FinalStateSpectrum& fss);

FitConfig fit_config_from_json(const std::string& text);
std::string fit_result_to_json(const FitResult& r);

}  // namespace betaspec
