#pragma once

//---------------------------------------------------------------------------//
// Studies: the linearization error trend and the fitted-m2 bias from an
// energy-dependent endpoint left out of the fit model.
//---------------------------------------------------------------------------//

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "betaspec/fit.hpp"
#include "betaspec/fss.hpp"
#include "betaspec/kernel.hpp"
#include "betaspec/response.hpp"

namespace betaspec {

struct Fig2Row
{
    double depth_ev = 0;  //!< W0 - eps
    double exact = 0;     //!< sum P (e^2 - m2)^{3/2}
    double linear = 0;    //!< sum P [e^3 - 3/2 m2 e] theta(e)
    double difference = 0; //!< abs(exact - linear), summed line by line
    double trend = 0;     //!< m^4 / (W0 - eps)
};

struct Fig2Study
{
    double m_nu_ev = 0;
    std::vector<Fig2Row> rows;
    double envelope_constant = 0;  //!< max difference / trend over the grid
    double fitted_constant = 0;    //!< least-squares amplitude of the trend

    //! difference <= c * trend at every row.
    bool bounded_by(double c) const;
};

//! Inner sums at available energies W0 - eps = depth (no drift).
Fig2Study fig2_study(const FinalStateSpectrum& fss, double m_nu_ev, std::span<const double> depths_ev);

void write_fig2(const Fig2Study& s, const std::filesystem::path& csv);

//---------------------------------------------------------------------------//
struct ScanSpec
{
    std::vector<double> depths_ev{100, 200, 400};  //!< window lower edges below W0
    int replications = 100;
    std::uint64_t base_seed = 20240601;
    SpectrumParams truth;         //!< endpoint_drift ignored; see generator_drift
    double exposure = 1e-11;      //!< endpoint-region bins hold 1e2-1e4 counts at A = 1
    ResponseModel response;
    double bin_width_ev = 1;
    double upper_edge_ev = 20;    //!< window upper edge above W0
    bool generator_drift = true;
    bool fitter_drift = false;
    bool run_control = true;      //!< also fit with the fitter matched to the generator
    int max_iterations = 100;
    int jobs = 1;

    //! Throws ConfigError: replications >= 1, depths strictly increasing and positive.
    void validate() const;
};

struct ScanRow
{
    std::string scenario;  //!< "mismatch" or "control"
    double depth_ev = 0;
    int replications = 0;
    int converged = 0;
    int excluded = 0;
    bool flagged = false;  //!< more than 10 % of fits excluded
    double mean_m2 = 0;
    double sd_m2 = 0;
    double stderr_m2 = 0;
    double mean_w0_shift = 0;  //!< fitted minus true W0
    double stderr_w0 = 0;
    double paired_m2 = 0;      //!< mean of mismatch minus control on the same datasets (mismatch rows)
    double paired_stderr = 0;
    double asimov_m2 = 0;      //!< zero-noise fit of the generator means
    double asimov_w0_shift = 0;
    double window_drift_ev = 0; //!< average of (W0 - eps)/M_t over the window bins below W0
};

struct ScanResult
{
    std::vector<ScanRow> rows;
    std::uint64_t base_seed = 0;
    std::vector<double> centers;  //!< bins of the generated datasets
};

//! Replicates share one dataset per seed across windows and fitter models;
//! per-replicate seeds are splitmix64(base_seed + index).
ScanResult bias_scan(const ScanSpec& spec, const FinalStateSpectrum& fss);

void write_scan(const ScanResult& r, const ScanSpec& spec, const std::filesystem::path& csv);

ScanSpec scan_spec_from_json(const std::string& text);

}  // namespace betaspec
