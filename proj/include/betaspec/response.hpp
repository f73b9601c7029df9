#pragma once

//---------------------------------------------------------------------------//
// Gaussian instrument response and Poisson pseudo-data.
//---------------------------------------------------------------------------//

#include <cstdint>
#include <filesystem>
#include <functional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "betaspec/fss.hpp"
#include "betaspec/kernel.hpp"

namespace betaspec {

struct ResponseModel
{
    double sigma_ev = 1;
    double k_sigma = 6;  //!< quadrature support +- k sigma
    double step_ev = 0;  //!< quadrature step; 0 selects sigma / 10

    double effective_step() const { return step_ev > 0 ? step_ev : sigma_ev / 10; }
    //! Throws ConfigError: sigma > 0, k >= 6, step <= sigma / 10.
    void validate() const;
};

//! Trapezoid weights of the Gaussian at nodes t_j = (j - K) h, j = 0..2K,
//! renormalized to unit sum. Symmetric in j.
std::vector<double> gaussian_weights(double sigma_ev, double step_ev, int half_width);

//! Unnormalized trapezoid sum of the Gaussian density on the response grid.
double raw_weight_sum(const ResponseModel& r);

using SpectrumFunction = std::function<double(double)>;

//! N_exp(x) = integral R(x - y) N(y) dy by the trapezoid rule.
SpectrumFunction convolve(SpectrumFunction f, const ResponseModel& r);

//! Convolution at many points. Uniformly spaced points share one fine
//! evaluation grid (the step is shrunk to divide the spacing); other inputs
//! fall back to pointwise quadrature.
std::vector<double> convolve_at(const SpectrumFunction& f, const ResponseModel& r, std::span<const double> points,
                                int jobs = 1);

//! Smeared integral spectrum with A = 1 and no background at the bin centers.
std::vector<double> smeared_integral_shape(const SpectrumParams& p, const FinalStateSpectrum& fss,
                                           const ResponseModel& r, std::span<const double> centers, int jobs = 1);

//---------------------------------------------------------------------------//
//! Uniform double in [0, 1) from the top 53 bits of a 64-bit draw.
double uniform01(std::mt19937_64& rng);

//! Poisson variate: sequential inversion below mean 30, Hormann's
//! transformed rejection (PTRS) above. Depends only on the raw 64-bit stream.
std::int64_t poisson_sample(std::mt19937_64& rng, double mean);

//! splitmix64 finalizer, used to derive per-replicate seeds.
std::uint64_t splitmix64(std::uint64_t x);

struct PseudoDataset
{
    std::vector<double> centers;   //!< bin centers [eV]
    std::vector<double> counts;    //!< observed counts (integer valued for sampled data)
    std::vector<double> expected;  //!< generator means mu_i
    double exposure = 1;
    std::uint64_t seed = 0;
    bool sampled = true;           //!< false for zero-noise (Asimov) data
    SpectrumParams truth;
    ResponseModel response;
    std::string fss_provenance;
};

//! mu_i = exposure A S(c_i) + b with S the smeared integral spectrum.
std::vector<double> expected_counts(const SpectrumParams& p, const FinalStateSpectrum& fss, const ResponseModel& r,
                                    std::span<const double> centers, double exposure, int jobs = 1);

//! Poisson counts around expected_counts. Bins must lie in [W0 - 1000, W0 + 50] eV.
//! Throws ModelError for a negative mean.
PseudoDataset generate_pseudodata(const SpectrumParams& p, const FinalStateSpectrum& fss, const ResponseModel& r,
                                  std::span<const double> centers, double exposure, std::uint64_t seed,
                                  int jobs = 1);

//! Same bins with counts equal to the means.
PseudoDataset asimov_dataset(const SpectrumParams& p, const FinalStateSpectrum& fss, const ResponseModel& r,
                             std::span<const double> centers, double exposure, int jobs = 1);

//! CSV `bin_center_eV,counts` plus `<path>.json` sidecar.
void save_dataset(const PseudoDataset& d, const std::filesystem::path& csv);
PseudoDataset load_dataset(const std::filesystem::path& csv);

std::string params_to_json(const SpectrumParams& p);
SpectrumParams params_from_json(const std::string& text);
std::string response_to_json(const ResponseModel& r);
ResponseModel response_from_json(const std::string& text);

}  // namespace betaspec
