#pragma once

//---------------------------------------------------------------------------//
// Discrete molecular final-state spectra: data model, text I/O and the
// channel-gated cumulative moments that parametrize the beta spectrum.
//---------------------------------------------------------------------------//

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace betaspec {

struct FssLine
{
    double energy_ev = 0;     //!< E_n, counted from the daughter ground state
    double probability = 0;   //!< P_n
    int channel = 0;          //!< electronic state index
    std::optional<int> rotation;   //!< J
    std::optional<int> vibration;  //!< v

    bool operator==(const FssLine&) const = default;
};

struct FssMetadata
{
    std::optional<double> recoil_au;  //!< q at which P_n were computed
    std::string provenance;
    bool sorted_on_load = false;      //!< input was not ascending in E_n
    std::optional<double> truncation_tolerance;
    std::vector<std::string> warnings;
};

//! Immutable, energy-sorted line list. Energies and probabilities are also
//! held contiguously for the vectorized spectral sums.
class FinalStateSpectrum
{
  public:
    FinalStateSpectrum() = default;

    //! Validates (P_n >= 0, finite values, channel-0 energies >= 0,
    //! total in (0, 1.000001]) and stable-sorts by energy. Sorting sets
    //! metadata.sorted_on_load.
    static FinalStateSpectrum from_lines(std::vector<FssLine> lines, FssMetadata meta = {});

    //! Concatenation of two spectra at fixed normalization.
    static FinalStateSpectrum merged(const FinalStateSpectrum& a, const FinalStateSpectrum& b);

    std::span<const FssLine> lines() const { return lines_; }
    std::span<const double> energies() const { return energies_; }
    std::span<const double> probabilities() const { return probabilities_; }
    std::size_t size() const { return lines_.size(); }
    double total_probability() const { return total_; }
    const FssMetadata& metadata() const { return meta_; }

    //! Number of lines with E_n < threshold (strict; lines sit in ascending order).
    std::size_t open_count(double threshold) const;

  private:
    std::vector<FssLine> lines_;
    std::vector<double> energies_;
    std::vector<double> probabilities_;
    double total_ = 0;
    FssMetadata meta_;
};

FinalStateSpectrum load_fss(const std::filesystem::path& path);
FinalStateSpectrum parse_fss(const std::string& text);
std::string format_fss(const FinalStateSpectrum& fss);
void save_fss(const FinalStateSpectrum& fss, const std::filesystem::path& path);

//---------------------------------------------------------------------------//
struct EnergyMoments
{
    double mean = 0;    //!< <E_n>   [eV]
    double second = 0;  //!< <E_n^2> [eV^2]
    double third = 0;   //!< <E_n^3> [eV^3]
};

struct MomentSet
{
    double epsilon_ev = 0;
    double open_probability = 0;          //!< P_epsilon
    std::optional<EnergyMoments> moments; //!< absent when no channel is open

    bool has_open_channels() const { return moments.has_value(); }
};

//! Moments over lines with E_n < epsilon.
MomentSet cumulative_moments(const FinalStateSpectrum& fss, double epsilon_ev);

//! Moment form of the linearized spectral sum:
//! P[e^3 - 3<E>e^2 + 3<E^2>e - 3/2 m^2 (e - <E>) - <E^3>], zero with no open lines.
double moment_form_spectrum_term(const FinalStateSpectrum& fss, double epsilon_ev, double m2_ev2);

}  // namespace betaspec
