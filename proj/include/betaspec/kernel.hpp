#pragma once

//---------------------------------------------------------------------------//
// Beta-spectrum evaluation from a final-state spectrum.
//
// With e_n = W0_eff(eps) - eps - E_n and the prefactor F(p, Z) E p taken at
// the electron kinetic energy eps:
//   differential  A F E p sum_n P_n e_n sqrt(e_n^2 - m2)
//   integral      A/3 F E p sum_n P_n (e_n^2 - m2)^{3/2}
//   linearized    A/3 F E p sum_n P_n [e_n^3 - 3/2 m2 e_n] theta(e_n)
// Negative m2 is continued analytically: lines open for e_n > 0.
//---------------------------------------------------------------------------//

#include <span>
#include <string_view>
#include <vector>

#include "betaspec/fss.hpp"
#include "betaspec/physics.hpp"

namespace betaspec {

struct SpectrumParams
{
    double amplitude = 1;      //!< A
    double endpoint_ev = 18575; //!< W0
    double m2_ev2 = 0;         //!< m_nu^2 c^4
    double background = 0;     //!< counts per bin, fit context only
    int charge = 2;            //!< Z of the daughter; 0 disables the Fermi factor
    bool endpoint_drift = false;

    //! Throws ConfigError: A > 0, W0 in [18000, 19000], |m2| < 1e4, b >= 0.
    void validate() const;
};

enum class SpectrumForm
{
    integral,
    differential,
    linearized,
    moment  //!< linearized form evaluated through cumulative moments
};

SpectrumForm parse_spectrum_form(std::string_view tag);
std::string_view to_string(SpectrumForm f);

//! W0 - (W0 - eps) m_e / M_t.
double effective_endpoint(double kinetic_ev, double endpoint_ev);

//! Energy available to the final states, W0_eff - eps (or W0 - eps without drift).
double available_energy(double kinetic_ev, const SpectrumParams& p);

//! F(p, Z) E p at kinetic energy eps [eV^2]; F = 1 for Z = 0.
double phase_space_prefactor(double kinetic_ev, int charge);

//! Inner sums over lines at available energy e (no prefactor).
double integral_line_sum(const FinalStateSpectrum& fss, double available_ev, double m2_ev2);
double differential_line_sum(const FinalStateSpectrum& fss, double available_ev, double m2_ev2);
double linearized_line_sum(const FinalStateSpectrum& fss, double available_ev, double m2_ev2);

double differential_spectrum(double kinetic_ev, const SpectrumParams& p, const FinalStateSpectrum& fss);
double integral_spectrum(double kinetic_ev, const SpectrumParams& p, const FinalStateSpectrum& fss);
double linearized_spectrum(double kinetic_ev, const SpectrumParams& p, const FinalStateSpectrum& fss);
double moment_spectrum(double kinetic_ev, const SpectrumParams& p, const FinalStateSpectrum& fss);

double evaluate_spectrum(SpectrumForm form, double kinetic_ev, const SpectrumParams& p,
                         const FinalStateSpectrum& fss);

//! Form evaluated at every point of a grid; parallel over points, result
//! independent of `jobs`.
std::vector<double> spectrum_on_grid(SpectrumForm form, std::span<const double> kinetic_ev,
                                     const SpectrumParams& p, const FinalStateSpectrum& fss, int jobs = 1);

//---------------------------------------------------------------------------//
struct UniformShifts
{
    double recoil_ev = 0;            //!< species rotational recoil at eps
    double initial_rotation_ev = 0;  //!< (J+1/2)^2 / (2 M R_e^2), zero for J = 0

    double total() const { return recoil_ev + initial_rotation_ev; }
};

//! Additive shifts of the final-state spectrum for the species and initial
//! rotational number; M is the final reduced nuclear mass of the species.
UniformShifts uniform_shifts(Species species, int initial_rotation, double eq_distance_bohr, double kinetic_ev);

}  // namespace betaspec
