#pragma once

//---------------------------------------------------------------------------//
// Physical constants, relativistic kinematics, Coulomb (Fermi) factor and
// recoil energies. Energies are in eV at every public interface; momenta are
// carried both as p*c [eV] and in atomic units (m_e * c * alpha).
//---------------------------------------------------------------------------//

#include <string>
#include <string_view>

namespace betaspec {

struct Constants
{
    std::string version;
    double electron_rest_energy_ev;  //!< m_e c^2
    double fine_structure;           //!< alpha
    double hartree_ev;
    double bohr_m;
    double triton_mass_ratio;   //!< M_t / m_e (nuclear)
    double helion_mass_ratio;   //!< M(3He nucleus) / m_e
    double proton_mass_ratio;   //!< M_p / m_e

    //! Reduced mass of the T-3He nuclear pair [m_e]
    double reduced_t_he3() const
    {
        return triton_mass_ratio * helion_mass_ratio / (triton_mass_ratio + helion_mass_ratio);
    }
    //! Reduced mass of the T-T nuclear pair [m_e]
    double reduced_t_t() const { return 0.5 * triton_mass_ratio; }
    //! Reduced mass of the 3He-p nuclear pair [m_e]
    double reduced_he3_p() const
    {
        return helion_mass_ratio * proton_mass_ratio / (helion_mass_ratio + proton_mass_ratio);
    }
    //! Atomic unit of momentum expressed as p*c [eV]
    double atomic_momentum_ev() const { return electron_rest_energy_ev * fine_structure; }
};

//! Compiled-in reference values (CODATA 2018).
Constants default_constants();

//! Parse a constants JSON document; throws ConfigError on missing fields or
//! values violating the documented ranges.
Constants constants_from_json(std::string_view text);
std::string constants_to_json(const Constants& c);

//! Process-wide immutable constants. Initialized once, from the file named by
//! the BETASPEC_CONSTANTS environment variable when set, else the defaults.
const Constants& constants();

//---------------------------------------------------------------------------//
struct Momentum
{
    double pc_ev = 0;     //!< p_beta * c [eV]
    double recoil_au = 0; //!< q = p_beta / 2 in atomic units
};

struct Kinematics
{
    double kinetic_ev = 0;  //!< epsilon_beta
    double total_ev = 0;    //!< E_beta = epsilon_beta + m_e c^2
    Momentum momentum;
};

Momentum momentum_from_kinetic(double kinetic_ev);
double kinetic_from_momentum(double pc_ev);
Kinematics kinematics(double kinetic_ev);

//! Nonrelativistic point-charge Coulomb factor 2 pi eta / (1 - exp(-2 pi eta)),
//! eta = Z alpha / beta. Throws DomainError for pc <= 0 or Z < 1.
double fermi_factor(double pc_ev, int charge);

//---------------------------------------------------------------------------//
enum class Species
{
    t2,
    th
};

Species parse_species(std::string_view tag);
std::string_view to_string(Species s);

struct RecoilParts
{
    double center_of_mass_ev = 0;
    double rotational_ev = 0;
    double total() const { return center_of_mass_ev + rotational_ev; }
};

//! Composite (center-of-mass + rotational) recoil energy at beta kinetic
//! energy epsilon. Both species sum to p^2 / (2 M_t).
double composite_recoil(double kinetic_ev, Species species);

//! Split of the composite recoil. For T2 the rotational part is p^2 / (4 M_t),
//! i.e. q^2 / 2M with M = M_t / 2; for TH it is p^2 / (2 M_t (1 + M_t / M_p)).
RecoilParts recoil_parts(double kinetic_ev, Species species);

//! q^2 / 2M in eV for q in atomic units and M in electron masses.
double rotational_recoil_shift(double recoil_au, double reduced_mass);

}  // namespace betaspec
