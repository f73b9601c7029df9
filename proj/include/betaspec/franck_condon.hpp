#pragma once

//---------------------------------------------------------------------------//
// Synthetic final-state spectra in the sudden approximation.
//
// The parent T2 ground state chi_0(R) and the daughter channel eigenstates
// chi_{vJ}(R) live on one uniform radial grid (sinc DVR). The recoil factor
// exp(i q.R) is angle-averaged through its partial-wave expansion, giving
//   P_{vJ} = w_c (2J+1) |<chi_{vJ}| j_J(qR) |chi_0>|^2.
// Internally everything is in atomic units (hartree, bohr, m_e).
//---------------------------------------------------------------------------//

#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "betaspec/fss.hpp"

namespace betaspec {

struct MorseCurve
{
    double depth_ev = 0;      //!< D_e
    double range_per_bohr = 0; //!< a
    double eq_distance_bohr = 0; //!< R_e
};

enum class CurveKind
{
    morse,
    coulomb,  //!< repulsive z_eff / R plus asymptote offset
    lumped    //!< single line, no radial structure
};

enum class RecoilTreatment
{
    partial_waves,  //!< explicit J-resolved lines
    uniform_shift   //!< J = 0 pseudo-spectrum shifted by q^2 / 2M
};

struct ChannelSpec
{
    std::string label;
    CurveKind kind = CurveKind::morse;
    MorseCurve morse;
    double z_eff = 2;
    double offset_ev = 0;        //!< asymptote relative to the ground-channel asymptote
    double line_energy_ev = 0;   //!< lumped channels only, counted from E_g
    double weight = 0;           //!< electronic population w_c
    RecoilTreatment recoil = RecoilTreatment::partial_waves;
};

struct RadialGrid
{
    double r_min_bohr = 0.4;
    double r_max_bohr = 12.0;
    int points = 512;

    double step() const { return (r_max_bohr - r_min_bohr) / (points - 1); }
};

struct MoleculeModel
{
    std::string name;
    MorseCurve initial;
    double initial_reduced_mass = 0;  //!< [m_e]
    double final_reduced_mass = 0;    //!< M in q^2 / 2M [m_e]
    std::vector<ChannelSpec> channels;  //!< channels[0] defines E_g
    RadialGrid grid;
    bool convergence_gate = true;
    double gate_tolerance_ev = 1e-8;

    //! Throws ConfigError on violated invariants.
    void validate() const;
};

//! Morse T2 parent, Morse T(3He)+ ground channel, two repulsive Coulomb
//! channels and one lumped high-lying line; weights sum to one.
MoleculeModel default_t2_model();
MoleculeModel model_from_json(const std::string& text);
std::string model_to_json(const MoleculeModel& m);

//---------------------------------------------------------------------------//
//! Channel index selecting the parent (initial) potential.
inline constexpr int initial_channel = -1;

struct RadialEigenbasis
{
    int channel = 0;
    int rotation = 0;
    std::vector<double> grid;
    double step = 0;
    std::vector<double> energies_ev;  //!< absolute, ascending
    Eigen::MatrixXd vectors;          //!< columns: coefficients, unit norm (chi(R_i) = c_i / sqrt(h))
    int bound_count = 0;              //!< states below the channel asymptote
    std::vector<bool> resonant;       //!< box pseudo-states above the asymptote

    std::size_t size() const { return energies_ev.size(); }
};

//! Diagonalizes the radial Hamiltonian of a channel (or the parent) at
//! rotational number J, centrifugal term J(J+1)/(2MR^2) included.
RadialEigenbasis solve_radial(const MoleculeModel& model, int channel, int rotation);

//! Lowest levels on grids of N and 2N-1 points must agree within the model
//! tolerance; throws AccuracyError otherwise. Returns the largest change [eV].
double check_grid_convergence(const MoleculeModel& model, int channel, int levels = 10);

//! Closed-form Morse levels [eV, relative to the asymptote] for v = 0..v_max.
std::vector<double> morse_levels(const MorseCurve& curve, double reduced_mass, int v_max);

//! Linear finite-element levels (variational upper bounds) on n_elements
//! uniform elements with Dirichlet walls; lowest `count` values [eV].
std::vector<double> finite_element_levels(const MoleculeModel& model, int channel, int rotation, int n_elements,
                                          int count);

//! Grid operators for one channel at J: Hamiltonian, d/dR and -d^2/dR^2 (atomic units).
struct GridOperators
{
    Eigen::MatrixXd hamiltonian;
    Eigen::MatrixXd derivative;
    Eigen::MatrixXd neg_laplacian;
    std::vector<double> grid;
    std::vector<double> potential;  //!< hartree
};
GridOperators grid_operators(const MoleculeModel& model, int channel, int rotation);

//---------------------------------------------------------------------------//
struct ChannelSum
{
    int channel = 0;
    double weight = 0;
    double captured = 0;  //!< sum of emitted P over the truncated basis
    double pruned = 0;    //!< emitted mass dropped by the probability floor
    double deficit() const { return weight - captured; }
};

struct GenerationOptions
{
    int j_max = 60;
    int v_max = -1;              //!< -1 keeps every grid state
    double min_probability = 0;  //!< lines below are dropped (mass still counted)
    int jobs = 1;
};

struct GeneratedSpectrum
{
    FinalStateSpectrum fss;
    std::vector<ChannelSum> channels;
    double reference_energy_ev = 0;  //!< absolute E_g
    double gate_change_ev = 0;       //!< largest eigenvalue change in the convergence gate
};

//! Caches eigenbases per (channel, J); eigenbases do not depend on q.
class FranckCondonSolver
{
  public:
    explicit FranckCondonSolver(MoleculeModel model);

    const MoleculeModel& model() const { return model_; }
    const RadialEigenbasis& basis(int channel, int rotation);
    const RadialEigenbasis& initial_basis() { return basis(initial_channel, 0); }
    //! Parent ground vibrational state, unit-norm coefficient vector.
    Eigen::VectorXd initial_ground();
    double reference_energy_ev();

    //! Solve all J <= j_max for a channel, spreading work over `jobs` threads.
    void prepare(int channel, int j_max, int jobs);

    GeneratedSpectrum generate(double recoil_au, const GenerationOptions& opts);

  private:
    MoleculeModel model_;
    std::mutex mutex_;
    std::map<std::pair<int, int>, RadialEigenbasis> cache_;
    std::vector<int> gated_;
    double gate_change_ = 0;
};

//! J-resolved final-state spectrum at recoil momentum q [a.u.].
FinalStateSpectrum recoil_overlaps(const MoleculeModel& model, double recoil_au, int j_max, int v_max);

//! Probability-weighted mean J over lines of one channel (labelled lines only).
double mean_rotation(const FinalStateSpectrum& fss, int channel);

//---------------------------------------------------------------------------//
struct PseudoSpectrum
{
    int channel = 0;
    double channel_weight = 0;
    std::vector<double> weights;       //!< w_c |<T2|v>|^2
    std::vector<double> energies_ev;   //!< E_v - E_g
    double rotational_shift_ev = 0;    //!< q^2 / 2M
};

PseudoSpectrum pseudo_spectrum(FranckCondonSolver& solver, double recoil_au, int channel = 0);
PseudoSpectrum pseudo_spectrum(const MoleculeModel& model, double recoil_au, int channel = 0);

//! <chi_0| d^2/dR^2 |chi_0> of the parent ground state [bohr^-2].
double laplacian_expectation(FranckCondonSolver& solver);

//! Cumulative moments from the pseudo-spectrum. The second moment carries the
//! gradient term -w_c (q/M)^2 <T2|Laplacian|T2> / P_eps as written in the
//! operator expressions; the third moment is the shifted pseudo-spectrum value.
MomentSet operator_moments(FranckCondonSolver& solver, double recoil_au, double epsilon_ev, int channel = 0);
MomentSet operator_moments(const MoleculeModel& model, double recoil_au, double epsilon_ev, int channel = 0);

enum class CommutatorOrder
{
    derivative_left,  //!< [[H,D],D] - D [H,D]
    derivative_right  //!< [[H,D],D] - [H,D] D
};

//! <T2| C |T2> with C = -1/3 (q/M)^2 ([[H,D],D] - D[H,D]) for the channel
//! Hamiltonian at J = 0 [eV^3, signed].
double c_term_expectation(FranckCondonSolver& solver, double recoil_au, int channel = 0,
                          CommutatorOrder order = CommutatorOrder::derivative_left);
//! Magnitude of c_term_expectation.
double c_term_bound(const MoleculeModel& model, double recoil_au, int channel = 0);

}  // namespace betaspec
