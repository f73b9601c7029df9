#include "betaspec/kernel.hpp"

#include <cmath>

#include "betaspec/error.hpp"
#include "betaspec/parallel.hpp"
#include "betaspec/simd/kernels.hpp"

namespace betaspec {

void SpectrumParams::validate() const
{
    if (!(amplitude > 0 && std::isfinite(amplitude)))
        throw ConfigError("amplitude must be positive");
    if (!(endpoint_ev >= 18000 && endpoint_ev <= 19000))
        throw ConfigError("endpoint must lie in [18000, 19000] eV");
    if (!(std::fabs(m2_ev2) < 1e4))
        throw ConfigError("|m_nu^2| must stay below 1e4 eV^2");
    if (!(background >= 0))
        throw ConfigError("background must be non-negative");
    if (charge < 0)
        throw ConfigError("charge must be non-negative");
}

SpectrumForm parse_spectrum_form(std::string_view tag)
{
    if (tag == "integral")
        return SpectrumForm::integral;
    if (tag == "differential")
        return SpectrumForm::differential;
    if (tag == "linearized")
        return SpectrumForm::linearized;
    if (tag == "moment")
        return SpectrumForm::moment;
    throw ConfigError("unknown spectrum form '" + std::string(tag) + "'");
}

std::string_view to_string(SpectrumForm f)
{
    switch (f)
    {
        case SpectrumForm::integral: return "integral";
        case SpectrumForm::differential: return "differential";
        case SpectrumForm::linearized: return "linearized";
        case SpectrumForm::moment: return "moment";
    }
    return "?";
}

double effective_endpoint(double kinetic_ev, double endpoint_ev)
{
    return endpoint_ev - (endpoint_ev - kinetic_ev) / constants().triton_mass_ratio;
}

double available_energy(double kinetic_ev, const SpectrumParams& p)
{
    const double w0 = p.endpoint_drift ? effective_endpoint(kinetic_ev, p.endpoint_ev) : p.endpoint_ev;
    return w0 - kinetic_ev;
}

double phase_space_prefactor(double kinetic_ev, int charge)
{
    const auto k = kinematics(kinetic_ev);
    const double f = charge == 0 ? 1.0 : fermi_factor(k.momentum.pc_ev, charge);
    return f * k.total_ev * k.momentum.pc_ev;
}

namespace {

// Lines are sorted, so only the prefix with E_n < e can be open.
std::span<const double> open_energies(const FinalStateSpectrum& fss, double available_ev)
{
    return fss.energies().first(fss.open_count(available_ev));
}

std::span<const double> open_probabilities(const FinalStateSpectrum& fss, double available_ev)
{
    return fss.probabilities().first(fss.open_count(available_ev));
}

}  // namespace

double integral_line_sum(const FinalStateSpectrum& fss, double available_ev, double m2_ev2)
{
    return simd::integral_sum(open_energies(fss, available_ev), open_probabilities(fss, available_ev),
                              available_ev, m2_ev2);
}

double differential_line_sum(const FinalStateSpectrum& fss, double available_ev, double m2_ev2)
{
    return simd::differential_sum(open_energies(fss, available_ev), open_probabilities(fss, available_ev),
                                  available_ev, m2_ev2);
}

double linearized_line_sum(const FinalStateSpectrum& fss, double available_ev, double m2_ev2)
{
    return simd::linear_sum(open_energies(fss, available_ev), open_probabilities(fss, available_ev),
                            available_ev, m2_ev2);
}

double differential_spectrum(double kinetic_ev, const SpectrumParams& p, const FinalStateSpectrum& fss)
{
    const double s = differential_line_sum(fss, available_energy(kinetic_ev, p), p.m2_ev2);
    return s == 0 ? 0 : p.amplitude * phase_space_prefactor(kinetic_ev, p.charge) * s;
}

double integral_spectrum(double kinetic_ev, const SpectrumParams& p, const FinalStateSpectrum& fss)
{
    const double s = integral_line_sum(fss, available_energy(kinetic_ev, p), p.m2_ev2);
    return s == 0 ? 0 : p.amplitude / 3 * phase_space_prefactor(kinetic_ev, p.charge) * s;
}

double linearized_spectrum(double kinetic_ev, const SpectrumParams& p, const FinalStateSpectrum& fss)
{
    const double s = linearized_line_sum(fss, available_energy(kinetic_ev, p), p.m2_ev2);
    return s == 0 ? 0 : p.amplitude / 3 * phase_space_prefactor(kinetic_ev, p.charge) * s;
}

double moment_spectrum(double kinetic_ev, const SpectrumParams& p, const FinalStateSpectrum& fss)
{
    const double s = moment_form_spectrum_term(fss, available_energy(kinetic_ev, p), p.m2_ev2);
    return s == 0 ? 0 : p.amplitude / 3 * phase_space_prefactor(kinetic_ev, p.charge) * s;
}

double evaluate_spectrum(SpectrumForm form, double kinetic_ev, const SpectrumParams& p,
                         const FinalStateSpectrum& fss)
{
    switch (form)
    {
        case SpectrumForm::integral: return integral_spectrum(kinetic_ev, p, fss);
        case SpectrumForm::differential: return differential_spectrum(kinetic_ev, p, fss);
        case SpectrumForm::linearized: return linearized_spectrum(kinetic_ev, p, fss);
        case SpectrumForm::moment: return moment_spectrum(kinetic_ev, p, fss);
    }
    return 0;
}

std::vector<double> spectrum_on_grid(SpectrumForm form, std::span<const double> kinetic_ev,
                                     const SpectrumParams& p, const FinalStateSpectrum& fss, int jobs)
{
    std::vector<double> out(kinetic_ev.size());
    parallel_for(out.size(), jobs, [&](std::size_t i) { out[i] = evaluate_spectrum(form, kinetic_ev[i], p, fss); });
    return out;
}

UniformShifts uniform_shifts(Species species, int initial_rotation, double eq_distance_bohr, double kinetic_ev)
{
    if (initial_rotation < 0)
        throw DomainError("rotational number must be non-negative");
    if (!(eq_distance_bohr > 0))
        throw DomainError("equilibrium distance must be positive");
    const auto& c = constants();
    UniformShifts s;
    s.recoil_ev = recoil_parts(kinetic_ev, species).rotational_ev;
    if (initial_rotation > 0)
    {
        const double mass = species == Species::t2 ? c.reduced_t_he3() : c.reduced_he3_p();
        const double x = initial_rotation + 0.5;
        s.initial_rotation_ev = x * x / (2 * mass * eq_distance_bohr * eq_distance_bohr) * c.hartree_ev;
    }
    return s;
}

}  // namespace betaspec
