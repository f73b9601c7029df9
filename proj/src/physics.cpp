#include "betaspec/physics.hpp"

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <numbers>
#include <sstream>

#include "json.hpp"

#include "betaspec/error.hpp"

namespace betaspec {

Constants default_constants()
{
    Constants c;
    c.version = "codata-2018.1";
    c.electron_rest_energy_ev = 510998.95000;
    c.fine_structure = 7.2973525693e-3;
    c.hartree_ev = 27.211386245988;
    c.bohr_m = 5.29177210903e-11;
    c.triton_mass_ratio = 5496.92153573;
    c.helion_mass_ratio = 5495.88528007;
    c.proton_mass_ratio = 1836.15267343;
    return c;
}

namespace {

void check_constants(const Constants& c)
{
    if (!(c.electron_rest_energy_ev >= 510998 && c.electron_rest_energy_ev <= 511000))
        throw ConfigError("electron rest energy outside [510998, 511000] eV");
    for (double r : {c.triton_mass_ratio, c.helion_mass_ratio, c.proton_mass_ratio})
    {
        if (!(r > 1000))
            throw ConfigError("mass ratios must exceed 1000");
    }
    if (!(c.fine_structure > 0 && c.fine_structure < 0.01))
        throw ConfigError("fine-structure constant out of range");
    if (!(c.hartree_ev > 0) || !(c.bohr_m > 0))
        throw ConfigError("unit conversions must be positive");
}

}  // namespace

Constants constants_from_json(std::string_view text)
{
    nlohmann::json j;
    try
    {
        j = nlohmann::json::parse(text);
    }
    catch (const nlohmann::json::exception& e)
    {
        throw ConfigError(std::string("constants document: ") + e.what());
    }
    Constants c;
    try
    {
        c.version = j.at("version").get<std::string>();
        c.electron_rest_energy_ev = j.at("electron_rest_energy_ev").get<double>();
        c.fine_structure = j.at("fine_structure").get<double>();
        c.hartree_ev = j.at("hartree_ev").get<double>();
        c.bohr_m = j.at("bohr_m").get<double>();
        c.triton_mass_ratio = j.at("triton_mass_ratio").get<double>();
        c.helion_mass_ratio = j.at("helion_mass_ratio").get<double>();
        c.proton_mass_ratio = j.at("proton_mass_ratio").get<double>();
    }
    catch (const nlohmann::json::exception& e)
    {
        throw ConfigError(std::string("constants document: ") + e.what());
    }
    check_constants(c);
    return c;
}

std::string constants_to_json(const Constants& c)
{
    nlohmann::ordered_json j;
    j["version"] = c.version;
    j["electron_rest_energy_ev"] = c.electron_rest_energy_ev;
    j["fine_structure"] = c.fine_structure;
    j["hartree_ev"] = c.hartree_ev;
    j["bohr_m"] = c.bohr_m;
    j["triton_mass_ratio"] = c.triton_mass_ratio;
    j["helion_mass_ratio"] = c.helion_mass_ratio;
    j["proton_mass_ratio"] = c.proton_mass_ratio;
    j["derived"] = {{"reduced_mass_t_he3", c.reduced_t_he3()},
                    {"reduced_mass_t_t", c.reduced_t_t()},
                    {"atomic_momentum_ev", c.atomic_momentum_ev()}};
    return j.dump(2) + "\n";
}

const Constants& constants()
{
    static const Constants instance = [] {
        const char* path = std::getenv("BETASPEC_CONSTANTS");
        if (path == nullptr || *path == '\0')
            return default_constants();
        std::ifstream in(path);
        if (!in)
            throw ConfigError(std::string("cannot open constants file ") + path);
        std::stringstream ss;
        ss << in.rdbuf();
        return constants_from_json(ss.str());
    }();
    return instance;
}

//---------------------------------------------------------------------------//
Momentum momentum_from_kinetic(double kinetic_ev)
{
    if (!(kinetic_ev >= 0))
        throw DomainError("kinetic energy must be non-negative");
    const auto& c = constants();
    Momentum m;
    m.pc_ev = std::sqrt(kinetic_ev * (kinetic_ev + 2 * c.electron_rest_energy_ev));
    m.recoil_au = 0.5 * m.pc_ev / c.atomic_momentum_ev();
    return m;
}

double kinetic_from_momentum(double pc_ev)
{
    if (!(pc_ev >= 0))
        throw DomainError("momentum must be non-negative");
    const double mc2 = constants().electron_rest_energy_ev;
    // Rationalized form; avoids cancellation in sqrt(p^2 + m^2) - m for small p.
    return pc_ev * pc_ev / (std::sqrt(pc_ev * pc_ev + mc2 * mc2) + mc2);
}

Kinematics kinematics(double kinetic_ev)
{
    Kinematics k;
    k.momentum = momentum_from_kinetic(kinetic_ev);
    k.kinetic_ev = kinetic_ev;
    k.total_ev = kinetic_ev + constants().electron_rest_energy_ev;
    return k;
}

double fermi_factor(double pc_ev, int charge)
{
    if (!(pc_ev > 0))
        throw DomainError("Fermi factor diverges at zero momentum");
    if (charge < 1)
        throw DomainError("Fermi factor requires Z >= 1");
    const auto& c = constants();
    const double total = std::sqrt(pc_ev * pc_ev + c.electron_rest_energy_ev * c.electron_rest_energy_ev);
    const double eta = charge * c.fine_structure * total / pc_ev;
    const double x = 2 * std::numbers::pi * eta;
    return x / -std::expm1(-x);
}

//---------------------------------------------------------------------------//
Species parse_species(std::string_view tag)
{
    if (tag == "T2")
        return Species::t2;
    if (tag == "TH")
        return Species::th;
    throw ConfigError("unknown molecular species '" + std::string(tag) + "' (expected T2 or TH)");
}

std::string_view to_string(Species s)
{
    return s == Species::t2 ? "T2" : "TH";
}

RecoilParts recoil_parts(double kinetic_ev, Species species)
{
    const auto& c = constants();
    const double p = momentum_from_kinetic(kinetic_ev).pc_ev;
    const double mt = c.triton_mass_ratio * c.electron_rest_energy_ev;
    RecoilParts r;
    if (species == Species::t2)
    {
        r.center_of_mass_ev = p * p / (4 * mt);
        r.rotational_ev = p * p / (4 * mt);
    }
    else
    {
        const double mp = c.proton_mass_ratio * c.electron_rest_energy_ev;
        r.center_of_mass_ev = p * p / (2 * (mt + mp));
        r.rotational_ev = p * p / (2 * mt * (1 + mt / mp));
    }
    return r;
}

double composite_recoil(double kinetic_ev, Species species)
{
    if (!(kinetic_ev >= 0))
        throw DomainError("kinetic energy must be non-negative");
    const auto& c = constants();
    // Both species reduce to p^2 / 2M_t; the split is in recoil_parts.
    (void)species;
    return kinetic_ev / c.triton_mass_ratio * (1 + kinetic_ev / (2 * c.electron_rest_energy_ev));
}

double rotational_recoil_shift(double recoil_au, double reduced_mass)
{
    if (!(reduced_mass > 0))
        throw DomainError("reduced mass must be positive");
    return recoil_au * recoil_au / (2 * reduced_mass) * constants().hartree_ev;
}

}  // namespace betaspec
