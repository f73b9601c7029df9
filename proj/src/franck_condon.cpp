#include "betaspec/franck_condon.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <fmt/format.h>

#include "json.hpp"

#include "betaspec/bessel.hpp"
#include "betaspec/error.hpp"
#include "betaspec/parallel.hpp"
#include "betaspec/physics.hpp"

namespace betaspec {

namespace {

double hartree()
{
    return constants().hartree_ev;
}

void validate_morse(const MorseCurve& c, const RadialGrid& g, const std::string& what)
{
    if (!(c.depth_ev > 0 && c.range_per_bohr > 0 && c.eq_distance_bohr > 0))
        throw ConfigError(what + ": Morse parameters must be positive");
    if (!(g.r_max_bohr > c.eq_distance_bohr + 10 / c.range_per_bohr))
        throw ConfigError(what + ": grid must extend beyond R_e + 10/a");
    if (!(g.r_min_bohr < c.eq_distance_bohr))
        throw ConfigError(what + ": grid must start inside R_e");
}

}  // namespace

void MoleculeModel::validate() const
{
    if (grid.points < 256)
        throw ConfigError("radial grid needs at least 256 points");
    if (!(grid.r_min_bohr > 0 && grid.r_max_bohr > grid.r_min_bohr))
        throw ConfigError("radial grid bounds must satisfy 0 < R_min < R_max");
    if (!(initial_reduced_mass > 0 && final_reduced_mass > 0))
        throw ConfigError("reduced masses must be positive");
    validate_morse(initial, grid, "initial potential");
    if (channels.empty())
        throw ConfigError("model needs at least one final channel");
    if (channels.front().kind == CurveKind::lumped)
        throw ConfigError("channel 0 defines the reference level and cannot be lumped");
    double total = 0;
    for (std::size_t i = 0; i < channels.size(); ++i)
    {
        const auto& c = channels[i];
        if (!(c.weight >= 0 && c.weight <= 1))
            throw ConfigError(fmt::format("channel {}: weight must lie in [0, 1]", i));
        total += c.weight;
        if (c.kind == CurveKind::morse)
            validate_morse(c.morse, grid, fmt::format("channel {}", i));
        if (c.kind == CurveKind::coulomb && !(c.z_eff > 0))
            throw ConfigError(fmt::format("channel {}: z_eff must be positive", i));
    }
    if (total > 1 + 1e-12)
        throw ConfigError("channel weights sum above one");
    if (!(gate_tolerance_ev > 0))
        throw ConfigError("gate tolerance must be positive");
}

MoleculeModel default_t2_model()
{
    const auto& c = constants();
    MoleculeModel m;
    m.name = "T2-morse-default";
    // Born-Oppenheimer X state of hydrogen, isotope independent.
    m.initial = MorseCurve{4.7474, 1.02861, 1.4011};
    m.initial_reduced_mass = c.reduced_t_t();
    m.final_reduced_mass = c.reduced_t_he3();

    ChannelSpec ground;
    ground.label = "X ground";
    ground.kind = CurveKind::morse;
    ground.morse = MorseCurve{2.04, 1.4548, 1.4632};
    ground.weight = 0.574;
    m.channels.push_back(ground);

    ChannelSpec first;
    first.label = "repulsive Z/R, low";
    first.kind = CurveKind::coulomb;
    first.z_eff = 2;
    first.offset_ev = -13.2;
    first.weight = 0.173;
    first.recoil = RecoilTreatment::uniform_shift;
    m.channels.push_back(first);

    ChannelSpec second = first;
    second.label = "repulsive Z/R, high";
    second.offset_ev = 4.8;
    second.weight = 0.200;
    m.channels.push_back(second);

    ChannelSpec continuum;
    continuum.label = "lumped continuum";
    continuum.kind = CurveKind::lumped;
    continuum.line_energy_ev = 80;
    continuum.weight = 0.053;
    m.channels.push_back(continuum);
    return m;
}

//---------------------------------------------------------------------------//
// JSON
//---------------------------------------------------------------------------//
namespace {

using nlohmann::json;

MorseCurve morse_from(const json& j)
{
    return MorseCurve{j.at("D_e_eV").get<double>(), j.at("a_per_bohr").get<double>(),
                      j.at("R_e_bohr").get<double>()};
}

json morse_to(const MorseCurve& c)
{
    return json{{"D_e_eV", c.depth_ev}, {"a_per_bohr", c.range_per_bohr}, {"R_e_bohr", c.eq_distance_bohr}};
}

}  // namespace

MoleculeModel model_from_json(const std::string& text)
{
    MoleculeModel m;
    try
    {
        const auto j = json::parse(text);
        const auto& c = constants();
        m.name = j.value("name", std::string("unnamed"));
        m.initial = morse_from(j.at("initial").at("morse"));
        m.initial_reduced_mass = j.at("initial").value("reduced_mass_me", c.reduced_t_t());
        m.final_reduced_mass = j.value("final_reduced_mass_me", c.reduced_t_he3());
        for (const auto& jc : j.at("channels"))
        {
            ChannelSpec ch;
            ch.label = jc.value("label", std::string());
            const auto kind = jc.at("kind").get<std::string>();
            ch.weight = jc.at("weight").get<double>();
            if (kind == "morse")
            {
                ch.kind = CurveKind::morse;
                ch.morse = morse_from(jc);
                ch.offset_ev = jc.value("offset_eV", 0.0);
            }
            else if (kind == "coulomb")
            {
                ch.kind = CurveKind::coulomb;
                ch.z_eff = jc.value("z_eff", 2.0);
                ch.offset_ev = jc.at("offset_eV").get<double>();
            }
            else if (kind == "lumped")
            {
                ch.kind = CurveKind::lumped;
                ch.line_energy_ev = jc.at("energy_eV").get<double>();
            }
            else
            {
                throw ConfigError("unknown channel kind '" + kind + "'");
            }
            const auto recoil = jc.value("recoil", std::string("partial_waves"));
            if (recoil == "partial_waves")
                ch.recoil = RecoilTreatment::partial_waves;
            else if (recoil == "uniform_shift")
                ch.recoil = RecoilTreatment::uniform_shift;
            else
                throw ConfigError("unknown recoil treatment '" + recoil + "'");
            m.channels.push_back(ch);
        }
        if (j.contains("grid"))
        {
            const auto& g = j.at("grid");
            m.grid.r_min_bohr = g.value("R_min_bohr", m.grid.r_min_bohr);
            m.grid.r_max_bohr = g.value("R_max_bohr", m.grid.r_max_bohr);
            m.grid.points = g.value("points", m.grid.points);
        }
        m.convergence_gate = j.value("convergence_gate", true);
        m.gate_tolerance_ev = j.value("gate_tolerance_eV", 1e-8);
    }
    catch (const json::exception& e)
    {
        throw ConfigError(std::string("molecule model: ") + e.what());
    }
    m.validate();
    return m;
}

std::string model_to_json(const MoleculeModel& m)
{
    nlohmann::ordered_json j;
    j["name"] = m.name;
    j["initial"] = {{"morse", morse_to(m.initial)}, {"reduced_mass_me", m.initial_reduced_mass}};
    j["final_reduced_mass_me"] = m.final_reduced_mass;
    j["channels"] = nlohmann::ordered_json::array();
    for (const auto& c : m.channels)
    {
        nlohmann::ordered_json jc;
        jc["label"] = c.label;
        jc["weight"] = c.weight;
        switch (c.kind)
        {
            case CurveKind::morse:
                jc["kind"] = "morse";
                jc["D_e_eV"] = c.morse.depth_ev;
                jc["a_per_bohr"] = c.morse.range_per_bohr;
                jc["R_e_bohr"] = c.morse.eq_distance_bohr;
                jc["offset_eV"] = c.offset_ev;
                break;
            case CurveKind::coulomb:
                jc["kind"] = "coulomb";
                jc["z_eff"] = c.z_eff;
                jc["offset_eV"] = c.offset_ev;
                break;
            case CurveKind::lumped:
                jc["kind"] = "lumped";
                jc["energy_eV"] = c.line_energy_ev;
                break;
        }
        if (c.kind != CurveKind::lumped)
            jc["recoil"] = c.recoil == RecoilTreatment::partial_waves ? "partial_waves" : "uniform_shift";
        j["channels"].push_back(jc);
    }
    j["grid"] = {{"R_min_bohr", m.grid.r_min_bohr}, {"R_max_bohr", m.grid.r_max_bohr}, {"points", m.grid.points}};
    j["convergence_gate"] = m.convergence_gate;
    j["gate_tolerance_eV"] = m.gate_tolerance_ev;
    return j.dump(2) + "\n";
}

//---------------------------------------------------------------------------//
// Radial problem
//---------------------------------------------------------------------------//
namespace {

struct ChannelPotential
{
    CurveKind kind = CurveKind::morse;
    MorseCurve morse;
    double z_eff = 0;
    double offset = 0;  // hartree
    double mass = 0;

    double operator()(double r) const
    {
        if (kind == CurveKind::coulomb)
            return z_eff / r + offset;
        const double de = morse.depth_ev / hartree();
        const double x = 1 - std::exp(-morse.range_per_bohr * (r - morse.eq_distance_bohr));
        return de * x * x - de + offset;
    }
    double asymptote() const { return offset; }
};

ChannelPotential channel_potential(const MoleculeModel& model, int channel)
{
    ChannelPotential p;
    if (channel == initial_channel)
    {
        p.kind = CurveKind::morse;
        p.morse = model.initial;
        p.mass = model.initial_reduced_mass;
        return p;
    }
    if (channel < 0 || channel >= static_cast<int>(model.channels.size()))
        throw ConfigError(fmt::format("channel {} out of range", channel));
    const auto& c = model.channels[channel];
    if (c.kind == CurveKind::lumped)
        throw ConfigError(fmt::format("channel {} is lumped and has no radial structure", channel));
    p.kind = c.kind;
    p.morse = c.morse;
    p.z_eff = c.z_eff;
    p.offset = c.offset_ev / hartree();
    p.mass = model.final_reduced_mass;
    return p;
}

std::vector<double> make_grid(const RadialGrid& g)
{
    std::vector<double> r(g.points);
    const double h = g.step();
    for (int i = 0; i < g.points; ++i)
        r[i] = g.r_min_bohr + i * h;
    return r;
}

// -d^2/dx^2 in the sinc DVR on a uniform grid.
Eigen::MatrixXd sinc_neg_laplacian(int n, double h)
{
    Eigen::MatrixXd k(n, n);
    const double pi2 = std::numbers::pi * std::numbers::pi;
    for (int i = 0; i < n; ++i)
    {
        for (int j = 0; j < n; ++j)
        {
            if (i == j)
                k(i, j) = pi2 / (3 * h * h);
            else
            {
                const double d = i - j;
                k(i, j) = ((i - j) % 2 == 0 ? 2.0 : -2.0) / (d * d * h * h);
            }
        }
    }
    return k;
}

Eigen::MatrixXd sinc_derivative(int n, double h)
{
    Eigen::MatrixXd d = Eigen::MatrixXd::Zero(n, n);
    for (int i = 0; i < n; ++i)
    {
        for (int j = 0; j < n; ++j)
        {
            if (i != j)
                d(i, j) = ((i - j) % 2 == 0 ? 1.0 : -1.0) / ((i - j) * h);
        }
    }
    return d;
}

RadialEigenbasis solve_on_grid(const MoleculeModel& model, int channel, int rotation, const RadialGrid& g)
{
    if (rotation < 0)
        throw DomainError("rotational number must be non-negative");
    const auto pot = channel_potential(model, channel);
    const auto grid = make_grid(g);
    const double h = g.step();
    const int n = g.points;
    Eigen::MatrixXd ham = sinc_neg_laplacian(n, h) / (2 * pot.mass);
    const double centrifugal = rotation * (rotation + 1.0) / (2 * pot.mass);
    for (int i = 0; i < n; ++i)
        ham(i, i) += pot(grid[i]) + centrifugal / (grid[i] * grid[i]);

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(ham);
    if (es.info() != Eigen::Success)
        throw AccuracyError("radial eigen-solve failed");

    RadialEigenbasis b;
    b.channel = channel;
    b.rotation = rotation;
    b.grid = grid;
    b.step = h;
    b.vectors = es.eigenvectors();
    b.energies_ev.resize(n);
    b.resonant.resize(n);
    const double asym = pot.asymptote();
    for (int v = 0; v < n; ++v)
    {
        const double e = es.eigenvalues()(v);
        b.energies_ev[v] = e * hartree();
        b.resonant[v] = e >= asym;
        if (e < asym)
            ++b.bound_count;
        // Deterministic phase: largest component positive.
        Eigen::Index imax = 0;
        b.vectors.col(v).cwiseAbs().maxCoeff(&imax);
        if (b.vectors(imax, v) < 0)
            b.vectors.col(v) *= -1;
    }
    return b;
}

}  // namespace

RadialEigenbasis solve_radial(const MoleculeModel& model, int channel, int rotation)
{
    return solve_on_grid(model, channel, rotation, model.grid);
}

double check_grid_convergence(const MoleculeModel& model, int channel, int levels)
{
    if (channel != initial_channel && model.channels.at(channel).kind == CurveKind::lumped)
        return 0;
    RadialGrid fine = model.grid;
    fine.points = 2 * model.grid.points - 1;
    const auto coarse_b = solve_on_grid(model, channel, 0, model.grid);
    const auto fine_b = solve_on_grid(model, channel, 0, fine);
    // Box pseudo-states above the asymptote move with the effective box edge,
    // not with the discretization; only bound levels are gated.
    const int k = std::min({levels, coarse_b.bound_count, fine_b.bound_count});
    double worst = 0;
    for (int v = 0; v < k; ++v)
        worst = std::max(worst, std::fabs(coarse_b.energies_ev[v] - fine_b.energies_ev[v]));
    if (worst > model.gate_tolerance_ev)
    {
        throw AccuracyError(fmt::format("channel {}: lowest levels move by {:.3e} eV when the grid is refined "
                                        "(tolerance {:.1e} eV)",
                                        channel, worst, model.gate_tolerance_ev));
    }
    return worst;
}

std::vector<double> morse_levels(const MorseCurve& curve, double reduced_mass, int v_max)
{
    const double de = curve.depth_ev / hartree();
    const double omega = curve.range_per_bohr * std::sqrt(2 * de / reduced_mass);
    std::vector<double> out;
    for (int v = 0; v <= v_max; ++v)
    {
        const double x = v + 0.5;
        out.push_back((-de + omega * x - omega * omega * x * x / (4 * de)) * hartree());
    }
    return out;
}

std::vector<double> finite_element_levels(const MoleculeModel& model, int channel, int rotation, int n_elements,
                                          int count)
{
    if (n_elements < 4)
        throw ConfigError("need at least four elements");
    const auto pot = channel_potential(model, channel);
    const double a = model.grid.r_min_bohr;
    const double h = (model.grid.r_max_bohr - a) / n_elements;
    const int n = n_elements - 1;  // interior nodes
    const double centrifugal = rotation * (rotation + 1.0) / (2 * pot.mass);
    auto veff = [&](double r) { return pot(r) + centrifugal / (r * r); };

    Eigen::MatrixXd k = Eigen::MatrixXd::Zero(n, n);
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n, n);
    // 5-point Gauss-Legendre on [0, 1].
    const double gx[] = {0.046910077030668, 0.230765344947158, 0.5, 0.769234655052842, 0.953089922969332};
    const double gw[] = {0.118463442528095, 0.239314335249683, 0.284444444444444, 0.239314335249683,
                         0.118463442528095};
    for (int e = 0; e < n_elements; ++e)
    {
        const int left = e - 1;  // node index of the element's left end (-1 = wall)
        const int right = e;     // right end (n = wall)
        double vll = 0, vlr = 0, vrr = 0;
        for (int g = 0; g < 5; ++g)
        {
            const double t = gx[g];
            const double v = veff(a + (e + t) * h) * gw[g] * h;
            vll += v * (1 - t) * (1 - t);
            vlr += v * (1 - t) * t;
            vrr += v * t * t;
        }
        const double kin = 1 / (2 * pot.mass * h);
        auto add = [&](int i, int j, double kv, double mv) {
            if (i >= 0 && i < n && j >= 0 && j < n)
            {
                k(i, j) += kv;
                m(i, j) += mv;
            }
        };
        add(left, left, kin + vll, h / 3);
        add(right, right, kin + vrr, h / 3);
        add(left, right, -kin + vlr, h / 6);
        add(right, left, -kin + vlr, h / 6);
    }
    Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> es(k, m, Eigen::EigenvaluesOnly);
    if (es.info() != Eigen::Success)
        throw AccuracyError("finite-element eigen-solve failed");
    std::vector<double> out;
    for (int i = 0; i < std::min(count, n); ++i)
        out.push_back(es.eigenvalues()(i) * hartree());
    return out;
}

GridOperators grid_operators(const MoleculeModel& model, int channel, int rotation)
{
    const auto pot = channel_potential(model, channel);
    GridOperators ops;
    ops.grid = make_grid(model.grid);
    const double h = model.grid.step();
    const int n = model.grid.points;
    ops.neg_laplacian = sinc_neg_laplacian(n, h);
    ops.derivative = sinc_derivative(n, h);
    ops.hamiltonian = ops.neg_laplacian / (2 * pot.mass);
    const double centrifugal = rotation * (rotation + 1.0) / (2 * pot.mass);
    ops.potential.resize(n);
    for (int i = 0; i < n; ++i)
    {
        ops.potential[i] = pot(ops.grid[i]) + centrifugal / (ops.grid[i] * ops.grid[i]);
        ops.hamiltonian(i, i) += ops.potential[i];
    }
    return ops;
}

//---------------------------------------------------------------------------//
// Solver with cached eigenbases
//---------------------------------------------------------------------------//
FranckCondonSolver::FranckCondonSolver(MoleculeModel model) : model_(std::move(model))
{
    model_.validate();
}

const RadialEigenbasis& FranckCondonSolver::basis(int channel, int rotation)
{
    const auto key = std::make_pair(channel, rotation);
    {
        std::lock_guard lock(mutex_);
        if (auto it = cache_.find(key); it != cache_.end())
            return it->second;
    }
    bool need_gate = false;
    {
        std::lock_guard lock(mutex_);
        need_gate = model_.convergence_gate
                    && std::find(gated_.begin(), gated_.end(), channel) == gated_.end();
    }
    if (need_gate)
    {
        const double change = check_grid_convergence(model_, channel);
        std::lock_guard lock(mutex_);
        gated_.push_back(channel);
        gate_change_ = std::max(gate_change_, change);
    }
    auto b = solve_radial(model_, channel, rotation);
    std::lock_guard lock(mutex_);
    return cache_.try_emplace(key, std::move(b)).first->second;
}

Eigen::VectorXd FranckCondonSolver::initial_ground()
{
    return initial_basis().vectors.col(0);
}

double FranckCondonSolver::reference_energy_ev()
{
    return basis(0, 0).energies_ev.front();
}

void FranckCondonSolver::prepare(int channel, int j_max, int jobs)
{
    basis(channel, 0);  // runs the gate once, serially
    parallel_for(static_cast<std::size_t>(j_max + 1), jobs, [&](std::size_t j) { basis(channel, static_cast<int>(j)); });
}

GeneratedSpectrum FranckCondonSolver::generate(double recoil_au, const GenerationOptions& opts)
{
    if (!(recoil_au >= 0))
        throw DomainError("recoil momentum must be non-negative");
    if (opts.j_max < 0)
        throw ConfigError("j_max must be non-negative");

    GeneratedSpectrum out;
    const double e_ref = reference_energy_ev();
    out.reference_energy_ev = e_ref;
    const Eigen::VectorXd c0 = initial_ground();
    const auto& grid = initial_basis().grid;
    const int n = static_cast<int>(grid.size());

    std::vector<FssLine> lines;
    FssMetadata meta;
    meta.recoil_au = recoil_au;
    meta.provenance = model_.name + " sudden approximation";
    meta.truncation_tolerance = 0.01;

    // j_J(q R_i) table, row per grid point.
    std::vector<std::vector<double>> bessel;
    auto ensure_bessel = [&] {
        if (!bessel.empty())
            return;
        bessel.resize(n);
        for (int i = 0; i < n; ++i)
            bessel[i] = spherical_bessel_all(opts.j_max, recoil_au * grid[i]);
    };

    for (int c = 0; c < static_cast<int>(model_.channels.size()); ++c)
    {
        const auto& spec = model_.channels[c];
        ChannelSum sum;
        sum.channel = c;
        sum.weight = spec.weight;
        long double captured = 0, pruned = 0;

        auto emit = [&](double energy, double p, std::optional<int> j, std::optional<int> v) {
            captured += p;
            if (p < opts.min_probability)
            {
                pruned += p;
                return;
            }
            lines.push_back(FssLine{energy, p, c, j, v});
        };

        if (spec.kind == CurveKind::lumped)
        {
            emit(spec.line_energy_ev, spec.weight, std::nullopt, std::nullopt);
        }
        else if (spec.recoil == RecoilTreatment::uniform_shift)
        {
            const auto ps = pseudo_spectrum(*this, recoil_au, c);
            const int vmax = opts.v_max < 0 ? static_cast<int>(ps.weights.size()) - 1 : opts.v_max;
            for (int v = 0; v <= vmax && v < static_cast<int>(ps.weights.size()); ++v)
                emit(ps.energies_ev[v] + ps.rotational_shift_ev, ps.weights[v], std::nullopt, v);
        }
        else
        {
            ensure_bessel();
            prepare(c, opts.j_max, opts.jobs);
            std::vector<std::vector<std::pair<double, double>>> per_j(opts.j_max + 1);
            parallel_for(per_j.size(), opts.jobs, [&](std::size_t jj) {
                const int j = static_cast<int>(jj);
                const auto& b = basis(c, j);
                Eigen::VectorXd f(n);
                for (int i = 0; i < n; ++i)
                    f(i) = bessel[i][j] * c0(i);
                const Eigen::VectorXd amp = b.vectors.transpose() * f;
                const int vmax = opts.v_max < 0 ? n - 1 : std::min(opts.v_max, n - 1);
                auto& slot = per_j[jj];
                slot.reserve(vmax + 1);
                for (int v = 0; v <= vmax; ++v)
                    slot.emplace_back(b.energies_ev[v] - e_ref, spec.weight * (2 * j + 1) * amp(v) * amp(v));
            });
            for (int j = 0; j <= opts.j_max; ++j)
            {
                for (std::size_t v = 0; v < per_j[j].size(); ++v)
                    emit(per_j[j][v].first, per_j[j][v].second, j, static_cast<int>(v));
            }
        }

        sum.captured = static_cast<double>(captured);
        sum.pruned = static_cast<double>(pruned);
        if (spec.weight > 0 && sum.captured < 0.99 * spec.weight)
        {
            meta.warnings.push_back(fmt::format("channel {} truncation deficit {:.6e} of weight {:.6e}", c,
                                                sum.deficit(), spec.weight));
        }
        out.channels.push_back(sum);
    }

    // Ground-channel energies are differences against E_g itself; tiny negative
    // values cannot occur, but guard against -0.
    for (auto& l : lines)
    {
        if (l.channel == 0 && l.energy_ev < 0 && l.energy_ev > -1e-12)
            l.energy_ev = 0;
    }
    out.fss = FinalStateSpectrum::from_lines(std::move(lines), std::move(meta));
    out.gate_change_ev = gate_change_;
    return out;
}

FinalStateSpectrum recoil_overlaps(const MoleculeModel& model, double recoil_au, int j_max, int v_max)
{
    FranckCondonSolver solver(model);
    GenerationOptions opts;
    opts.j_max = j_max;
    opts.v_max = v_max;
    return solver.generate(recoil_au, opts).fss;
}

double mean_rotation(const FinalStateSpectrum& fss, int channel)
{
    long double num = 0, den = 0;
    for (const auto& l : fss.lines())
    {
        if (l.channel != channel || !l.rotation)
            continue;
        num += static_cast<long double>(l.probability) * *l.rotation;
        den += l.probability;
    }
    if (!(den > 0))
        throw ValidationError(fmt::format("channel {} has no rotationally labelled lines", channel));
    return static_cast<double>(num / den);
}

//---------------------------------------------------------------------------//
// Operator formulation
//---------------------------------------------------------------------------//
PseudoSpectrum pseudo_spectrum(FranckCondonSolver& solver, double recoil_au, int channel)
{
    const auto& model = solver.model();
    const auto& spec = model.channels.at(channel);
    const auto& b = solver.basis(channel, 0);
    const double e_ref = solver.reference_energy_ev();
    const Eigen::VectorXd ov = b.vectors.transpose() * solver.initial_ground();

    PseudoSpectrum ps;
    ps.channel = channel;
    ps.channel_weight = spec.weight;
    ps.rotational_shift_ev = rotational_recoil_shift(recoil_au, model.final_reduced_mass);
    ps.weights.resize(b.size());
    ps.energies_ev.resize(b.size());
    for (std::size_t v = 0; v < b.size(); ++v)
    {
        ps.weights[v] = spec.weight * ov(v) * ov(v);
        ps.energies_ev[v] = b.energies_ev[v] - e_ref;
    }
    return ps;
}

PseudoSpectrum pseudo_spectrum(const MoleculeModel& model, double recoil_au, int channel)
{
    FranckCondonSolver solver(model);
    return pseudo_spectrum(solver, recoil_au, channel);
}

double laplacian_expectation(FranckCondonSolver& solver)
{
    const auto& b = solver.initial_basis();
    const Eigen::VectorXd c0 = solver.initial_ground();
    const Eigen::MatrixXd k = sinc_neg_laplacian(static_cast<int>(b.size()), b.step);
    return -c0.dot(k * c0);
}

MomentSet operator_moments(FranckCondonSolver& solver, double recoil_au, double epsilon_ev, int channel)
{
    const auto ps = pseudo_spectrum(solver, recoil_au, channel);
    const double s = ps.rotational_shift_ev;
    long double p = 0, m1 = 0, m2 = 0, m3 = 0;
    for (std::size_t v = 0; v < ps.weights.size(); ++v)
    {
        const long double e = ps.energies_ev[v] + s;
        if (!(e < epsilon_ev))
            continue;
        const long double w = ps.weights[v];
        p += w;
        m1 += w * e;
        m2 += w * e * e;
        m3 += w * e * e * e;
    }
    MomentSet out;
    out.epsilon_ev = epsilon_ev;
    out.open_probability = static_cast<double>(p);
    if (!(p > 0))
        return out;
    const auto& model = solver.model();
    const double qm = recoil_au / model.final_reduced_mass;
    const double ha = constants().hartree_ev;
    const double gradient = -ps.channel_weight * qm * qm * laplacian_expectation(solver) * ha * ha;
    out.moments = EnergyMoments{static_cast<double>(m1 / p), static_cast<double>((m2 + gradient) / p),
                                static_cast<double>(m3 / p)};
    return out;
}

MomentSet operator_moments(const MoleculeModel& model, double recoil_au, double epsilon_ev, int channel)
{
    FranckCondonSolver solver(model);
    return operator_moments(solver, recoil_au, epsilon_ev, channel);
}

double c_term_expectation(FranckCondonSolver& solver, double recoil_au, int channel, CommutatorOrder order)
{
    const auto& model = solver.model();
    const auto ops = grid_operators(model, channel, 0);
    const Eigen::VectorXd c0 = solver.initial_ground();
    const auto& ham = ops.hamiltonian;
    const auto& d = ops.derivative;
    // X = [H, D] applied to a vector without forming the product matrices.
    auto apply_x = [&](const Eigen::VectorXd& u) -> Eigen::VectorXd {
        return ham * (d * u) - d * (ham * u);
    };
    const Eigen::VectorXd xv = apply_x(c0);
    const Eigen::VectorXd dxv = d * xv;
    // [[H,D],D] v = X D v - D X v
    const Eigen::VectorXd yv = apply_x(d * c0) - dxv;
    const Eigen::VectorXd second = order == CommutatorOrder::derivative_left ? dxv : apply_x(d * c0);
    const double bracket = c0.dot(yv - second);
    const double qm = recoil_au / model.final_reduced_mass;
    const double ha = constants().hartree_ev;
    return -qm * qm / 3 * bracket * ha * ha * ha;
}

double c_term_bound(const MoleculeModel& model, double recoil_au, int channel)
{
    FranckCondonSolver solver(model);
    return std::fabs(c_term_expectation(solver, recoil_au, channel));
}

}  // namespace betaspec
