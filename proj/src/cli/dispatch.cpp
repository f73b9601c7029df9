#include <cstdlib>
#include <iostream>
#include <optional>

#include <fmt/format.h>

#include "CLI11.hpp"
#include "json.hpp"

#include "betaspec/bias.hpp"
#include "betaspec/cli.hpp"
#include "betaspec/error.hpp"
#include "betaspec/fit.hpp"
#include "betaspec/franck_condon.hpp"
#include "betaspec/fss.hpp"
#include "betaspec/io_util.hpp"
#include "betaspec/kernel.hpp"
#include "betaspec/parallel.hpp"
#include "betaspec/physics.hpp"
#include "betaspec/response.hpp"
#include "betaspec/simd/kernels.hpp"

namespace betaspec::cli {

namespace {

namespace fs = std::filesystem;

//! Numerical convergence failure that should map to exit status 2.
class ConvergenceFailure : public std::runtime_error
{
  public:
    using std::runtime_error::runtime_error;
};

struct Options
{
    int jobs = 0;
    std::string simd;

    // constants dump
    std::string constants_out;

    // shared inputs
    std::string model_path;
    std::string fss_path;
    std::string params_path;
    std::string grid;
    std::string out;

    // fss gen
    std::optional<double> q_au;
    std::optional<double> kinetic_ev;
    int j_max = 60;
    int v_max = -1;
    double min_probability = 0;

    // spectrum
    std::string form = "integral";

    // convolve
    double sigma_ev = 1;
    double k_sigma = 6;
    double step_ev = 0;
    std::optional<double> exposure;
    std::optional<std::uint64_t> seed;

    // fit
    std::string data_path;
    std::string config_path;

    // bias-scan
    std::string spec_path;
    std::optional<int> replications;

    // fig2
    double m_nu_ev = 1;
    double w0_ev = 18575;
};

SpectrumParams load_params(const Options& o)
{
    return o.params_path.empty() ? SpectrumParams{} : params_from_json(read_text_file(o.params_path));
}

void require_file(const std::string& path, const char* what)
{
    if (path.empty())
        throw ConfigError(fmt::format("missing {} path", what));
    if (!fs::exists(path))
        throw ConfigError(fmt::format("{} file '{}' does not exist", what, path));
}

Manifest manifest_for(const std::string& sub, const std::vector<std::string>& args, const Options& o)
{
    Manifest m;
    m.subcommand = sub;
    m.arguments = args;
    m.jobs = resolve_jobs(o.jobs);
    return m;
}

//---------------------------------------------------------------------------//
int run_constants(const Options& o, Manifest m)
{
    const auto text = constants_to_json(constants());
    if (o.constants_out.empty() || o.constants_out == "-")
    {
        std::cout << text;
        return 0;
    }
    write_text_file(o.constants_out, text);
    m.outputs.push_back(o.constants_out);
    write_manifest(m, o.constants_out);
    return 0;
}

int run_fss_gen(const Options& o, Manifest m)
{
    MoleculeModel model = default_t2_model();
    if (!o.model_path.empty())
    {
        require_file(o.model_path, "model");
        model = model_from_json(read_text_file(o.model_path));
        m.inputs.push_back(o.model_path);
    }
    if (o.q_au.has_value() == o.kinetic_ev.has_value())
        throw ConfigError("give exactly one of --q or --kinetic");
    const double q = o.q_au ? *o.q_au : momentum_from_kinetic(*o.kinetic_ev).recoil_au;
    if (o.out.empty())
        throw ConfigError("--out is required");

    FranckCondonSolver solver(model);
    GenerationOptions opts;
    opts.j_max = o.j_max;
    opts.v_max = o.v_max;
    opts.min_probability = o.min_probability;
    opts.jobs = o.jobs;
    const auto gen = solver.generate(q, opts);
    save_fss(gen.fss, o.out);

    nlohmann::ordered_json side;
    side["q_au"] = q;
    side["model"] = model.name;
    side["model_hash"] = hex64(fnv1a(model_to_json(model)));
    side["grid"] = {{"R_min_bohr", model.grid.r_min_bohr},
                    {"R_max_bohr", model.grid.r_max_bohr},
                    {"points", model.grid.points}};
    side["j_max"] = o.j_max;
    side["v_max"] = o.v_max;
    side["min_probability"] = o.min_probability;
    side["reference_energy_eV"] = gen.reference_energy_ev;
    side["gate_change_eV"] = gen.gate_change_ev;
    auto channels = nlohmann::ordered_json::array();
    for (const auto& c : gen.channels)
    {
        channels.push_back({{"channel", c.channel},
                            {"weight", c.weight},
                            {"captured", c.captured},
                            {"pruned", c.pruned},
                            {"truncation_deficit", c.deficit()}});
    }
    side["channels"] = channels;
    side["lines"] = gen.fss.size();
    side["total_probability"] = gen.fss.total_probability();
    side["warnings"] = gen.fss.metadata().warnings;
    auto side_path = fs::path(o.out);
    side_path += ".json";
    write_text_file(side_path, side.dump(2) + "\n");

    m.outputs = {o.out, side_path};
    write_manifest(m, o.out);
    for (const auto& w : gen.fss.metadata().warnings)
        std::cerr << "warning: " << w << "\n";
    return 0;
}

int run_fss_moments(const Options& o, Manifest m)
{
    require_file(o.fss_path, "FSS");
    if (o.out.empty())
        throw ConfigError("--out is required");
    const auto fss = load_fss(o.fss_path);
    m.inputs.push_back(o.fss_path);
    std::string body = "epsilon_eV,P_eps,mean_eV,second_eV2,third_eV3\n";
    for (double e : parse_grid(o.grid))
    {
        const auto ms = cumulative_moments(fss, e);
        if (ms.moments)
        {
            body += fmt::format("{},{},{},{},{}\n", format_g12(e), format_g12(ms.open_probability),
                                format_g12(ms.moments->mean), format_g12(ms.moments->second),
                                format_g12(ms.moments->third));
        }
        else
        {
            body += fmt::format("{},0,absent,absent,absent\n", format_g12(e));
        }
    }
    write_text_file(o.out, body);
    m.outputs.push_back(o.out);
    write_manifest(m, o.out);
    return 0;
}

int run_spectrum(const Options& o, Manifest m)
{
    require_file(o.fss_path, "FSS");
    if (o.out.empty())
        throw ConfigError("--out is required");
    const auto fss = load_fss(o.fss_path);
    m.inputs.push_back(o.fss_path);
    if (!o.params_path.empty())
        m.inputs.push_back(o.params_path);
    const auto p = load_params(o);
    const auto grid = parse_grid(o.grid);
    const auto rate = spectrum_on_grid(parse_spectrum_form(o.form), grid, p, fss, o.jobs);
    std::string body = "epsilon_beta_eV,rate\n";
    for (std::size_t i = 0; i < grid.size(); ++i)
        body += fmt::format("{},{}\n", format_g12(grid[i]), format_g12(rate[i]));
    write_text_file(o.out, body);
    m.outputs.push_back(o.out);
    write_manifest(m, o.out);
    return 0;
}

int run_convolve(const Options& o, Manifest m)
{
    require_file(o.fss_path, "FSS");
    if (o.out.empty())
        throw ConfigError("--out is required");
    const auto fss = load_fss(o.fss_path);
    m.inputs.push_back(o.fss_path);
    if (!o.params_path.empty())
        m.inputs.push_back(o.params_path);
    const auto p = load_params(o);
    ResponseModel r{o.sigma_ev, o.k_sigma, o.step_ev};
    r.validate();
    const auto grid = parse_grid(o.grid);

    if (o.seed || o.exposure)
    {
        if (!o.seed || !o.exposure)
            throw ConfigError("pseudo-data needs both --exposure and --seed");
        const auto d = generate_pseudodata(p, fss, r, grid, *o.exposure, *o.seed, o.jobs);
        save_dataset(d, o.out);
        auto side = fs::path(o.out);
        side += ".json";
        m.outputs = {o.out, side};
        m.seed = *o.seed;
        write_manifest(m, o.out);
        return 0;
    }

    SpectrumParams unit = p;
    const SpectrumFunction f = [&](double eps) { return eps > 0 ? integral_spectrum(eps, unit, fss) : 0.0; };
    const auto smeared = convolve_at(f, r, grid, o.jobs);
    std::string body = "epsilon_beta_eV,smeared_rate\n";
    for (std::size_t i = 0; i < grid.size(); ++i)
        body += fmt::format("{},{}\n", format_g12(grid[i]), format_g12(smeared[i]));
    write_text_file(o.out, body);
    m.outputs.push_back(o.out);
    write_manifest(m, o.out);
    return 0;
}

int run_fit(const Options& o, Manifest m)
{
    require_file(o.data_path, "dataset");
    require_file(o.config_path, "fit config");
    require_file(o.fss_path, "FSS");
    if (o.out.empty())
        throw ConfigError("--out is required");
    const auto data = load_dataset(o.data_path);
    auto config = fit_config_from_json(read_text_file(o.config_path));
    config.jobs = o.jobs;
    const auto fss = load_fss(o.fss_path);
    m.inputs = {o.data_path, o.config_path, o.fss_path};
    auto side = fs::path(o.data_path);
    side += ".json";
    if (fs::exists(side))
    {
        m.inputs.push_back(side);
        m.seed = data.seed;
    }
    const auto result = minimize(data, config, fss);
    write_text_file(o.out, fit_result_to_json(result));
    m.outputs.push_back(o.out);
    write_manifest(m, o.out);
    if (!result.converged)
        throw ConvergenceFailure("fit did not converge: " + result.status);
    return 0;
}

int run_bias_scan(const Options& o, Manifest m)
{
    require_file(o.spec_path, "scan spec");
    require_file(o.fss_path, "FSS");
    if (o.out.empty())
        throw ConfigError("--out is required");
    auto spec = scan_spec_from_json(read_text_file(o.spec_path));
    if (o.replications)
        spec.replications = *o.replications;
    spec.jobs = o.jobs;
    if (o.seed)
        spec.base_seed = *o.seed;
    spec.validate();
    const auto fss = load_fss(o.fss_path);
    m.inputs = {o.spec_path, o.fss_path};
    m.seed = spec.base_seed;
    const auto result = bias_scan(spec, fss);
    write_scan(result, spec, o.out);
    auto side = fs::path(o.out);
    side += ".json";
    m.outputs = {o.out, side};
    write_manifest(m, o.out);
    bool flagged = false;
    for (const auto& row : result.rows)
        flagged = flagged || row.flagged;
    if (flagged)
        throw ConvergenceFailure("more than 10 % of the fits in a window failed to converge");
    return 0;
}

int run_fig2(const Options& o, Manifest m)
{
    require_file(o.fss_path, "FSS");
    const auto fss = load_fss(o.fss_path);
    m.inputs.push_back(o.fss_path);
    if (!(o.w0_ev > 0))
        throw ConfigError("--w0 must be positive");
    const auto depths = parse_grid(o.grid.empty() ? std::string("2:300:1") : o.grid);
    const auto study = fig2_study(fss, o.m_nu_ev, depths);
    const std::string out = o.out.empty() ? std::string("fig2.csv") : o.out;

    // Report against the kinetic energy as well: eps = W0 - depth.
    std::string body = "epsilon_beta_eV,depth_eV,exact_sum,linearized_sum,abs_difference,trend_m4_over_depth\n";
    for (const auto& r : study.rows)
    {
        body += fmt::format("{},{},{},{},{},{}\n", format_g12(o.w0_ev - r.depth_ev), format_g12(r.depth_ev),
                            format_g12(r.exact), format_g12(r.linear), format_g12(r.difference),
                            format_g12(r.trend));
    }
    write_text_file(out, body);
    nlohmann::ordered_json j;
    j["m_nu_eV"] = o.m_nu_ev;
    j["W0_eV"] = o.w0_ev;
    j["points"] = study.rows.size();
    j["envelope_constant"] = study.envelope_constant;
    j["fitted_constant"] = study.fitted_constant;
    j["bound_holds_with_envelope"] = study.bounded_by(study.envelope_constant);
    auto side = fs::path(out);
    side += ".json";
    write_text_file(side, j.dump(2) + "\n");
    m.outputs = {out, side};
    write_manifest(m, out);
    return 0;
}

}  // namespace

int dispatch(const std::vector<std::string>& args)
{
    CLI::App app{"betaspec: molecular final-state spectra and beta-spectrum endpoint fits"};
    app.fallthrough();
    app.require_subcommand(1);
    Options o;
    app.add_option("--jobs,-j", o.jobs, "worker threads (0 = all cores)")->check(CLI::NonNegativeNumber);
    app.add_option("--simd", o.simd, "force a kernel instruction set")->check(CLI::IsMember({"scalar", "avx2"}));

    auto* constants_cmd = app.add_subcommand("constants", "physical constants");
    constants_cmd->require_subcommand(1);
    auto* dump = constants_cmd->add_subcommand("dump", "write the constants in use as JSON");
    dump->add_option("--out", o.constants_out, "output path (default stdout)");

    auto* fss_cmd = app.add_subcommand("fss", "final-state spectra");
    fss_cmd->require_subcommand(1);
    auto* gen = fss_cmd->add_subcommand("gen", "generate a synthetic FSS");
    gen->add_option("--model", o.model_path, "molecule model JSON (default built-in T2)");
    gen->add_option("--q", o.q_au, "recoil momentum [a.u.]");
    gen->add_option("--kinetic", o.kinetic_ev, "beta kinetic energy [eV] defining q");
    gen->add_option("--jmax", o.j_max, "largest final J")->check(CLI::NonNegativeNumber);
    gen->add_option("--vmax", o.v_max, "largest v per J (-1 = all)");
    gen->add_option("--min-prob", o.min_probability, "drop lines below this probability");
    gen->add_option("--out", o.out, "FSS table path")->required();

    auto* moments = fss_cmd->add_subcommand("moments", "cumulative moments on an energy grid");
    moments->add_option("--fss", o.fss_path)->required();
    moments->add_option("--eps", o.grid, "energies start:stop:step or a,b,c")->required();
    moments->add_option("--out", o.out)->required();

    auto* spectrum = app.add_subcommand("spectrum", "evaluate a beta spectrum");
    spectrum->add_option("--params", o.params_path, "spectrum parameters JSON");
    spectrum->add_option("--fss", o.fss_path)->required();
    spectrum->add_option("--grid", o.grid, "kinetic energies start:stop:step or a,b,c")->required();
    spectrum->add_option("--form", o.form)->check(CLI::IsMember({"integral", "differential", "linearized", "moment"}));
    spectrum->add_option("--out", o.out)->required();

    auto* convolve_cmd = app.add_subcommand("convolve", "smear the integral spectrum; with --exposure and --seed "
                                                        "draw a Poisson dataset");
    convolve_cmd->add_option("--params", o.params_path);
    convolve_cmd->add_option("--fss", o.fss_path)->required();
    convolve_cmd->add_option("--grid", o.grid, "bin centers")->required();
    convolve_cmd->add_option("--sigma", o.sigma_ev, "Gaussian width [eV]");
    convolve_cmd->add_option("--k-sigma", o.k_sigma, "support in units of sigma");
    convolve_cmd->add_option("--step", o.step_ev, "quadrature step [eV] (default sigma/10)");
    convolve_cmd->add_option("--exposure", o.exposure);
    convolve_cmd->add_option("--seed", o.seed);
    convolve_cmd->add_option("--out", o.out)->required();

    auto* fit_cmd = app.add_subcommand("fit", "chi-square fit of a dataset");
    fit_cmd->add_option("--data", o.data_path)->required();
    fit_cmd->add_option("--config", o.config_path)->required();
    fit_cmd->add_option("--fss", o.fss_path)->required();
    fit_cmd->add_option("--out", o.out)->required();

    auto* scan = app.add_subcommand("bias-scan", "fitted-m2 bias versus window depth");
    scan->add_option("--spec", o.spec_path)->required();
    scan->add_option("--fss", o.fss_path)->required();
    scan->add_option("--replications", o.replications);
    scan->add_option("--seed", o.seed, "base seed (overrides the spec)");
    scan->add_option("--out", o.out)->required();

    auto* fig2 = app.add_subcommand("fig2", "linearization error versus distance to the endpoint");
    fig2->add_option("--fss", o.fss_path)->required();
    fig2->add_option("--mnu", o.m_nu_ev, "neutrino mass [eV]");
    fig2->add_option("--w0", o.w0_ev, "endpoint [eV]");
    fig2->add_option("--grid", o.grid, "depths below W0 (default 2:300:1)");
    fig2->add_option("--out", o.out, "CSV path (default fig2.csv)");

    if (args.size() <= 1)
    {
        std::cerr << app.help();
        return 1;
    }
    try
    {
        std::vector<std::string> rev(args.rbegin(), args.rend() - 1);
        app.parse(rev);
    }
    catch (const CLI::CallForHelp& e)
    {
        std::cout << app.help();
        return 0;
    }
    catch (const CLI::CallForAllHelp& e)
    {
        std::cout << app.help("", CLI::AppFormatMode::All);
        return 0;
    }
    catch (const CLI::ParseError& e)
    {
        std::cerr << "error: " << e.what() << "\n\n" << app.help();
        return 1;
    }

    std::vector<std::string> recorded(args.begin() + 1, args.end());
    try
    {
        if (!o.simd.empty())
            simd::set_active_isa(o.simd == "avx2" ? simd::Isa::avx2 : simd::Isa::scalar);
        if (dump->parsed())
            return run_constants(o, manifest_for("constants dump", recorded, o));
        if (gen->parsed())
            return run_fss_gen(o, manifest_for("fss gen", recorded, o));
        if (moments->parsed())
            return run_fss_moments(o, manifest_for("fss moments", recorded, o));
        if (spectrum->parsed())
            return run_spectrum(o, manifest_for("spectrum", recorded, o));
        if (convolve_cmd->parsed())
            return run_convolve(o, manifest_for("convolve", recorded, o));
        if (fit_cmd->parsed())
            return run_fit(o, manifest_for("fit", recorded, o));
        if (scan->parsed())
            return run_bias_scan(o, manifest_for("bias-scan", recorded, o));
        if (fig2->parsed())
            return run_fig2(o, manifest_for("fig2", recorded, o));
    }
    catch (const AccuracyError& e)
    {
        std::cerr << "accuracy error: " << e.what() << "\n";
        return 2;
    }
    catch (const ConvergenceFailure& e)
    {
        std::cerr << "convergence failure: " << e.what() << "\n";
        return 2;
    }
    catch (const ParseError& e)
    {
        std::cerr << "parse error: " << e.what() << "\n";
        return 1;
    }
    catch (const std::exception& e)
    {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    std::cerr << app.help();
    return 1;
}

int dispatch(int argc, char** argv)
{
    return dispatch(std::vector<std::string>(argv, argv + argc));
}

}  // namespace betaspec::cli
