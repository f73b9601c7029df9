#include "betaspec/bias.hpp"

#include <cmath>

#include <fmt/format.h>

#include "json.hpp"

#include "betaspec/error.hpp"
#include "betaspec/io_util.hpp"
#include "betaspec/parallel.hpp"
#include "betaspec/physics.hpp"

namespace betaspec {

bool Fig2Study::bounded_by(double c) const
{
    for (const auto& r : rows)
    {
        if (r.difference > c * r.trend)
            return false;
    }
    return true;
}

namespace {

// Exact minus linearized sum, line by line without cancellation. For an open
// line with x = m2 / e^2 and s = sqrt(1 - x) the gap is m^4 / e (1/2 + s) / (1 + s)^2.
double linearization_gap(const FinalStateSpectrum& fss, double available_ev, double m2)
{
    const double m4 = m2 * m2;
    long double sum = 0;
    const std::size_t open = fss.open_count(available_ev);
    for (std::size_t i = 0; i < open; ++i)
    {
        const double e = available_ev - fss.energies()[i];
        double gap;
        if (e * e > m2)
        {
            const double s = std::sqrt(1 - m2 / (e * e));
            gap = m4 / e * (0.5 + s) / ((1 + s) * (1 + s));
        }
        else
        {
            gap = -(e * e * e - 1.5 * m2 * e);
        }
        sum += static_cast<long double>(fss.probabilities()[i]) * gap;
    }
    return static_cast<double>(sum);
}

}  // namespace

Fig2Study fig2_study(const FinalStateSpectrum& fss, double m_nu_ev, std::span<const double> depths_ev)
{
    if (!(m_nu_ev >= 0))
        throw ConfigError("neutrino mass must be non-negative");
    Fig2Study s;
    s.m_nu_ev = m_nu_ev;
    const double m2 = m_nu_ev * m_nu_ev;
    const double m4 = m2 * m2;
    double num = 0, den = 0;
    for (double d : depths_ev)
    {
        if (!(d > 0))
            throw ConfigError("depths below the endpoint must be positive");
        Fig2Row r;
        r.depth_ev = d;
        r.exact = integral_line_sum(fss, d, m2);
        r.linear = linearized_line_sum(fss, d, m2);
        r.difference = std::fabs(linearization_gap(fss, d, m2));
        r.trend = m4 / d;
        if (r.trend > 0)
            s.envelope_constant = std::max(s.envelope_constant, r.difference / r.trend);
        num += r.difference * r.trend;
        den += r.trend * r.trend;
        s.rows.push_back(r);
    }
    s.fitted_constant = den > 0 ? num / den : 0;
    return s;
}

void write_fig2(const Fig2Study& s, const std::filesystem::path& csv)
{
    std::string body = "depth_eV,exact_sum,linearized_sum,abs_difference,trend_m4_over_depth\n";
    for (const auto& r : s.rows)
    {
        body += fmt::format("{},{},{},{},{}\n", format_g12(r.depth_ev), format_g12(r.exact), format_g12(r.linear),
                            format_g12(r.difference), format_g12(r.trend));
    }
    write_text_file(csv, body);
    nlohmann::ordered_json j;
    j["m_nu_eV"] = s.m_nu_ev;
    j["points"] = s.rows.size();
    j["envelope_constant"] = s.envelope_constant;
    j["fitted_constant"] = s.fitted_constant;
    auto side = csv;
    side += ".json";
    write_text_file(side, j.dump(2) + "\n");
}

//---------------------------------------------------------------------------//
void ScanSpec::validate() const
{
    if (replications < 1)
        throw ConfigError("replications must be at least 1");
    if (depths_ev.empty())
        throw ConfigError("scan needs at least one window depth");
    for (std::size_t i = 0; i < depths_ev.size(); ++i)
    {
        if (!(depths_ev[i] > 0))
            throw ConfigError("window depths must be positive");
        if (i > 0 && !(depths_ev[i] > depths_ev[i - 1]))
            throw ConfigError("window depths must be strictly increasing");
    }
    if (!(bin_width_ev > 0))
        throw ConfigError("bin width must be positive");
    if (!(exposure > 0))
        throw ConfigError("exposure must be positive");
    if (!(upper_edge_ev > 0 && upper_edge_ev <= 50))
        throw ConfigError("upper window edge must lie in (0, 50] eV above W0");
    truth.validate();
    response.validate();
}

namespace {

struct Sample
{
    bool converged = false;
    double m2 = 0;
    double w0 = 0;
};

struct Moments
{
    int n = 0;
    double mean = 0;
    double sd = 0;
};

Moments summarize(const std::vector<double>& v)
{
    Moments m;
    m.n = static_cast<int>(v.size());
    if (v.empty())
        return m;
    long double s = 0;
    for (double x : v)
        s += x;
    m.mean = static_cast<double>(s / v.size());
    long double q = 0;
    for (double x : v)
        q += (x - m.mean) * (x - m.mean);
    m.sd = v.size() > 1 ? static_cast<double>(std::sqrt(q / (v.size() - 1))) : 0;
    return m;
}

}  // namespace

ScanResult bias_scan(const ScanSpec& spec, const FinalStateSpectrum& fss)
{
    spec.validate();
    const double w0 = spec.truth.endpoint_ev;
    ScanResult out;
    out.base_seed = spec.base_seed;
    const double lo = w0 - spec.depths_ev.back();
    const double hi = w0 + spec.upper_edge_ev;
    const auto n_bins = static_cast<std::size_t>(std::floor((hi - lo) / spec.bin_width_ev + 1e-9)) + 1;
    for (std::size_t i = 0; i < n_bins; ++i)
        out.centers.push_back(lo + static_cast<double>(i) * spec.bin_width_ev);

    SpectrumParams gen = spec.truth;
    gen.endpoint_drift = spec.generator_drift;

    struct Scenario
    {
        std::string name;
        bool drift;
    };
    std::vector<Scenario> scenarios{{"mismatch", spec.fitter_drift}};
    if (spec.run_control)
        scenarios.push_back({"control", spec.generator_drift});

    auto config_for = [&](double depth, bool drift) {
        FitConfig c;
        c.window_lo_ev = w0 - depth;
        c.window_hi_ev = hi;
        c.initial = spec.truth;
        c.initial.amplitude = spec.truth.amplitude * spec.exposure;
        c.initial.endpoint_drift = drift;
        c.response = spec.response;
        c.max_iterations = spec.max_iterations;
        c.jobs = 1;
        return c;
    };

    const std::size_t n_cells = spec.depths_ev.size() * scenarios.size();
    const auto reps = static_cast<std::size_t>(spec.replications);
    std::vector<Sample> samples(reps * n_cells);

    parallel_for(reps, spec.jobs, [&](std::size_t r) {
        const auto data = generate_pseudodata(gen, fss, spec.response, out.centers, spec.exposure,
                                              splitmix64(spec.base_seed + r), 1);
        for (std::size_t d = 0; d < spec.depths_ev.size(); ++d)
        {
            for (std::size_t s = 0; s < scenarios.size(); ++s)
            {
                auto& slot = samples[r * n_cells + d * scenarios.size() + s];
                try
                {
                    const auto fit = minimize(data, config_for(spec.depths_ev[d], scenarios[s].drift), fss);
                    slot.converged = fit.converged;
                    slot.m2 = fit.params.m2_ev2;
                    slot.w0 = fit.params.endpoint_ev;
                }
                catch (const ModelError&)
                {
                    slot.converged = false;
                }
            }
        }
    });

    const auto asimov = asimov_dataset(gen, fss, spec.response, out.centers, spec.exposure, spec.jobs);
    const double mt = constants().triton_mass_ratio;
    for (std::size_t d = 0; d < spec.depths_ev.size(); ++d)
    {
        for (std::size_t s = 0; s < scenarios.size(); ++s)
        {
            ScanRow row;
            row.scenario = scenarios[s].name;
            row.depth_ev = spec.depths_ev[d];
            row.replications = spec.replications;
            std::vector<double> m2, dw;
            for (std::size_t r = 0; r < reps; ++r)
            {
                const auto& x = samples[r * n_cells + d * scenarios.size() + s];
                if (!x.converged)
                    continue;
                m2.push_back(x.m2);
                dw.push_back(x.w0 - w0);
            }
            row.converged = static_cast<int>(m2.size());
            row.excluded = row.replications - row.converged;
            row.flagged = row.excluded * 10 > row.replications;
            const auto sm = summarize(m2);
            const auto sw = summarize(dw);
            row.mean_m2 = sm.mean;
            row.sd_m2 = sm.sd;
            row.stderr_m2 = sm.n > 0 ? sm.sd / std::sqrt(sm.n) : 0;
            row.mean_w0_shift = sw.mean;
            row.stderr_w0 = sw.n > 0 ? sw.sd / std::sqrt(sw.n) : 0;
            if (s == 0 && scenarios.size() > 1)
            {
                std::vector<double> paired;
                for (std::size_t r = 0; r < reps; ++r)
                {
                    const auto& a = samples[r * n_cells + d * scenarios.size()];
                    const auto& b = samples[r * n_cells + d * scenarios.size() + 1];
                    if (a.converged && b.converged)
                        paired.push_back(a.m2 - b.m2);
                }
                const auto sp = summarize(paired);
                row.paired_m2 = sp.mean;
                row.paired_stderr = sp.n > 0 ? sp.sd / std::sqrt(sp.n) : 0;
            }

            auto cfg = config_for(spec.depths_ev[d], scenarios[s].drift);
            cfg.jobs = spec.jobs;
            const auto fit = minimize(asimov, cfg, fss);
            row.asimov_m2 = fit.params.m2_ev2;
            row.asimov_w0_shift = fit.params.endpoint_ev - w0;

            long double drift = 0;
            int count = 0;
            for (double c : out.centers)
            {
                if (c >= cfg.window_lo_ev && c <= w0)
                {
                    drift += (w0 - c) / mt;
                    ++count;
                }
            }
            row.window_drift_ev = count > 0 ? static_cast<double>(drift / count) : 0;
            out.rows.push_back(row);
        }
    }
    return out;
}

void write_scan(const ScanResult& r, const ScanSpec& spec, const std::filesystem::path& csv)
{
    std::string body = "scenario,depth_eV,replications,converged,excluded,flagged,mean_m2_eV2,sd_m2_eV2,"
                       "stderr_m2_eV2,mean_W0_shift_eV,stderr_W0_shift_eV,paired_m2_eV2,paired_stderr_eV2,"
                       "asimov_m2_eV2,asimov_W0_shift_eV,window_drift_eV\n";
    for (const auto& x : r.rows)
    {
        body += fmt::format("{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}\n", x.scenario, format_g12(x.depth_ev),
                            x.replications, x.converged, x.excluded, x.flagged ? 1 : 0, format_g12(x.mean_m2),
                            format_g12(x.sd_m2), format_g12(x.stderr_m2), format_g12(x.mean_w0_shift),
                            format_g12(x.stderr_w0), format_g12(x.paired_m2), format_g12(x.paired_stderr),
                            format_g12(x.asimov_m2), format_g12(x.asimov_w0_shift),
                            format_g12(x.window_drift_ev));
    }
    write_text_file(csv, body);

    nlohmann::ordered_json j;
    j["base_seed"] = r.base_seed;
    j["replications"] = spec.replications;
    j["depths_eV"] = spec.depths_ev;
    j["window_upper_edge_eV"] = spec.upper_edge_ev;
    j["bin_width_eV"] = spec.bin_width_ev;
    j["exposure"] = spec.exposure;
    j["generator_drift"] = spec.generator_drift;
    j["fitter_drift"] = spec.fitter_drift;
    j["truth"] = nlohmann::ordered_json::parse(params_to_json(spec.truth));
    j["response"] = nlohmann::ordered_json::parse(response_to_json(spec.response));
    j["statistic"] = "pearson chi-square, denominator max(mu, 1)";
    auto rows = nlohmann::ordered_json::array();
    for (const auto& x : r.rows)
    {
        rows.push_back({{"scenario", x.scenario},
                        {"depth_eV", x.depth_ev},
                        {"converged", x.converged},
                        {"excluded", x.excluded},
                        {"flagged", x.flagged},
                        {"mean_m2_eV2", x.mean_m2},
                        {"stderr_m2_eV2", x.stderr_m2},
                        {"mean_W0_shift_eV", x.mean_w0_shift},
                        {"stderr_W0_shift_eV", x.stderr_w0},
                        {"paired_m2_eV2", x.paired_m2},
                        {"paired_stderr_eV2", x.paired_stderr},
                        {"asimov_m2_eV2", x.asimov_m2},
                        {"asimov_W0_shift_eV", x.asimov_w0_shift},
                        {"window_drift_eV", x.window_drift_ev}});
    }
    j["rows"] = rows;
    auto side = csv;
    side += ".json";
    write_text_file(side, j.dump(2) + "\n");
}

ScanSpec scan_spec_from_json(const std::string& text)
{
    ScanSpec s;
    try
    {
        const auto j = nlohmann::json::parse(text);
        if (j.contains("depths_eV"))
            s.depths_ev = j.at("depths_eV").get<std::vector<double>>();
        s.replications = j.value("replications", s.replications);
        s.base_seed = j.value("base_seed", s.base_seed);
        if (j.contains("truth"))
            s.truth = params_from_json(j.at("truth").dump());
        s.exposure = j.value("exposure", s.exposure);
        if (j.contains("response"))
            s.response = response_from_json(j.at("response").dump());
        s.bin_width_ev = j.value("bin_width_eV", s.bin_width_ev);
        s.upper_edge_ev = j.value("window_upper_edge_eV", s.upper_edge_ev);
        s.generator_drift = j.value("generator_drift", s.generator_drift);
        s.fitter_drift = j.value("fitter_drift", s.fitter_drift);
        s.run_control = j.value("run_control", s.run_control);
        s.max_iterations = j.value("max_iterations", s.max_iterations);
    }
    catch (const nlohmann::json::exception& e)
    {
        throw ConfigError(std::string("scan spec: ") + e.what());
    }
    s.validate();
    return s;
}

}  // namespace betaspec
