#include "betaspec/response.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

#include <fmt/format.h>

#include "json.hpp"

#include "betaspec/error.hpp"
#include "betaspec/io_util.hpp"
#include "betaspec/parallel.hpp"
#include "betaspec/simd/kernels.hpp"

namespace betaspec {

void ResponseModel::validate() const
{
    if (!(sigma_ev > 0 && std::isfinite(sigma_ev)))
        throw ConfigError("response width must be positive");
    if (!(k_sigma >= 6))
        throw ConfigError("response support must cover at least 6 sigma");
    if (step_ev < 0 || effective_step() > sigma_ev / 10 * (1 + 1e-12))
        throw ConfigError(fmt::format("response grid step {:.3g} eV too coarse for sigma {:.3g} eV", effective_step(),
                                      sigma_ev));
}

namespace {

int half_width(const ResponseModel& r, double step)
{
    return static_cast<int>(std::ceil(r.k_sigma * r.sigma_ev / step - 1e-9));
}

std::vector<double> raw_weights(double sigma, double h, int k)
{
    std::vector<double> w(2 * k + 1);
    const double norm = 1 / (std::sqrt(2 * std::numbers::pi) * sigma);
    for (int j = 0; j <= 2 * k; ++j)
    {
        const double t = (j - k) * h;
        w[j] = norm * std::exp(-t * t / (2 * sigma * sigma)) * h;
    }
    w.front() *= 0.5;
    w.back() *= 0.5;
    return w;
}

}  // namespace

std::vector<double> gaussian_weights(double sigma_ev, double step_ev, int k)
{
    auto w = raw_weights(sigma_ev, step_ev, k);
    long double s = 0;
    for (double x : w)
        s += x;
    for (double& x : w)
        x = static_cast<double>(x / s);
    return w;
}

double raw_weight_sum(const ResponseModel& r)
{
    r.validate();
    const double h = r.effective_step();
    long double s = 0;
    for (double x : raw_weights(r.sigma_ev, h, half_width(r, h)))
        s += x;
    return static_cast<double>(s);
}

SpectrumFunction convolve(SpectrumFunction f, const ResponseModel& r)
{
    r.validate();
    const double h = r.effective_step();
    const int k = half_width(r, h);
    auto w = gaussian_weights(r.sigma_ev, h, k);
    return [f = std::move(f), w = std::move(w), h, k](double x) {
        double s = 0;
        for (int j = 0; j <= 2 * k; ++j)
            s += w[j] * f(x + (j - k) * h);
        return s;
    };
}

std::vector<double> convolve_at(const SpectrumFunction& f, const ResponseModel& r, std::span<const double> points,
                                int jobs)
{
    r.validate();
    std::vector<double> out(points.size());
    if (points.empty())
        return out;
    const double h_max = r.effective_step();

    bool uniform = points.size() >= 2;
    double spacing = uniform ? points[1] - points[0] : 0;
    if (uniform && spacing > 0)
    {
        for (std::size_t i = 1; i < points.size(); ++i)
        {
            if (std::fabs(points[i] - points[0] - static_cast<double>(i) * spacing) > 1e-9 * spacing)
            {
                uniform = false;
                break;
            }
        }
    }
    else
    {
        uniform = false;
    }

    if (!uniform)
    {
        const auto g = convolve(f, r);
        parallel_for(points.size(), jobs, [&](std::size_t i) { out[i] = g(points[i]); });
        return out;
    }

    // Fine grid x_k = p_0 - K h + k h shared by every output point.
    const auto stride = static_cast<std::size_t>(std::ceil(spacing / h_max - 1e-9));
    const double h = spacing / static_cast<double>(stride);
    const int k = half_width(r, h);
    const auto w = gaussian_weights(r.sigma_ev, h, k);
    const std::size_t n_fine = (points.size() - 1) * stride + w.size();
    std::vector<double> fine(n_fine);
    const double x0 = points[0] - k * h;
    parallel_for(n_fine, jobs, [&](std::size_t i) { fine[i] = f(x0 + static_cast<double>(i) * h); });

    if (stride == 1)
    {
        simd::correlate(fine, w, out);
        return out;
    }
    for (std::size_t i = 0; i < points.size(); ++i)
        out[i] = simd::dot(std::span<const double>(fine).subspan(i * stride, w.size()), w);
    return out;
}

std::vector<double> smeared_integral_shape(const SpectrumParams& p, const FinalStateSpectrum& fss,
                                           const ResponseModel& r, std::span<const double> centers, int jobs)
{
    SpectrumParams unit = p;
    unit.amplitude = 1;
    unit.background = 0;
    const SpectrumFunction f = [&](double eps) { return eps > 0 ? integral_spectrum(eps, unit, fss) : 0.0; };
    return convolve_at(f, r, centers, jobs);
}

//---------------------------------------------------------------------------//
double uniform01(std::mt19937_64& rng)
{
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

std::uint64_t splitmix64(std::uint64_t x)
{
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

std::int64_t poisson_sample(std::mt19937_64& rng, double mean)
{
    if (!(mean >= 0) || !std::isfinite(mean))
        throw ModelError("Poisson mean must be finite and non-negative");
    if (mean == 0)
        return 0;
    if (mean < 30)
    {
        const double u = uniform01(rng);
        double p = std::exp(-mean);
        double cdf = p;
        std::int64_t k = 0;
        while (u > cdf && k < 1000)
        {
            ++k;
            p *= mean / static_cast<double>(k);
            cdf += p;
        }
        return k;
    }
    const double smu = std::sqrt(mean);
    const double b = 0.931 + 2.53 * smu;
    const double a = -0.059 + 0.02483 * b;
    const double inv_alpha = 1.1239 + 1.1328 / (b - 3.4);
    const double vr = 0.9277 - 3.6224 / (b - 2);
    const double log_mean = std::log(mean);
    for (;;)
    {
        const double u = uniform01(rng) - 0.5;
        const double v = uniform01(rng);
        const double us = 0.5 - std::fabs(u);
        const double k = std::floor((2 * a / us + b) * u + mean + 0.43);
        if (us >= 0.07 && v <= vr)
            return static_cast<std::int64_t>(k);
        if (k < 0 || (us < 0.013 && v > us))
            continue;
        if (std::log(v * inv_alpha / (a / (us * us) + b)) <= -mean + k * log_mean - std::lgamma(k + 1))
            return static_cast<std::int64_t>(k);
    }
}

std::vector<double> expected_counts(const SpectrumParams& p, const FinalStateSpectrum& fss, const ResponseModel& r,
                                    std::span<const double> centers, double exposure, int jobs)
{
    auto mu = smeared_integral_shape(p, fss, r, centers, jobs);
    for (double& m : mu)
        m = exposure * p.amplitude * m + p.background;
    return mu;
}

namespace {

PseudoDataset make_dataset(const SpectrumParams& p, const FinalStateSpectrum& fss, const ResponseModel& r,
                           std::span<const double> centers, double exposure, int jobs)
{
    p.validate();
    r.validate();
    if (!(exposure >= 0))
        throw ConfigError("exposure must be non-negative");
    if (centers.empty())
        throw ConfigError("dataset needs at least one bin");
    for (double c : centers)
    {
        if (c < p.endpoint_ev - 1000 || c > p.endpoint_ev + 50)
            throw ConfigError(fmt::format("bin center {} eV outside [W0 - 1000, W0 + 50]", c));
    }
    PseudoDataset d;
    d.centers.assign(centers.begin(), centers.end());
    d.expected = expected_counts(p, fss, r, centers, exposure, jobs);
    for (std::size_t i = 0; i < d.expected.size(); ++i)
    {
        if (!(d.expected[i] >= 0))
            throw ModelError(fmt::format("negative expected count {} at {} eV", d.expected[i], d.centers[i]));
    }
    d.exposure = exposure;
    d.truth = p;
    d.response = r;
    d.fss_provenance = fss.metadata().provenance;
    return d;
}

}  // namespace

PseudoDataset generate_pseudodata(const SpectrumParams& p, const FinalStateSpectrum& fss, const ResponseModel& r,
                                  std::span<const double> centers, double exposure, std::uint64_t seed, int jobs)
{
    auto d = make_dataset(p, fss, r, centers, exposure, jobs);
    d.seed = seed;
    d.sampled = true;
    std::mt19937_64 rng(seed);
    d.counts.resize(d.expected.size());
    for (std::size_t i = 0; i < d.expected.size(); ++i)
        d.counts[i] = static_cast<double>(poisson_sample(rng, d.expected[i]));
    return d;
}

PseudoDataset asimov_dataset(const SpectrumParams& p, const FinalStateSpectrum& fss, const ResponseModel& r,
                             std::span<const double> centers, double exposure, int jobs)
{
    auto d = make_dataset(p, fss, r, centers, exposure, jobs);
    d.sampled = false;
    d.counts = d.expected;
    return d;
}

//---------------------------------------------------------------------------//
using nlohmann::ordered_json;

std::string params_to_json(const SpectrumParams& p)
{
    ordered_json j{{"amplitude", p.amplitude},   {"W0_eV", p.endpoint_ev}, {"m2_eV2", p.m2_ev2},
                   {"background", p.background}, {"Z", p.charge},        {"endpoint_drift", p.endpoint_drift}};
    return j.dump(2);
}

SpectrumParams params_from_json(const std::string& text)
{
    SpectrumParams p;
    try
    {
        const auto j = nlohmann::json::parse(text);
        p.amplitude = j.value("amplitude", p.amplitude);
        p.endpoint_ev = j.value("W0_eV", p.endpoint_ev);
        p.m2_ev2 = j.value("m2_eV2", p.m2_ev2);
        p.background = j.value("background", p.background);
        p.charge = j.value("Z", p.charge);
        p.endpoint_drift = j.value("endpoint_drift", p.endpoint_drift);
    }
    catch (const nlohmann::json::exception& e)
    {
        throw ConfigError(std::string("spectrum parameters: ") + e.what());
    }
    p.validate();
    return p;
}

std::string response_to_json(const ResponseModel& r)
{
    ordered_json j{{"kind", "gaussian"}, {"sigma_eV", r.sigma_ev}, {"k_sigma", r.k_sigma}, {"step_eV", r.effective_step()}};
    return j.dump(2);
}

ResponseModel response_from_json(const std::string& text)
{
    ResponseModel r;
    try
    {
        const auto j = nlohmann::json::parse(text);
        if (j.value("kind", std::string("gaussian")) != "gaussian")
            throw ConfigError("only gaussian responses are supported");
        r.sigma_ev = j.at("sigma_eV").get<double>();
        r.k_sigma = j.value("k_sigma", r.k_sigma);
        r.step_ev = j.value("step_eV", 0.0);
    }
    catch (const nlohmann::json::exception& e)
    {
        throw ConfigError(std::string("response: ") + e.what());
    }
    r.validate();
    return r;
}

void save_dataset(const PseudoDataset& d, const std::filesystem::path& csv)
{
    std::string body = "bin_center_eV,counts\n";
    for (std::size_t i = 0; i < d.centers.size(); ++i)
        body += fmt::format("{:.12g},{:.12g}\n", d.centers[i], d.counts[i]);
    write_text_file(csv, body);

    ordered_json j;
    j["truth"] = ordered_json::parse(params_to_json(d.truth));
    j["seed"] = d.seed;
    j["sampled"] = d.sampled;
    j["exposure"] = d.exposure;
    j["response"] = ordered_json::parse(response_to_json(d.response));
    j["fss_provenance"] = d.fss_provenance;
    j["bins"] = d.centers.size();
    auto side = csv;
    side += ".json";
    write_text_file(side, j.dump(2) + "\n");
}

PseudoDataset load_dataset(const std::filesystem::path& csv)
{
    PseudoDataset d;
    std::istringstream in(read_text_file(csv));
    std::string line;
    std::size_t number = 0;
    while (std::getline(in, line))
    {
        ++number;
        if (line.empty() || line.front() == '#')
            continue;
        if (line.rfind("bin_center_eV", 0) == 0)
            continue;
        const auto comma = line.find(',');
        if (comma == std::string::npos)
            throw ParseError(number, "expected 'bin_center_eV,counts'");
        try
        {
            std::size_t used = 0;
            const double c = std::stod(line.substr(0, comma), &used);
            const double n = std::stod(line.substr(comma + 1));
            if (!(n >= 0))
                throw ValidationError(fmt::format("line {}: negative count", number));
            d.centers.push_back(c);
            d.counts.push_back(n);
        }
        catch (const std::logic_error&)
        {
            throw ParseError(number, "malformed number");
        }
    }
    if (d.centers.empty())
        throw ValidationError("dataset has no bins");
    auto side = csv;
    side += ".json";
    if (std::filesystem::exists(side))
    {
        try
        {
            const auto j = nlohmann::json::parse(read_text_file(side));
            if (j.contains("truth"))
                d.truth = params_from_json(j.at("truth").dump());
            d.seed = j.value("seed", std::uint64_t{0});
            d.sampled = j.value("sampled", true);
            d.exposure = j.value("exposure", 1.0);
            if (j.contains("response"))
                d.response = response_from_json(j.at("response").dump());
            d.fss_provenance = j.value("fss_provenance", std::string());
        }
        catch (const nlohmann::json::exception& e)
        {
            throw ConfigError(std::string("dataset sidecar: ") + e.what());
        }
    }
    return d;
}

}  // namespace betaspec
