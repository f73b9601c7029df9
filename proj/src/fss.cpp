#include "betaspec/fss.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include <fmt/format.h>

#include "betaspec/error.hpp"

namespace betaspec {

namespace {

constexpr double max_total_probability = 1.000001;

void validate_line(const FssLine& l, std::size_t index)
{
    if (!std::isfinite(l.energy_ev) || !std::isfinite(l.probability))
        throw ValidationError(fmt::format("line {}: non-finite energy or probability", index));
    if (l.probability < 0)
        throw ValidationError(fmt::format("line {}: negative probability {}", index, l.probability));
    if (l.channel < 0)
        throw ValidationError(fmt::format("line {}: negative channel index", index));
    if (l.channel == 0 && l.energy_ev < 0)
        throw ValidationError(fmt::format("line {}: ground-channel energy below reference", index));
    if ((l.rotation && *l.rotation < 0) || (l.vibration && *l.vibration < 0))
        throw ValidationError(fmt::format("line {}: negative quantum number", index));
}

}  // namespace

FinalStateSpectrum FinalStateSpectrum::from_lines(std::vector<FssLine> lines, FssMetadata meta)
{
    long double total = 0;
    for (std::size_t i = 0; i < lines.size(); ++i)
    {
        validate_line(lines[i], i + 1);
        total += lines[i].probability;
    }
    if (!(total > 0) || total > max_total_probability)
        throw ValidationError(fmt::format("total probability {} outside (0, {}]",
                                          static_cast<double>(total), max_total_probability));

    auto by_energy = [](const FssLine& a, const FssLine& b) { return a.energy_ev < b.energy_ev; };
    if (!std::is_sorted(lines.begin(), lines.end(), by_energy))
    {
        std::stable_sort(lines.begin(), lines.end(), by_energy);
        meta.sorted_on_load = true;
    }

    FinalStateSpectrum fss;
    fss.total_ = static_cast<double>(total);
    fss.energies_.reserve(lines.size());
    fss.probabilities_.reserve(lines.size());
    for (const auto& l : lines)
    {
        fss.energies_.push_back(l.energy_ev);
        fss.probabilities_.push_back(l.probability);
    }
    fss.lines_ = std::move(lines);
    fss.meta_ = std::move(meta);
    return fss;
}

FinalStateSpectrum FinalStateSpectrum::merged(const FinalStateSpectrum& a, const FinalStateSpectrum& b)
{
    std::vector<FssLine> lines(a.lines_.begin(), a.lines_.end());
    lines.insert(lines.end(), b.lines_.begin(), b.lines_.end());
    FssMetadata meta;
    meta.provenance = "merge(" + a.meta_.provenance + ", " + b.meta_.provenance + ")";
    auto out = from_lines(std::move(lines), std::move(meta));
    // Merging reorders by construction; that is not an input defect.
    out.meta_.sorted_on_load = false;
    return out;
}

std::size_t FinalStateSpectrum::open_count(double threshold) const
{
    return static_cast<std::size_t>(std::lower_bound(energies_.begin(), energies_.end(), threshold)
                                    - energies_.begin());
}

//---------------------------------------------------------------------------//
// Text format
//---------------------------------------------------------------------------//
namespace {

std::string_view trim(std::string_view s)
{
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos)
        return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::vector<std::string_view> split_ws(std::string_view s)
{
    std::vector<std::string_view> out;
    std::size_t i = 0;
    while (i < s.size())
    {
        while (i < s.size() && (s[i] == ' ' || s[i] == '\t' || s[i] == '\r'))
            ++i;
        std::size_t j = i;
        while (j < s.size() && s[j] != ' ' && s[j] != '\t' && s[j] != '\r')
            ++j;
        if (j > i)
            out.push_back(s.substr(i, j - i));
        i = j;
    }
    return out;
}

double parse_double(std::string_view tok, std::size_t line)
{
    double v = 0;
    auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (ec != std::errc{} || ptr != tok.data() + tok.size())
        throw ParseError(line, "invalid number '" + std::string(tok) + "'");
    return v;
}

int parse_int(std::string_view tok, std::size_t line)
{
    int v = 0;
    auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (ec != std::errc{} || ptr != tok.data() + tok.size())
        throw ParseError(line, "invalid integer '" + std::string(tok) + "'");
    return v;
}

std::optional<int> parse_label(std::string_view tok, std::size_t line)
{
    if (tok == "-")
        return std::nullopt;
    return parse_int(tok, line);
}

void parse_header(std::string_view body, FssMetadata& meta, std::size_t line)
{
    const auto eq = body.find('=');
    if (eq == std::string_view::npos)
        return;
    const auto key = trim(body.substr(0, eq));
    const auto value = trim(body.substr(eq + 1));
    if (key == "q_ref_au")
        meta.recoil_au = parse_double(value, line);
    else if (key == "provenance")
        meta.provenance = std::string(value);
    else if (key == "truncation_tolerance")
        meta.truncation_tolerance = parse_double(value, line);
    else if (key == "warning")
        meta.warnings.emplace_back(value);
}

}  // namespace

FinalStateSpectrum parse_fss(const std::string& text)
{
    FssMetadata meta;
    std::vector<FssLine> lines;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos < text.size())
    {
        ++line_no;
        const auto nl = text.find('\n', pos);
        if (nl == std::string::npos)
            throw ParseError(line_no, "file must end with a newline");
        std::string_view row(text.data() + pos, nl - pos);
        pos = nl + 1;

        const auto t = trim(row);
        if (t.empty())
            continue;
        if (t.front() == '#')
        {
            parse_header(t.substr(1), meta, line_no);
            continue;
        }
        const auto cols = split_ws(t);
        if (cols.size() != 5)
            throw ParseError(line_no, fmt::format("expected 5 columns, found {}", cols.size()));
        FssLine l;
        l.energy_ev = parse_double(cols[0], line_no);
        l.probability = parse_double(cols[1], line_no);
        l.channel = parse_int(cols[2], line_no);
        l.rotation = parse_label(cols[3], line_no);
        l.vibration = parse_label(cols[4], line_no);
        if (l.probability < 0)
            throw ValidationError(fmt::format("line {}: negative probability {}", line_no, l.probability));
        lines.push_back(l);
    }
    return FinalStateSpectrum::from_lines(std::move(lines), std::move(meta));
}

FinalStateSpectrum load_fss(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw ConfigError("cannot open FSS file " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_fss(ss.str());
}

std::string format_fss(const FinalStateSpectrum& fss)
{
    const auto& meta = fss.metadata();
    std::string out = "# betaspec final-state spectrum\n";
    if (meta.recoil_au)
        out += fmt::format("# q_ref_au = {:.16e}\n", *meta.recoil_au);
    if (!meta.provenance.empty())
        out += fmt::format("# provenance = {}\n", meta.provenance);
    if (meta.truncation_tolerance)
        out += fmt::format("# truncation_tolerance = {:.16e}\n", *meta.truncation_tolerance);
    for (const auto& w : meta.warnings)
        out += fmt::format("# warning = {}\n", w);
    out += fmt::format("# lines = {}\n# total_probability = {:.16e}\n", fss.size(), fss.total_probability());
    out += "# E_n_eV P_n channel J v\n";
    auto label = [](const std::optional<int>& v) { return v ? fmt::format("{}", *v) : std::string("-"); };
    for (const auto& l : fss.lines())
    {
        out += fmt::format("{:.16e} {:.16e} {} {} {}\n", l.energy_ev, l.probability, l.channel,
                           label(l.rotation), label(l.vibration));
    }
    return out;
}

void save_fss(const FinalStateSpectrum& fss, const std::filesystem::path& path)
{
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw ConfigError("cannot write FSS file " + path.string());
    out << format_fss(fss);
}

//---------------------------------------------------------------------------//
// Moments
//---------------------------------------------------------------------------//
namespace {

struct RawMoments
{
    long double p = 0, m1 = 0, m2 = 0, m3 = 0;
};

RawMoments raw_moments(const FinalStateSpectrum& fss, double epsilon)
{
    RawMoments r;
    const auto n = fss.open_count(epsilon);
    const auto e = fss.energies();
    const auto p = fss.probabilities();
    for (std::size_t i = 0; i < n; ++i)
    {
        const long double en = e[i];
        const long double pn = p[i];
        r.p += pn;
        r.m1 += pn * en;
        r.m2 += pn * en * en;
        r.m3 += pn * en * en * en;
    }
    return r;
}

}  // namespace

MomentSet cumulative_moments(const FinalStateSpectrum& fss, double epsilon_ev)
{
    const auto r = raw_moments(fss, epsilon_ev);
    MomentSet m;
    m.epsilon_ev = epsilon_ev;
    m.open_probability = static_cast<double>(r.p);
    if (r.p > 0)
    {
        m.moments = EnergyMoments{static_cast<double>(r.m1 / r.p), static_cast<double>(r.m2 / r.p),
                                  static_cast<double>(r.m3 / r.p)};
    }
    return m;
}

double moment_form_spectrum_term(const FinalStateSpectrum& fss, double epsilon_ev, double m2_ev2)
{
    const auto r = raw_moments(fss, epsilon_ev);
    if (!(r.p > 0))
        return 0;
    // Extended precision: the expanded polynomial cancels strongly when all
    // open lines sit close to threshold.
    const long double e = epsilon_ev;
    const long double mean = r.m1 / r.p;
    const long double second = r.m2 / r.p;
    const long double third = r.m3 / r.p;
    const long double m2 = m2_ev2;
    const long double value
        = r.p * (e * e * e - 3 * mean * e * e + 3 * second * e - 1.5L * m2 * (e - mean) - third);
    return static_cast<double>(value);
}

}  // namespace betaspec
