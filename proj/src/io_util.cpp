#include "betaspec/io_util.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include <fmt/format.h>

#include "betaspec/error.hpp"

namespace betaspec {

std::uint64_t fnv1a(std::string_view data, std::uint64_t seed)
{
    std::uint64_t h = seed;
    for (unsigned char c : data)
    {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string hex64(std::uint64_t v)
{
    return fmt::format("{:016x}", v);
}

std::string read_text_file(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw ConfigError("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text_file(const std::filesystem::path& path, std::string_view content)
{
    if (path.has_parent_path())
        std::filesystem::create_directories(path.parent_path());
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out)
            throw ConfigError("cannot write " + tmp.string());
        out.write(content.data(), static_cast<std::streamsize>(content.size()));
        if (!out)
            throw ConfigError("write failed for " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

std::string format_g12(double v)
{
    return fmt::format("{:.12g}", v);
}

namespace {

double parse_number(std::string_view s)
{
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t'))
        s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t'))
        s.remove_suffix(1);
    double v = 0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(v))
        throw ConfigError("bad number '" + std::string(s) + "' in grid specification");
    return v;
}

}  // namespace

std::vector<double> parse_grid(std::string_view spec)
{
    std::vector<double> out;
    if (spec.find(':') != std::string_view::npos)
    {
        const auto a = spec.find(':');
        const auto b = spec.find(':', a + 1);
        if (b == std::string_view::npos)
            throw ConfigError("grid specification needs start:stop:step");
        const double start = parse_number(spec.substr(0, a));
        const double stop = parse_number(spec.substr(a + 1, b - a - 1));
        const double step = parse_number(spec.substr(b + 1));
        if (!(step > 0) || !(stop >= start))
            throw ConfigError("grid specification needs step > 0 and stop >= start");
        const auto n = static_cast<std::size_t>(std::floor((stop - start) / step * (1 + 1e-12) + 1e-6)) + 1;
        if (n > 100'000'000)
            throw ConfigError("grid specification too large");
        out.reserve(n);
        for (std::size_t i = 0; i < n; ++i)
            out.push_back(start + static_cast<double>(i) * step);
        return out;
    }
    std::size_t pos = 0;
    while (pos <= spec.size())
    {
        auto next = spec.find(',', pos);
        if (next == std::string_view::npos)
            next = spec.size();
        out.push_back(parse_number(spec.substr(pos, next - pos)));
        pos = next + 1;
    }
    if (out.empty())
        throw ConfigError("empty grid specification");
    return out;
}

}  // namespace betaspec
