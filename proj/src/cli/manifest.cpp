#include <chrono>
#include <ctime>

#include <fmt/format.h>
#include <fmt/ranges.h>

#include "json.hpp"

#include "betaspec/cli.hpp"
#include "betaspec/io_util.hpp"
#include "betaspec/physics.hpp"
#include "betaspec/simd/kernels.hpp"

namespace betaspec::cli {

namespace {

std::string utc_timestamp()
{
    const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    return fmt::format("{:04d}-{:02d}-{:02d}T{:02d}:{:02d}:{:02d}Z", tm.tm_year + 1900, tm.tm_mon + 1, tm.tm_mday,
                       tm.tm_hour, tm.tm_min, tm.tm_sec);
}

}  // namespace

std::filesystem::path write_manifest(const Manifest& m, const std::filesystem::path& primary_output)
{
    nlohmann::ordered_json j;
    j["subcommand"] = m.subcommand;
    j["arguments"] = m.arguments;
    std::uint64_t combined = fnv1a("");
    auto inputs = nlohmann::ordered_json::array();
    for (const auto& p : m.inputs)
    {
        const auto h = fnv1a(read_text_file(p));
        combined = fnv1a(hex64(h), combined);
        inputs.push_back({{"path", p.string()}, {"fnv1a", hex64(h)}});
    }
    combined = fnv1a(fmt::format("{}", fmt::join(m.arguments, "\x1f")), combined);
    j["inputs"] = inputs;
    j["inputs_hash"] = hex64(combined);
    auto outputs = nlohmann::ordered_json::array();
    for (const auto& p : m.outputs)
        outputs.push_back(p.string());
    j["outputs"] = outputs;
    j["constants_version"] = constants().version;
    if (m.seed)
        j["seed"] = *m.seed;
    else
        j["seed"] = nullptr;
    j["jobs"] = m.jobs;
    j["simd"] = std::string(simd::to_string(simd::active_isa()));
    j["timestamp"] = utc_timestamp();
    auto path = primary_output;
    path += ".manifest.json";
    write_text_file(path, j.dump(2) + "\n");
    return path;
}

}  // namespace betaspec::cli
