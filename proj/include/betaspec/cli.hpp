#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace betaspec::cli {

//! Runs one subcommand. Exit status: 0 success, 1 invalid input or usage,
//! 2 numerical convergence failure.
int dispatch(int argc, char** argv);
int dispatch(const std::vector<std::string>& args);

struct Manifest
{
    std::string subcommand;
    std::vector<std::string> arguments;
    std::vector<std::filesystem::path> inputs;
    std::vector<std::filesystem::path> outputs;
    std::optional<std::uint64_t> seed;
    int jobs = 1;
};

//! Writes `<primary output>.manifest.json`: inputs with content hashes, a
//! combined inputs hash, constants version, seed and a UTC timestamp.
std::filesystem::path write_manifest(const Manifest& m, const std::filesystem::path& primary_output);

}  // namespace betaspec::cli
