#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace betaspec {

//! 64-bit FNV-1a.
std::uint64_t fnv1a(std::string_view data, std::uint64_t seed = 0xcbf29ce484222325ULL);
std::string hex64(std::uint64_t v);

std::string read_text_file(const std::filesystem::path& path);
//! Writes through a temporary file in the same directory and renames it into place.
void write_text_file(const std::filesystem::path& path, std::string_view content);

//! 12 significant digits, locale independent.
std::string format_g12(double v);

//! Energy grid "start:stop:step" (inclusive of stop within step/1e6) or a
//! comma-separated list of values.
std::vector<double> parse_grid(std::string_view spec);

}  // namespace betaspec
