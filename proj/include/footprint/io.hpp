#pragma once

#include <filesystem>
#include <string>
#include <string_view>

namespace footprint::io {

// Writes to a sibling temp file and renames it over `path`.
void atomic_write(const std::filesystem::path& path, std::string_view content);

std::string read_file(const std::filesystem::path& path);

// Shortest text form that parses back to the same double.
std::string format_double(double v);

// Strict decimal parse of the whole (trimmed) token.
bool parse_double(std::string_view token, double& out);

std::string_view trim(std::string_view s);

}  // namespace footprint::io
