#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace readlens {

/// Shortest decimal text that round-trips to the same double. Stable across
/// runs, which keeps every CSV artifact byte-reproducible.
std::string format_double(double value);

/// Fixed-point text with `digits` decimals.
std::string format_fixed(double value, int digits);

/// Strict parse of a full field; returns false on trailing garbage or empty input.
bool parse_double(std::string_view text, double& out);
bool parse_int(std::string_view text, long long& out);

/// Split one CSV line on commas. Fields may be double-quoted with "" escapes.
std::vector<std::string> split_csv_line(std::string_view line);

/// Quote a CSV field when it contains a comma, quote or newline.
std::string csv_escape(std::string_view field);

std::string trim(std::string_view text);

std::string read_text_file(const std::filesystem::path& path);
/// Binary mode, so LF line endings are written as-is.
void write_text_file(const std::filesystem::path& path, std::string_view text);

}  // namespace readlens
