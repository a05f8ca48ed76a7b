#pragma once

// Numeric rendering and line-level CSV helpers used by all file formats.

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace cibench {

/// Shortest rendering with at most `digits` significant digits ("%.*g").
/// Infinities render as "inf" / "-inf".
std::string format_number(double value, int digits = 6);

/// Parses a decimal number. Accepts "inf"/"-inf" in any case; rejects NaN,
/// empty cells and trailing garbage.
std::optional<double> parse_number(std::string_view cell);

/// Splits one CSV line on commas. No quoting.
std::vector<std::string_view> split_csv_line(std::string_view line);

/// Reads a whole text file into lines, dropping LF / CRLF terminators.
/// A trailing empty line (file ends with a newline) is not returned.
std::vector<std::string> read_lines(const std::filesystem::path& path);

/// Builds "<path>:<line>: <message>" for parse errors (line is 1-based).
std::string located(const std::filesystem::path& path, std::size_t line,
                    std::string_view message);

}  // namespace cibench
