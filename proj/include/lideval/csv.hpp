#pragma once

#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

// Minimal CSV helpers shared by the readers; no quoting support, fields are comma separated.
namespace lideval::csv {

std::string_view trim(std::string_view s) noexcept;

std::vector<std::string> split(std::string_view line, char sep = ',');

/// Strict number parse; throws ValidationError with `context` on failure.
double to_double(std::string_view field, const std::string& context);

/// Reads non-empty, non-comment ('#') lines, each split into trimmed fields.
std::vector<std::vector<std::string>> read_rows(std::istream& in);

/// Formats with a fixed number of decimals; "-0.000" is printed as "0.000".
std::string fixed(double v, int decimals);

} // namespace lideval::csv
