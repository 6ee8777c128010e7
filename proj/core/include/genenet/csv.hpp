// Minimal CSV helpers for the comma-separated dialect used throughout:
// no quoting, no embedded commas, first column is a row key.

#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace genenet::csv {

// Splits one line on commas. A trailing '\r' (CRLF input) is stripped first.
std::vector<std::string> split_line(std::string_view line);

// Parses a floating point cell. Returns false on any trailing garbage.
bool parse_double(std::string_view cell, double& out);

// Formats with 17 significant digits so that re-parsing reproduces the
// exact double (round-trip contract of the canonical matrix format).
std::string format_double(double v);

std::string join(const std::vector<std::string>& fields);

}  // namespace genenet::csv
