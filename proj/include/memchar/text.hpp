#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace memchar {

// Shortest round-trip decimal form.
std::string format_number(double v);
double parse_number(std::string_view s, std::string_view what);
std::int64_t parse_int(std::string_view s, std::string_view what);
std::vector<std::string> split(std::string_view s, char sep);
std::string_view trim(std::string_view s);
std::string join(const std::vector<std::string>& parts, std::string_view sep);
// Next non-blank line with any trailing CR removed; counts lines read.
bool next_line(std::istream& in, std::string& line, int& lineno);

}  // namespace memchar
