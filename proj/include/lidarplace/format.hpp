#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace lidarplace {

// Shortest decimal text that parses back to the same double.
std::string format_double(double value);

// Fixed number of decimals, for human-facing output.
std::string format_fixed(double value, int decimals);

double parse_double(std::string_view text);

std::vector<std::string> split(std::string_view text, char sep);

std::string trim(std::string_view text);

}  // namespace lidarplace
