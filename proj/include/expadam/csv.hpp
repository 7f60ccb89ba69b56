#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace expadam::csv {

/// Shortest-exact text for a double: 17 significant digits.
std::string format_double(double x);
double parse_double(std::string_view field);
std::vector<std::string> split_line(std::string_view line);

}  // namespace expadam::csv
