#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace lipdoi::text {

std::string trim(std::string_view s);
std::vector<std::string> split_ws(std::string_view s);
// Whole-token parse; accepts scientific notation.
bool parse_double(std::string_view s, double& out);
bool parse_size(std::string_view s, std::size_t& out);
// Shortest representation that round-trips exactly.
std::string format_double(double v);

}  // namespace lipdoi::text
