#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace pflow::text {

// Shortest decimal that parses back to the same double.
std::string format_double(double v);
// Fixed-point with `digits` decimals; negative zero printed as zero.
std::string format_fixed(double v, int digits);

std::vector<std::string_view> split_ws(std::string_view line);
std::vector<std::string_view> split(std::string_view s, char sep);
std::string_view trim(std::string_view s);

std::optional<double> parse_double(std::string_view s);
std::optional<long long> parse_int(std::string_view s);

}  // namespace pflow::text
