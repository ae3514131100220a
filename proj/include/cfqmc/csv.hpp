#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace cfq::csv {

/// 17-significant-digit rendering; parses back to the identical double.
std::string format_double(double x);

/// Parse a full string as a double; throws std::invalid_argument naming `what`.
double parse_double(std::string_view s, std::string_view what = "value");

long long parse_int(std::string_view s, std::string_view what = "value");

/// Split on `sep`, trimming ASCII whitespace from each field.
std::vector<std::string> split(std::string_view line, char sep = ',');

std::string_view trim(std::string_view s);

std::string join(const std::vector<std::string>& fields, char sep = ',');

}  // namespace cfq::csv
