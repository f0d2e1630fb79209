#pragma once

#include <string>

namespace vill {

// Shortest decimal that round-trips to the same double.
std::string format_double(double x);

// Fixed-point with `digits` decimals, for terminal tables.
std::string format_fixed(double x, int digits);

}  // namespace vill
