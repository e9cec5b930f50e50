#pragma once

#include <string>

#include <nlohmann/json_fwd.hpp>

namespace tokspace {

// Decimal with 12 significant digits; "inf", "-inf" and "nan" otherwise.
std::string format_number(double value);

// The same rounding for JSON output; non-finite values become null.
nlohmann::json json_number(double value);

}  // namespace tokspace
