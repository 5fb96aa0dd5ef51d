#pragma once

#include "json.hpp"

#include <optional>
#include <string>
#include <string_view>

namespace vizgrade {

/// Shortest decimal spelling that round-trips; integral values print without
/// a fractional part ("42", not "42.0").
std::string format_number(double value);

/// Parses a JSON number, or a string holding a complete finite number.
std::optional<double> json_to_number(const nlohmann::json& value);
std::optional<double> parse_double(std::string_view text);

/// Canonical comparison key for data values: numbers (including numeric
/// strings) by format_number, strings verbatim, everything else by dump().
std::string canonical_key(const nlohmann::json& value);

/// Resolves "a.b.c" inside nested objects.
const nlohmann::json* resolve_field(const nlohmann::json& object, std::string_view path);

} // namespace vizgrade
