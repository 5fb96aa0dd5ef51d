#include "vizgrade/format.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>

namespace vizgrade {

std::string format_number(double value)
{
    if (std::isnan(value))
        return "NaN";
    if (std::isinf(value))
        return value > 0 ? "Infinity" : "-Infinity";
    if (value == 0.0)
        return "0";
    char buf[40];
    if (std::abs(value) < 1e15 && value == std::trunc(value)) {
        std::snprintf(buf, sizeof(buf), "%.0f", value);
        return buf;
    }
    for (int precision = 1; precision <= 17; ++precision) {
        std::snprintf(buf, sizeof(buf), "%.*g", precision, value);
        if (std::strtod(buf, nullptr) == value)
            break;
    }
    return buf;
}

std::optional<double> parse_double(std::string_view text)
{
    auto begin = text.find_first_not_of(" \t\r\n");
    if (begin == std::string_view::npos)
        return std::nullopt;
    auto end = text.find_last_not_of(" \t\r\n");
    std::string token(text.substr(begin, end - begin + 1));
    char* stop = nullptr;
    double value = std::strtod(token.c_str(), &stop);
    if (stop != token.c_str() + token.size() || !std::isfinite(value))
        return std::nullopt;
    return value;
}

std::optional<double> json_to_number(const nlohmann::json& value)
{
    if (value.is_number())
        return value.get<double>();
    if (value.is_string())
        return parse_double(value.get_ref<const std::string&>());
    return std::nullopt;
}

std::string canonical_key(const nlohmann::json& value)
{
    if (auto number = json_to_number(value))
        return format_number(*number);
    if (value.is_string())
        return value.get<std::string>();
    return value.dump();
}

const nlohmann::json* resolve_field(const nlohmann::json& object, std::string_view path)
{
    const nlohmann::json* node = &object;
    while (true) {
        auto dot = path.find('.');
        std::string name(path.substr(0, dot));
        if (!node->is_object())
            return nullptr;
        auto it = node->find(name);
        if (it == node->end())
            return nullptr;
        node = &*it;
        if (dot == std::string_view::npos)
            return node;
        path.remove_prefix(dot + 1);
    }
}

} // namespace vizgrade
