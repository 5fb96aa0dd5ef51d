#include "vizgrade/scene.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <string>

namespace vizgrade {

namespace {

struct NamedColor {
    std::string_view name;
    int r, g, b;
};

// CSS Color Module Level 4 named colors, sorted by name.
constexpr NamedColor kNamedColors[] = {
    {"aliceblue", 240, 248, 255},
    {"antiquewhite", 250, 235, 215},
    {"aqua", 0, 255, 255},
    {"aquamarine", 127, 255, 212},
    {"azure", 240, 255, 255},
    {"beige", 245, 245, 220},
    {"bisque", 255, 228, 196},
    {"black", 0, 0, 0},
    {"blanchedalmond", 255, 235, 205},
    {"blue", 0, 0, 255},
    {"blueviolet", 138, 43, 226},
    {"brown", 165, 42, 42},
    {"burlywood", 222, 184, 135},
    {"cadetblue", 95, 158, 160},
    {"chartreuse", 127, 255, 0},
    {"chocolate", 210, 105, 30},
    {"coral", 255, 127, 80},
    {"cornflowerblue", 100, 149, 237},
    {"cornsilk", 255, 248, 220},
    {"crimson", 220, 20, 60},
    {"cyan", 0, 255, 255},
    {"darkblue", 0, 0, 139},
    {"darkcyan", 0, 139, 139},
    {"darkgoldenrod", 184, 134, 11},
    {"darkgray", 169, 169, 169},
    {"darkgreen", 0, 100, 0},
    {"darkgrey", 169, 169, 169},
    {"darkkhaki", 189, 183, 107},
    {"darkmagenta", 139, 0, 139},
    {"darkolivegreen", 85, 107, 47},
    {"darkorange", 255, 140, 0},
    {"darkorchid", 153, 50, 204},
    {"darkred", 139, 0, 0},
    {"darksalmon", 233, 150, 122},
    {"darkseagreen", 143, 188, 143},
    {"darkslateblue", 72, 61, 139},
    {"darkslategray", 47, 79, 79},
    {"darkslategrey", 47, 79, 79},
    {"darkturquoise", 0, 206, 209},
    {"darkviolet", 148, 0, 211},
    {"deeppink", 255, 20, 147},
    {"deepskyblue", 0, 191, 255},
    {"dimgray", 105, 105, 105},
    {"dimgrey", 105, 105, 105},
    {"dodgerblue", 30, 144, 255},
    {"firebrick", 178, 34, 34},
    {"floralwhite", 255, 250, 240},
    {"forestgreen", 34, 139, 34},
    {"fuchsia", 255, 0, 255},
    {"gainsboro", 220, 220, 220},
    {"ghostwhite", 248, 248, 255},
    {"gold", 255, 215, 0},
    {"goldenrod", 218, 165, 32},
    {"gray", 128, 128, 128},
    {"green", 0, 128, 0},
    {"greenyellow", 173, 255, 47},
    {"grey", 128, 128, 128},
    {"honeydew", 240, 255, 240},
    {"hotpink", 255, 105, 180},
    {"indianred", 205, 92, 92},
    {"indigo", 75, 0, 130},
    {"ivory", 255, 255, 240},
    {"khaki", 240, 230, 140},
    {"lavender", 230, 230, 250},
    {"lavenderblush", 255, 240, 245},
    {"lawngreen", 124, 252, 0},
    {"lemonchiffon", 255, 250, 205},
    {"lightblue", 173, 216, 230},
    {"lightcoral", 240, 128, 128},
    {"lightcyan", 224, 255, 255},
    {"lightgoldenrodyellow", 250, 250, 210},
    {"lightgray", 211, 211, 211},
    {"lightgreen", 144, 238, 144},
    {"lightgrey", 211, 211, 211},
    {"lightpink", 255, 182, 193},
    {"lightsalmon", 255, 160, 122},
    {"lightseagreen", 32, 178, 170},
    {"lightskyblue", 135, 206, 250},
    {"lightslategray", 119, 136, 153},
    {"lightslategrey", 119, 136, 153},
    {"lightsteelblue", 176, 196, 222},
    {"lightyellow", 255, 255, 224},
    {"lime", 0, 255, 0},
    {"limegreen", 50, 205, 50},
    {"linen", 250, 240, 230},
    {"magenta", 255, 0, 255},
    {"maroon", 128, 0, 0},
    {"mediumaquamarine", 102, 205, 170},
    {"mediumblue", 0, 0, 205},
    {"mediumorchid", 186, 85, 211},
    {"mediumpurple", 147, 112, 219},
    {"mediumseagreen", 60, 179, 113},
    {"mediumslateblue", 123, 104, 238},
    {"mediumspringgreen", 0, 250, 154},
    {"mediumturquoise", 72, 209, 204},
    {"mediumvioletred", 199, 21, 133},
    {"midnightblue", 25, 25, 112},
    {"mintcream", 245, 255, 250},
    {"mistyrose", 255, 228, 225},
    {"moccasin", 255, 228, 181},
    {"navajowhite", 255, 222, 173},
    {"navy", 0, 0, 128},
    {"oldlace", 253, 245, 230},
    {"olive", 128, 128, 0},
    {"olivedrab", 107, 142, 35},
    {"orange", 255, 165, 0},
    {"orangered", 255, 69, 0},
    {"orchid", 218, 112, 214},
    {"palegoldenrod", 238, 232, 170},
    {"palegreen", 152, 251, 152},
    {"paleturquoise", 175, 238, 238},
    {"palevioletred", 219, 112, 147},
    {"papayawhip", 255, 239, 213},
    {"peachpuff", 255, 218, 185},
    {"peru", 205, 133, 63},
    {"pink", 255, 192, 203},
    {"plum", 221, 160, 221},
    {"powderblue", 176, 224, 230},
    {"purple", 128, 0, 128},
    {"rebeccapurple", 102, 51, 153},
    {"red", 255, 0, 0},
    {"rosybrown", 188, 143, 143},
    {"royalblue", 65, 105, 225},
    {"saddlebrown", 139, 69, 19},
    {"salmon", 250, 128, 114},
    {"sandybrown", 244, 164, 96},
    {"seagreen", 46, 139, 87},
    {"seashell", 255, 245, 238},
    {"sienna", 160, 82, 45},
    {"silver", 192, 192, 192},
    {"skyblue", 135, 206, 235},
    {"slateblue", 106, 90, 205},
    {"slategray", 112, 128, 144},
    {"slategrey", 112, 128, 144},
    {"snow", 255, 250, 250},
    {"springgreen", 0, 255, 127},
    {"steelblue", 70, 130, 180},
    {"tan", 210, 180, 140},
    {"teal", 0, 128, 128},
    {"thistle", 216, 191, 216},
    {"tomato", 255, 99, 71},
    {"turquoise", 64, 224, 208},
    {"violet", 238, 130, 238},
    {"wheat", 245, 222, 179},
    {"white", 255, 255, 255},
    {"whitesmoke", 245, 245, 245},
    {"yellow", 255, 255, 0},
    {"yellowgreen", 154, 205, 50},
};

std::string lower_trimmed(std::string_view text)
{
    auto begin = text.find_first_not_of(" \t\r\n");
    auto end = text.find_last_not_of(" \t\r\n");
    std::string out;
    if (begin == std::string_view::npos)
        return out;
    for (char ch : text.substr(begin, end - begin + 1))
        out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(ch))));
    return out;
}

[[noreturn]] void fail(std::string_view text)
{
    throw Error(Errc::ColorParseError, "cannot parse color '" + std::string(text) + "'");
}

int hex_digit(char ch, std::string_view text)
{
    if (ch >= '0' && ch <= '9')
        return ch - '0';
    if (ch >= 'a' && ch <= 'f')
        return ch - 'a' + 10;
    fail(text);
}

double parse_number(std::string_view token, std::string_view text)
{
    if (token.empty())
        fail(text);
    std::string buf(token);
    char* end = nullptr;
    double value = std::strtod(buf.c_str(), &end);
    if (end != buf.c_str() + buf.size() || !std::isfinite(value))
        fail(text);
    return value;
}

int channel_component(std::string_view token, std::string_view text)
{
    double value;
    if (!token.empty() && token.back() == '%')
        value = parse_number(token.substr(0, token.size() - 1), text) * 255.0 / 100.0;
    else
        value = parse_number(token, text);
    return static_cast<int>(std::lround(std::clamp(value, 0.0, 255.0)));
}

double alpha_component(std::string_view token, std::string_view text)
{
    double value;
    if (!token.empty() && token.back() == '%')
        value = parse_number(token.substr(0, token.size() - 1), text) / 100.0;
    else
        value = parse_number(token, text);
    return std::clamp(value, 0.0, 1.0);
}

Color parse_functional(const std::string& s, std::string_view text)
{
    auto open = s.find('(');
    if (open == std::string::npos || s.back() != ')')
        fail(text);
    std::string name = s.substr(0, open);
    while (!name.empty() && name.back() == ' ')
        name.pop_back();
    if (name != "rgb" && name != "rgba")
        fail(text);

    // Both the legacy comma form and the space form with "/ alpha" are accepted.
    std::vector<std::string> parts;
    std::string current;
    for (char ch : s.substr(open + 1, s.size() - open - 2)) {
        if (ch == ',' || ch == ' ' || ch == '/' || ch == '\t') {
            if (!current.empty())
                parts.push_back(current);
            current.clear();
        } else {
            current.push_back(ch);
        }
    }
    if (!current.empty())
        parts.push_back(current);
    if (parts.size() != 3 && parts.size() != 4)
        fail(text);

    Color c;
    c.r = channel_component(parts[0], text);
    c.g = channel_component(parts[1], text);
    c.b = channel_component(parts[2], text);
    c.alpha = parts.size() == 4 ? alpha_component(parts[3], text) : 1.0;
    return c;
}

} // namespace

Color parse_color(std::string_view text)
{
    const std::string s = lower_trimmed(text);
    if (s.empty())
        fail(text);

    if (s[0] == '#') {
        const std::string_view hex = std::string_view(s).substr(1);
        Color c;
        if (hex.size() == 3 || hex.size() == 4) {
            c.r = hex_digit(hex[0], text) * 17;
            c.g = hex_digit(hex[1], text) * 17;
            c.b = hex_digit(hex[2], text) * 17;
            if (hex.size() == 4)
                c.alpha = hex_digit(hex[3], text) * 17 / 255.0;
            return c;
        }
        if (hex.size() == 6 || hex.size() == 8) {
            auto byte = [&](std::size_t i) { return hex_digit(hex[i], text) * 16 + hex_digit(hex[i + 1], text); };
            c.r = byte(0);
            c.g = byte(2);
            c.b = byte(4);
            if (hex.size() == 8)
                c.alpha = byte(6) / 255.0;
            return c;
        }
        fail(text);
    }

    if (s.find('(') != std::string::npos)
        return parse_functional(s, text);

    if (s == "transparent")
        return Color{0, 0, 0, 0.0};

    auto it = std::lower_bound(std::begin(kNamedColors), std::end(kNamedColors), s,
        [](const NamedColor& entry, const std::string& key) { return entry.name < key; });
    if (it != std::end(kNamedColors) && it->name == s)
        return Color{it->r, it->g, it->b, 1.0};
    fail(text);
}

std::string to_string(const Color& c)
{
    char buf[64];
    if (c.alpha >= 1.0)
        std::snprintf(buf, sizeof(buf), "rgb(%d,%d,%d)", c.r, c.g, c.b);
    else
        std::snprintf(buf, sizeof(buf), "rgba(%d,%d,%d,%.4g)", c.r, c.g, c.b, c.alpha);
    return buf;
}

} // namespace vizgrade
