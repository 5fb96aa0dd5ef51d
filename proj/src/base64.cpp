#include "vizgrade/webdriver.hpp"

#include <algorithm>
#include <array>
#include <cctype>

namespace vizgrade {

namespace {

constexpr char kAlphabet[] = "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";

constexpr std::array<int, 256> make_reverse()
{
    std::array<int, 256> table{};
    for (auto& v : table)
        v = -1;
    for (int i = 0; i < 64; ++i)
        table[static_cast<unsigned char>(kAlphabet[i])] = i;
    return table;
}

constexpr auto kReverse = make_reverse();

} // namespace

std::string base64_encode(std::string_view bytes)
{
    std::string out;
    out.reserve((bytes.size() + 2) / 3 * 4);
    std::size_t i = 0;
    for (; i + 2 < bytes.size(); i += 3) {
        unsigned n = (static_cast<unsigned char>(bytes[i]) << 16) | (static_cast<unsigned char>(bytes[i + 1]) << 8)
            | static_cast<unsigned char>(bytes[i + 2]);
        out += kAlphabet[(n >> 18) & 63];
        out += kAlphabet[(n >> 12) & 63];
        out += kAlphabet[(n >> 6) & 63];
        out += kAlphabet[n & 63];
    }
    if (i < bytes.size()) {
        unsigned n = static_cast<unsigned char>(bytes[i]) << 16;
        if (i + 1 < bytes.size())
            n |= static_cast<unsigned char>(bytes[i + 1]) << 8;
        out += kAlphabet[(n >> 18) & 63];
        out += kAlphabet[(n >> 12) & 63];
        out += i + 1 < bytes.size() ? kAlphabet[(n >> 6) & 63] : '=';
        out += '=';
    }
    return out;
}

std::vector<std::uint8_t> base64_decode(std::string_view text)
{
    std::string clean;
    clean.reserve(text.size());
    for (char ch : text)
        if (!std::isspace(static_cast<unsigned char>(ch)))
            clean.push_back(ch);
    if (clean.size() % 4 != 0)
        throw Error(Errc::DecodeError, "base64 length is not a multiple of 4");

    std::vector<std::uint8_t> out;
    out.reserve(clean.size() / 4 * 3);
    for (std::size_t i = 0; i < clean.size(); i += 4) {
        const bool last = i + 4 == clean.size();
        int pad = 0;
        unsigned n = 0;
        for (std::size_t j = 0; j < 4; ++j) {
            char ch = clean[i + j];
            int v;
            if (ch == '=') {
                if (!last || j < 2)
                    throw Error(Errc::DecodeError, "misplaced '=' padding");
                ++pad;
                v = 0;
            } else {
                if (pad > 0)
                    throw Error(Errc::DecodeError, "data after '=' padding");
                v = kReverse[static_cast<unsigned char>(ch)];
                if (v < 0)
                    throw Error(Errc::DecodeError, std::string("invalid base64 character '") + ch + "'");
            }
            n = (n << 6) | static_cast<unsigned>(v);
        }
        out.push_back(static_cast<std::uint8_t>((n >> 16) & 0xFF));
        if (pad < 2)
            out.push_back(static_cast<std::uint8_t>((n >> 8) & 0xFF));
        if (pad < 1)
            out.push_back(static_cast<std::uint8_t>(n & 0xFF));
    }
    return out;
}

std::optional<PngInfo> png_info(const std::vector<std::uint8_t>& bytes)
{
    static constexpr std::uint8_t kMagic[] = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1A, '\n'};
    if (bytes.size() < 8 || !std::equal(std::begin(kMagic), std::end(kMagic), bytes.begin()))
        return std::nullopt;
    PngInfo info;
    // IHDR is always the first chunk: length(4) "IHDR"(4) width(4) height(4)
    if (bytes.size() >= 24 && bytes[12] == 'I' && bytes[13] == 'H' && bytes[14] == 'D' && bytes[15] == 'R') {
        auto be32 = [&](std::size_t at) {
            return (std::uint32_t(bytes[at]) << 24) | (std::uint32_t(bytes[at + 1]) << 16)
                | (std::uint32_t(bytes[at + 2]) << 8) | std::uint32_t(bytes[at + 3]);
        };
        info.width = be32(16);
        info.height = be32(20);
    }
    return info;
}

} // namespace vizgrade
