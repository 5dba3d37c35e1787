#pragma once

#include <charconv>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

namespace buoytrack::detail {

inline bool is_digit(char c) noexcept { return c >= '0' && c <= '9'; }

inline bool all_digits(std::string_view s) noexcept {
    for (char c : s) {
        if (!is_digit(c)) return false;
    }
    return true;
}

inline std::vector<std::string_view> split(std::string_view s, char sep) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    for (;;) {
        auto pos = s.find(sep, start);
        if (pos == std::string_view::npos) {
            out.push_back(s.substr(start));
            return out;
        }
        out.push_back(s.substr(start, pos - start));
        start = pos + 1;
    }
}

// Plain decimal integer, digits only. No sign, no whitespace.
template <class Int>
std::optional<Int> parse_uint(std::string_view s) {
    if (s.empty() || !all_digits(s)) return std::nullopt;
    Int value{};
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
    if (ec != std::errc{} || ptr != s.data() + s.size()) return std::nullopt;
    return value;
}

// Unsigned decimal of the form "123", "123.45" or ".5". from_chars alone
// would also accept "inf", "nan" and exponents, which never occur in the
// fixed-point fields handled here.
inline std::optional<double> parse_unsigned_decimal(std::string_view s) {
    if (s.empty()) return std::nullopt;
    bool seen_dot = false;
    bool seen_digit = false;
    for (char c : s) {
        if (c == '.') {
            if (seen_dot) return std::nullopt;
            seen_dot = true;
        } else if (is_digit(c)) {
            seen_digit = true;
        } else {
            return std::nullopt;
        }
    }
    if (!seen_digit) return std::nullopt;
    double value = 0.0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
    if (ec != std::errc{} || ptr != s.data() + s.size()) return std::nullopt;
    return value;
}

inline constexpr char kHexUpper[] = "0123456789ABCDEF";

inline int hex_value(char c) noexcept {
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'A' && c <= 'F') return c - 'A' + 10;
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    return -1;
}

inline void append_hex_byte(std::string& out, std::uint8_t b) {
    out.push_back(kHexUpper[b >> 4]);
    out.push_back(kHexUpper[b & 0x0F]);
}

}  // namespace buoytrack::detail
