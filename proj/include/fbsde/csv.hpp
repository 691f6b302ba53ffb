#pragma once

#include <charconv>
#include <cmath>
#include <initializer_list>
#include <ostream>
#include <string>
#include <string_view>
#include <variant>

namespace fbsde::csv {

/// Locale-independent shortest form with at most 17 significant digits.
inline std::string format_real(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::general, 17);
    return std::string(buf, res.ptr);
}

using Cell = std::variant<std::string_view, double, long long>;

/// Writes one comma-separated row terminated by '\n'.
inline void write_row(std::ostream& os, std::initializer_list<Cell> cells) {
    bool first = true;
    for (const auto& c : cells) {
        if (!first) os << ',';
        first = false;
        if (const auto* s = std::get_if<std::string_view>(&c)) {
            os << *s;
        } else if (const auto* d = std::get_if<double>(&c)) {
            os << format_real(*d);
        } else {
            os << std::get<long long>(c);
        }
    }
    os << '\n';
}

}  // namespace fbsde::csv
