#pragma once

// Small text-format helpers shared by the CSV and config readers.

#include <charconv>
#include <cstdio>
#include <string>
#include <vector>

#include "agefair/errors.hpp"

namespace agefair {

// Shortest decimal text that round-trips the double exactly.
inline std::string format_real(double v) {
    char buf[32];
    const auto [p, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    if (ec != std::errc{}) throw NumericError("format_real: value not representable");
    return std::string(buf, p);
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        const std::size_t pos = line.find(',', start);
        if (pos == std::string::npos) {
            out.push_back(line.substr(start));
            break;
        }
        out.push_back(line.substr(start, pos - start));
        start = pos + 1;
    }
    return out;
}

inline std::string strip_spaces(const std::string& s) {
    std::size_t a = 0, b = s.size();
    while (a < b && (s[a] == ' ' || s[a] == '\t')) ++a;
    while (b > a && (s[b - 1] == ' ' || s[b - 1] == '\t' || s[b - 1] == '\r')) --b;
    return s.substr(a, b - a);
}

inline int parse_int(const std::string& s, const std::string& context) {
    const std::string t = strip_spaces(s);
    int value = 0;
    const auto [p, ec] = std::from_chars(t.data(), t.data() + t.size(), value);
    if (ec != std::errc{} || p != t.data() + t.size())
        throw FormatError(context + ": not an integer: '" + s + "'");
    return value;
}

inline long parse_long(const std::string& s, const std::string& context) {
    const std::string t = strip_spaces(s);
    long value = 0;
    const auto [p, ec] = std::from_chars(t.data(), t.data() + t.size(), value);
    if (ec != std::errc{} || p != t.data() + t.size())
        throw FormatError(context + ": not an integer: '" + s + "'");
    return value;
}

inline double parse_real(const std::string& s, const std::string& context) {
    const std::string t = strip_spaces(s);
    if (t.empty()) throw FormatError(context + ": empty number");
    double value = 0.0;
    const auto [p, ec] = std::from_chars(t.data(), t.data() + t.size(), value);
    if (ec != std::errc{} || p != t.data() + t.size())
        throw FormatError(context + ": not a number: '" + s + "'");
    return value;
}

}  // namespace agefair
