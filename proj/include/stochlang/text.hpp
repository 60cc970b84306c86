#pragma once

#include <cstdio>
#include <cstdlib>
#include <sstream>
#include <string>
#include <vector>

#include "stochlang/errors.hpp"

namespace stochlang {

// Round-trip safe float rendering: the shortest decimal with at most 17
// significant digits that parses back to the same bits.
inline std::string format_double(double x) {
    char buf[40];
    for (int prec = 1; prec <= 17; ++prec) {
        std::snprintf(buf, sizeof(buf), "%.*g", prec, x);
        if (std::strtod(buf, nullptr) == x) break;
    }
    return buf;
}

// Parses a double from `s` starting at `pos`; advances `pos` past the number.
inline double parse_double_at(const std::string& s, std::size_t& pos) {
    const char* begin = s.c_str() + pos;
    char* end = nullptr;
    double v = std::strtod(begin, &end);
    if (end == begin) throw ParseError("expected a number", pos);
    pos += static_cast<std::size_t>(end - begin);
    return v;
}

namespace detail {

inline std::vector<std::string> split_tokens(const std::string& line) {
    std::vector<std::string> out;
    std::istringstream in(line);
    std::string tok;
    while (in >> tok) out.push_back(tok);
    return out;
}

// Parses `key=value` returning value; throws when the key does not match.
inline std::string expect_kv(const std::string& tok, const std::string& key, std::size_t offset) {
    if (tok.compare(0, key.size() + 1, key + "=") != 0)
        throw ParseError("expected " + key + "=...", offset);
    return tok.substr(key.size() + 1);
}

inline double parse_full_double(const std::string& s, std::size_t offset) {
    std::size_t pos = 0;
    double v = parse_double_at(s, pos);
    if (pos != s.size()) throw ParseError("trailing characters after number", offset);
    return v;
}

inline std::size_t parse_index(const std::string& s, std::size_t offset) {
    if (s.empty()) throw ParseError("expected a non-negative integer", offset);
    for (char c : s)
        if (c < '0' || c > '9') throw ParseError("expected a non-negative integer", offset);
    return static_cast<std::size_t>(std::stoull(s));
}

}  // namespace detail

}  // namespace stochlang
