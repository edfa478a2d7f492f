#pragma once

#include <charconv>
#include <cstdint>
#include <istream>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "rotcfi/types.hpp"

namespace rotcfi {

namespace detail {

inline std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

inline std::vector<std::string_view> split_fields(std::string_view s) {
    std::vector<std::string_view> out;
    std::size_t i = 0;
    while (i < s.size()) {
        while (i < s.size() && (s[i] == ' ' || s[i] == '\t')) ++i;
        std::size_t start = i;
        while (i < s.size() && s[i] != ' ' && s[i] != '\t') ++i;
        if (i > start) out.push_back(s.substr(start, i - start));
    }
    return out;
}

inline std::uint64_t parse_u64(std::string_view field, int base, std::size_t line, const char* what) {
    std::uint64_t value = 0;
    const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value, base);
    if (ec != std::errc{} || ptr != field.data() + field.size())
        throw ParseError(line, std::string("malformed ") + what + " field '" + std::string(field) + "'");
    return value;
}

inline std::uint64_t parse_hex(std::string_view field, std::size_t line, const char* what) {
    if (field.size() < 3 || field[0] != '0' || (field[1] != 'x' && field[1] != 'X'))
        throw ParseError(line, std::string(what) + " field '" + std::string(field) + "' missing 0x prefix");
    return parse_u64(field.substr(2), 16, line, what);
}

}  // namespace detail

/// Parses the text trace format: one `CYCLE PC RAW NPC` record per line,
/// CYCLE decimal, the rest 0x-prefixed hex. `#` lines are comments, blank
/// lines are ignored. Validates cycle monotonicity and the two-commit-ports
/// limit (at most two records per cycle).
inline std::vector<TraceRecord> parse_trace(std::istream& in) {
    std::vector<TraceRecord> records;
    std::string line;
    std::size_t line_no = 0;
    std::uint64_t last_cycle = 0;
    unsigned same_cycle = 0;

    while (std::getline(in, line)) {
        ++line_no;
        const std::string_view body = detail::trim(line);
        if (body.empty() || body.front() == '#') continue;

        const auto fields = detail::split_fields(body);
        if (fields.size() != 4)
            throw ParseError(line_no, "expected 4 fields CYCLE PC RAW NPC, got " +
                                          std::to_string(fields.size()));

        TraceRecord rec;
        rec.cycle = detail::parse_u64(fields[0], 10, line_no, "cycle");
        rec.pc    = detail::parse_hex(fields[1], line_no, "pc");
        const std::uint64_t raw = detail::parse_hex(fields[2], line_no, "raw");
        if (raw > 0xFFFFFFFFull)
            throw ParseError(line_no, "raw encoding wider than 32 bits");
        rec.raw = static_cast<std::uint32_t>(raw);
        rec.npc = detail::parse_hex(fields[3], line_no, "npc");

        if (rec.pc & 0x1ull)
            throw ParseError(line_no, "pc is not 2-byte aligned");

        if (!records.empty()) {
            if (rec.cycle < last_cycle)
                throw ParseError(line_no, "decreasing cycle index (" + std::to_string(rec.cycle) +
                                              " after " + std::to_string(last_cycle) + ")");
            same_cycle = rec.cycle == last_cycle ? same_cycle + 1 : 1;
            if (same_cycle > 2)
                throw ParseError(line_no, "more than 2 commits in cycle " + std::to_string(rec.cycle));
        } else {
            same_cycle = 1;
        }
        last_cycle = rec.cycle;
        records.push_back(rec);
    }
    return records;
}

inline void serialize_trace(const std::vector<TraceRecord>& records, std::ostream& out) {
    static const char* digits = "0123456789abcdef";
    const auto hex = [&](std::uint64_t v) {
        char buf[19] = "0x";
        int n = 2;
        char tmp[16];
        int len = 0;
        do {
            tmp[len++] = digits[v & 0xF];
            v >>= 4;
        } while (v != 0);
        while (len > 0) buf[n++] = tmp[--len];
        return std::string(buf, static_cast<std::size_t>(n));
    };
    for (const auto& rec : records)
        out << rec.cycle << ' ' << hex(rec.pc) << ' ' << hex(rec.raw) << ' ' << hex(rec.npc) << '\n';
}

}  // namespace rotcfi
