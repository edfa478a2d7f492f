#pragma once

#include <iomanip>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "rotcfi/sim.hpp"

namespace rotcfi {

namespace detail {

inline std::string hex_addr(std::uint64_t v) {
    std::ostringstream os;
    os << "0x" << std::hex << v;
    return os.str();
}

}  // namespace detail

/// Whole percents, with a dash when the trace produced no control-flow
/// events (nothing to enforce, so no meaningful slowdown).
inline std::string format_slowdown(const SimReport& r) {
    if (r.cf_event_count == 0 || r.baseline_cycles == 0) return "-";
    return std::to_string(r.slowdown().rounded());
}

inline nlohmann::json violation_to_json(const ViolationRecord& v) {
    nlohmann::json j{
        {"record_index", v.record_index},
        {"cycle", v.cycle},
        {"kind", to_string(v.kind)},
        {"detail", to_string(v.result.detail)},
    };
    if (v.result.detail == CheckResult::Detail::ReturnMismatch) {
        j["expected"] = detail::hex_addr(v.result.expected);
        j["observed"] = detail::hex_addr(v.result.observed);
    }
    if (v.result.detail == CheckResult::Detail::TamperDetected)
        j["frame_index"] = v.result.frame_index;
    return j;
}

/// JSON report, schema version 1. The exact slowdown fraction is kept next
/// to the rounded double so nothing is lost to formatting.
inline nlohmann::json report_to_json(const SimReport& r, const SimConfig& cfg,
                                     const std::string& trace_name = "") {
    const Rational s = r.slowdown();
    nlohmann::json j{
        {"schema", 1},
        {"config",
         {{"profile", cfg.profile.name},
          {"queue_depth", cfg.queue_depth},
          {"bus_width_bits", cfg.bus_width_bits},
          {"transfer_cost_per_beat", cfg.transfer_cost_per_beat},
          {"averaged_latency", cfg.averaged_latency},
          {"halt_on_violation", cfg.halt_on_violation}}},
        {"baseline_cycles", r.baseline_cycles},
        {"cfi_cycles", r.cfi_cycles},
        {"slowdown", {{"numerator", s.num}, {"denominator", s.den}, {"percent", s.value()}}},
        {"retired_instructions", r.retired_instructions},
        {"cf_events",
         {{"total", r.cf_event_count},
          {"call", r.calls},
          {"return", r.returns},
          {"indirect_jump", r.indirect_jumps},
          {"coroutine_swap", r.coroutine_swaps}}},
        {"stalls",
         {{"queue_full_cycles", r.stall_queue_full_cycles},
          {"dual_commit_cycles", r.stall_dual_commit_cycles}}},
        {"max_queue_occupancy", r.max_queue_occupancy},
        {"halted", r.halted},
        {"queue_residue", r.queue_residue},
        {"violations", nlohmann::json::array()},
    };
    if (!trace_name.empty()) j["trace"] = trace_name;
    for (const auto& v : r.violations) j["violations"].push_back(violation_to_json(v));
    return j;
}

inline void emit_text_report(const SimReport& r, const SimConfig& cfg, std::ostream& out,
                             const std::string& trace_name = "") {
    if (!trace_name.empty()) out << "trace:               " << trace_name << '\n';
    out << "profile:             " << cfg.profile.name << '\n'
        << "queue depth:         " << cfg.queue_depth << '\n'
        << "baseline cycles:     " << r.baseline_cycles << '\n'
        << "cfi cycles:          " << r.cfi_cycles << '\n'
        << "slowdown [%]:        " << format_slowdown(r) << '\n'
        << "retired:             " << r.retired_instructions << '\n'
        << "cf events:           " << r.cf_event_count
        << " (call " << r.calls << ", return " << r.returns
        << ", indirect " << r.indirect_jumps << ", coroutine " << r.coroutine_swaps << ")\n"
        << "stall cycles:        " << r.stall_queue_full_cycles << " queue-full, "
        << r.stall_dual_commit_cycles << " dual-commit\n"
        << "max queue occupancy: " << r.max_queue_occupancy << '\n';
    if (r.halted)
        out << "halted:              yes (queue residue " << r.queue_residue << ")\n";
    for (const auto& v : r.violations) {
        out << "violation:           record " << v.record_index << " cycle " << v.cycle << ' '
            << to_string(v.kind) << ' ' << to_string(v.result.detail);
        if (v.result.detail == CheckResult::Detail::ReturnMismatch)
            out << " expected " << detail::hex_addr(v.result.expected) << " observed "
                << detail::hex_addr(v.result.observed);
        if (v.result.detail == CheckResult::Detail::TamperDetected)
            out << " frame " << v.result.frame_index;
        out << '\n';
    }
}

/// Comparison table: one row per queue depth, one slowdown column per
/// profile, echoing the cycles/CF-count/slowdown layout of the runtime
/// overhead tables.
inline void emit_compare_text(const std::vector<CompareEntry>& entries, std::ostream& out,
                              const std::string& trace_name = "") {
    if (entries.empty()) return;
    out << std::left << std::setw(24) << ("trace " + trace_name) << std::right
        << std::setw(14) << "cycles" << std::setw(10) << "cf";
    std::vector<std::string> profile_names;
    for (const auto& e : entries) {
        bool seen = false;
        for (const auto& p : profile_names) seen = seen || p == e.config.profile.name;
        if (!seen) profile_names.push_back(e.config.profile.name);
    }
    for (const auto& p : profile_names) out << std::setw(12) << p;
    out << '\n';
    std::vector<std::size_t> depths;
    for (const auto& e : entries) {
        bool seen = false;
        for (const auto d : depths) seen = seen || d == e.config.queue_depth;
        if (!seen) depths.push_back(e.config.queue_depth);
    }
    for (const std::size_t d : depths) {
        const CompareEntry* first = nullptr;
        for (const auto& e : entries)
            if (e.config.queue_depth == d) { first = &e; break; }
        out << std::left << std::setw(24) << ("  depth " + std::to_string(d)) << std::right
            << std::setw(14) << first->report.baseline_cycles << std::setw(10)
            << first->report.cf_event_count;
        for (const auto& p : profile_names) {
            std::string cell = "?";
            for (const auto& e : entries)
                if (e.config.queue_depth == d && e.config.profile.name == p)
                    cell = format_slowdown(e.report);
            out << std::setw(12) << cell;
        }
        out << '\n';
    }
}

inline nlohmann::json compare_to_json(const std::vector<CompareEntry>& entries,
                                      const std::string& trace_name = "") {
    nlohmann::json j{{"schema", 1}, {"runs", nlohmann::json::array()}};
    if (!trace_name.empty()) j["trace"] = trace_name;
    for (const auto& e : entries) {
        nlohmann::json run = report_to_json(e.report, e.config, trace_name);
        run["key"] = e.key;
        j["runs"].push_back(std::move(run));
    }
    return j;
}

}  // namespace rotcfi
