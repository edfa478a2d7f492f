#pragma once

#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "rotcfi/types.hpp"

namespace rotcfi {

enum class FirmwareVariant : std::uint8_t { Irq, Polling, Optimized, Custom };

inline const char* to_string(FirmwareVariant v) {
    switch (v) {
        case FirmwareVariant::Irq:       return "irq";
        case FirmwareVariant::Polling:   return "polling";
        case FirmwareVariant::Optimized: return "optimized";
        case FirmwareVariant::Custom:    return "custom";
    }
    return "unknown";
}

/// One cell of the firmware cost table: instruction count and cycle count.
struct CostCell {
    std::uint32_t instructions = 0;
    std::uint32_t cycles = 0;
};

/// Cost breakdown of one policy operation (call or return), split into
/// IRQ-handling vs. CFI work and logic vs. RoT-memory vs. SoC-memory.
struct OpBreakdown {
    CostCell irq_logic, irq_mem_rot, irq_mem_soc;
    CostCell cfi_logic, cfi_mem_rot, cfi_mem_soc;

    std::uint32_t total_cycles() const {
        return irq_logic.cycles + irq_mem_rot.cycles + irq_mem_soc.cycles +
               cfi_logic.cycles + cfi_mem_rot.cycles + cfi_mem_soc.cycles;
    }
    std::uint32_t total_instructions() const {
        return irq_logic.instructions + irq_mem_rot.instructions + irq_mem_soc.instructions +
               cfi_logic.instructions + cfi_mem_rot.instructions + cfi_mem_soc.instructions;
    }
};

/// Per-variant check latencies for the shadow-stack policy, plus the unit
/// costs the cycle cells derive from.
struct FirmwareProfile {
    std::string name = "custom";
    FirmwareVariant variant = FirmwareVariant::Custom;
    OpBreakdown call;
    OpBreakdown ret;
    std::uint32_t rot_mem_cycles_per_access = 5;
    std::uint32_t soc_mem_cycles_per_access = 12;
    std::uint32_t irq_wakeup_cycles = 45;

    std::uint32_t call_cycles() const { return call.total_cycles(); }
    std::uint32_t return_cycles() const { return ret.total_cycles(); }
    std::uint32_t average_latency() const { return (call_cycles() + return_cycles()) / 2; }
};

/// Registers spilled and restored on IRQ entry/exit; each costs one RoT
/// scratchpad access both ways.
constexpr std::uint32_t kIrqSavedRegisters = 6;

namespace profiles {

/// Baseline firmware: policy runs inside the mailbox interrupt service
/// routine, paying wake-up and register spill/restore on every check.
inline FirmwareProfile irq() {
    FirmwareProfile p;
    p.name = "irq";
    p.variant = FirmwareVariant::Irq;
    p.call.irq_logic   = {8, 59};
    p.call.irq_mem_rot = {14, 74};
    p.call.irq_mem_soc = {2, 22};
    p.call.cfi_logic   = {15, 27};
    p.call.cfi_mem_rot = {5, 28};
    p.call.cfi_mem_soc = {4, 48};
    p.ret.irq_logic    = {8, 59};
    p.ret.irq_mem_rot  = {14, 74};
    p.ret.irq_mem_soc  = {2, 22};
    p.ret.cfi_logic    = {25, 45};
    p.ret.cfi_mem_rot  = {5, 28};
    p.ret.cfi_mem_soc  = {4, 48};
    p.rot_mem_cycles_per_access = 5;
    p.soc_mem_cycles_per_access = 12;
    p.irq_wakeup_cycles = 45;
    return p;
}

/// Busy-waits on the doorbell after each check, skipping IRQ entry/exit
/// whenever the next control-flow event is already pending.
inline FirmwareProfile polling() {
    FirmwareProfile p;
    p.name = "polling";
    p.variant = FirmwareVariant::Polling;
    p.call.cfi_logic   = {15, 27};
    p.call.cfi_mem_rot = {5, 28};
    p.call.cfi_mem_soc = {4, 48};
    p.ret.cfi_logic    = {25, 45};
    p.ret.cfi_mem_rot  = {5, 28};
    p.ret.cfi_mem_soc  = {4, 48};
    p.rot_mem_cycles_per_access = 5;
    p.soc_mem_cycles_per_access = 12;
    p.irq_wakeup_cycles = 45;
    return p;
}

/// Polling plus a low-latency internal interconnect: single-cycle scratchpad
/// accesses and 8-cycle SoC memory accesses instead of 12.
inline FirmwareProfile optimized() {
    FirmwareProfile p;
    p.name = "optimized";
    p.variant = FirmwareVariant::Optimized;
    p.call.cfi_logic   = {15, 27};
    p.call.cfi_mem_rot = {5, 5};
    p.call.cfi_mem_soc = {4, 32};
    p.ret.cfi_logic    = {25, 45};
    p.ret.cfi_mem_rot  = {5, 5};
    p.ret.cfi_mem_soc  = {4, 32};
    p.rot_mem_cycles_per_access = 1;
    p.soc_mem_cycles_per_access = 8;
    p.irq_wakeup_cycles = 45;
    return p;
}

inline std::vector<FirmwareProfile> builtin() { return {optimized(), polling(), irq()}; }

inline std::optional<FirmwareProfile> builtin_by_name(const std::string& name) {
    if (name == "irq") return irq();
    if (name == "polling") return polling();
    if (name == "optimized") return optimized();
    return std::nullopt;
}

}  // namespace profiles

/// Reconstruction of selected table cells from the unit costs, as a
/// cross-check of the measured cycle numbers. The measured cells stay
/// authoritative; `deviates` marks cells the unit-cost model does not
/// reproduce within the tolerance.
struct DerivedCell {
    std::string label;
    std::uint32_t derived;
    std::uint32_t measured;
    bool deviates;
};

struct DerivedTotals {
    std::uint32_t irq_entry_exit_overhead;  // wake-up + register spill/restore
    std::vector<DerivedCell> cells;
};

inline DerivedTotals derive_profile_totals(const FirmwareProfile& p, std::uint32_t tolerance = 0) {
    DerivedTotals out;
    out.irq_entry_exit_overhead =
        p.irq_wakeup_cycles + 2 * kIrqSavedRegisters * p.rot_mem_cycles_per_access;

    const auto add = [&](std::string label, const CostCell& cell, std::uint32_t unit) {
        const std::uint32_t derived = cell.instructions * unit;
        const std::uint32_t delta = derived > cell.cycles ? derived - cell.cycles : cell.cycles - derived;
        out.cells.push_back({std::move(label), derived, cell.cycles, delta > tolerance});
    };
    add("call.cfi.mem_rot", p.call.cfi_mem_rot, p.rot_mem_cycles_per_access);
    add("call.cfi.mem_soc", p.call.cfi_mem_soc, p.soc_mem_cycles_per_access);
    add("return.cfi.mem_rot", p.ret.cfi_mem_rot, p.rot_mem_cycles_per_access);
    add("return.cfi.mem_soc", p.ret.cfi_mem_soc, p.soc_mem_cycles_per_access);
    return out;
}

namespace detail {

inline std::uint32_t parse_profile_value(const std::string& value, std::size_t line) {
    try {
        std::size_t pos = 0;
        const unsigned long v = std::stoul(value, &pos);
        if (pos != value.size() || v > 0xFFFFFFFFul) throw std::invalid_argument(value);
        return static_cast<std::uint32_t>(v);
    } catch (const std::exception&) {
        throw ProfileError("profile line " + std::to_string(line) + ": bad value '" + value + "'");
    }
}

inline CostCell* cell_by_key(FirmwareProfile& p, const std::string& op, const std::string& section,
                             const std::string& category) {
    OpBreakdown* b = nullptr;
    if (op == "call") b = &p.call;
    else if (op == "return") b = &p.ret;
    else return nullptr;
    if (section == "irq") {
        if (category == "logic") return &b->irq_logic;
        if (category == "mem_rot") return &b->irq_mem_rot;
        if (category == "mem_soc") return &b->irq_mem_soc;
    } else if (section == "cfi") {
        if (category == "logic") return &b->cfi_logic;
        if (category == "mem_rot") return &b->cfi_mem_rot;
        if (category == "mem_soc") return &b->cfi_mem_soc;
    }
    return nullptr;
}

}  // namespace detail

/// Loads a firmware profile from `key = value` text. Recognized keys:
///   name, variant (irq|polling|optimized|custom)
///   call_cycles, return_cycles  — shorthand totals, stored as cfi.logic
///   {call|return}.{irq|cfi}.{logic|mem_rot|mem_soc}.{cycles|instructions}
///   rot_mem_cycles_per_access, soc_mem_cycles_per_access, irq_wakeup_cycles
/// Giving both a shorthand total and breakdown cells for the same operation
/// is an error unless they agree.
inline FirmwareProfile load_profile(std::istream& in, const std::string& name_hint = "custom") {
    FirmwareProfile p;
    p.name = name_hint;
    std::optional<std::uint32_t> call_total, return_total;
    bool call_cells = false, return_cells = false;

    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.resize(hash);
        std::istringstream ls(line);
        std::string key, eq, value;
        if (!(ls >> key)) continue;
        if (!(ls >> eq >> value) || eq != "=")
            throw ProfileError("profile line " + std::to_string(line_no) + ": expected 'key = value'");

        if (key == "name") { p.name = value; continue; }
        if (key == "variant") {
            if (value == "irq") p.variant = FirmwareVariant::Irq;
            else if (value == "polling") p.variant = FirmwareVariant::Polling;
            else if (value == "optimized") p.variant = FirmwareVariant::Optimized;
            else if (value == "custom") p.variant = FirmwareVariant::Custom;
            else throw ProfileError("profile line " + std::to_string(line_no) + ": unknown variant '" + value + "'");
            continue;
        }
        const std::uint32_t num = detail::parse_profile_value(value, line_no);
        if (key == "call_cycles") { call_total = num; continue; }
        if (key == "return_cycles") { return_total = num; continue; }
        if (key == "rot_mem_cycles_per_access") { p.rot_mem_cycles_per_access = num; continue; }
        if (key == "soc_mem_cycles_per_access") { p.soc_mem_cycles_per_access = num; continue; }
        if (key == "irq_wakeup_cycles") { p.irq_wakeup_cycles = num; continue; }

        // dotted breakdown key
        std::vector<std::string> parts;
        std::istringstream ks(key);
        std::string part;
        while (std::getline(ks, part, '.')) parts.push_back(part);
        CostCell* cell = parts.size() == 4 ? detail::cell_by_key(p, parts[0], parts[1], parts[2]) : nullptr;
        if (cell == nullptr || (parts[3] != "cycles" && parts[3] != "instructions"))
            throw ProfileError("profile line " + std::to_string(line_no) + ": unknown key '" + key + "'");
        if (parts[3] == "cycles") cell->cycles = num; else cell->instructions = num;
        (parts[0] == "call" ? call_cells : return_cells) = true;
    }

    if (call_total) {
        if (call_cells && p.call.total_cycles() != *call_total)
            throw ProfileError("call_cycles disagrees with call breakdown cells");
        if (!call_cells) p.call.cfi_logic.cycles = *call_total;
    }
    if (return_total) {
        if (return_cells && p.ret.total_cycles() != *return_total)
            throw ProfileError("return_cycles disagrees with return breakdown cells");
        if (!return_cells) p.ret.cfi_logic.cycles = *return_total;
    }
    return p;
}

inline FirmwareProfile load_profile_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ProfileError("cannot open profile file '" + path + "'");
    std::string name = path;
    const auto slash = name.find_last_of('/');
    if (slash != std::string::npos) name = name.substr(slash + 1);
    const auto dot = name.find_last_of('.');
    if (dot != std::string::npos && dot > 0) name = name.substr(0, dot);
    return load_profile(in, name);
}

/// Profile lookup used by the CLI: built-in name, then a literal file path,
/// then `NAME` / `NAME.profile` under `profile_dir`.
inline FirmwareProfile resolve_profile(const std::string& name_or_path,
                                       const std::string& profile_dir = "") {
    if (auto p = profiles::builtin_by_name(name_or_path)) return *p;
    if (std::ifstream probe(name_or_path); probe.good()) return load_profile_file(name_or_path);
    if (!profile_dir.empty()) {
        for (const auto& candidate :
             {profile_dir + "/" + name_or_path, profile_dir + "/" + name_or_path + ".profile"}) {
            if (std::ifstream probe(candidate); probe.good()) return load_profile_file(candidate);
        }
    }
    throw ProfileError("unknown profile '" + name_or_path + "'");
}

}  // namespace rotcfi
