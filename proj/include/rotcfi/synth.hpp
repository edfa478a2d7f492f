#pragma once

#include <cstdint>
#include <random>
#include <stdexcept>
#include <vector>

#include "rotcfi/decode.hpp"
#include "rotcfi/types.hpp"

namespace rotcfi {
namespace synth {

constexpr std::uint32_t kRetEncoding = 0x00008067;   // jalr x0, 0(x1)
constexpr std::uint32_t kCRetEncoding = 0x8082;      // c.jr x1
constexpr std::uint32_t kCallEncoding = 0x000000EF;  // jal x1, 0
constexpr std::uint32_t kNopEncoding = 0x00000013;   // addi x0, x0, 0

/// Well-nested call tree: `width` calls per level, `depth` levels. Every
/// return goes back to its call's fall-through, so a clean run reports zero
/// violations. Seed 0 keeps events on consecutive cycles with a fixed
/// compressed/uncompressed alternation; a non-zero seed randomizes cycle
/// gaps, callee placement and encoding forms without changing the tree.
inline std::vector<TraceRecord> balanced_trace(unsigned depth, unsigned width,
                                               std::uint64_t seed = 0,
                                               std::uint64_t start_cycle = 1,
                                               std::uint64_t base_pc = 0x80000000) {
    if (depth == 0 || width == 0) throw std::invalid_argument("balanced trace needs depth, width >= 1");
    std::vector<TraceRecord> out;
    std::mt19937_64 rng(seed);
    std::uint64_t cycle = start_cycle;
    std::uint64_t pc = base_pc;

    const auto emit = [&](std::uint32_t raw, std::uint64_t npc) {
        out.push_back({cycle, pc, raw, npc});
        cycle += seed == 0 ? 1 : 1 + rng() % 4;
        pc += instruction_length(raw);
    };

    const auto walk = [&](auto&& self, unsigned level) -> void {
        if (level == depth) return;
        for (unsigned i = 0; i < width; ++i) {
            const std::uint64_t call_pc = pc;
            const std::uint64_t callee = pc + (seed == 0 ? 0x1000 : 0x100 * (1 + rng() % 64));
            emit(kCallEncoding, callee);
            pc = callee;
            self(self, level + 1);
            const bool compressed = seed == 0 ? (level + i) % 2 == 0 : rng() % 2 == 0;
            emit(compressed ? kCRetEncoding : kRetEncoding, call_pc + 4);
            pc = call_pc + 4;
        }
    };
    walk(walk, 0);
    return out;
}

/// Back-to-back returns on consecutive cycles; saturates the checker.
inline std::vector<TraceRecord> burst_trace(std::uint64_t n, std::uint64_t start_cycle = 1,
                                            std::uint64_t base_pc = 0x80000000) {
    std::vector<TraceRecord> out;
    out.reserve(n);
    for (std::uint64_t i = 0; i < n; ++i)
        out.push_back({start_cycle + i, base_pc + 4 * i, kRetEncoding, base_pc});
    return out;
}

/// `n` call/return pairs with `gap` cycles between consecutive control-flow
/// events. With a gap wider than the check latency the checker always catches
/// up and the protected run matches the baseline exactly.
inline std::vector<TraceRecord> gap_trace(std::uint64_t n, std::uint64_t gap,
                                          std::uint64_t start_cycle = 1,
                                          std::uint64_t base_pc = 0x80000000) {
    if (gap == 0) throw std::invalid_argument("gap must be >= 1");
    std::vector<TraceRecord> out;
    out.reserve(2 * n);
    std::uint64_t cycle = start_cycle;
    std::uint64_t pc = base_pc;
    for (std::uint64_t i = 0; i < n; ++i) {
        const std::uint64_t call_pc = pc;
        const std::uint64_t callee = pc + 0x1000;
        out.push_back({cycle, call_pc, kCallEncoding, callee});
        cycle += gap;
        out.push_back({cycle, callee, kRetEncoding, call_pc + 4});
        cycle += gap;
        pc = call_pc + 4;
    }
    return out;
}

}  // namespace synth
}  // namespace rotcfi
