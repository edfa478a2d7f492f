#pragma once

#include <cstdint>
#include <optional>

#include "rotcfi/types.hpp"

namespace rotcfi {

/// Length in bytes of an instruction from its low parcel: 16-bit compressed
/// encodings have low two bits != 0b11.
constexpr std::uint32_t instruction_length(std::uint32_t raw) {
    return (raw & 0x3u) == 0x3u ? 4u : 2u;
}

constexpr bool is_compressed(std::uint32_t raw) { return instruction_length(raw) == 2; }

namespace detail {

constexpr std::uint32_t kOpcodeJal  = 0x6F;
constexpr std::uint32_t kOpcodeJalr = 0x67;

constexpr std::uint32_t encode_jal(std::uint32_t rd, std::int32_t offset) {
    const auto imm = static_cast<std::uint32_t>(offset);
    std::uint32_t inst = kOpcodeJal | (rd << 7);
    inst |= ((imm >> 20) & 0x1u) << 31;   // imm[20]
    inst |= ((imm >> 1) & 0x3FFu) << 21;  // imm[10:1]
    inst |= ((imm >> 11) & 0x1u) << 20;   // imm[11]
    inst |= ((imm >> 12) & 0xFFu) << 12;  // imm[19:12]
    return inst;
}

constexpr std::uint32_t encode_jalr(std::uint32_t rd, std::uint32_t rs1, std::int32_t offset) {
    const auto imm = static_cast<std::uint32_t>(offset) & 0xFFFu;
    return kOpcodeJalr | (rd << 7) | (rs1 << 15) | (imm << 20);
}

/// Sign-extended CJ-format immediate, inst[12:2] = offset[11|4|9:8|10|6|7|3:1|5].
constexpr std::int32_t cj_offset(std::uint16_t inst) {
    std::uint32_t imm = 0;
    imm |= ((inst >> 12) & 0x1u) << 11;
    imm |= ((inst >> 11) & 0x1u) << 4;
    imm |= ((inst >> 9) & 0x3u) << 8;
    imm |= ((inst >> 8) & 0x1u) << 10;
    imm |= ((inst >> 7) & 0x1u) << 6;
    imm |= ((inst >> 6) & 0x1u) << 7;
    imm |= ((inst >> 3) & 0x7u) << 1;
    imm |= ((inst >> 2) & 0x1u) << 5;
    if (imm & 0x800u) imm |= 0xFFFFF000u;  // sign bit is offset[11]
    return static_cast<std::int32_t>(imm);
}

}  // namespace detail

/// Expands a compressed jump/call encoding (c.j, c.jal on rv32, c.jr, c.jalr)
/// to its 32-bit equivalent. Returns nullopt for compressed encodings that are
/// not control-flow transfers; those never enter a commit log and need no
/// expansion. Throws DecodeError for the reserved c.jr slot with rs1 = x0.
inline std::optional<std::uint32_t> expand_compressed(std::uint16_t raw16, Xlen xlen = Xlen::Rv64) {
    const std::uint32_t quadrant = raw16 & 0x3u;
    const std::uint32_t funct3   = (raw16 >> 13) & 0x7u;

    if (quadrant == 0x1u) {
        if (funct3 == 0x5u)  // c.j
            return detail::encode_jal(0, detail::cj_offset(raw16));
        if (funct3 == 0x1u && xlen == Xlen::Rv32)  // c.jal (c.addiw on rv64)
            return detail::encode_jal(1, detail::cj_offset(raw16));
        return std::nullopt;
    }
    if (quadrant == 0x2u && funct3 == 0x4u) {
        const std::uint32_t bit12 = (raw16 >> 12) & 0x1u;
        const std::uint32_t rs1   = (raw16 >> 7) & 0x1Fu;
        const std::uint32_t rs2   = (raw16 >> 2) & 0x1Fu;
        if (rs2 != 0) return std::nullopt;  // c.mv / c.add
        if (bit12 == 0) {
            if (rs1 == 0) throw DecodeError(raw16);  // reserved slot
            return detail::encode_jalr(0, rs1, 0);   // c.jr
        }
        if (rs1 == 0) return std::nullopt;           // c.ebreak
        return detail::encode_jalr(1, rs1, 0);       // c.jalr
    }
    return std::nullopt;
}

/// Control-flow classification of a 32-bit encoding, total over all inputs.
/// Uses the standard link-register convention: x1/x5 are link registers, and
/// the (rd, rs1) hint pair distinguishes calls, returns and co-routine swaps.
/// Direct jumps (jal with rd not a link register) and conditional branches
/// have statically-known targets and are not monitored.
inline ControlFlowKind classify(std::uint32_t encoding) {
    const std::uint32_t opcode = encoding & 0x7Fu;
    const std::uint32_t rd     = (encoding >> 7) & 0x1Fu;
    const auto is_link = [](std::uint32_t r) { return r == 1 || r == 5; };

    if (opcode == detail::kOpcodeJal)
        return is_link(rd) ? ControlFlowKind::Call : ControlFlowKind::NotControlFlow;

    if (opcode == detail::kOpcodeJalr) {
        const std::uint32_t funct3 = (encoding >> 12) & 0x7u;
        if (funct3 != 0) return ControlFlowKind::NotControlFlow;  // reserved funct3
        const std::uint32_t rs1 = (encoding >> 15) & 0x1Fu;
        if (is_link(rd))
            return is_link(rs1) ? ControlFlowKind::CoroutineSwap : ControlFlowKind::Call;
        return is_link(rs1) ? ControlFlowKind::Return : ControlFlowKind::IndirectJump;
    }
    return ControlFlowKind::NotControlFlow;
}

/// Filters one retired instruction: returns the commit log for control-flow
/// instructions, nullopt otherwise. Compressed control-flow forms are expanded
/// so the log always carries the 32-bit encoding.
inline std::optional<CommitLog> make_commit_log(const TraceRecord& rec, Xlen xlen = Xlen::Rv64) {
    std::uint32_t encoding = rec.raw;
    if (is_compressed(rec.raw)) {
        const auto expanded = expand_compressed(static_cast<std::uint16_t>(rec.raw & 0xFFFFu), xlen);
        if (!expanded) return std::nullopt;
        encoding = *expanded;
    }
    const ControlFlowKind kind = classify(encoding);
    if (kind == ControlFlowKind::NotControlFlow) return std::nullopt;
    return CommitLog{
        .pc          = rec.pc,
        .encoding    = encoding,
        .next_addr   = rec.pc + instruction_length(rec.raw),
        .target_addr = rec.npc,
        .kind        = kind,
    };
}

}  // namespace rotcfi
