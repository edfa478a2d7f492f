#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace rotcfi {

/// Classification of a retired instruction as seen by the CFI filters.
/// Only the four control-flow kinds ever reach the policy engine.
enum class ControlFlowKind : std::uint8_t {
    NotControlFlow = 0,
    Call           = 1,
    Return         = 2,
    IndirectJump   = 3,
    CoroutineSwap  = 4,
};

inline const char* to_string(ControlFlowKind k) {
    switch (k) {
        case ControlFlowKind::NotControlFlow: return "not_control_flow";
        case ControlFlowKind::Call:           return "call";
        case ControlFlowKind::Return:         return "return";
        case ControlFlowKind::IndirectJump:   return "indirect_jump";
        case ControlFlowKind::CoroutineSwap:  return "coroutine_swap";
    }
    return "unknown";
}

/// One retired instruction as recorded in a trace file. `raw` holds either a
/// full 32-bit encoding or a 16-bit compressed encoding zero-extended to 32
/// bits. `npc` is the address of the next retired instruction.
struct TraceRecord {
    std::uint64_t cycle = 0;
    std::uint64_t pc    = 0;
    std::uint32_t raw   = 0;
    std::uint64_t npc   = 0;

    bool operator==(const TraceRecord&) const = default;
};

/// Metadata packet describing one retired control-flow instruction.
/// pc + encoding + next_addr + target_addr is the 224-bit hardware payload;
/// `kind` is carried alongside as a simulator convenience.
struct CommitLog {
    std::uint64_t   pc          = 0;
    std::uint32_t   encoding    = 0;   // always the uncompressed form
    std::uint64_t   next_addr   = 0;   // fall-through, pc + instruction length
    std::uint64_t   target_addr = 0;   // actual control-transfer destination
    ControlFlowKind kind        = ControlFlowKind::NotControlFlow;

    bool operator==(const CommitLog&) const = default;
};

/// Address width the decoder assumes. Quadrant-1 funct3=001 is a jump-and-link
/// on rv32 but an add-word on rv64, so the decode of that slot depends on it.
enum class Xlen { Rv32, Rv64 };

class ParseError : public std::runtime_error {
public:
    ParseError(std::size_t line, const std::string& msg)
        : std::runtime_error("line " + std::to_string(line) + ": " + msg), line_(line) {}
    std::size_t line() const { return line_; }

private:
    std::size_t line_;
};

class DecodeError : public std::runtime_error {
public:
    explicit DecodeError(std::uint32_t raw)
        : std::runtime_error("reserved or illegal compressed encoding 0x" + hex4(raw)),
          raw_(raw) {}
    std::uint32_t raw() const { return raw_; }

private:
    static std::string hex4(std::uint32_t v) {
        static const char* digits = "0123456789abcdef";
        std::string s(4, '0');
        for (int i = 3; i >= 0; --i, v >>= 4) s[static_cast<std::size_t>(i)] = digits[v & 0xF];
        return s;
    }
    std::uint32_t raw_;
};

class ProtocolError : public std::runtime_error {
public:
    explicit ProtocolError(const std::string& msg) : std::runtime_error(msg) {}
};

class ProfileError : public std::runtime_error {
public:
    explicit ProfileError(const std::string& msg) : std::runtime_error(msg) {}
};

class SpillRegionExhausted : public std::runtime_error {
public:
    SpillRegionExhausted() : std::runtime_error("spill region exhausted") {}
};

}  // namespace rotcfi
