#pragma once

#include <cstdint>
#include <deque>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "rotcfi/decode.hpp"
#include "rotcfi/mailbox.hpp"
#include "rotcfi/types.hpp"

namespace rotcfi {

constexpr std::uint32_t kCommitLogBits = 224;

constexpr std::uint32_t transfer_beats(std::uint32_t bus_width_bits) {
    return (kCommitLogBits + bus_width_bits - 1) / bus_width_bits;
}

enum class StallReason : std::uint8_t {
    None = 0,
    QueueFull,
    DualControlFlowCommit,
};

/// Single-ported FIFO with a hard capacity; carries commit logs from the
/// filters to the log writer. The controller refuses pushes beyond `depth`,
/// which stalls the core.
template <typename T>
class BoundedFifo {
public:
    explicit BoundedFifo(std::size_t depth = 1) : depth_(depth == 0 ? 1 : depth) {}

    std::size_t depth() const { return depth_; }
    std::size_t size() const { return entries_.size(); }
    bool empty() const { return entries_.empty(); }
    bool full() const { return entries_.size() >= depth_; }

    /// QueueFull when at capacity, in which case the value is not enqueued.
    StallReason push(const T& value) {
        if (full()) return StallReason::QueueFull;
        entries_.push_back(value);
        return StallReason::None;
    }

    T pop() {
        T front = std::move(entries_.front());
        entries_.pop_front();
        return front;
    }

    const T& front() const { return entries_.front(); }

private:
    std::size_t depth_;
    std::deque<T> entries_;
};

using CfiQueue = BoundedFifo<CommitLog>;

struct FilterResult {
    std::vector<CommitLog> logs;  // in port order, at most 2
    StallReason stall = StallReason::None;
};

/// Runs the per-port CFI filters over one cycle's worth of retirements (one
/// or two records sharing a cycle index). When both ports carry control-flow
/// instructions the queue can only accept one log that cycle, so the second
/// is serialized one cycle later and the core eats a stall.
inline FilterResult filter_ports(std::span<const TraceRecord> records_this_cycle,
                                 Xlen xlen = Xlen::Rv64) {
    FilterResult result;
    for (const auto& rec : records_this_cycle) {
        if (auto log = make_commit_log(rec, xlen)) result.logs.push_back(*log);
    }
    if (result.logs.size() > 1) result.stall = StallReason::DualControlFlowCommit;
    return result;
}

enum class LogWriterPhase : std::uint8_t {
    Idle,
    Transfer,
    WaitCompletion,
    ReadResult,
};

/// Raised toward the core when a check concludes with a violation.
struct CfiViolation {
    CommitLog log;
    std::uint64_t cycle;
};

/// The log-writer FSM: pops commit logs from the CFI queue, streams them to
/// the mailbox in bus-width chunks, waits for the completion signal and reads
/// back the check result. One outstanding check at a time.
class LogWriter {
public:
    explicit LogWriter(std::uint32_t bus_width_bits = 64)
        : bus_width_bits_(bus_width_bits), beats_(transfer_beats(bus_width_bits)) {}

    LogWriterPhase phase() const { return phase_; }
    std::uint32_t beats_remaining() const { return beats_remaining_; }
    std::uint32_t beats_per_log() const { return beats_; }
    const CommitLog& current() const { return current_; }

    /// Idle transition: pop one log and begin the chunked transfer. Returns
    /// false when the queue is empty or the mailbox is not ready.
    bool try_start(CfiQueue& queue, const Mailbox& mailbox) {
        if (phase_ != LogWriterPhase::Idle || queue.empty() || !mailbox.ready()) return false;
        current_ = queue.pop();
        packed_ = pack_commit_log(current_);
        beats_remaining_ = beats_;
        phase_ = LogWriterPhase::Transfer;
        return true;
    }

    /// Writes one bus-width chunk; the final beat sets the doorbell and moves
    /// the FSM to WaitCompletion. A beat updates every 64-bit register its
    /// bit range touches (narrow buses revisit a register, wide buses cover
    /// two per beat).
    void write_beat(Mailbox& mailbox, std::uint64_t cycle) {
        const std::uint32_t beat = beats_ - beats_remaining_;
        --beats_remaining_;
        const bool last_beat = beats_remaining_ == 0;
        const std::uint32_t lo_bit = beat * bus_width_bits_;
        std::uint32_t hi_bit = lo_bit + bus_width_bits_ - 1;
        if (hi_bit > 255) hi_bit = 255;
        const std::uint32_t first_reg = lo_bit / 64;
        const std::uint32_t last_reg = hi_bit / 64;
        for (std::uint32_t r = first_reg; r <= last_reg; ++r)
            mailbox.write_chunk(r, packed_[r], last_beat && r == last_reg, cycle);
        if (last_beat) phase_ = LogWriterPhase::WaitCompletion;
    }

    /// Completion observed: consume the result. Returns the violation flag;
    /// the caller raises CfiViolation when it is set. FSM returns to Idle.
    bool read_result(Mailbox& mailbox, std::uint64_t cycle) {
        phase_ = LogWriterPhase::ReadResult;
        const bool violation = mailbox.host_read_result(cycle);
        phase_ = LogWriterPhase::Idle;
        return violation;
    }

    /// One hardware cycle of the FSM, for stepping the commit stage on its
    /// own: beats advance one per cycle here. `rot_check` is invoked when the
    /// doorbell fires and must conclude the check via rot_write_result.
    template <typename RotCheck>
    std::optional<CfiViolation> step(CfiQueue& queue, Mailbox& mailbox, std::uint64_t cycle,
                                     RotCheck&& rot_check) {
        switch (phase_) {
            case LogWriterPhase::Idle:
                try_start(queue, mailbox);
                break;
            case LogWriterPhase::Transfer:
                write_beat(mailbox, cycle);
                break;
            case LogWriterPhase::WaitCompletion:
                if (mailbox.doorbell()) rot_check(mailbox, cycle);
                if (mailbox.completion()) {
                    if (read_result(mailbox, cycle)) return CfiViolation{current_, cycle};
                }
                break;
            case LogWriterPhase::ReadResult:
                break;  // transient, folded into read_result
        }
        return std::nullopt;
    }

private:
    std::uint32_t bus_width_bits_;
    std::uint32_t beats_;
    std::uint32_t beats_remaining_ = 0;
    LogWriterPhase phase_ = LogWriterPhase::Idle;
    CommitLog current_{};
    std::array<std::uint64_t, 4> packed_{};
};

}  // namespace rotcfi
