#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "rotcfi/types.hpp"

namespace rotcfi {

/// Commit log payload packed into the mailbox data registers:
///   data[0] = pc
///   data[1] = encoding in the low 32 bits, kind tag in bits 32..35
///   data[2] = next_addr
///   data[3] = target_addr
/// The kind tag rides in otherwise-unused register bits; the architectural
/// payload is the 224 bits formed by the four fields.
inline std::array<std::uint64_t, 4> pack_commit_log(const CommitLog& log) {
    return {
        log.pc,
        static_cast<std::uint64_t>(log.encoding) |
            (static_cast<std::uint64_t>(log.kind) << 32),
        log.next_addr,
        log.target_addr,
    };
}

inline CommitLog unpack_commit_log(const std::array<std::uint64_t, 4>& data) {
    const std::uint64_t tag = (data[1] >> 32) & 0xFull;
    if (tag < 1 || tag > 4 || (data[1] >> 36) != 0)
        throw ProtocolError("mailbox data[1] does not hold a valid commit log");
    return CommitLog{
        .pc          = data[0],
        .encoding    = static_cast<std::uint32_t>(data[1] & 0xFFFFFFFFull),
        .next_addr   = data[2],
        .target_addr = data[3],
        .kind        = static_cast<ControlFlowKind>(tag),
    };
}

enum class MailboxEventType : std::uint8_t {
    ChunkWrite,
    DoorbellSet,
    RotRead,
    RotResult,
    CompletionSet,
    HostRead,
};

struct MailboxEvent {
    MailboxEventType type;
    std::uint64_t cycle;
    std::uint32_t chunk_index;  // ChunkWrite only
};

/// The CFI mailbox: four data registers sized to hold one commit log, a
/// doorbell bit that interrupts the security core, and a completion bit wired
/// back to the commit stage. `ready` is the host-visible "may write next log"
/// condition. Every transition is appended to an event log so tests can check
/// the strict write/doorbell/read/result/completion alternation.
class Mailbox {
public:
    explicit Mailbox(bool record_events = true) : record_events_(record_events) {}

    bool ready() const { return ready_; }
    bool doorbell() const { return doorbell_; }
    bool completion() const { return completion_; }
    const std::array<std::uint64_t, 4>& data() const { return data_; }
    const std::vector<MailboxEvent>& events() const { return events_; }
    std::vector<MailboxEvent> take_events() { return std::move(events_); }

    /// Host-side write of one bus-width chunk. The final chunk sets the
    /// doorbell. Writing while a check is pending is a protocol violation.
    void write_chunk(std::uint32_t index, std::uint64_t value, bool is_last, std::uint64_t cycle) {
        if (doorbell_ || completion_)
            throw ProtocolError("mailbox write while a check is pending");
        if (index >= data_.size())
            throw ProtocolError("mailbox chunk index out of range");
        if (!ready_ && !transfer_in_progress_)
            throw ProtocolError("mailbox write before previous result was consumed");
        data_[index] = value;
        ready_ = false;
        transfer_in_progress_ = true;
        record({MailboxEventType::ChunkWrite, cycle, index});
        if (is_last) {
            doorbell_ = true;
            transfer_in_progress_ = false;
            record({MailboxEventType::DoorbellSet, cycle, 0});
        }
    }

    /// RoT-side read of the pending log; acknowledges the doorbell interrupt.
    CommitLog rot_read_log(std::uint64_t cycle) {
        if (!doorbell_)
            throw ProtocolError("mailbox read without doorbell");
        doorbell_ = false;
        record({MailboxEventType::RotRead, cycle, 0});
        return unpack_commit_log(data_);
    }

    /// RoT-side check conclusion: the violation flag lands in the first data
    /// register and the completion bit is raised toward the commit stage.
    void rot_write_result(bool violation, std::uint64_t cycle) {
        data_[0] = violation ? 1 : 0;
        completion_ = true;
        record({MailboxEventType::RotResult, cycle, 0});
        record({MailboxEventType::CompletionSet, cycle, 0});
    }

    /// Host-side consumption of the result; the mailbox becomes ready for the
    /// next commit log.
    bool host_read_result(std::uint64_t cycle) {
        if (!completion_)
            throw ProtocolError("host read without completion");
        completion_ = false;
        ready_ = true;
        record({MailboxEventType::HostRead, cycle, 0});
        return data_[0] != 0;
    }

private:
    void record(MailboxEvent event) {
        if (record_events_) events_.push_back(event);
    }

    bool record_events_ = true;
    std::array<std::uint64_t, 4> data_{};
    bool ready_ = true;
    bool doorbell_ = false;
    bool completion_ = false;
    bool transfer_in_progress_ = false;
    std::vector<MailboxEvent> events_;
};

/// Validates a mailbox event log against the per-log grammar
///   (chunk-write+ doorbell rot-read rot-result completion host-read)*
/// with non-decreasing timestamps. Returns an error description, or empty
/// string when the log is well-formed.
inline std::string check_mailbox_protocol(const std::vector<MailboxEvent>& events) {
    std::uint64_t prev_cycle = 0;
    std::size_t i = 0;
    std::size_t logs = 0;
    while (i < events.size()) {
        std::size_t chunk_count = 0;
        while (i < events.size() && events[i].type == MailboxEventType::ChunkWrite) {
            if (events[i].cycle < prev_cycle) return "timestamps go backwards at event " + std::to_string(i);
            prev_cycle = events[i].cycle;
            ++chunk_count;
            ++i;
        }
        if (chunk_count == 0) return "expected chunk write at event " + std::to_string(i);
        static constexpr MailboxEventType tail[] = {
            MailboxEventType::DoorbellSet, MailboxEventType::RotRead,
            MailboxEventType::RotResult, MailboxEventType::CompletionSet,
            MailboxEventType::HostRead};
        for (const auto expected : tail) {
            if (i >= events.size()) return "truncated transaction at event " + std::to_string(i);
            if (events[i].type != expected) return "unexpected event type at event " + std::to_string(i);
            if (events[i].cycle < prev_cycle) return "timestamps go backwards at event " + std::to_string(i);
            prev_cycle = events[i].cycle;
            ++i;
        }
        ++logs;
    }
    return "";
}

inline std::size_t count_doorbells(const std::vector<MailboxEvent>& events) {
    std::size_t n = 0;
    for (const auto& e : events)
        if (e.type == MailboxEventType::DoorbellSet) ++n;
    return n;
}

}  // namespace rotcfi
