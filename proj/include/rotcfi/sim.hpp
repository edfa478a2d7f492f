#pragma once

#include <cassert>
#include <cstdint>
#include <deque>
#include <future>
#include <limits>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "rotcfi/commit_stage.hpp"
#include "rotcfi/mailbox.hpp"
#include "rotcfi/policy.hpp"
#include "rotcfi/profile.hpp"
#include "rotcfi/trace.hpp"
#include "rotcfi/types.hpp"

namespace rotcfi {

struct SimConfig {
    FirmwareProfile profile = profiles::irq();
    std::size_t queue_depth = 1;
    std::uint32_t bus_width_bits = 64;
    std::uint32_t transfer_cost_per_beat = 0;
    bool averaged_latency = false;
    bool halt_on_violation = false;
    ShadowStack::Config stack{};
    Xlen xlen = Xlen::Rv64;
    bool record_mailbox_events = true;

    void validate() const {
        if (queue_depth < 1) throw std::invalid_argument("queue depth must be >= 1");
        if (bus_width_bits != 32 && bus_width_bits != 64 && bus_width_bits != 128)
            throw std::invalid_argument("bus width must be 32, 64 or 128 bits");
    }
};

struct ViolationRecord {
    std::uint64_t record_index;  // position of the offending record in the trace
    std::uint64_t cycle;         // cycle the check concluded
    ControlFlowKind kind;
    CheckResult result;
};

/// Exact slowdown as a reduced fraction of cycles; the text report rounds it
/// to a whole percent, the JSON report keeps the fraction.
struct Rational {
    std::uint64_t num = 0;
    std::uint64_t den = 1;

    double value() const { return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den); }
    std::uint64_t rounded() const { return den == 0 ? 0 : (num + den / 2) / den; }
};

struct SimReport {
    std::uint64_t baseline_cycles = 0;  // last trace cycle index
    std::uint64_t cfi_cycles = 0;
    std::uint64_t retired_instructions = 0;
    std::uint64_t cf_event_count = 0;
    std::uint64_t calls = 0;
    std::uint64_t returns = 0;
    std::uint64_t indirect_jumps = 0;
    std::uint64_t coroutine_swaps = 0;
    std::uint64_t stall_queue_full_cycles = 0;
    std::uint64_t stall_dual_commit_cycles = 0;
    std::uint64_t max_queue_occupancy = 0;
    bool halted = false;
    std::uint64_t queue_residue = 0;  // logs still queued when a halt fired
    std::vector<ViolationRecord> violations;

    Rational slowdown() const {
        if (baseline_cycles == 0 || cfi_cycles < baseline_cycles) return {};
        const std::uint64_t num = 100 * (cfi_cycles - baseline_cycles);
        const std::uint64_t g = std::gcd(num, baseline_cycles);
        return {num / (g == 0 ? 1 : g), baseline_cycles / (g == 0 ? 1 : g)};
    }
    double slowdown_percent() const { return slowdown().value(); }
};

struct SimResult {
    SimReport report;
    std::vector<MailboxEvent> mailbox_events;
};

namespace detail {

/// Cycle-stepped replay of one trace through the commit stage, mailbox and
/// policy engine. Timing contract, shared with the brute-force reference
/// simulator in the test suite:
///
///  - A check occupies the mailbox/RoT path for
///      service = policy cost(kind) + beats * transfer_cost_per_beat
///    cycles from the cycle its log is popped; one check at a time.
///  - Within a cycle: first a finishing check frees the path, then the log
///    writer pops (a log pushed this same cycle may be popped immediately if
///    the path is idle), then the core retires.
///  - The core retires records at trace pace plus accumulated stall (skew).
///    At most one commit log enters the queue per cycle; a blocked push
///    stalls that record and everything behind it. A blocked cycle counts as
///    QueueFull when the queue is full, else as DualControlFlowCommit.
///  - cfi_cycles = the cycle the last record retired or the queue last
///    drained, whichever is later. A check still in flight after that does
///    not prolong the run; the core is not waiting on it.
class Engine {
public:
    Engine(std::span<const TraceRecord> trace, const SimConfig& cfg)
        : cfg_(cfg),
          beats_(transfer_beats(cfg.bus_width_bits)),
          queue_(cfg.queue_depth),
          mailbox_(cfg.record_mailbox_events),
          writer_(cfg.bus_width_bits),
          policy_(cfg.profile, PolicyEngine::Options{cfg.stack, cfg.averaged_latency}),
          trace_(trace) {
        cfg_.validate();
        group_records();
    }

    SimResult run() {
        while (!halted_) {
            if (group_ >= groups_.size() && queue_.empty() && !busy_) break;
            const std::uint64_t t = next_event_time();
            if (busy_ && busy_until_ == t) {
                busy_ = false;
                finish_service(t);
                if (halted_) break;
            }
            drain_server(t);
            if (halted_) break;
            retire_phase(t);
            drain_server(t);
        }

        SimReport& r = report_;
        r.baseline_cycles = trace_.empty() ? 0 : trace_.back().cycle;
        r.cfi_cycles = halted_ ? halt_cycle_ : std::max(last_retire_, last_pop_);
        return SimResult{std::move(report_), mailbox_.take_events()};
    }

private:
    struct Group {
        std::uint64_t native_cycle;
        std::size_t first;
        std::size_t count;
    };

    struct Pending {
        std::uint64_t record_index;
        ControlFlowKind kind;
        CheckResult result;
    };

    void group_records() {
        std::size_t i = 0;
        while (i < trace_.size()) {
            std::size_t j = i + 1;
            while (j < trace_.size() && trace_[j].cycle == trace_[i].cycle) ++j;
            groups_.push_back({trace_[i].cycle, i, j - i});
            i = j;
        }
        if (!groups_.empty()) member_ready_ = groups_[0].native_cycle;
    }

    std::uint64_t next_event_time() const {
        std::uint64_t best = std::numeric_limits<std::uint64_t>::max();
        if (busy_) best = std::min(best, busy_until_);
        if (group_ < groups_.size()) best = std::min(best, member_ready_);
        assert(best != std::numeric_limits<std::uint64_t>::max());
        return best;
    }

    /// Starts checks while the path is idle and logs are queued. Zero-cost
    /// services complete within the same cycle and the loop keeps popping.
    void drain_server(std::uint64_t t) {
        while (!busy_ && !halted_) {
            if (!writer_.try_start(queue_, mailbox_)) break;
            const std::uint64_t rec_idx = index_queue_.front();
            index_queue_.pop_front();
            last_pop_ = t;

            const std::uint64_t beat_cost = cfg_.transfer_cost_per_beat;
            for (std::uint32_t b = 0; b < beats_; ++b)
                writer_.write_beat(mailbox_, t + (b + 1) * beat_cost);
            const std::uint64_t doorbell_cycle = t + beats_ * beat_cost;
            const CommitLog log = mailbox_.rot_read_log(doorbell_cycle);
            const CheckResult res = policy_.handle_event(log);
            pending_ = {rec_idx, log.kind, res};
            const std::uint64_t completion = doorbell_cycle + res.cost_cycles;
            if (completion == t) {
                finish_service(t);
            } else {
                busy_ = true;
                busy_until_ = completion;
            }
        }
    }

    void finish_service(std::uint64_t t) {
        mailbox_.rot_write_result(pending_.result.violation(), t);
        const bool violation = writer_.read_result(mailbox_, t);
        if (violation) {
            report_.violations.push_back({pending_.record_index, t, pending_.kind, pending_.result});
            if (cfg_.halt_on_violation) {
                halted_ = true;
                halt_cycle_ = t;
                report_.halted = true;
                report_.queue_residue = queue_.size();
            }
        }
    }

    void retire_phase(std::uint64_t t) {
        bool pushed_this_cycle = false;
        while (group_ < groups_.size() && member_ready_ <= t) {
            const Group& g = groups_[group_];
            const TraceRecord& rec = trace_[g.first + member_];
            auto log = make_commit_log(rec, cfg_.xlen);
            if (log) {
                if (queue_.full()) {
                    // Space frees when the busy path pops the head. An idle
                    // path means the log pushed this same cycle will fall
                    // through right after this phase, opening the slot next
                    // cycle.
                    const std::uint64_t unblock = busy_ ? busy_until_ : t + 1;
                    report_.stall_queue_full_cycles += unblock - t;
                    skew_ += unblock - t;
                    member_ready_ = unblock;
                    break;
                }
                if (pushed_this_cycle) {
                    report_.stall_dual_commit_cycles += 1;
                    skew_ += 1;
                    member_ready_ = t + 1;
                    break;
                }
                const StallReason st = queue_.push(*log);
                assert(st == StallReason::None);
                (void)st;
                index_queue_.push_back(g.first + member_);
                pushed_this_cycle = true;
                count_kind(log->kind);
                ++report_.cf_event_count;
                report_.max_queue_occupancy = std::max<std::uint64_t>(report_.max_queue_occupancy, queue_.size());
            }
            ++report_.retired_instructions;
            last_retire_ = std::max(last_retire_, t);
            advance_member(t);
        }
    }

    void advance_member(std::uint64_t t) {
        const Group& g = groups_[group_];
        if (member_ + 1 < g.count) {
            ++member_;
            member_ready_ = t;  // second port may retire in the same cycle
            return;
        }
        ++group_;
        member_ = 0;
        if (group_ < groups_.size()) member_ready_ = groups_[group_].native_cycle + skew_;
    }

    void count_kind(ControlFlowKind k) {
        switch (k) {
            case ControlFlowKind::Call:           ++report_.calls; break;
            case ControlFlowKind::Return:         ++report_.returns; break;
            case ControlFlowKind::IndirectJump:   ++report_.indirect_jumps; break;
            case ControlFlowKind::CoroutineSwap:  ++report_.coroutine_swaps; break;
            case ControlFlowKind::NotControlFlow: break;
        }
    }

    SimConfig cfg_;
    std::uint32_t beats_;
    CfiQueue queue_;
    std::deque<std::uint64_t> index_queue_;  // record index of each queued log
    Mailbox mailbox_;
    LogWriter writer_;
    PolicyEngine policy_;
    std::span<const TraceRecord> trace_;

    std::vector<Group> groups_;
    std::size_t group_ = 0;
    std::size_t member_ = 0;
    std::uint64_t member_ready_ = 0;
    std::uint64_t skew_ = 0;

    bool busy_ = false;
    std::uint64_t busy_until_ = 0;
    Pending pending_{};

    bool halted_ = false;
    std::uint64_t halt_cycle_ = 0;
    std::uint64_t last_retire_ = 0;
    std::uint64_t last_pop_ = 0;
    SimReport report_;
};

}  // namespace detail

inline SimResult simulate(std::span<const TraceRecord> trace, const SimConfig& config) {
    return detail::Engine(trace, config).run();
}

inline SimReport run(std::span<const TraceRecord> trace, const SimConfig& config) {
    return simulate(trace, config).report;
}

struct CompareEntry {
    std::string key;  // deterministic ordering key, e.g. "optimized/d8"
    SimConfig config;
    SimReport report;
};

/// Runs one trace under several configurations in parallel; entries come back
/// in the caller's order regardless of completion order.
inline std::vector<CompareEntry> compare_profiles(std::span<const TraceRecord> trace,
                                                  const std::vector<std::pair<std::string, SimConfig>>& configs) {
    std::vector<std::future<SimReport>> futures;
    futures.reserve(configs.size());
    for (const auto& [key, cfg] : configs)
        futures.push_back(std::async(std::launch::async, [&trace, cfg] { return run(trace, cfg); }));
    std::vector<CompareEntry> out;
    out.reserve(configs.size());
    for (std::size_t i = 0; i < configs.size(); ++i)
        out.push_back({configs[i].first, configs[i].second, futures[i].get()});
    return out;
}

}  // namespace rotcfi
