#pragma once

#include <cstdint>

#include "rotcfi/profile.hpp"
#include "rotcfi/shadow_stack.hpp"
#include "rotcfi/types.hpp"

namespace rotcfi {

/// Outcome of one policy check. Violations are results, not errors; the
/// simulation layer decides whether to halt on them.
struct CheckResult {
    enum class Detail : std::uint8_t {
        Ok = 0,
        ReturnMismatch,
        StackUnderflow,
        TamperDetected,
    };

    Detail detail = Detail::Ok;
    std::uint64_t cost_cycles = 0;
    std::uint64_t expected = 0;     // ReturnMismatch: address popped from the stack
    std::uint64_t observed = 0;     // ReturnMismatch: address the instruction went to
    std::uint64_t frame_index = 0;  // TamperDetected: offending spill frame

    bool violation() const { return detail != Detail::Ok; }
};

inline const char* to_string(CheckResult::Detail d) {
    switch (d) {
        case CheckResult::Detail::Ok:             return "ok";
        case CheckResult::Detail::ReturnMismatch: return "return_mismatch";
        case CheckResult::Detail::StackUnderflow: return "stack_underflow";
        case CheckResult::Detail::TamperDetected: return "tamper_detected";
    }
    return "unknown";
}

/// The firmware-side policy: a shadow stack protecting return addresses.
/// Calls push the fall-through address; returns pop and compare against the
/// actual destination; indirect jumps are observed but carry no backward-edge
/// state; co-routine swaps behave as a return check followed by a call push.
class PolicyEngine {
public:
    struct Options {
        ShadowStack::Config stack{};
        bool averaged_cost = false;  // charge the per-variant average for every kind
    };

    explicit PolicyEngine(FirmwareProfile profile)
        : PolicyEngine(std::move(profile), Options{}) {}
    PolicyEngine(FirmwareProfile profile, Options options)
        : PolicyEngine(std::move(profile), options, MacKey::random()) {}
    PolicyEngine(FirmwareProfile profile, Options options, MacKey key)
        : profile_(std::move(profile)), options_(options), stack_(options.stack, key) {}

    const FirmwareProfile& profile() const { return profile_; }
    ShadowStack& stack() { return stack_; }
    const ShadowStack& stack() const { return stack_; }

    std::uint64_t cost_of(ControlFlowKind kind) const {
        if (options_.averaged_cost) return profile_.average_latency();
        switch (kind) {
            case ControlFlowKind::Call:          return profile_.call_cycles();
            case ControlFlowKind::Return:        return profile_.return_cycles();
            case ControlFlowKind::IndirectJump:  return profile_.call_cycles();
            case ControlFlowKind::CoroutineSwap: return profile_.call_cycles() + profile_.return_cycles();
            case ControlFlowKind::NotControlFlow: break;
        }
        return 0;
    }

    CheckResult handle_event(const CommitLog& log) {
        CheckResult result;
        result.cost_cycles = cost_of(log.kind);
        switch (log.kind) {
            case ControlFlowKind::Call:
                on_call(log);
                break;
            case ControlFlowKind::Return:
                check_return(log, result);
                break;
            case ControlFlowKind::IndirectJump:
                break;  // observed only; no backward-edge state
            case ControlFlowKind::CoroutineSwap:
                check_return(log, result);
                on_call(log);  // push proceeds even after a failed pop half
                break;
            case ControlFlowKind::NotControlFlow:
                throw std::logic_error("policy engine fed a non-control-flow log");
        }
        return result;
    }

private:
    void on_call(const CommitLog& log) { stack_.push(log.next_addr); }

    void check_return(const CommitLog& log, CheckResult& result) {
        const auto popped = stack_.pop();
        switch (popped.status) {
            case ShadowStack::PopStatus::Underflow:
                result.detail = CheckResult::Detail::StackUnderflow;
                return;
            case ShadowStack::PopStatus::Tamper:
                result.detail = CheckResult::Detail::TamperDetected;
                result.frame_index = popped.frame_index;
                return;
            case ShadowStack::PopStatus::Ok:
                break;
        }
        if (popped.value != log.target_addr) {
            result.detail = CheckResult::Detail::ReturnMismatch;
            result.expected = popped.value;
            result.observed = log.target_addr;
        }
    }

    FirmwareProfile profile_;
    Options options_;
    ShadowStack stack_;
};

}  // namespace rotcfi
