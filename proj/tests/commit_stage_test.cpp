#include <gtest/gtest.h>

#include <vector>

#include "rotcfi/commit_stage.hpp"

using namespace rotcfi;

namespace {

const TraceRecord kCallRec{1, 0x80000000, 0x008000EF, 0x80001000};
const TraceRecord kRetRec{1, 0x80000004, 0x00008067, 0x80000004};
const TraceRecord kAddiRec{1, 0x80000008, 0x00000013, 0x8000000c};

CommitLog sample_log() {
    return CommitLog{0x80000000, 0x008000EF, 0x80000004, 0x80001000, ControlFlowKind::Call};
}

}  // namespace

TEST(TransferBeats, CeilOfPayloadOverBus) {
    EXPECT_EQ(transfer_beats(64), 4u);
    EXPECT_EQ(transfer_beats(32), 7u);
    EXPECT_EQ(transfer_beats(128), 2u);
}

TEST(FilterPorts, OneControlFlowPerCycle) {
    const TraceRecord recs[] = {kCallRec, kAddiRec};
    const auto result = filter_ports(recs);
    ASSERT_EQ(result.logs.size(), 1u);
    EXPECT_EQ(result.logs[0].kind, ControlFlowKind::Call);
    EXPECT_EQ(result.stall, StallReason::None);
}

TEST(FilterPorts, DualControlFlowSerializes) {
    const TraceRecord recs[] = {kCallRec, kRetRec};
    const auto result = filter_ports(recs);
    ASSERT_EQ(result.logs.size(), 2u);
    EXPECT_EQ(result.logs[0].kind, ControlFlowKind::Call);
    EXPECT_EQ(result.logs[1].kind, ControlFlowKind::Return);
    EXPECT_EQ(result.stall, StallReason::DualControlFlowCommit);
}

TEST(FilterPorts, NothingToMonitor) {
    const TraceRecord recs[] = {kAddiRec, kAddiRec};
    const auto result = filter_ports(recs);
    EXPECT_TRUE(result.logs.empty());
    EXPECT_EQ(result.stall, StallReason::None);
}

TEST(CfiQueueTest, PushUntilFull) {
    CfiQueue q(1);
    EXPECT_EQ(q.push(sample_log()), StallReason::None);
    EXPECT_EQ(q.size(), 1u);
    EXPECT_EQ(q.push(sample_log()), StallReason::QueueFull);
    EXPECT_EQ(q.size(), 1u);  // rejected push leaves the queue unchanged
}

TEST(CfiQueueTest, DepthEightAcceptsEight) {
    CfiQueue q(8);
    for (int i = 0; i < 7; ++i) ASSERT_EQ(q.push(sample_log()), StallReason::None);
    EXPECT_EQ(q.size(), 7u);
    EXPECT_EQ(q.push(sample_log()), StallReason::None);
    EXPECT_EQ(q.size(), 8u);
    EXPECT_EQ(q.push(sample_log()), StallReason::QueueFull);
}

TEST(CfiQueueTest, FifoOrder) {
    CfiQueue q(4);
    for (std::uint32_t i = 0; i < 4; ++i) {
        CommitLog log = sample_log();
        log.pc = i;
        q.push(log);
    }
    for (std::uint32_t i = 0; i < 4; ++i) EXPECT_EQ(q.pop().pc, i);
}

TEST(LogWriterTest, IdleToTransferWithFourBeats) {
    CfiQueue q(1);
    q.push(sample_log());
    Mailbox mb;
    LogWriter writer(64);
    EXPECT_EQ(writer.phase(), LogWriterPhase::Idle);
    ASSERT_TRUE(writer.try_start(q, mb));
    EXPECT_EQ(writer.phase(), LogWriterPhase::Transfer);
    EXPECT_EQ(writer.beats_remaining(), 4u);
    EXPECT_TRUE(q.empty());
}

TEST(LogWriterTest, FinalBeatSetsDoorbell) {
    CfiQueue q(1);
    q.push(sample_log());
    Mailbox mb;
    LogWriter writer(64);
    writer.try_start(q, mb);
    for (int beat = 0; beat < 3; ++beat) {
        writer.write_beat(mb, 10 + beat);
        EXPECT_FALSE(mb.doorbell());
        EXPECT_EQ(writer.phase(), LogWriterPhase::Transfer);
    }
    writer.write_beat(mb, 13);
    EXPECT_TRUE(mb.doorbell());
    EXPECT_EQ(writer.phase(), LogWriterPhase::WaitCompletion);
}

TEST(LogWriterTest, IdleWhenQueueEmptyOrMailboxBusy) {
    CfiQueue q(1);
    Mailbox mb;
    LogWriter writer(64);
    EXPECT_FALSE(writer.try_start(q, mb));  // queue empty

    q.push(sample_log());
    writer.try_start(q, mb);
    for (int i = 0; i < 4; ++i) writer.write_beat(mb, i);
    q.push(sample_log());
    LogWriter second(64);
    EXPECT_FALSE(second.try_start(q, mb));  // mailbox not ready mid-check
}

TEST(LogWriterTest, StepSequenceDeliversAndReadsResult) {
    CfiQueue q(1);
    q.push(sample_log());
    Mailbox mb;
    LogWriter writer(64);

    bool checked = false;
    const auto rot_check = [&](Mailbox& m, std::uint64_t cycle) {
        const CommitLog log = m.rot_read_log(cycle);
        EXPECT_EQ(log, sample_log());
        m.rot_write_result(false, cycle);
        checked = true;
    };

    std::uint64_t cycle = 0;
    std::optional<CfiViolation> violation;
    while (writer.phase() != LogWriterPhase::Idle || !checked) {
        violation = writer.step(q, mb, cycle++, rot_check);
        ASSERT_LT(cycle, 20u);
    }
    EXPECT_FALSE(violation.has_value());
    EXPECT_TRUE(mb.ready());
    EXPECT_EQ(check_mailbox_protocol(mb.events()), "");
    EXPECT_EQ(count_doorbells(mb.events()), 1u);
}

TEST(LogWriterTest, ViolationResultRaisesException) {
    CfiQueue q(1);
    q.push(sample_log());
    Mailbox mb;
    LogWriter writer(64);

    const auto rot_check = [&](Mailbox& m, std::uint64_t cycle) {
        m.rot_read_log(cycle);
        m.rot_write_result(true, cycle);
    };

    std::optional<CfiViolation> violation;
    for (std::uint64_t cycle = 0; cycle < 20 && !violation; ++cycle)
        violation = writer.step(q, mb, cycle, rot_check);
    ASSERT_TRUE(violation.has_value());
    EXPECT_EQ(violation->log, sample_log());
    EXPECT_EQ(writer.phase(), LogWriterPhase::Idle);
}

TEST(LogWriterTest, NarrowAndWideBusesCoverAllRegisters) {
    for (const std::uint32_t bus : {32u, 128u}) {
        CfiQueue q(1);
        q.push(sample_log());
        Mailbox mb;
        LogWriter writer(bus);
        writer.try_start(q, mb);
        const std::uint32_t beats = writer.beats_per_log();
        for (std::uint32_t b = 0; b < beats; ++b) writer.write_beat(mb, b);
        EXPECT_TRUE(mb.doorbell());
        EXPECT_EQ(mb.rot_read_log(beats), sample_log());
    }
}
