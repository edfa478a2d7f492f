#include <gtest/gtest.h>

#include <sstream>

#include "rotcfi/decode.hpp"
#include "rotcfi/sim.hpp"
#include "rotcfi/synth.hpp"
#include "rotcfi/trace.hpp"

using namespace rotcfi;

namespace {

std::pair<std::size_t, std::size_t> count_calls_returns(const std::vector<TraceRecord>& trace) {
    std::size_t calls = 0, returns = 0;
    for (const auto& rec : trace) {
        const auto log = make_commit_log(rec);
        if (!log) continue;
        if (log->kind == ControlFlowKind::Call) ++calls;
        if (log->kind == ControlFlowKind::Return) ++returns;
    }
    return {calls, returns};
}

}  // namespace

TEST(BalancedTrace, Depth2Width2HasSixCallsSixReturns) {
    const auto trace = synth::balanced_trace(2, 2);
    const auto [calls, returns] = count_calls_returns(trace);
    EXPECT_EQ(calls, 6u);
    EXPECT_EQ(returns, 6u);
    EXPECT_EQ(trace.size(), 12u);
}

TEST(BalancedTrace, ParsesCleanlyAndSimulatesWithoutViolations) {
    for (const auto& [depth, width] : {std::pair{1u, 3u}, {3u, 2u}, {2u, 4u}}) {
        const auto trace = synth::balanced_trace(depth, width);
        std::ostringstream text;
        serialize_trace(trace, text);
        std::istringstream in(text.str());
        EXPECT_EQ(parse_trace(in), trace);

        SimConfig cfg;
        cfg.profile = profiles::optimized();
        cfg.queue_depth = 8;
        const SimReport r = run(trace, cfg);
        EXPECT_TRUE(r.violations.empty()) << depth << "x" << width;
        EXPECT_EQ(r.cf_event_count, trace.size());
    }
}

TEST(BurstTrace, ConsecutiveCycleReturns) {
    const auto trace = synth::burst_trace(3);
    ASSERT_EQ(trace.size(), 3u);
    for (std::size_t i = 0; i < 3; ++i) {
        EXPECT_EQ(trace[i].cycle, 1 + i);
        const auto log = make_commit_log(trace[i]);
        ASSERT_TRUE(log.has_value());
        EXPECT_EQ(log->kind, ControlFlowKind::Return);
    }
}

TEST(GapTrace, FixedSpacingAndBalance) {
    const auto trace = synth::gap_trace(100, 1000);
    ASSERT_EQ(trace.size(), 200u);
    for (std::size_t i = 1; i < trace.size(); ++i)
        EXPECT_EQ(trace[i].cycle - trace[i - 1].cycle, 1000u);
    const auto [calls, returns] = count_calls_returns(trace);
    EXPECT_EQ(calls, 100u);
    EXPECT_EQ(returns, 100u);
}

TEST(GapTrace, RejectsZeroGap) {
    EXPECT_THROW(synth::gap_trace(10, 0), std::invalid_argument);
}

TEST(BalancedTrace, RejectsDegenerateShapes) {
    EXPECT_THROW(synth::balanced_trace(0, 2), std::invalid_argument);
    EXPECT_THROW(synth::balanced_trace(2, 0), std::invalid_argument);
}

TEST(BalancedTrace, SeedVariesTimingButKeepsTheTree) {
    const auto baseline = synth::balanced_trace(3, 2);
    for (const std::uint64_t seed : {1ull, 42ull, 0xFEEDull}) {
        const auto trace = synth::balanced_trace(3, 2, seed);
        ASSERT_EQ(trace.size(), baseline.size());
        const auto [calls, returns] = count_calls_returns(trace);
        EXPECT_EQ(calls, returns);
        EXPECT_EQ(calls, baseline.size() / 2);

        SimConfig cfg;
        cfg.profile = profiles::polling();
        cfg.queue_depth = 2;
        const SimReport r = run(trace, cfg);
        EXPECT_TRUE(r.violations.empty()) << "seed " << seed;
    }
    // same seed, same trace
    EXPECT_EQ(synth::balanced_trace(3, 2, 42), synth::balanced_trace(3, 2, 42));
    EXPECT_NE(synth::balanced_trace(3, 2, 42), synth::balanced_trace(3, 2, 43));
}
