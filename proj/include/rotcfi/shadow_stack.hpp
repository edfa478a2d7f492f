#pragma once

#include <cstdint>
#include <cstring>
#include <limits>
#include <vector>

#include "rotcfi/mac.hpp"
#include "rotcfi/types.hpp"

namespace rotcfi {

/// A block of shadow-stack entries evicted to main memory. `tag` covers the
/// entries, the spill counter and the previous chain head, so contents,
/// position in the chain and freshness are all authenticated together.
struct SpillFrame {
    std::vector<std::uint64_t> entries;  // oldest first
    std::uint64_t frame_index = 0;       // monotone spill counter
    MacTag prev_tag{};                   // chain head before this spill
    MacTag tag{};
};

/// Models the unsecure main-memory region frames are spilled to. Frames are
/// mutable from outside on purpose: tests play the attacker here.
class SpillRegion {
public:
    explicit SpillRegion(std::size_t capacity_frames = std::numeric_limits<std::size_t>::max())
        : capacity_(capacity_frames) {}

    std::size_t size() const { return frames_.size(); }
    bool empty() const { return frames_.empty(); }
    std::vector<SpillFrame>& frames() { return frames_; }
    const std::vector<SpillFrame>& frames() const { return frames_; }

    void push(SpillFrame frame) {
        if (frames_.size() >= capacity_) throw SpillRegionExhausted();
        frames_.push_back(std::move(frame));
    }

    SpillFrame take_newest() {
        SpillFrame f = std::move(frames_.back());
        frames_.pop_back();
        return f;
    }

private:
    std::size_t capacity_;
    std::vector<SpillFrame> frames_;
};

/// Return-address stack with bounded on-chip storage. When the on-chip part
/// overflows, the oldest `frame_entries` addresses move to main memory under
/// a chained MAC; when it underflows with frames outstanding, the newest
/// frame is verified and reloaded. The chain head lives on-chip, so a stale,
/// reordered or modified frame fails verification before any address from it
/// is consumed.
class ShadowStack {
public:
    struct Config {
        std::size_t capacity = 1024;      // on-chip entries
        std::size_t frame_entries = 0;    // 0 = capacity / 2
        std::size_t spill_capacity_frames = std::numeric_limits<std::size_t>::max();
    };

    enum class PopStatus : std::uint8_t { Ok, Underflow, Tamper };

    struct PopResult {
        PopStatus status;
        std::uint64_t value = 0;        // valid when status == Ok
        std::uint64_t frame_index = 0;  // valid when status == Tamper
    };

    ShadowStack() : ShadowStack(Config{}) {}
    explicit ShadowStack(const Config& cfg) : ShadowStack(cfg, MacKey::random()) {}

    ShadowStack(const Config& cfg, MacKey key)
        : capacity_(cfg.capacity == 0 ? 1 : cfg.capacity),
          frame_entries_(cfg.frame_entries == 0 ? std::max<std::size_t>(1, capacity_ / 2)
                                                : cfg.frame_entries),
          key_(key),
          region_(cfg.spill_capacity_frames) {
        if (frame_entries_ > capacity_) frame_entries_ = capacity_;
        on_chip_.reserve(capacity_);
    }

    std::size_t capacity() const { return capacity_; }
    std::size_t frame_entries() const { return frame_entries_; }
    std::size_t on_chip_depth() const { return on_chip_.size(); }
    std::size_t spilled_frames() const { return region_.size(); }
    std::size_t logical_depth() const { return on_chip_.size() + region_.size() * frame_entries_; }
    const MacTag& chain_tag() const { return chain_tag_; }

    SpillRegion& spill_region() { return region_; }
    const SpillRegion& spill_region() const { return region_; }

    void push(std::uint64_t return_addr) {
        if (on_chip_.size() == capacity_) spill_oldest_frame();
        on_chip_.push_back(return_addr);
    }

    PopResult pop() {
        if (on_chip_.empty()) {
            if (region_.empty()) return {PopStatus::Underflow};
            const SpillFrame& newest = region_.frames().back();
            if (newest.tag != chain_tag_ || seal(newest) != newest.tag)
                return {PopStatus::Tamper, 0, newest.frame_index};
            SpillFrame frame = region_.take_newest();
            chain_tag_ = frame.prev_tag;
            on_chip_ = std::move(frame.entries);
        }
        const std::uint64_t value = on_chip_.back();
        on_chip_.pop_back();
        return {PopStatus::Ok, value};
    }

private:
    MacTag seal(const SpillFrame& frame) const {
        std::vector<std::uint8_t> msg;
        msg.reserve(frame.entries.size() * 8 + 8 + frame.prev_tag.size());
        const auto append_u64 = [&](std::uint64_t v) {
            for (int i = 0; i < 8; ++i) msg.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
        };
        for (const std::uint64_t e : frame.entries) append_u64(e);
        append_u64(frame.frame_index);
        msg.insert(msg.end(), frame.prev_tag.begin(), frame.prev_tag.end());
        return siphash128(key_, msg);
    }

    void spill_oldest_frame() {
        SpillFrame frame;
        frame.entries.assign(on_chip_.begin(),
                             on_chip_.begin() + static_cast<std::ptrdiff_t>(frame_entries_));
        on_chip_.erase(on_chip_.begin(),
                       on_chip_.begin() + static_cast<std::ptrdiff_t>(frame_entries_));
        frame.frame_index = next_frame_index_++;
        frame.prev_tag = chain_tag_;
        frame.tag = seal(frame);
        chain_tag_ = frame.tag;
        region_.push(std::move(frame));
    }

    std::size_t capacity_;
    std::size_t frame_entries_;
    MacKey key_;
    SpillRegion region_;
    std::vector<std::uint64_t> on_chip_;
    MacTag chain_tag_{};  // all-zero genesis
    std::uint64_t next_frame_index_ = 0;
};

}  // namespace rotcfi
