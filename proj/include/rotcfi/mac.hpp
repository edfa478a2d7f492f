#pragma once

#include <array>
#include <cstdint>
#include <cstring>
#include <random>
#include <span>

namespace rotcfi {

using MacTag = std::array<std::uint8_t, 16>;

/// Session key for metadata authentication. Lives only inside the policy
/// engine's private state; a fresh key is drawn per simulation session.
struct MacKey {
    std::uint64_t k0 = 0;
    std::uint64_t k1 = 0;

    static MacKey random() {
        std::random_device rd;
        const auto draw = [&] {
            return (static_cast<std::uint64_t>(rd()) << 32) ^ rd();
        };
        return MacKey{draw(), draw()};
    }
};

namespace detail {

inline std::uint64_t rotl64(std::uint64_t x, int b) { return (x << b) | (x >> (64 - b)); }

struct SipState {
    std::uint64_t v0, v1, v2, v3;

    void round() {
        v0 += v1; v1 = rotl64(v1, 13); v1 ^= v0; v0 = rotl64(v0, 32);
        v2 += v3; v3 = rotl64(v3, 16); v3 ^= v2;
        v0 += v3; v3 = rotl64(v3, 21); v3 ^= v0;
        v2 += v1; v1 = rotl64(v1, 17); v1 ^= v2; v2 = rotl64(v2, 32);
    }
};

inline std::uint64_t load_le64(const std::uint8_t* p) {
    std::uint64_t v;
    std::memcpy(&v, p, 8);  // little-endian host assumed for the simulator
    return v;
}

}  // namespace detail

/// SipHash-2-4 in its 128-bit output mode: a keyed short-input PRF used here
/// as the MAC over spilled shadow-stack frames.
inline MacTag siphash128(const MacKey& key, std::span<const std::uint8_t> msg) {
    using detail::SipState;
    SipState s{
        0x736f6d6570736575ull ^ key.k0,
        0x646f72616e646f6dull ^ key.k1,
        0x6c7967656e657261ull ^ key.k0,
        0x7465646279746573ull ^ key.k1,
    };
    s.v1 ^= 0xee;  // 128-bit output domain

    const std::size_t blocks = msg.size() / 8;
    for (std::size_t i = 0; i < blocks; ++i) {
        const std::uint64_t m = detail::load_le64(msg.data() + i * 8);
        s.v3 ^= m;
        s.round();
        s.round();
        s.v0 ^= m;
    }

    std::uint64_t last = static_cast<std::uint64_t>(msg.size() & 0xFF) << 56;
    for (std::size_t i = blocks * 8; i < msg.size(); ++i)
        last |= static_cast<std::uint64_t>(msg[i]) << (8 * (i - blocks * 8));
    s.v3 ^= last;
    s.round();
    s.round();
    s.v0 ^= last;

    s.v2 ^= 0xee;
    for (int i = 0; i < 4; ++i) s.round();
    const std::uint64_t lo = s.v0 ^ s.v1 ^ s.v2 ^ s.v3;

    s.v1 ^= 0xdd;
    for (int i = 0; i < 4; ++i) s.round();
    const std::uint64_t hi = s.v0 ^ s.v1 ^ s.v2 ^ s.v3;

    MacTag tag;
    std::memcpy(tag.data(), &lo, 8);
    std::memcpy(tag.data() + 8, &hi, 8);
    return tag;
}

}  // namespace rotcfi
