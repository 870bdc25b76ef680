#pragma once

#include <array>
#include <cstdint>
#include <string_view>

namespace nelastic {

/// Philox4x32-10 block function (Salmon et al., SC'11). Stateless: the
/// output is a pure function of (counter, key).
struct Philox4x32 {
    using Counter = std::array<std::uint32_t, 4>;
    using Key = std::array<std::uint32_t, 2>;

    static constexpr Counter apply(Counter ctr, Key key) noexcept
    {
        constexpr std::uint32_t kMul0 = 0xD2511F53u;
        constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
        constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
        constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;
        for (int round = 0; round < 10; ++round) {
            const std::uint64_t p0 = static_cast<std::uint64_t>(kMul0) * ctr[0];
            const std::uint64_t p1 = static_cast<std::uint64_t>(kMul1) * ctr[2];
            const auto hi0 = static_cast<std::uint32_t>(p0 >> 32);
            const auto lo0 = static_cast<std::uint32_t>(p0);
            const auto hi1 = static_cast<std::uint32_t>(p1 >> 32);
            const auto lo1 = static_cast<std::uint32_t>(p1);
            ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
            key[0] += kWeyl0;
            key[1] += kWeyl1;
        }
        return ctr;
    }
};

/// 64-bit FNV-1a, used to turn experiment names into key material.
constexpr std::uint64_t fnv1a(std::string_view text) noexcept
{
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (char ch : text) {
        h ^= static_cast<unsigned char>(ch);
        h *= 0x100000001b3ull;
    }
    return h;
}

std::uint64_t splitmix64(std::uint64_t x) noexcept;

/// Maps 53 random bits to a double in the open interval (0, 1).
inline double to_unit_open(std::uint32_t hi, std::uint32_t lo) noexcept
{
    const std::uint64_t bits = ((static_cast<std::uint64_t>(hi) << 32) | lo) >> 11;
    return (static_cast<double>(bits) + 0.5) * 0x1.0p-53;
}

/// Key for a family of streams. Every random number used anywhere in the
/// library is addressed by (key, replica, substream, index), so results do
/// not depend on how replicas are scheduled across threads.
class StreamKey {
public:
    StreamKey() = default;
    StreamKey(std::uint64_t seed, std::string_view experiment);

    Philox4x32::Key key() const noexcept { return key_; }

    /// Random-access uniform on (0,1) for a given coordinate.
    double uniform_at(std::uint32_t replica, std::uint32_t substream, std::uint64_t index) const noexcept;

private:
    Philox4x32::Key key_{0, 0};
};

/// Sequential view of one (replica, substream) coordinate of a StreamKey.
class RandomStream {
public:
    RandomStream(const StreamKey& key, std::uint32_t replica, std::uint32_t substream = 0) noexcept
        : key_(key.key()), replica_(replica), substream_(substream)
    {
    }

    double uniform() noexcept
    {
        if (cached_ == 0) {
            refill();
        }
        --cached_;
        return cache_[cached_];
    }

    /// Standard normal via Box-Muller; consumes two uniforms per pair.
    double normal() noexcept;

    std::uint64_t blocks_used() const noexcept { return index_; }

private:
    void refill() noexcept;

    Philox4x32::Key key_;
    std::uint32_t replica_;
    std::uint32_t substream_;
    std::uint64_t index_ = 0;
    std::array<double, 2> cache_{};
    int cached_ = 0;
    double spare_normal_ = 0.0;
    bool has_spare_ = false;
};

}  // namespace nelastic
