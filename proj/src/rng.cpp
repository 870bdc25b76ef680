#include "nelastic/rng.hpp"

#include <cmath>
#include <numbers>

namespace nelastic {

std::uint64_t splitmix64(std::uint64_t x) noexcept
{
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

StreamKey::StreamKey(std::uint64_t seed, std::string_view experiment)
{
    const std::uint64_t mixed = splitmix64(seed ^ splitmix64(fnv1a(experiment)));
    key_ = {static_cast<std::uint32_t>(mixed), static_cast<std::uint32_t>(mixed >> 32)};
}

double StreamKey::uniform_at(std::uint32_t replica, std::uint32_t substream, std::uint64_t index) const noexcept
{
    const Philox4x32::Counter ctr{static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32),
                                  replica, substream};
    const auto out = Philox4x32::apply(ctr, key_);
    return to_unit_open(out[0], out[1]);
}

void RandomStream::refill() noexcept
{
    const Philox4x32::Counter ctr{static_cast<std::uint32_t>(index_), static_cast<std::uint32_t>(index_ >> 32),
                                  replica_, substream_};
    const auto out = Philox4x32::apply(ctr, key_);
    ++index_;
    // consumed back to front by uniform()
    cache_[1] = to_unit_open(out[0], out[1]);
    cache_[0] = to_unit_open(out[2], out[3]);
    cached_ = 2;
}

double RandomStream::normal() noexcept
{
    if (has_spare_) {
        has_spare_ = false;
        return spare_normal_;
    }
    const double u1 = uniform();
    const double u2 = uniform();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * std::numbers::pi * u2;
    spare_normal_ = radius * std::sin(angle);
    has_spare_ = true;
    return radius * std::cos(angle);
}

}  // namespace nelastic
