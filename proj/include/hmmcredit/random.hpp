#pragma once

// Per-path random streams. Path p under seed s always gets the same
// generator, independent of how many paths run or in which order.

#include <cmath>
#include <cstdint>
#include <random>

namespace hmmcredit {

inline constexpr std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

class Stream {
public:
    Stream(std::uint64_t seed, std::uint64_t path_id) : gen_(splitmix64(splitmix64(seed) ^ splitmix64(~path_id))) {}

    /// Uniform on the open interval (0, 1).
    double uniform() { return (static_cast<double>(gen_() >> 11) + 0.5) * 0x1.0p-53; }

    /// Unit-rate exponential.
    double exponential() { return -std::log(uniform()); }

    std::uint64_t bits() { return gen_(); }

private:
    std::mt19937_64 gen_;
};

}  // namespace hmmcredit
