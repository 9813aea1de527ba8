#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

namespace lyap {

// Counter-based generator: value k of stream `seed` is obtained by running
// the splitmix64 finalizer on (seed + (k+1) * 0x9E3779B97F4A7C15). Stateless,
// so any entry of a stream can be produced independently and the streams are
// reproducible across platforms and languages.
inline std::uint64_t counter_u64(std::uint64_t seed, std::uint64_t k) {
    std::uint64_t z = seed + (k + 1) * 0x9E3779B97F4A7C15ULL;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

// uniform in [0,1), 53-bit mantissa
inline double counter_uniform(std::uint64_t seed, std::uint64_t k) {
    return static_cast<double>(counter_u64(seed, k) >> 11) * 0x1.0p-53;
}

// standard normal via Box-Muller on the uniforms (2k, 2k+1)
inline double counter_gaussian(std::uint64_t seed, std::uint64_t k) {
    const double u1 = (static_cast<double>(counter_u64(seed, 2 * k) >> 11) + 1.0) * 0x1.0p-53;  // (0,1]
    const double u2 = counter_uniform(seed, 2 * k + 1);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

// stateful convenience wrapper over the counter stream
class CounterRng {
public:
    explicit CounterRng(std::uint64_t seed) : seed_(seed) {}
    double uniform() { return counter_uniform(seed_, k_++); }
    double uniform_symmetric() { return 2.0 * uniform() - 1.0; }
    double gaussian() { return counter_gaussian(seed_, k_++); }
    std::uint64_t next_u64() { return counter_u64(seed_, k_++); }

private:
    std::uint64_t seed_;
    std::uint64_t k_ = 0;
};

}  // namespace lyap
