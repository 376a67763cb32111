#pragma once

#include <cstdint>

namespace gpinn {

// splitmix64: tiny, deterministic across platforms, passes BigCrush as a
// 64-bit mixer. All randomness in the library flows through this so that
// (seed, config) pins results bit-exactly.
struct SplitMix64 {
    std::uint64_t state;

    explicit SplitMix64(std::uint64_t seed) : state(seed) {}

    std::uint64_t next() {
        std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    // uniform in [0, 1)
    double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    // uniform in [lo, hi)
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // uniform integer in [0, n)
    std::uint64_t below(std::uint64_t n) { return next() % n; }
};

// Master-seed splitting rule: child = mix(master, purpose, index).
// Documented in the README config reference; changing it invalidates
// reproducibility of existing runs.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t purpose,
                                 std::uint64_t index = 0) {
    SplitMix64 s(master ^ (purpose * 0xd6e8feb86659fd93ULL));
    std::uint64_t a = s.next();
    SplitMix64 t(a + index * 0xa0761d6478bd642fULL);
    return t.next();
}

namespace seed_purpose {
inline constexpr std::uint64_t network_init = 1;
inline constexpr std::uint64_t batch = 2;
inline constexpr std::uint64_t eigensolver = 3;
} // namespace seed_purpose

} // namespace gpinn
