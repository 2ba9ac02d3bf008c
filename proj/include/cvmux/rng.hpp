#pragma once

#include <cstdint>

namespace cvmux {

// splitmix64: tiny, portable, and good enough for perturbation streams and
// synthetic-state generation. Determinism across platforms matters more here
// than statistical sophistication, so we avoid std distributions (their
// output is implementation-defined).
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
};

// Derives an independent stream seed for (seed, index) pairs, e.g. one per
// basin-hopping restart.
inline std::uint64_t derive_stream_seed(std::uint64_t seed, std::uint64_t index) {
    SplitMix64 mixer(seed);
    std::uint64_t base = mixer.next();
    SplitMix64 stream(base ^ (index * 0x9e3779b97f4a7c15ULL + 0x7f4a7c15ULL));
    return stream.next();
}

}  // namespace cvmux
