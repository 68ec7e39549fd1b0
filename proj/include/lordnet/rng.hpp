#pragma once

#include <cstdint>
#include <random>

namespace lordnet {

// Deterministic random source. mt19937_64 is fully specified by the
// standard, and the uniform/normal transforms below are written out
// explicitly instead of using std::*_distribution, whose output is
// implementation-defined. Identical seeds therefore give identical
// streams on every platform.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    std::uint64_t next_u64() { return gen_(); }

    // Uniform in [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

    // Standard normal via Box-Muller; generates pairs, caches the second.
    double normal();

    // Uniform integer in [0, n).
    std::uint64_t below(std::uint64_t n) { return gen_() % n; }

    // Derives a child seed from a base seed and a stream index (splitmix64
    // finalizer). Used to give every sample / iteration its own stream.
    static std::uint64_t derive(std::uint64_t base, std::uint64_t stream);

private:
    std::mt19937_64 gen_;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace lordnet
