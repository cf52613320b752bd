#pragma once

#include <cstdint>
#include <vector>

namespace equicert {

// Deterministic generator with an explicit algorithm (xoshiro256** seeded via
// splitmix64) so that runs reproduce across platforms and standard-library
// versions.  std::mt19937_64 would pin the stream, but the std distributions
// on top of it are implementation-defined, which is exactly the
// reproducibility hole this wrapper closes.
class Rng {
public:
    explicit Rng(std::uint64_t seed);

    // Independent stream derived from (master, index).  Used for per-task
    // seeding: datasets, optimizer runs, trials.  Streams with different
    // indices are decorrelated by construction.
    static Rng stream(std::uint64_t master, std::uint64_t index);

    std::uint64_t next_u64();

    // Uniform on [0, 1), 53-bit resolution.
    double uniform01();

    // Standard normal via Box-Muller; the second variate of each pair is
    // cached, so draws come in a fixed deterministic order.
    double gaussian();

    // Index sampled proportionally to `weights` (nonnegative, need not be
    // normalized).  Inverse-CDF walk, so equal seeds give equal paths.
    int discrete(const std::vector<double>& weights);

private:
    std::uint64_t s_[4];
    double cached_gauss_ = 0.0;
    bool has_cached_ = false;
};

// Stable 64-bit mix used wherever a seed has to be derived from parts.
std::uint64_t mix_u64(std::uint64_t a, std::uint64_t b);

}  // namespace equicert
