#include "equicert/rng.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace equicert {

namespace {

std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

std::uint64_t rotl(std::uint64_t x, int k) {
    return (x << k) | (x >> (64 - k));
}

}  // namespace

Rng::Rng(std::uint64_t seed) {
    // Expand the seed so that small/equal-low-bit seeds still give
    // well-separated states.
    std::uint64_t sm = seed;
    for (auto& s : s_) s = splitmix64(sm);
}

Rng Rng::stream(std::uint64_t master, std::uint64_t index) {
    return Rng(mix_u64(master, index));
}

std::uint64_t Rng::next_u64() {
    // xoshiro256**
    const std::uint64_t result = rotl(s_[1] * 5, 7) * 9;
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
}

double Rng::uniform01() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double Rng::gaussian() {
    if (has_cached_) {
        has_cached_ = false;
        return cached_gauss_;
    }
    // Box-Muller; u1 is kept away from 0 so the log stays finite.
    double u1 = uniform01();
    if (u1 < 0x1.0p-53) u1 = 0x1.0p-53;
    const double u2 = uniform01();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 2.0 * std::numbers::pi * u2;
    cached_gauss_ = r * std::sin(a);
    has_cached_ = true;
    return r * std::cos(a);
}

int Rng::discrete(const std::vector<double>& weights) {
    double total = 0.0;
    for (double w : weights) {
        if (!(w >= 0.0)) throw std::invalid_argument("discrete: negative weight");
        total += w;
    }
    if (!(total > 0.0)) throw std::invalid_argument("discrete: zero total weight");
    const double u = uniform01() * total;
    double acc = 0.0;
    for (std::size_t i = 0; i < weights.size(); ++i) {
        acc += weights[i];
        if (u < acc) return static_cast<int>(i);
    }
    return static_cast<int>(weights.size()) - 1;  // u landed on accumulated rounding
}

std::uint64_t mix_u64(std::uint64_t a, std::uint64_t b) {
    std::uint64_t state = a ^ (0x9E3779B97F4A7C15ULL + (b << 1));
    std::uint64_t h = splitmix64(state);
    state ^= b + 0x632BE59BD9B4E019ULL;
    return h ^ splitmix64(state);
}

}  // namespace equicert
