#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string_view>

namespace skintact {

// Deterministic random source. The engine (mt19937_64) is fully specified by
// the standard, and all value transforms below are hand-rolled so that streams
// are identical across platforms and standard libraries.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    // Uniform in [0, 1), 53-bit resolution.
    double uniform01() {
        return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    // Uniform index in [0, n). Bias is O(n / 2^53), irrelevant at our scales.
    std::size_t uniform_index(std::size_t n) {
        std::size_t i = static_cast<std::size_t>(uniform01() * static_cast<double>(n));
        return i < n ? i : n - 1;
    }

    // Box-Muller, cosine branch only. Two uniforms per draw, no cached spare,
    // so consecutive draws never share state.
    double gaussian(double mean = 0.0, double sigma = 1.0) {
        double u1 = 1.0 - uniform01();  // (0, 1], keeps log finite
        double u2 = uniform01();
        double r = std::sqrt(-2.0 * std::log(u1));
        return mean + sigma * r * std::cos(6.283185307179586476925286766559 * u2);
    }

private:
    std::mt19937_64 engine_;
};

inline std::uint64_t fnv1a64(std::string_view s) {
    std::uint64_t h = 14695981039346656037ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

// Sub-seed for a named component, so one global seed drives many independent
// streams without accidental correlation.
inline std::uint64_t derive_seed(std::uint64_t global_seed, std::string_view component) {
    return splitmix64(global_seed ^ fnv1a64(component));
}

}  // namespace skintact
