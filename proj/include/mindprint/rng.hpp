#pragma once

#include <cmath>
#include <cstdint>
#include <string_view>

namespace mindprint {

// 64-bit FNV-1a. Used to derive per-item seeds from string ids.
inline std::uint64_t fnv1a64(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return h;
}

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

// Per-item seed: a pure function of (run seed, item id). Administration order
// and parallelism therefore cannot change any synthetic outcome.
inline std::uint64_t derive_item_seed(std::uint64_t run_seed, std::string_view item_id) {
    return splitmix64(run_seed ^ fnv1a64(item_id));
}

// Counter-style splitmix64 stream with explicit draw mappings. Chosen over
// std::mt19937_64 because the Mersenne twister mixes consecutive seeds into
// correlated first outputs, which biases per-item seeded draws; the splitmix
// finalizer has no such seeding pathology, and std::*_distribution output is
// implementation-defined anyway.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(seed) {}

    std::uint64_t raw() {
        state_ += 0x9e3779b97f4a7c15ull;
        std::uint64_t x = state_;
        x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
        x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
        return x ^ (x >> 31);
    }

    // Uniform on [0,1), 53-bit resolution.
    double uniform() {
        return static_cast<double>(raw() >> 11) * 0x1.0p-53;
    }

    // Standard normal via Box-Muller (cosine branch only; stateless).
    double normal() {
        double u1 = uniform();
        double u2 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
    }

    // Uniform integer in [lo, hi] by rejection-free scaling (desk-scale ranges).
    std::uint64_t uniform_int(std::uint64_t lo, std::uint64_t hi) {
        const std::uint64_t span = hi - lo + 1;
        return lo + static_cast<std::uint64_t>(uniform() * static_cast<double>(span)) % span;
    }

private:
    std::uint64_t state_;
};

} // namespace mindprint
