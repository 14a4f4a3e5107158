#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

namespace herald {

/// Deterministic RNG. std::mt19937_64 output is fully specified by the
/// standard; the distribution transforms below are our own because the
/// std:: distributions are implementation-defined and would break
/// bit-reproducibility across toolchains.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    /// Uniform in [0, 1) with 53 random bits.
    double uniform() {
        return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Uniform integer in [lo, hi] inclusive.
    std::int64_t uniform_int(std::int64_t lo, std::int64_t hi) {
        const std::uint64_t span = static_cast<std::uint64_t>(hi - lo) + 1;
        // Rejection sampling keeps the draw unbiased.
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % span;
        std::uint64_t x;
        do {
            x = engine_();
        } while (x >= limit);
        return lo + static_cast<std::int64_t>(x % span);
    }

    /// Standard normal via Box-Muller (no cached spare, one pair per call
    /// keeps the stream position predictable).
    double normal() {
        double u1 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
    }

    template <typename T>
    void shuffle(std::vector<T>& v) {
        if (v.size() < 2) return;
        for (std::size_t i = v.size() - 1; i > 0; --i) {
            const auto j = static_cast<std::size_t>(
                uniform_int(0, static_cast<std::int64_t>(i)));
            std::swap(v[i], v[j]);
        }
    }

private:
    std::mt19937_64 engine_;
};

inline std::uint64_t fnv1a64(const void* bytes, std::size_t len,
                             std::uint64_t seed = 0xcbf29ce484222325ULL) {
    const auto* p = static_cast<const unsigned char*>(bytes);
    std::uint64_t h = seed;
    for (std::size_t i = 0; i < len; ++i) {
        h ^= p[i];
        h *= 0x100000001b3ULL;
    }
    return h;
}

inline std::uint64_t fnv1a64(const std::string& s) {
    return fnv1a64(s.data(), s.size());
}

/// Derives an independent stream for a named parameter so that adding or
/// removing unrelated parameters never shifts another parameter's init.
inline std::uint64_t stream_seed(std::uint64_t run_seed, const std::string& name) {
    std::uint64_t z = run_seed ^ fnv1a64(name);
    // splitmix64 finalizer
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

}  // namespace herald
