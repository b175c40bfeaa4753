#pragma once

#include <cmath>
#include <cstdint>
#include <string_view>
#include <vector>

namespace opf {

/// Deterministic, labeled random streams.
///
/// Every stochastic component (weight init, dropout, proposal draws, shuffles)
/// owns a stream derived from a master seed and a string label, so results are
/// bit-reproducible regardless of the order components consume randomness.
/// Distributions are implemented here rather than taken from <random> because
/// the standard leaves their algorithms implementation-defined.
class RngStream {
public:
    RngStream() : RngStream(0) {}
    explicit RngStream(std::uint64_t seed) : state_(splitmix(seed ^ 0x9e3779b97f4a7c15ull)) {
        // avoid the all-zero state
        if (state_ == 0) state_ = 0x106689d45497fdb5ull;
    }

    /// Derive an independent stream from a master seed and a label.
    static RngStream derive(std::uint64_t master_seed, std::string_view label) {
        std::uint64_t h = 0xcbf29ce484222325ull; // FNV-1a
        for (char c : label) {
            h ^= static_cast<unsigned char>(c);
            h *= 0x100000001b3ull;
        }
        return RngStream(splitmix(master_seed) ^ h);
    }

    /// Derive a child stream (e.g. one per chain or per layer).
    RngStream split(std::string_view label) {
        return derive(next_u64(), label);
    }

    std::uint64_t next_u64() {
        // xorshift64* — small state, good enough statistical quality here
        std::uint64_t x = state_;
        x ^= x >> 12;
        x ^= x << 25;
        x ^= x >> 27;
        state_ = x;
        return x * 0x2545f4914f6cdd1dull;
    }

    /// Uniform in [0, 1).
    double uniform() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    /// Uniform in [lo, hi).
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Integer in [0, n).
    std::uint64_t uniform_index(std::uint64_t n) {
        // multiply-shift; bias is negligible for the n used here
        return static_cast<std::uint64_t>(uniform() * static_cast<double>(n)) % n;
    }

    /// Standard normal via Box-Muller (cached second value).
    double normal() {
        if (has_cache_) {
            has_cache_ = false;
            return cache_;
        }
        double u1 = 0.0;
        do {
            u1 = uniform();
        } while (u1 <= 0.0);
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 6.283185307179586476925286766559 * u2;
        cache_ = r * std::sin(a);
        has_cache_ = true;
        return r * std::cos(a);
    }

    double normal(double mean, double stddev) { return mean + stddev * normal(); }

    /// Fisher-Yates shuffle of an index vector.
    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            const std::size_t j = static_cast<std::size_t>(uniform_index(i));
            std::swap(v[i - 1], v[j]);
        }
    }

private:
    static std::uint64_t splitmix(std::uint64_t x) {
        x += 0x9e3779b97f4a7c15ull;
        x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
        x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
        return x ^ (x >> 31);
    }

    std::uint64_t state_;
    double cache_ = 0.0;
    bool has_cache_ = false;
};

} // namespace opf
