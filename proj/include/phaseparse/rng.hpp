#pragma once

#include <cstdint>
#include <random>

namespace phaseparse {

/// Deterministic random stream. The mt19937_64 sequence is pinned by the
/// standard; the value mappings below are implemented here because
/// std::*_distribution output is not portable across standard libraries.
class Rng {
public:
    explicit Rng(uint64_t seed) : eng_(seed) {}

    uint64_t next_u64() { return eng_(); }

    /// Uniform in [0,1) with 53 random bits.
    double uniform() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Uniform integer in [0,n), rejection sampled (no modulo bias).
    uint64_t uniform_int(uint64_t n) {
        const uint64_t limit = UINT64_MAX - UINT64_MAX % n;
        uint64_t x;
        do {
            x = eng_();
        } while (x >= limit);
        return x % n;
    }

    /// Standard normal via Box-Muller, one cached deviate.
    double normal();

    double normal(double mean, double sigma) { return mean + sigma * normal(); }

    bool bernoulli(double p) { return uniform() < p; }

    /// Fisher-Yates shuffle of [first,last).
    template <typename It>
    void shuffle(It first, It last) {
        const auto n = static_cast<uint64_t>(last - first);
        for (uint64_t i = n; i > 1; --i) {
            std::swap(first[i - 1], first[uniform_int(i)]);
        }
    }

private:
    std::mt19937_64 eng_;
    double cached_ = 0.0;
    bool has_cached_ = false;
};

/// Child-stream seed for (base, index), splitmix64 finalizer.
uint64_t derive_seed(uint64_t base, uint64_t index);

}  // namespace phaseparse
