#include "phaseparse/rng.hpp"

#include <cmath>
#include <numbers>

namespace phaseparse {

double Rng::normal() {
    if (has_cached_) {
        has_cached_ = false;
        return cached_;
    }
    // Box-Muller; u clamped away from 0 so the log stays finite.
    double u = uniform();
    if (u < 0x1.0p-100) u = 0x1.0p-100;
    const double v = uniform();
    const double r = std::sqrt(-2.0 * std::log(u));
    const double a = 2.0 * std::numbers::pi * v;
    cached_ = r * std::sin(a);
    has_cached_ = true;
    return r * std::cos(a);
}

uint64_t derive_seed(uint64_t base, uint64_t index) {
    // splitmix64 finalizer over the combined value
    uint64_t z = base + 0x9e3779b97f4a7c15ULL * (index + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

}  // namespace phaseparse
