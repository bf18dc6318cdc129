#pragma once

#include <cmath>
#include <cstdint>

namespace dmca {

/// Counter-based pseudo-random generator (splitmix64 over a keyed counter).
///
/// Every stream is a pure function of (key, counter), so identical seeds give
/// identical sequences regardless of call interleaving across streams. All
/// randomness in the project derives from one root seed via `stream()`.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : key_(mix(seed ^ 0x5bf0f3c6e3a1d0b7ull)) {}

    /// Independent child stream; deterministic in (parent key, id).
    Rng stream(std::uint64_t id) const {
        Rng r(0);
        r.key_ = mix(key_ ^ mix(id + 0x9e3779b97f4a7c15ull));
        r.counter_ = 0;
        return r;
    }

    std::uint64_t next_u64() { return mix(mix(counter_++) ^ key_); }

    /// Uniform in [0, 1).
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    /// Uniform in (0, 1); never returns 0 (safe for log()).
    double uniform_open() {
        return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
    }

    /// Uniform in [lo, hi).
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Uniform integer in [0, n), n >= 1.
    std::uint64_t uniform_int(std::uint64_t n) {
        return static_cast<std::uint64_t>(
            (static_cast<unsigned __int128>(next_u64()) * n) >> 64);
    }

    /// Standard normal via Box-Muller.
    double normal() {
        double u1 = uniform_open();
        double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586477 * u2);
    }

    /// Standard Gumbel(0,1): -log(-log(u)), u ~ U(0,1).
    double gumbel() { return -std::log(-std::log(uniform_open())); }

private:
    static std::uint64_t mix(std::uint64_t x) {
        x += 0x9e3779b97f4a7c15ull;
        x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
        x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
        return x ^ (x >> 31);
    }

    std::uint64_t key_ = 0;
    std::uint64_t counter_ = 0;
};

} // namespace dmca
