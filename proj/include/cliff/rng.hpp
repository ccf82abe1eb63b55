// Seeded random streams. Every stochastic task (per-cell EM init, per-rollout
// sampling) owns a substream derived from (seed, task coordinates), so results
// do not depend on scheduling or worker count.

#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <stdexcept>

namespace cliff {

namespace detail {
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}
}  // namespace detail

/// Folds words into a single substream seed. Order-sensitive.
inline std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b) {
    return detail::splitmix64(detail::splitmix64(a) ^ b);
}

inline std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b, std::uint64_t c) {
    return detail::splitmix64(mix_seed(a, b) ^ c);
}

class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(detail::splitmix64(seed)) {}

    std::uint64_t next_u64() { return engine_(); }

    /// Uniform double in [0, 1).
    double uniform() {
        return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    }

    /// Standard normal via Box-Muller. One spare value is cached.
    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        const double u1 = 1.0 - uniform();  // (0, 1], keeps log finite
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = two_pi_ * u2;
        spare_ = r * std::sin(a);
        has_spare_ = true;
        return r * std::cos(a);
    }

    /// Index drawn with probability proportional to the given weights.
    std::size_t pick_weighted(std::span<const double> weights) {
        if (weights.empty()) {
            throw std::invalid_argument("pick_weighted: empty weights");
        }
        double total = 0.0;
        for (double w : weights) total += w;
        double u = uniform() * total;
        for (std::size_t i = 0; i + 1 < weights.size(); ++i) {
            u -= weights[i];
            if (u < 0.0) return i;
        }
        return weights.size() - 1;
    }

private:
    static constexpr double two_pi_ = 6.283185307179586476925286766559;
    std::mt19937_64 engine_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace cliff
