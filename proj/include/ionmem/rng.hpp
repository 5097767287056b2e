#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

#include "ionmem/core.hpp"

namespace ionmem {

// ---------------------------------------------------------------------------
// Reproducible random streams. One master seed; every (experiment, shot,
// component) coordinate gets its own counter-derived substream, so results
// are bit-identical regardless of evaluation order or thread count.
// ---------------------------------------------------------------------------

inline constexpr std::uint64_t seed_golden = 0x9e3779b97f4a7c15ull;

inline std::uint64_t splitmix64(std::uint64_t z) {
    z += seed_golden;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

/// Folds a path of integer coordinates into a master seed.
inline std::uint64_t derive_seed(std::uint64_t master, std::initializer_list<std::uint64_t> path) {
    std::uint64_t s = splitmix64(master);
    for (std::uint64_t t : path) s = splitmix64(s ^ splitmix64(t));
    return s;
}

// Stream tags keep substreams for unrelated purposes disjoint.
namespace stream_tag {
inline constexpr std::uint64_t noise_component = 0x01;
inline constexpr std::uint64_t gradient_common = 0x02;
inline constexpr std::uint64_t gradient_differential = 0x03;
inline constexpr std::uint64_t ramsey_shot = 0x04;
inline constexpr std::uint64_t ramsey_detect = 0x05;
inline constexpr std::uint64_t dfs_shot = 0x06;
inline constexpr std::uint64_t dfs_detect = 0x07;
inline constexpr std::uint64_t dfs_dephase = 0x08;
inline constexpr std::uint64_t synthetic = 0x09;
} // namespace stream_tag

/// mt19937_64 with portable uniform/normal/poisson draws on top. The
/// distributions are hand-rolled because the standard library ones are not
/// bit-stable across implementations.
class RandomStream {
  public:
    explicit RandomStream(std::uint64_t seed) : eng_(seed) {}

    std::uint64_t next_u64() { return eng_(); }

    /// Uniform in (0, 1]: never returns 0 so it is safe under log().
    double uniform01() {
        return (static_cast<double>(eng_() >> 11) + 1.0) * 0x1.0p-53;
    }

    /// Uniform in [lo, hi).
    double uniform(double lo, double hi) {
        return lo + (hi - lo) * (static_cast<double>(eng_() >> 11) * 0x1.0p-53);
    }

    /// Standard normal via Box-Muller; consumes exactly two engine draws.
    double normal() {
        const double u1 = uniform01();
        const double u2 = static_cast<double>(eng_() >> 11) * 0x1.0p-53;
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(two_pi * u2);
    }

    bool bernoulli(double p) { return uniform01() <= p; }

    /// Poisson draw; Knuth's product method below mean 64, normal
    /// approximation above (count statistics there are effectively Gaussian).
    long poisson(double mean) {
        if (!(mean >= 0.0)) throw ValidationError("poisson mean must be >= 0");
        if (mean == 0.0) return 0;
        if (mean > 64.0) {
            const double x = mean + std::sqrt(mean) * normal();
            return x < 0.0 ? 0 : static_cast<long>(std::nearbyint(x));
        }
        const double limit = std::exp(-mean);
        long k = 0;
        double prod = uniform01();
        while (prod > limit) {
            ++k;
            prod *= uniform01();
        }
        return k;
    }

  private:
    std::mt19937_64 eng_;
};

} // namespace ionmem
