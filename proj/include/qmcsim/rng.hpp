#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string_view>

namespace qmcsim {

// SplitMix64 finalizer. Used both as the output function of the stream
// generator and to derive substream keys from (seed, tag, indices...).
inline std::uint64_t mix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

inline std::uint64_t hash_str(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;  // FNV-1a
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t a) {
    return mix64(mix64(seed) ^ a);
}

inline std::uint64_t derive_seed(std::uint64_t seed, std::string_view tag) {
    return derive_seed(seed, hash_str(tag));
}

template <typename A, typename B, typename... Rest>
std::uint64_t derive_seed(std::uint64_t seed, A a, B b, Rest... rest) {
    return derive_seed(derive_seed(seed, a), b, rest...);
}

// Deterministic counter-based stream: every (seed, tag, index...) key
// names an independent stream, so Monte Carlo loops can be split across
// threads and still reproduce the sequential draw-for-draw output.
class Rng {
  public:
    explicit Rng(std::uint64_t key) : state_(key) {}

    std::uint64_t next_u64() { return mix64(state_++); }

    // [0, 1)
    double uniform() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    // (0, 1]
    double uniform_open() {
        return static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    bool bernoulli(double p) { return uniform() < p; }

    // Box-Muller, two uniforms per draw; no cached spare so the draw
    // count per call is fixed.
    double normal(double mean, double sigma) {
        const double u1 = uniform_open();
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        return mean + sigma * r * std::cos(2.0 * std::numbers::pi * u2);
    }

    double half_normal(double scale) { return std::abs(normal(0.0, scale)); }

    // Resamples instead of clamping, preserving the Gaussian shape above 0.
    double normal_positive(double mean, double sigma) {
        for (;;) {
            const double x = normal(mean, sigma);
            if (x > 0.0) return x;
        }
    }

    double log_uniform(double lo, double hi) {
        return std::exp(uniform(std::log(lo), std::log(hi)));
    }

    // Quantile inversion from a single uniform per chunk. For a fixed
    // stream position the result is monotone non-decreasing in lambda
    // (for lambda within one chunk), which the yield calibration relies
    // on for its common-random-number bisection.
    long long poisson(double lambda) {
        if (!(lambda >= 0.0)) {
            throw std::domain_error("poisson: lambda must be non-negative");
        }
        long long total = 0;
        while (lambda > 0.0) {
            const double chunk = std::min(lambda, 500.0);
            total += poisson_chunk(chunk);
            lambda -= chunk;
        }
        return total;
    }

  private:
    long long poisson_chunk(double lambda) {
        if (lambda == 0.0) return 0;
        const double u = uniform();
        double p = std::exp(-lambda);
        double cum = p;
        long long k = 0;
        const long long k_max =
            static_cast<long long>(lambda + 60.0 * std::sqrt(lambda) + 100.0);
        while (cum < u && k < k_max) {
            ++k;
            p *= lambda / static_cast<double>(k);
            cum += p;
        }
        return k;
    }

    std::uint64_t state_;
};

}  // namespace qmcsim
