#pragma once

#include <cstdint>
#include <cmath>
#include <random>
#include <stdexcept>
#include <vector>

namespace eirc {

// SplitMix64 mixing step. Advances `state` and returns the next output.
inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

// Derives the RNG seed for one (cell, replicate) slot of a run. Distinct
// slots under the same master seed never share a stream.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t cell,
                                 std::uint64_t replicate) {
    std::uint64_t s = master;
    std::uint64_t h = splitmix64(s);
    s = h ^ (0x9E3779B97F4A7C15ULL * (cell + 1));
    h = splitmix64(s);
    s = h ^ (0xC2B2AE3D27D4EB4FULL * (replicate + 1));
    return splitmix64(s);
}

// Tags sub-streams hanging off one seed (reservoir build, task data, ...).
inline std::uint64_t substream(std::uint64_t seed, std::uint64_t tag) {
    std::uint64_t s = seed ^ (0xD6E8FEB86659FD93ULL * (tag + 1));
    return splitmix64(s);
}

// Seeded random source with explicit, engine-only use of <random>. All
// distribution transforms are implemented here so that a given seed produces
// the same stream on every platform and standard library.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    // Uniform on [0, 1), 53-bit resolution.
    double uniform01() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) {
        return lo + (hi - lo) * uniform01();
    }

    // Uniform integer in [0, n). Rejection keeps the draw unbiased.
    std::size_t index(std::size_t n) {
        if (n == 0) throw std::invalid_argument("Rng::index: n must be > 0");
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
        std::uint64_t x;
        do {
            x = next_u64();
        } while (x >= limit);
        return static_cast<std::size_t>(x % n);
    }

    // Marsaglia polar method with one cached deviate.
    double normal(double mean, double stddev) {
        if (has_spare_) {
            has_spare_ = false;
            return mean + stddev * spare_;
        }
        double u, v, s;
        do {
            u = 2.0 * uniform01() - 1.0;
            v = 2.0 * uniform01() - 1.0;
            s = u * u + v * v;
        } while (s >= 1.0 || s == 0.0);
        const double m = std::sqrt(-2.0 * std::log(s) / s);
        spare_ = v * m;
        has_spare_ = true;
        return mean + stddev * u * m;
    }

    // Marsaglia-Tsang squeeze for shape >= 1, with the usual boost for
    // shape < 1. Unit scale.
    double gamma(double shape) {
        if (shape <= 0.0) throw std::invalid_argument("Rng::gamma: shape must be > 0");
        if (shape < 1.0) {
            const double u = uniform01();
            return gamma(shape + 1.0) * std::pow(u, 1.0 / shape);
        }
        const double d = shape - 1.0 / 3.0;
        const double c = 1.0 / std::sqrt(9.0 * d);
        for (;;) {
            double x, v;
            do {
                x = normal(0.0, 1.0);
                v = 1.0 + c * x;
            } while (v <= 0.0);
            v = v * v * v;
            const double u = uniform01();
            if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
            if (u > 0.0 && std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
        }
    }

    double beta(double a, double b) {
        if (a <= 0.0 || b <= 0.0) throw std::invalid_argument("Rng::beta: parameters must be > 0");
        const double x = gamma(a);
        const double y = gamma(b);
        return x / (x + y);
    }

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::swap(v[i - 1], v[index(i)]);
        }
    }

private:
    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

} // namespace eirc
