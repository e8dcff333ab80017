#pragma once

#include <cmath>
#include <cstdint>
#include <random>

#include "convexdecomp/vecspace.hpp"

namespace convexdecomp {

// Sampling streams used across the library. Keeping them disjoint means two
// operations seeded with the same user seed never consume the same substream.
enum : std::uint64_t {
    kStreamValidate = 1,
    kStreamSamples = 2,
    kStreamVerify = 3,
    kStreamRays = 4,
    kStreamWitness = 5,
    kStreamRetention = 6,
    kStreamCorpus = 7,
    kStreamSphere = 8,
    kStreamConvexity = 9,
    kStreamEnvelope = 10,
    kStreamBasePoints = 11,
    kStreamSlopes = 12,
};

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Seed for the (stream, index) substream of a user seed. Workers derive
/// their generator from this, so results do not depend on scheduling.
inline std::uint64_t substream_seed(std::uint64_t seed, std::uint64_t stream,
                                    std::uint64_t index) {
    return splitmix64(splitmix64(splitmix64(seed) + stream) + index);
}

/// Deterministic generator with hand-rolled distributions. std::mt19937_64
/// output is pinned by the standard and Box-Muller below avoids the
/// implementation-defined std::normal_distribution.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : eng_(seed) {}

    /// Uniform in [0, 1).
    double uniform() { return std::ldexp(static_cast<double>(eng_() >> 11), -53); }

    /// Uniform in (0, 1].
    double uniform_open() {
        return std::ldexp(static_cast<double>((eng_() >> 11) + 1), -53);
    }

    /// Standard normal; consumes exactly two engine draws per call.
    double gaussian() {
        const double u1 = uniform_open();
        const double u2 = uniform();
        constexpr double kTwoPi = 6.283185307179586476925286766559;
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(kTwoPi * u2);
    }

    Vector gaussian_vector(std::size_t n) {
        Vector v(n);
        for (double& x : v) x = gaussian();
        return v;
    }

    /// Uniform direction on the unit sphere.
    Vector unit_vector(std::size_t n) {
        for (;;) {
            Vector v = gaussian_vector(n);
            const double nv = norm(v);
            if (nv > 1e-9) {
                for (double& x : v) x /= nv;
                return v;
            }
        }
    }

private:
    std::mt19937_64 eng_;
};

} // namespace convexdecomp
