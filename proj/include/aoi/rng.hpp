#pragma once

#include <cmath>
#include <cstdint>

#include "aoi/distribution.hpp"

namespace aoi {

namespace detail {
inline constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ull;

inline std::uint64_t mix64(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}
}  // namespace detail

/// Counter-style 64-bit generator (splitmix64). The state walks a fixed
/// full-period orbit and the output is a strong mix of the state, so a stream
/// is fully determined by its starting point. Stream starting points are
/// hashed from (root seed, stream index): distinct indices give streams that
/// never share a usable window of the orbit. This is what makes replications
/// and batches reproducible regardless of how work is distributed.
class RandomStream {
public:
    RandomStream(std::uint64_t root_seed, std::uint64_t stream_index) {
        std::uint64_t h = root_seed + (stream_index + 1) * detail::kGolden;
        h = detail::mix64(h);
        state_ = detail::mix64(h + detail::kGolden);
    }

    std::uint64_t next_u64() {
        state_ += detail::kGolden;
        return detail::mix64(state_);
    }

    /// Uniform on the open interval (0,1); never returns an endpoint.
    double uniform01() {
        return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
    }

    /// Standard normal via Box-Muller (two uniforms per draw).
    double normal() {
        const double u1 = uniform01();
        const double u2 = uniform01();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
    }

private:
    std::uint64_t state_ = 0;
};

namespace detail {
// Marsaglia-Tsang; the shape<1 boost consumes its uniform first so the draw
// order per variate is fixed.
inline double sample_gamma(RandomStream& rng, double shape, double rate) {
    double boost_factor = 1.0;
    double a = shape;
    if (a < 1.0) {
        boost_factor = std::pow(rng.uniform01(), 1.0 / a);
        a += 1.0;
    }
    const double d = a - 1.0 / 3.0;
    const double c = 1.0 / std::sqrt(9.0 * d);
    for (;;) {
        const double x = rng.normal();
        const double t = 1.0 + c * x;
        if (t <= 0.0) continue;
        const double v = t * t * t;
        const double u = rng.uniform01();
        const double x2 = x * x;
        if (u < 1.0 - 0.0331 * x2 * x2) return boost_factor * d * v / rate;
        if (std::log(u) < 0.5 * x2 + d * (1.0 - v + std::log(v))) return boost_factor * d * v / rate;
    }
}
}  // namespace detail

/// Infinite i.i.d. sample sequence from a spec. Identical (spec, seed, stream)
/// always produce the identical sequence; distinct stream indices are
/// independent streams.
class SampleStream {
public:
    SampleStream(const DistributionSpec& spec, std::uint64_t root_seed, std::uint64_t stream_index)
        : spec_(spec), rng_(root_seed, stream_index) {
        validate(spec_);
    }

    double next() {
        switch (spec_.family) {
            case Family::exponential:
                return -std::log(rng_.uniform01()) / spec_.rate;
            case Family::gamma:
                return detail::sample_gamma(rng_, spec_.shape, spec_.rate);
            case Family::deterministic:
                return spec_.value;
            case Family::uniform:
                return spec_.lo + (spec_.hi - spec_.lo) * rng_.uniform01();
        }
        return 0.0;  // unreachable
    }

    const DistributionSpec& spec() const { return spec_; }

private:
    DistributionSpec spec_;
    RandomStream rng_;
};

}  // namespace aoi
