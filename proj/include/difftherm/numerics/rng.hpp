#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>

namespace difftherm {

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t& state)
{
    std::uint64_t z = (state += 0x9E3779B97F4A7C15ull);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

}  // namespace detail

/// Reproducible split-stream generator.  A (seed, stream_id) pair fully
/// determines the draw sequence; distinct stream ids are decorrelated by
/// hashing both words through splitmix64 before seeding the engine.
///
/// Uniform and normal variates are produced from explicit arithmetic on the
/// engine's 64-bit output (normals via Box-Muller), so sequences do not depend
/// on standard-library distribution internals.
class RngStream {
public:
    RngStream(std::uint64_t seed, std::uint64_t stream_id)
        : seed_(seed), stream_id_(stream_id)
    {
        std::uint64_t s = seed;
        std::uint64_t a = detail::splitmix64(s);
        s ^= stream_id * 0xD1B54A32D192ED03ull + 0x8CB92BA72F3D8DD7ull;
        std::uint64_t b = detail::splitmix64(s);
        std::seed_seq seq{static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(a >> 32),
                          static_cast<std::uint32_t>(b), static_cast<std::uint32_t>(b >> 32)};
        engine_.seed(seq);
    }

    std::uint64_t seed() const { return seed_; }
    std::uint64_t stream_id() const { return stream_id_; }

    /// Uniform double in [0, 1).
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    /// Uniform double in [lo, hi).
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Standard normal variate (Box-Muller, pairwise cached).
    double normal()
    {
        if (have_cached_) {
            have_cached_ = false;
            return cached_;
        }
        double u1 = 1.0 - uniform();  // in (0, 1], keeps the log finite
        double u2 = uniform();
        double r = std::sqrt(-2.0 * std::log(u1));
        double a = 2.0 * std::numbers::pi * u2;
        cached_ = r * std::sin(a);
        have_cached_ = true;
        return r * std::cos(a);
    }

private:
    std::uint64_t seed_;
    std::uint64_t stream_id_;
    std::mt19937_64 engine_;
    double cached_ = 0;
    bool have_cached_ = false;
};

}  // namespace difftherm
