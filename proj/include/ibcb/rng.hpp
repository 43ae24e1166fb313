#pragma once

#include <cstdint>
#include <initializer_list>

namespace ibcb {

/// Seeded pseudo-random stream: xoshiro256** (Blackman & Vigna) with the
/// state expanded from the 64-bit seed by splitmix64. Normal variates use
/// the Marsaglia polar method; uniforms take the top 53 bits. Every step is
/// integer arithmetic plus IEEE operations, so sequences are identical on
/// any platform.
///
/// An Rng has a single owner. Parallel consumers get their own stream
/// through child(), which depends only on the seed and never on how many
/// draws the parent has made.
class Rng {
public:
    explicit Rng(std::uint64_t seed);

    std::uint64_t seed() const noexcept { return seed_; }

    std::uint64_t next_u64() noexcept;
    /// Uniform on [0, 1).
    double uniform() noexcept;
    /// Standard normal.
    double normal() noexcept;

    Rng child(std::uint64_t stream) const noexcept { return Rng(derive_seed(seed_, {stream})); }

    static std::uint64_t derive_seed(std::uint64_t seed, std::initializer_list<std::uint64_t> path) noexcept;

private:
    std::uint64_t seed_;
    std::uint64_t s_[4];
    double spare_ = 0.0;
    bool has_spare_ = false;
};

std::uint64_t splitmix64(std::uint64_t& state) noexcept;

/// N(mean, std²) variate; std == 0 returns mean exactly. Throws on std < 0.
double gaussian(Rng& rng, double mean, double std);

}  // namespace ibcb
