#pragma once

#include <array>
#include <cstdint>

namespace dlmp::rng {

/// Philox-4x32-10 counter-based generator. Every output is a pure function
/// of (seed, index), so draws can be sharded across threads in any order
/// and still reproduce bit-identically.
class Philox {
public:
    explicit Philox(uint64_t seed) : key0_(static_cast<uint32_t>(seed)),
                                     key1_(static_cast<uint32_t>(seed >> 32))
    {
    }

    std::array<uint32_t, 4> block(uint64_t counter) const;

    /// Uniform draw in (0,1) for stream index `idx`.
    double uniform(uint64_t idx) const;

    /// Standard normal draw for stream index `idx` (inverse-CDF transform).
    double normal(uint64_t idx) const;

private:
    uint32_t key0_;
    uint32_t key1_;
};

} // namespace dlmp::rng
