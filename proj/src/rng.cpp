#include "dlmp/rng.hpp"

#include "dlmp/normal.hpp"

namespace dlmp::rng {

namespace {

constexpr uint32_t kMul0 = 0xD2511F53u;
constexpr uint32_t kMul1 = 0xCD9E8D57u;
constexpr uint32_t kWeyl0 = 0x9E3779B9u;
constexpr uint32_t kWeyl1 = 0xBB67AE85u;

inline void round_once(std::array<uint32_t, 4>& c, uint32_t k0, uint32_t k1)
{
    const uint64_t p0 = static_cast<uint64_t>(kMul0) * c[0];
    const uint64_t p1 = static_cast<uint64_t>(kMul1) * c[2];
    const uint32_t hi0 = static_cast<uint32_t>(p0 >> 32);
    const uint32_t lo0 = static_cast<uint32_t>(p0);
    const uint32_t hi1 = static_cast<uint32_t>(p1 >> 32);
    const uint32_t lo1 = static_cast<uint32_t>(p1);
    c = {hi1 ^ c[1] ^ k0, lo1, hi0 ^ c[3] ^ k1, lo0};
}

} // namespace

std::array<uint32_t, 4> Philox::block(uint64_t counter) const
{
    std::array<uint32_t, 4> c = {static_cast<uint32_t>(counter),
                                 static_cast<uint32_t>(counter >> 32), 0u, 0u};
    uint32_t k0 = key0_;
    uint32_t k1 = key1_;
    for (int r = 0; r < 10; ++r) {
        round_once(c, k0, k1);
        k0 += kWeyl0;
        k1 += kWeyl1;
    }
    return c;
}

double Philox::uniform(uint64_t idx) const
{
    const auto b = block(idx >> 2);
    const uint32_t w = b[idx & 3u];
    return (static_cast<double>(w) + 0.5) * (1.0 / 4294967296.0);
}

double Philox::normal(uint64_t idx) const
{
    return normal_quantile(uniform(idx));
}

} // namespace dlmp::rng
