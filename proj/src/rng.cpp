#include "portopt/rng.hpp"

#include <cmath>
#include <numbers>

#include "portopt/kernels.hpp"

namespace portopt::rng {

namespace {

constexpr uint32_t kM0 = 0xD2511F53u;
constexpr uint32_t kM1 = 0xCD9E8D57u;
constexpr uint32_t kW0 = 0x9E3779B9u;
constexpr uint32_t kW1 = 0xBB67AE85u;

// splitmix64 finalizer; spreads low-entropy seeds over the whole key space.
uint64_t mix64(uint64_t x) {
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

// u64 -> double in (0,1); the offset keeps log() away from 0.
inline double to_unit(uint64_t u) {
    return static_cast<double>(u >> 11) * 0x1.0p-53 + 0x1.0p-54;
}

}  // namespace

Key key_from_seed(uint64_t master_seed) {
    const uint64_t k = mix64(master_seed);
    return Key{static_cast<uint32_t>(k), static_cast<uint32_t>(k >> 32)};
}

void philox4x32(Key key, uint64_t ctr_hi, uint64_t ctr_lo, uint32_t out[4]) {
    uint32_t c0 = static_cast<uint32_t>(ctr_lo);
    uint32_t c1 = static_cast<uint32_t>(ctr_lo >> 32);
    uint32_t c2 = static_cast<uint32_t>(ctr_hi);
    uint32_t c3 = static_cast<uint32_t>(ctr_hi >> 32);
    uint32_t k0 = key.k0, k1 = key.k1;
    for (int round = 0; round < 10; ++round) {
        const uint64_t p0 = static_cast<uint64_t>(kM0) * c0;
        const uint64_t p1 = static_cast<uint64_t>(kM1) * c2;
        const uint32_t hi0 = static_cast<uint32_t>(p0 >> 32), lo0 = static_cast<uint32_t>(p0);
        const uint32_t hi1 = static_cast<uint32_t>(p1 >> 32), lo1 = static_cast<uint32_t>(p1);
        c0 = hi1 ^ c1 ^ k0;
        c1 = lo1;
        c2 = hi0 ^ c3 ^ k1;
        c3 = lo0;
        k0 += kW0;
        k1 += kW1;
    }
    out[0] = c0;
    out[1] = c1;
    out[2] = c2;
    out[3] = c3;
}

uint64_t outer_stream(uint64_t member) {
    if (member >= (1ull << 56)) throw InvalidArgument("outer_stream: member id too large");
    return (kDomainOuter << 56) | member;
}

uint64_t budget_stream(uint64_t member) {
    if (member >= (1ull << 56)) throw InvalidArgument("budget_stream: member id too large");
    return (kDomainBudget << 56) | member;
}

uint64_t test_stream(uint64_t tag) {
    if (tag >= (1ull << 56)) throw InvalidArgument("test_stream: tag too large");
    return (kDomainTest << 56) | tag;
}

uint64_t inner_stream(uint64_t outer_member, int node, uint64_t extension) {
    if (outer_member >= (1ull << 24))
        throw InvalidArgument("inner_stream: outer member id exceeds 2^24");
    if (node < 0 || node >= (1 << 12))
        throw InvalidArgument("inner_stream: node index exceeds 2^12");
    if (extension >= (1ull << 20))
        throw InvalidArgument("inner_stream: extension id exceeds 2^20");
    return (kDomainInner << 56) | (outer_member << 32) |
           (static_cast<uint64_t>(node) << 20) | extension;
}

void box_muller(const uint32_t block[4], double out[2]) {
    const uint64_t a = (static_cast<uint64_t>(block[0]) << 32) | block[1];
    const uint64_t b = (static_cast<uint64_t>(block[2]) << 32) | block[3];
    const double u1 = to_unit(a);
    const double u2 = to_unit(b);
    const double rho = std::sqrt(-2.0 * std::log(u1));
    const double phi = 2.0 * std::numbers::pi * u2;
    out[0] = rho * std::cos(phi);
    out[1] = rho * std::sin(phi);
}

double normal_at(Key key, uint64_t stream, uint64_t position) {
    uint32_t block[4];
    double z[2];
    philox4x32(key, stream, position / 2, block);
    box_muller(block, z);
    return z[position & 1];
}

void fill_normals(Key key, uint64_t stream, uint64_t pos0, std::span<double> out) {
    uint32_t block[4];
    double z[2];
    std::size_t i = 0;
    uint64_t p = pos0;
    while (i < out.size()) {
        philox4x32(key, stream, p / 2, block);
        box_muller(block, z);
        if ((p & 1) == 0) {
            out[i++] = z[0];
            ++p;
            if (i < out.size()) {
                out[i++] = z[1];
                ++p;
            }
        } else {
            out[i++] = z[1];
            ++p;
        }
    }
}

}  // namespace portopt::rng
