#include <cmath>
#include <cstdint>

#include "portopt/kernels.hpp"
#include "portopt/rng.hpp"

namespace portopt::kernels {

namespace {

constexpr uint32_t kM0 = 0xD2511F53u;
constexpr uint32_t kM1 = 0xCD9E8D57u;
constexpr uint32_t kW0 = 0x9E3779B9u;
constexpr uint32_t kW1 = 0xBB67AE85u;

inline void philox_round(uint32_t& c0, uint32_t& c1, uint32_t& c2, uint32_t& c3,
                         uint32_t k0, uint32_t k1) {
    const uint64_t p0 = static_cast<uint64_t>(kM0) * c0;
    const uint64_t p1 = static_cast<uint64_t>(kM1) * c2;
    const uint32_t hi0 = static_cast<uint32_t>(p0 >> 32), lo0 = static_cast<uint32_t>(p0);
    const uint32_t hi1 = static_cast<uint32_t>(p1 >> 32), lo1 = static_cast<uint32_t>(p1);
    c0 = hi1 ^ c1 ^ k0;
    c1 = lo1;
    c2 = hi0 ^ c3 ^ k1;
    c3 = lo0;
}

inline void philox_block(uint32_t k0, uint32_t k1, uint64_t hi, uint64_t lo,
                         uint32_t out[4]) {
    uint32_t c0 = static_cast<uint32_t>(lo);
    uint32_t c1 = static_cast<uint32_t>(lo >> 32);
    uint32_t c2 = static_cast<uint32_t>(hi);
    uint32_t c3 = static_cast<uint32_t>(hi >> 32);
    for (int round = 0; round < 10; ++round) {
        philox_round(c0, c1, c2, c3, k0, k1);
        k0 += kW0;
        k1 += kW1;
    }
    out[0] = c0;
    out[1] = c1;
    out[2] = c2;
    out[3] = c3;
}

void philox_bulk_scalar(uint32_t k0, uint32_t k1, uint64_t hi, uint64_t lo0,
                        std::size_t nblocks, uint32_t* out) {
    for (std::size_t b = 0; b < nblocks; ++b)
        philox_block(k0, k1, hi, lo0 + b, out + 4 * b);
}

void normals_lanes_scalar(uint32_t k0, uint32_t k1, const uint64_t* stream_hi,
                          std::size_t m, std::size_t len, double* out) {
    uint32_t block[4];
    double z[2];
    for (std::size_t j = 0; j < m; ++j) {
        for (std::size_t p = 0; p < len; p += 2) {
            philox_block(k0, k1, stream_hi[j], p / 2, block);
            rng::box_muller(block, z);
            out[p * m + j] = z[0];
            if (p + 1 < len) out[(p + 1) * m + j] = z[1];
        }
    }
}

double dot_scalar(const double* a, const double* b, std::size_t len) {
    double acc = 0.0;
    for (std::size_t i = 0; i < len; ++i) acc += a[i] * b[i];
    return acc;
}

void axpy_batch_scalar(double a, const double* x, double* y, std::size_t m) {
    for (std::size_t j = 0; j < m; ++j) y[j] += a * x[j];
}

void suffix_add_scalar(double* x, std::size_t len, std::size_t stride, double h) {
    for (std::size_t i = 0; i < len; ++i) x[i * stride] += h;
}

void exp_affine_stats_scalar(double a, double b, const double* d, std::size_t m,
                             double* sum, double* sumsq) {
    double s = 0.0, s2 = 0.0;
    for (std::size_t j = 0; j < m; ++j) {
        const double v = std::exp(a * d[j] + b);
        s += v;
        s2 += v * v;
    }
    *sum = s;
    *sumsq = s2;
}

void reduce_stats_scalar(const double* x, std::size_t m, double* sum, double* sumsq) {
    double s = 0.0, s2 = 0.0;
    for (std::size_t j = 0; j < m; ++j) {
        s += x[j];
        s2 += x[j] * x[j];
    }
    *sum = s;
    *sumsq = s2;
}

}  // namespace

const Ops& scalar_ops() {
    static const Ops ops{
        "scalar",
        philox_bulk_scalar,
        normals_lanes_scalar,
        dot_scalar,
        axpy_batch_scalar,
        suffix_add_scalar,
        exp_affine_stats_scalar,
        reduce_stats_scalar,
    };
    return ops;
}

}  // namespace portopt::kernels
