// AVX2 + FMA kernel variants.  This translation unit is the only one built
// with -mavx2; everything here is reached through the dispatch table after a
// runtime CPUID check.

#include "portopt/kernels.hpp"
#include "portopt/rng.hpp"

#if defined(__AVX2__) && defined(__FMA__)

#include <immintrin.h>

#include <cmath>
#include <cstdint>

#if defined(PORTOPT_HAVE_LIBMVEC)
extern "C" __m256d _ZGVdN4v_exp(__m256d);
#endif

namespace portopt::kernels {

namespace {

constexpr uint32_t kM0 = 0xD2511F53u;
constexpr uint32_t kM1 = 0xCD9E8D57u;
constexpr uint32_t kW0 = 0x9E3779B9u;
constexpr uint32_t kW1 = 0xBB67AE85u;

struct RoundKeys {
    uint32_t k0[10];
    uint32_t k1[10];
};

inline RoundKeys make_round_keys(uint32_t k0, uint32_t k1) {
    RoundKeys rk;
    for (int r = 0; r < 10; ++r) {
        rk.k0[r] = k0;
        rk.k1[r] = k1;
        k0 += kW0;
        k1 += kW1;
    }
    return rk;
}

// Four Philox blocks in SoA form: each __m256i holds one counter word for
// four blocks, widened to u64 lanes (low 32 bits live, high 32 zero) so
// _mm256_mul_epu32 yields the full 32x32->64 products.
struct Blocks4 {
    __m256i c0, c1, c2, c3;
};

inline Blocks4 philox4(Blocks4 c, const RoundKeys& rk) {
    const __m256i m0 = _mm256_set1_epi64x(kM0);
    const __m256i m1 = _mm256_set1_epi64x(kM1);
    const __m256i lo32 = _mm256_set1_epi64x(0xFFFFFFFFll);
    for (int r = 0; r < 10; ++r) {
        const __m256i p0 = _mm256_mul_epu32(c.c0, m0);
        const __m256i p1 = _mm256_mul_epu32(c.c2, m1);
        const __m256i hi0 = _mm256_srli_epi64(p0, 32);
        const __m256i lo0 = _mm256_and_si256(p0, lo32);
        const __m256i hi1 = _mm256_srli_epi64(p1, 32);
        const __m256i lo1 = _mm256_and_si256(p1, lo32);
        const __m256i k0 = _mm256_set1_epi64x(rk.k0[r]);
        const __m256i k1 = _mm256_set1_epi64x(rk.k1[r]);
        c.c0 = _mm256_xor_si256(_mm256_xor_si256(hi1, c.c1), k0);
        c.c1 = lo1;
        c.c2 = _mm256_xor_si256(_mm256_xor_si256(hi0, c.c3), k1);
        c.c3 = lo0;
    }
    return c;
}

inline Blocks4 load_counters(const uint64_t hi[4], const uint64_t lo[4]) {
    Blocks4 c;
    c.c0 = _mm256_set_epi64x(static_cast<uint32_t>(lo[3]), static_cast<uint32_t>(lo[2]),
                             static_cast<uint32_t>(lo[1]), static_cast<uint32_t>(lo[0]));
    c.c1 = _mm256_set_epi64x(static_cast<uint32_t>(lo[3] >> 32), static_cast<uint32_t>(lo[2] >> 32),
                             static_cast<uint32_t>(lo[1] >> 32), static_cast<uint32_t>(lo[0] >> 32));
    c.c2 = _mm256_set_epi64x(static_cast<uint32_t>(hi[3]), static_cast<uint32_t>(hi[2]),
                             static_cast<uint32_t>(hi[1]), static_cast<uint32_t>(hi[0]));
    c.c3 = _mm256_set_epi64x(static_cast<uint32_t>(hi[3] >> 32), static_cast<uint32_t>(hi[2] >> 32),
                             static_cast<uint32_t>(hi[1] >> 32), static_cast<uint32_t>(hi[0] >> 32));
    return c;
}

inline void store_words(const Blocks4& c, uint32_t words[4][4]) {
    alignas(32) uint64_t w0[4], w1[4], w2[4], w3[4];
    _mm256_store_si256(reinterpret_cast<__m256i*>(w0), c.c0);
    _mm256_store_si256(reinterpret_cast<__m256i*>(w1), c.c1);
    _mm256_store_si256(reinterpret_cast<__m256i*>(w2), c.c2);
    _mm256_store_si256(reinterpret_cast<__m256i*>(w3), c.c3);
    for (int l = 0; l < 4; ++l) {
        words[l][0] = static_cast<uint32_t>(w0[l]);
        words[l][1] = static_cast<uint32_t>(w1[l]);
        words[l][2] = static_cast<uint32_t>(w2[l]);
        words[l][3] = static_cast<uint32_t>(w3[l]);
    }
}

void philox_bulk_avx2(uint32_t k0, uint32_t k1, uint64_t hi, uint64_t lo0,
                      std::size_t nblocks, uint32_t* out) {
    const RoundKeys rk = make_round_keys(k0, k1);
    std::size_t b = 0;
    for (; b + 4 <= nblocks; b += 4) {
        const uint64_t his[4] = {hi, hi, hi, hi};
        const uint64_t los[4] = {lo0 + b, lo0 + b + 1, lo0 + b + 2, lo0 + b + 3};
        uint32_t words[4][4];
        store_words(philox4(load_counters(his, los), rk), words);
        for (int l = 0; l < 4; ++l)
            for (int w = 0; w < 4; ++w) out[4 * (b + l) + w] = words[l][w];
    }
    for (; b < nblocks; ++b) {
        rng::Key key{k0, k1};
        rng::philox4x32(key, hi, lo0 + b, out + 4 * b);
    }
}

void normals_lanes_avx2(uint32_t k0, uint32_t k1, const uint64_t* stream_hi,
                        std::size_t m, std::size_t len, double* out) {
    const RoundKeys rk = make_round_keys(k0, k1);
    std::size_t j = 0;
    for (; j + 4 <= m; j += 4) {
        const uint64_t his[4] = {stream_hi[j], stream_hi[j + 1], stream_hi[j + 2],
                                 stream_hi[j + 3]};
        for (std::size_t p = 0; p < len; p += 2) {
            const uint64_t block = p / 2;
            const uint64_t los[4] = {block, block, block, block};
            uint32_t words[4][4];
            store_words(philox4(load_counters(his, los), rk), words);
            double z[2];
            for (int l = 0; l < 4; ++l) {
                rng::box_muller(words[l], z);
                out[p * m + j + l] = z[0];
                if (p + 1 < len) out[(p + 1) * m + j + l] = z[1];
            }
        }
    }
    if (j < m) {
        // remainder lanes through the scalar reference (identical bits)
        for (; j < m; ++j) {
            uint32_t block[4];
            double z[2];
            for (std::size_t p = 0; p < len; p += 2) {
                rng::philox4x32(rng::Key{k0, k1}, stream_hi[j], p / 2, block);
                rng::box_muller(block, z);
                out[p * m + j] = z[0];
                if (p + 1 < len) out[(p + 1) * m + j] = z[1];
            }
        }
    }
}

inline double hsum(__m256d v) {
    const __m128d lo = _mm256_castpd256_pd128(v);
    const __m128d hi = _mm256_extractf128_pd(v, 1);
    const __m128d s = _mm_add_pd(lo, hi);
    return _mm_cvtsd_f64(_mm_add_sd(s, _mm_unpackhi_pd(s, s)));
}

double dot_avx2(const double* a, const double* b, std::size_t len) {
    __m256d acc0 = _mm256_setzero_pd();
    __m256d acc1 = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 8 <= len; i += 8) {
        acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
        acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + 4), _mm256_loadu_pd(b + i + 4), acc1);
    }
    for (; i + 4 <= len; i += 4)
        acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
    double acc = hsum(_mm256_add_pd(acc0, acc1));
    for (; i < len; ++i) acc += a[i] * b[i];
    return acc;
}

void axpy_batch_avx2(double a, const double* x, double* y, std::size_t m) {
    const __m256d av = _mm256_set1_pd(a);
    std::size_t j = 0;
    for (; j + 4 <= m; j += 4) {
        const __m256d yv = _mm256_loadu_pd(y + j);
        _mm256_storeu_pd(y + j, _mm256_fmadd_pd(av, _mm256_loadu_pd(x + j), yv));
    }
    for (; j < m; ++j) y[j] += a * x[j];
}

void suffix_add_avx2(double* x, std::size_t len, std::size_t stride, double h) {
    if (stride == 1) {
        const __m256d hv = _mm256_set1_pd(h);
        std::size_t i = 0;
        for (; i + 4 <= len; i += 4)
            _mm256_storeu_pd(x + i, _mm256_add_pd(_mm256_loadu_pd(x + i), hv));
        for (; i < len; ++i) x[i] += h;
    } else {
        for (std::size_t i = 0; i < len; ++i) x[i * stride] += h;
    }
}

void exp_affine_stats_avx2(double a, double b, const double* d, std::size_t m,
                           double* sum, double* sumsq) {
    __m256d s = _mm256_setzero_pd();
    __m256d s2 = _mm256_setzero_pd();
    const __m256d av = _mm256_set1_pd(a);
    const __m256d bv = _mm256_set1_pd(b);
    std::size_t j = 0;
    for (; j + 4 <= m; j += 4) {
        const __m256d t = _mm256_fmadd_pd(av, _mm256_loadu_pd(d + j), bv);
#if defined(PORTOPT_HAVE_LIBMVEC)
        const __m256d v = _ZGVdN4v_exp(t);
#else
        alignas(32) double tt[4];
        _mm256_store_pd(tt, t);
        const __m256d v = _mm256_set_pd(std::exp(tt[3]), std::exp(tt[2]),
                                        std::exp(tt[1]), std::exp(tt[0]));
#endif
        s = _mm256_add_pd(s, v);
        s2 = _mm256_fmadd_pd(v, v, s2);
    }
    double ss = hsum(s), ss2 = hsum(s2);
    for (; j < m; ++j) {
        const double v = std::exp(a * d[j] + b);
        ss += v;
        ss2 += v * v;
    }
    *sum = ss;
    *sumsq = ss2;
}

void reduce_stats_avx2(const double* x, std::size_t m, double* sum, double* sumsq) {
    __m256d s = _mm256_setzero_pd();
    __m256d s2 = _mm256_setzero_pd();
    std::size_t j = 0;
    for (; j + 4 <= m; j += 4) {
        const __m256d v = _mm256_loadu_pd(x + j);
        s = _mm256_add_pd(s, v);
        s2 = _mm256_fmadd_pd(v, v, s2);
    }
    double ss = hsum(s), ss2 = hsum(s2);
    for (; j < m; ++j) {
        ss += x[j];
        ss2 += x[j] * x[j];
    }
    *sum = ss;
    *sumsq = ss2;
}

}  // namespace

const Ops* avx2_ops_or_null() {
    static const Ops ops{
        "avx2",
        philox_bulk_avx2,
        normals_lanes_avx2,
        dot_avx2,
        axpy_batch_avx2,
        suffix_add_avx2,
        exp_affine_stats_avx2,
        reduce_stats_avx2,
    };
    return &ops;
}

}  // namespace portopt::kernels

#else  // no AVX2 at compile time

namespace portopt::kernels {
const Ops* avx2_ops_or_null() { return nullptr; }
}  // namespace portopt::kernels

#endif
