#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "portopt/kernels.hpp"
#include "portopt/rng.hpp"

using namespace portopt;

namespace {

std::vector<double> random_doubles(std::size_t n, unsigned seed, double lo = -2.0,
                                   double hi = 2.0) {
    std::mt19937_64 gen(seed);
    std::uniform_real_distribution<double> dist(lo, hi);
    std::vector<double> out(n);
    for (double& v : out) v = dist(gen);
    return out;
}

}  // namespace

TEST_CASE("philox4x32-10 known answers") {
    // Reference vectors from the Random123 test suite.
    uint32_t out[4];
    rng::philox4x32(rng::Key{0, 0}, 0, 0, out);
    CHECK(out[0] == 0x6627e8d5u);
    CHECK(out[1] == 0xe169c58du);
    CHECK(out[2] == 0xbc57ac4cu);
    CHECK(out[3] == 0x9b00dbd8u);

    rng::philox4x32(rng::Key{0xffffffffu, 0xffffffffu}, 0xffffffffffffffffull,
                    0xffffffffffffffffull, out);
    CHECK(out[0] == 0x408f276du);
    CHECK(out[1] == 0x41c83b0eu);
    CHECK(out[2] == 0xa20bc7c6u);
    CHECK(out[3] == 0x6d5451fdu);

    rng::philox4x32(rng::Key{0xa4093822u, 0x299f31d0u}, 0x0370734413198a2eull,
                    0x85a308d3243f6a88ull, out);
    CHECK(out[0] == 0xd16cfe09u);
    CHECK(out[1] == 0x94fdccebu);
    CHECK(out[2] == 0x5001e420u);
    CHECK(out[3] == 0x24126ea1u);
}

TEST_CASE("philox_bulk matches the single-block reference on every backend") {
    const std::size_t nblocks = 257;
    std::vector<uint32_t> expected(4 * nblocks);
    for (std::size_t b = 0; b < nblocks; ++b)
        rng::philox4x32(rng::Key{0x12345678u, 0x9abcdef0u}, 77, 1000 + b, expected.data() + 4 * b);

    for (kernels::Backend backend : {kernels::Backend::scalar, kernels::Backend::avx2}) {
        if (backend == kernels::Backend::avx2 && !kernels::avx2_available()) continue;
        std::vector<uint32_t> got(4 * nblocks, 0);
        kernels::ops(backend).philox_bulk(0x12345678u, 0x9abcdef0u, 77, 1000, nblocks, got.data());
        CHECK(got == expected);
    }
}

TEST_CASE("normals_lanes is bit-identical across backends") {
    if (!kernels::avx2_available()) return;
    const std::size_t m = 13, len = 9;  // odd sizes exercise the remainders
    std::vector<uint64_t> streams(m);
    for (std::size_t j = 0; j < m; ++j) streams[j] = rng::inner_stream(42, 3, j);

    std::vector<double> a(m * len), b(m * len);
    kernels::ops(kernels::Backend::scalar)
        .normals_lanes(0xdeadbeefu, 0xfeedfaceu, streams.data(), m, len, a.data());
    kernels::ops(kernels::Backend::avx2)
        .normals_lanes(0xdeadbeefu, 0xfeedfaceu, streams.data(), m, len, b.data());
    CHECK(a == b);

    // and both agree with the position-addressed single draws
    const rng::Key key{0xdeadbeefu, 0xfeedfaceu};
    for (std::size_t j = 0; j < m; ++j)
        for (std::size_t p = 0; p < len; ++p)
            CHECK(a[p * m + j] == rng::normal_at(key, streams[j], p));
}

TEST_CASE("suffix_add is exact on both backends") {
    const auto base = random_doubles(301, 11);
    for (kernels::Backend backend : {kernels::Backend::scalar, kernels::Backend::avx2}) {
        if (backend == kernels::Backend::avx2 && !kernels::avx2_available()) continue;
        auto contiguous = base;
        kernels::ops(backend).suffix_add(contiguous.data() + 5, 200, 1, 0.25);
        for (std::size_t i = 0; i < contiguous.size(); ++i) {
            const bool shifted = i >= 5 && i < 205;
            CHECK(contiguous[i] == (shifted ? base[i] + 0.25 : base[i]));
        }
        auto strided = base;
        kernels::ops(backend).suffix_add(strided.data() + 2, 99, 3, -1.5);
        for (std::size_t i = 0; i < 99; ++i) CHECK(strided[2 + 3 * i] == base[2 + 3 * i] - 1.5);
    }
}

TEST_CASE("reduction kernels agree across backends to rounding") {
    if (!kernels::avx2_available()) return;
    const auto x = random_doubles(1023, 21);
    const auto y = random_doubles(1023, 22);

    const double dot_s = kernels::ops(kernels::Backend::scalar).dot(x.data(), y.data(), x.size());
    const double dot_v = kernels::ops(kernels::Backend::avx2).dot(x.data(), y.data(), x.size());
    CHECK(dot_v == doctest::Approx(dot_s).epsilon(1e-13));

    double s1, q1, s2, q2;
    kernels::ops(kernels::Backend::scalar).reduce_stats(x.data(), x.size(), &s1, &q1);
    kernels::ops(kernels::Backend::avx2).reduce_stats(x.data(), x.size(), &s2, &q2);
    CHECK(s2 == doctest::Approx(s1).epsilon(1e-13));
    CHECK(q2 == doctest::Approx(q1).epsilon(1e-13));

    double es1, eq1, es2, eq2;
    kernels::ops(kernels::Backend::scalar)
        .exp_affine_stats(0.3, -0.7, x.data(), x.size(), &es1, &eq1);
    kernels::ops(kernels::Backend::avx2)
        .exp_affine_stats(0.3, -0.7, x.data(), x.size(), &es2, &eq2);
    CHECK(es2 == doctest::Approx(es1).epsilon(1e-12));
    CHECK(eq2 == doctest::Approx(eq1).epsilon(1e-12));

    auto acc_s = random_doubles(1023, 23);
    auto acc_v = acc_s;
    kernels::ops(kernels::Backend::scalar).axpy_batch(1.7, x.data(), acc_s.data(), x.size());
    kernels::ops(kernels::Backend::avx2).axpy_batch(1.7, x.data(), acc_v.data(), x.size());
    for (std::size_t i = 0; i < acc_s.size(); ++i)
        CHECK(acc_v[i] == doctest::Approx(acc_s[i]).epsilon(1e-14));
}

TEST_CASE("exp_affine_stats matches a plain loop") {
    const auto d = random_doubles(500, 31);
    double sum = 0.0, sumsq = 0.0;
    kernels::active().exp_affine_stats(-1.0, 0.2, d.data(), d.size(), &sum, &sumsq);
    double ref_sum = 0.0, ref_sumsq = 0.0;
    for (double v : d) {
        const double e = std::exp(-1.0 * v + 0.2);
        ref_sum += e;
        ref_sumsq += e * e;
    }
    CHECK(sum == doctest::Approx(ref_sum).epsilon(1e-12));
    CHECK(sumsq == doctest::Approx(ref_sumsq).epsilon(1e-12));
}

TEST_CASE("backend selection can be forced") {
    const kernels::Backend original = kernels::active_backend();
    kernels::select(kernels::Backend::scalar);
    CHECK(kernels::active_backend() == kernels::Backend::scalar);
    kernels::select(original);
    CHECK(kernels::active_backend() == original);
}
