#pragma once

#include <cstddef>
#include <cstdint>
#include <string>

namespace portopt::kernels {

// Scalar reference kernels plus SIMD variants for the arithmetic inner loops
// (Philox blocks, lane-major normal batches, FMA accumulation, exp-payoff
// reductions).  The backend is picked once at startup from CPUID, can be
// overridden by PORTOPT_BACKEND=scalar|avx2 or programmatically, and every
// backend is equivalence-tested against the scalar reference.
//
// Contracts:
//   * philox_bulk / normals_lanes / suffix_add are bit-identical across
//     backends (integer hashing + shared scalar uniform->normal transform,
//     no reassociation).
//   * dot / axpy_batch / exp_affine_stats / reduce_stats may reassociate and
//     agree with the reference only to rounding (tested at tight tolerance).

enum class Backend { scalar, avx2 };

struct Ops {
    const char* name;

    // nblocks consecutive Philox4x32-10 blocks of one stream:
    // out[4*b + w] = word w of block (ctr_hi, ctr_lo0 + b).
    void (*philox_bulk)(uint32_t k0, uint32_t k1, uint64_t ctr_hi,
                        uint64_t ctr_lo0, std::size_t nblocks, uint32_t* out);

    // Lane-major normal batch: out[p*m + j] = normal at position p of
    // stream_hi[j], for j in [0,m), p in [0,len).
    void (*normals_lanes)(uint32_t k0, uint32_t k1, const uint64_t* stream_hi,
                          std::size_t m, std::size_t len, double* out);

    double (*dot)(const double* a, const double* b, std::size_t len);

    // y[j] += a * x[j]
    void (*axpy_batch)(double a, const double* x, double* y, std::size_t m);

    // x[i*stride] += h for i in [0,len)
    void (*suffix_add)(double* x, std::size_t len, std::size_t stride, double h);

    // sum_j exp(a*d[j] + b) and the sum of squares of the same terms.
    void (*exp_affine_stats)(double a, double b, const double* d, std::size_t m,
                             double* sum, double* sumsq);

    void (*reduce_stats)(const double* x, std::size_t m, double* sum, double* sumsq);
};

const Ops& scalar_ops();
bool avx2_available();          // compiled in and supported by this CPU
const Ops& ops(Backend b);      // throws InvalidArgument if unavailable

// Process-wide active backend (auto-detected, then env override, then select()).
const Ops& active();
Backend active_backend();
void select(Backend b);
std::string backend_name(Backend b);

}  // namespace portopt::kernels
