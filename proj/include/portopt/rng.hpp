#pragma once

#include <cstdint>
#include <span>

#include "portopt/errors.hpp"

namespace portopt::rng {

// Counter-based generator (Philox4x32-10).  A draw is a pure function of
// (key, stream, position): no sequential state, so ensemble members and
// inner extensions can be generated in any order on any number of threads
// and the values cannot change.

struct Key {
    uint32_t k0 = 0, k1 = 0;
};

Key key_from_seed(uint64_t master_seed);

// One 128-bit-counter block -> 4 output words.  Reference implementation;
// the kernels module has the bulk/batched variants.
void philox4x32(Key key, uint64_t ctr_hi, uint64_t ctr_lo, uint32_t out[4]);

// --- stream-id packing -----------------------------------------------------
//
// The 64-bit stream id doubles as the high counter word.  Layout:
//   [63:56] domain tag, [55:0] domain-specific payload.
// Inner-extension streams are keyed by (outer member, node, extension id) and
// never by anything derived from path values, which is what makes common
// random numbers across bumped evaluations automatic.

inline constexpr uint64_t kDomainOuter = 1;
inline constexpr uint64_t kDomainInner = 2;
inline constexpr uint64_t kDomainBudget = 3;
inline constexpr uint64_t kDomainTest = 7;

uint64_t outer_stream(uint64_t member);
uint64_t budget_stream(uint64_t member);
uint64_t test_stream(uint64_t tag);
uint64_t inner_stream(uint64_t outer_member, int node, uint64_t extension);

// --- normals ----------------------------------------------------------------
//
// Position-addressable standard normals: position p lives in Philox block
// p/2 (Box–Muller yields two normals per 4-word block).  The uniform->normal
// transform is shared scalar code so every backend produces identical bits.

double normal_at(Key key, uint64_t stream, uint64_t position);

// out[i] = normal at position pos0+i of `stream`.
void fill_normals(Key key, uint64_t stream, uint64_t pos0, std::span<double> out);

// Two normals from one raw block.
void box_muller(const uint32_t block[4], double out[2]);

}  // namespace portopt::rng
