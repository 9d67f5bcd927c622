#include "portopt/kernels.hpp"

#include <atomic>
#include <cstdlib>
#include <cstring>

#include "portopt/errors.hpp"

namespace portopt::kernels {

const Ops* avx2_ops_or_null();  // defined in kernels_avx2.cpp

namespace {

bool cpu_has_avx2() {
#if defined(PORTOPT_X86_DISPATCH)
    return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
    return false;
#endif
}

Backend detect_default() {
    if (const char* env = std::getenv("PORTOPT_BACKEND")) {
        if (std::strcmp(env, "scalar") == 0) return Backend::scalar;
        if (std::strcmp(env, "avx2") == 0) {
            if (avx2_available()) return Backend::avx2;
            throw InvalidArgument("PORTOPT_BACKEND=avx2 requested but AVX2 is unavailable");
        }
        if (std::strcmp(env, "auto") != 0)
            throw InvalidArgument(std::string("PORTOPT_BACKEND: unknown value '") + env + "'");
    }
    return avx2_available() ? Backend::avx2 : Backend::scalar;
}

std::atomic<const Ops*>& active_slot() {
    static std::atomic<const Ops*> slot{&ops(detect_default())};
    return slot;
}

}  // namespace

bool avx2_available() { return avx2_ops_or_null() != nullptr && cpu_has_avx2(); }

const Ops& ops(Backend b) {
    switch (b) {
        case Backend::scalar:
            return scalar_ops();
        case Backend::avx2:
            if (const Ops* o = avx2_available() ? avx2_ops_or_null() : nullptr) return *o;
            throw InvalidArgument("AVX2 backend unavailable on this machine/build");
    }
    throw InvalidArgument("unknown kernel backend");
}

const Ops& active() { return *active_slot().load(std::memory_order_relaxed); }

Backend active_backend() {
    return std::strcmp(active().name, "avx2") == 0 ? Backend::avx2 : Backend::scalar;
}

void select(Backend b) { active_slot().store(&ops(b), std::memory_order_relaxed); }

std::string backend_name(Backend b) {
    return b == Backend::avx2 ? "avx2" : "scalar";
}

}  // namespace portopt::kernels
