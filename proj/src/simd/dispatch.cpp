#include <cstdlib>
#include <cstring>

#include "refmap/simd.hpp"

namespace refmap::simd {

#ifndef REFMAP_HAVE_AVX2
namespace detail {
const Kernels* avx2_table() { return nullptr; }
}  // namespace detail
#endif

namespace {

bool cpu_has_avx2_fma() {
#if defined(__x86_64__) || defined(__i386__)
    __builtin_cpu_init();
    return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
    return false;
#endif
}

const Kernels& select() {
    const char* forced = std::getenv("REFMAP_ISA");
    if (forced != nullptr && std::strcmp(forced, "scalar") == 0) return scalar_kernels();
    if (const Kernels* k = avx2_kernels()) return *k;
    return scalar_kernels();
}

}  // namespace

const Kernels* avx2_kernels() {
    static const bool ok = cpu_has_avx2_fma();
    return ok ? detail::avx2_table() : nullptr;
}

const Kernels& kernels() {
    static const Kernels& chosen = select();
    return chosen;
}

}  // namespace refmap::simd
