#pragma once
// Hot inner loops with a portable scalar reference and an AVX2/FMA variant.
// The variant is picked once at startup from CPUID; REFMAP_ISA=scalar forces
// the reference path.

#include <complex>
#include <cstddef>

namespace refmap::simd {

/// Block length used by phasor_sum; partial sums of consecutive blocks are
/// combined pairwise, so both variants share the same reduction tree above
/// the block level.
inline constexpr std::size_t kPhasorBlock = 64;

struct Kernels {
    const char* name;

    /// out[k] += a*dx^2 + 2*b*dx*dy + c*dy^2 with dx = sx - cx[k], dy = sy - cy[k].
    void (*accumulate_quadratic_form)(const double* cx, const double* cy, std::size_t n, double sx,
                                      double sy, double a, double b, double c, double* out);

    /// Minimum of v[0..n); +inf for n == 0.
    double (*min_value)(const double* v, std::size_t n);

    /// sum_k exp(-0.5 * (q[k] - shift)).
    double (*sum_exp_neg_half)(const double* q, std::size_t n, double shift);

    /// sum_k exp(-2*pi*j*(l1*x[k] + l2*y[k])), pairwise over kPhasorBlock blocks.
    std::complex<double> (*phasor_sum)(const double* x, const double* y, std::size_t n, double l1,
                                       double l2);

    double (*dot)(const double* a, const double* b, std::size_t n);
};

const Kernels& scalar_kernels();

/// nullptr when the variant was not compiled in or the CPU lacks AVX2/FMA.
const Kernels* avx2_kernels();

/// The dispatched table.
const Kernels& kernels();

namespace detail {
// Implemented per variant; avx2 returns nullptr when not compiled.
const Kernels* avx2_table();
}  // namespace detail

}  // namespace refmap::simd
